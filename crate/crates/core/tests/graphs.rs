mod common;

use std::collections::BTreeSet;

use janus_core::engine::{identify_privileged, primary_privileged};
use janus_core::frontend::parse;
use janus_core::graphs::*;
use proptest::prelude::*;

use common::*;

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn example_facts() {
    let ast = parse(EXAMPLE).unwrap();
    let facts = build_facts(&ast);
    assert!(facts.writes["owner_transfer"].contains("balances"));
    assert!(!facts.writes["owner_transfer"].contains("owner"));
    assert!(facts.reads["owner_transfer"].contains("owner"));
    let guarded: BTreeSet<usize> = facts
        .ctrl_dep
        .iter()
        .filter(|(s, v)| s.function == "owner_transfer" && v == "owner")
        .map(|(s, _)| s.index)
        .collect();
    let body = ast.function("owner_transfer").unwrap().body.len();
    assert_eq!(guarded, (0..body).collect());
    assert!(!facts
        .ctrl_dep
        .iter()
        .any(|(s, v)| s.function == "transfer" && v == "owner"));
}

#[test]
fn view_function_writes_nothing() {
    let ast =
        parse("contract V { uint a; function get() public returns (uint) { return a; } }").unwrap();
    let facts = build_facts(&ast);
    assert!(facts.writes["get"].is_empty());
    assert_eq!(facts.reads["get"], set(&["a"]));
}

#[test]
fn pause_guard_controls_transfer() {
    let facts = build_facts(&corpus("pause"));
    assert!(facts
        .ctrl_dep
        .iter()
        .any(|(s, v)| s.function == "transfer" && v == "paused"));
    assert!(facts.guard_reads["transfer"].contains("paused"));
}

#[test]
fn related_functions() {
    let mint = corpus("mint");
    let f = build_facts(&mint);
    assert_eq!(
        related_funcs_search(&mint, &f, &set(&["totalSupply"])).unwrap(),
        set(&["mint"])
    );
    assert!(related_funcs_search(&mint, &f, &BTreeSet::new())
        .unwrap()
        .is_empty());

    let pause = corpus("pause");
    let f = build_facts(&pause);
    assert_eq!(
        related_funcs_search(&pause, &f, &set(&["paused"])).unwrap(),
        set(&["setPaused", "transfer"])
    );
    assert_eq!(
        related_funcs_search(&pause, &f, &set(&["nope"])),
        Err(GraphError::UnknownVariable("nope".into()))
    );
}

#[test]
fn ether_relates_to_payable_and_destroying_functions() {
    let ast = regression("tokeer_fn");
    let f = build_facts(&ast);
    let r = related_funcs_search(&ast, &f, &set(&[ETHER])).unwrap();
    assert!(r.contains("buy") && r.contains("destroy"), "{r:?}");
}

#[test]
fn privileged_variables() {
    assert_eq!(
        identify_privileged(&parse(EXAMPLE).unwrap(), &Default::default()),
        set(&["owner"])
    );
    let none = parse("contract N { uint a; function f() public { a = 1; } }").unwrap();
    assert!(identify_privileged(&none, &build_facts(&none)).is_empty());

    let admin = r#"
        contract A {
            address owner;
            address admin;
            modifier onlyOwner() { require(msg.sender == owner); _; }
            constructor() public { owner = msg.sender; }
            function setAdmin(address a) public onlyOwner { admin = a; }
        }"#;
    let ast = parse(admin).unwrap();
    let p = identify_privileged(&ast, &build_facts(&ast));
    assert_eq!(p, set(&["admin", "owner"]));
    assert_eq!(primary_privileged(&ast, &p).as_deref(), Some("owner"));

    let open = admin.replace("public onlyOwner", "public");
    let ast = parse(&open).unwrap();
    assert_eq!(
        identify_privileged(&ast, &build_facts(&ast)),
        set(&["owner"])
    );
}

#[test]
fn anyone_can_claim_ownership() {
    let src = r#"
        contract C {
            address owner;
            modifier onlyOwner() { require(msg.sender == owner); _; }
            function claim() public { owner = msg.sender; }
            function f() public onlyOwner { }
        }"#;
    let ast = parse(src).unwrap();
    assert!(identify_privileged(&ast, &build_facts(&ast)).is_empty());
}

proptest! {
    #[test]
    fn related_search_is_monotone(idx in 0usize..14, a in any::<u32>(), b in any::<u32>()) {
        let ast = corpus(&corpus_names()[idx]);
        let facts = build_facts(&ast);
        let mut universe: Vec<String> = ast.state_vars.iter().map(|v| v.name.clone()).collect();
        universe.push(ETHER.into());
        let pick = |mask: u32| -> BTreeSet<String> {
            universe.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| v.clone()).collect()
        };
        let small = pick(a);
        let big: BTreeSet<String> = small.union(&pick(b)).cloned().collect();
        let rs = related_funcs_search(&ast, &facts, &small).unwrap();
        let rb = related_funcs_search(&ast, &facts, &big).unwrap();
        prop_assert!(rs.is_subset(&rb));
    }
}
