mod common;

use std::collections::BTreeSet;

use janus_core::analyzer::generalize;
use janus_core::engine::value::Addr;
use janus_core::engine::*;
use janus_core::frontend::{parse, ContractAST};
use janus_core::summary::*;
use proptest::prelude::*;

use common::*;

type Runs = Vec<(LabeledState, StateSummary)>;

/// Summaries of `f` from the generalized deployed state, per role and path.
fn step(ast: &ContractAST, f: &str) -> (Runs, Runs) {
    let mut e = Engine::new(ast, EngineOptions::default());
    let p = Addr::Const("P".into());
    let l0 = generalize(&e.exec_constructor_as(&p).unwrap());
    let inputs = e.fresh_inputs(ast.function(f).unwrap(), &p);
    let mut side = |ctx: CallerContext| {
        e.exec_function(f, &ctx, &l0, &inputs)
            .unwrap()
            .into_iter()
            .map(|s| {
                let phi = summarize_state(&l0, &s);
                (s, phi)
            })
            .collect::<Vec<_>>()
    };
    let ps = side(CallerContext::privileged(&p));
    let os = side(CallerContext::ordinary(&p));
    (ps, os)
}

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn privileged_mint_increases_supply() {
    let (ps, os) = step(&corpus("mint"), "mint");
    assert_eq!(ps.len(), 1);
    assert_eq!(
        ps[0].1["totalSupply"],
        VariableSummary::Numeric {
            is_increased: true,
            is_decreased: false,
            related_const_var: set(&["totalSupply"]),
        }
    );
    assert_eq!(
        ps[0].1["exec_state"],
        VariableSummary::ExecState {
            success: true,
            revert: false,
            selfdestruct: false
        }
    );
    assert_eq!(
        os[0].1["exec_state"],
        VariableSummary::ExecState {
            success: false,
            revert: true,
            selfdestruct: false
        }
    );
}

#[test]
fn identity_execution_is_neutral() {
    let ast = parse(
        "contract I { uint a; address b; mapping(address => uint) m; function f() public { } }",
    )
    .unwrap();
    let (ps, _) = step(&ast, "f");
    for (v, s) in &ps[0].1 {
        if v != "exec_state" {
            assert!(s.is_neutral(), "{v}: {s:?}");
        }
    }
}

#[test]
fn owner_transfer_moves_from_and_to() {
    let ast = parse(EXAMPLE).unwrap();
    let (ps, _) = step(&ast, "owner_transfer");
    let moved = ps.iter().find_map(|(_, phi)| match &phi["balances"] {
        VariableSummary::Mapping { entries }
            if entries.contains_key("_from") && entries.contains_key("_to") =>
        {
            Some(entries.clone())
        }
        _ => None,
    });
    let entries = moved.expect("a path with distinct _from and _to");
    assert!(matches!(
        entries["_from"],
        VariableSummary::Numeric {
            is_increased: false,
            is_decreased: true,
            ..
        }
    ));
    assert!(matches!(
        entries["_to"],
        VariableSummary::Numeric {
            is_increased: true,
            is_decreased: false,
            ..
        }
    ));
}

#[test]
fn mint_pair_difference() {
    let (ps, os) = step(&corpus("mint"), "mint");
    let d = diff(&ps[0].1, &os[0].1, &ps[0].0.theta, true)
        .unwrap()
        .expect("difference");
    assert_eq!(d.variables(), set(&["exec_state", "totalSupply"]));
    assert_eq!(d.value_variables(), d.variables());
}

#[test]
fn identical_executions_have_no_difference() {
    let (ps, _) = step(&corpus("mint"), "transfer");
    for (_, phi) in &ps {
        assert_eq!(diff(phi, phi, &BTreeSet::new(), true).unwrap(), None);
    }
}

#[test]
fn labels_force_entries() {
    let (ps, _) = step(&corpus("transfer"), "transfer");
    let phi = &ps[0].1;
    let theta = set(&["balances"]);
    let d = diff(phi, phi, &theta, true)
        .unwrap()
        .expect("labeled difference");
    assert_eq!(d.variables(), set(&["balances"]));
    assert!(d.value_variables().is_empty());
    assert_eq!(d.labeled, theta);
    assert_eq!(diff(phi, phi, &theta, false).unwrap(), None);
}

#[test]
fn universe_mismatch_is_an_error() {
    let (a, _) = step(&corpus("mint"), "mint");
    let (b, _) = step(&corpus("pause"), "setPaused");
    assert_eq!(
        diff(&a[0].1, &b[0].1, &BTreeSet::new(), true),
        Err(SummaryError::UniverseMismatch)
    );
}

#[test]
fn compliant_transfer_is_sender_independent() {
    // Two distinct senders with no identity checks: same summaries per path.
    let ast = regression("safe_token");
    let (ps, os) = step(&ast, "transfer");
    assert_eq!(ps.len(), os.len());
    for ((_, a), (_, b)) in ps.iter().zip(&os) {
        assert_eq!(a, b);
    }
}

#[test]
fn lattice_bound_is_finite_and_positive() {
    for name in corpus_names() {
        let b = lattice_bound(&corpus(&name));
        assert!(b >= 2, "{name}: {b}");
    }
    let tiny = parse("contract T { bool b; function f() public { b = true; } }").unwrap();
    assert!(lattice_bound(&tiny) < u128::MAX);
}

proptest! {
    #[test]
    fn emptiness_is_symmetric(idx in 0usize..14, fi in 0usize..8, i in 0usize..8, j in 0usize..8) {
        let ast = corpus(&corpus_names()[idx]);
        let funcs: Vec<String> = ast.entry_functions().map(|f| f.name.clone()).collect();
        let f = &funcs[fi % funcs.len()];
        let (ps, os) = step(&ast, f);
        let all: Vec<&StateSummary> = ps.iter().chain(&os).map(|(_, s)| s).collect();
        let (a, b) = (all[i % all.len()], all[j % all.len()]);
        let empty = BTreeSet::new();
        prop_assert_eq!(
            diff(a, b, &empty, true).unwrap().is_none(),
            diff(b, a, &empty, true).unwrap().is_none()
        );
        let ab = diff(a, b, &empty, true).unwrap().map(|d| d.variables());
        let ba = diff(b, a, &empty, true).unwrap().map(|d| d.variables());
        prop_assert_eq!(ab, ba);
    }
}
