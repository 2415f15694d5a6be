mod common;

use std::collections::BTreeSet;

use janus_core::analyzer::AnalyzerConfig;
use janus_core::engine::state::ExecState;
use janus_core::frontend::parse;
use janus_core::oracle::concrete::{CMap, CSlot};
use janus_core::oracle::traverse::MAX_DEPTH;
use janus_core::oracle::*;

use common::*;

fn call(function: &str, args: Vec<CValue>) -> CallInput {
    CallInput {
        function: function.into(),
        args,
        msg_value: 0,
        block_number: 0,
    }
}

fn twin() -> CValue {
    CValue::Addr {
        name: PRIVILEGED.into(),
        twin: true,
    }
}

#[test]
fn interpreter_runs_the_example() {
    let ast = parse(EXAMPLE).unwrap();
    let it = Interpreter::new(&ast);
    let st = it.deploy(PRIVILEGED).unwrap();
    assert_eq!(st.sigma["owner"], CSlot::Scalar(CValue::addr(PRIVILEGED)));

    let mut seeded = st.clone();
    seeded.sigma.insert(
        "balances".into(),
        CSlot::Map(CMap {
            default: CValue::Num(0),
            entries: [("A".to_string(), CValue::Num(2))].into(),
        }),
    );
    let c = call(
        "owner_transfer",
        vec![CValue::addr("A"), CValue::addr("B"), CValue::Num(1)],
    );
    let p = it.exec(&seeded, &c, CValue::addr(PRIVILEGED)).unwrap();
    assert_eq!(p.exec_state, ExecState::Success);
    let CSlot::Map(b) = &p.sigma["balances"] else {
        panic!("mapping")
    };
    assert_eq!((b.get("A"), b.get("B")), (&CValue::Num(1), &CValue::Num(1)));

    let o = it.exec(&seeded, &c, twin()).unwrap();
    assert_eq!(o.exec_state, ExecState::Revert);
    assert_eq!(o.sigma, seeded.sigma);
    assert_eq!(
        p.branch_vars(&o),
        ["balances", "exec_state"].map(String::from).into()
    );
}

#[test]
fn interpreter_reports_unknown_functions() {
    let ast = corpus("mint");
    let it = Interpreter::new(&ast);
    let st = it.deploy(PRIVILEGED).unwrap();
    assert!(it
        .exec(&st, &call("nope", vec![]), CValue::addr("A"))
        .is_err());
}

#[test]
fn mint_depth_one() {
    let r = full_traverse(&corpus("mint"), 1).unwrap();
    assert!(
        r.pairs.keys().any(|bv| bv.contains("totalSupply")),
        "{:?}",
        r.pairs.keys()
    );
    let w = r.pairs.values().next().unwrap();
    assert_eq!(w.calls.len(), 1);
    assert_eq!(r.depth, 1);
}

#[test]
fn pause_depth_two_reaches_transfer() {
    let r = full_traverse(&corpus("pause"), 2).unwrap();
    let seq = vec!["setPaused".to_string(), "transfer".to_string()];
    assert!(
        r.by_sequence
            .get(&seq)
            .is_some_and(|bv| bv.contains("exec_state")),
        "{:?}",
        r.by_sequence
    );
}

#[test]
fn clean_token_has_no_pairs() {
    let r = full_traverse(&regression("safe_token"), 2).unwrap();
    assert!(r.pairs.is_empty(), "{:?}", r.pairs.keys());
}

#[test]
fn depth_limit_is_enforced() {
    assert_eq!(
        full_traverse(&corpus("mint"), MAX_DEPTH + 1).unwrap_err(),
        OracleError::DomainTooLarge(MAX_DEPTH + 1)
    );
}

#[test]
fn analyzer_agrees_with_oracle_at_depth_three() {
    let mut names = corpus_names();
    names.sort();
    for name in names {
        let rep = check_theorems(&corpus(&name), 3).unwrap();
        assert!(rep.ok(), "{name}: {:?}", rep.violations);
    }
    for name in ["pied_fp", "pied_fn", "tokeer_fn", "safe_token"] {
        let rep = check_theorems(&regression(name), 3).unwrap();
        assert!(rep.ok(), "{name}: {:?}", rep.violations);
    }
}

fn violations(cfg: &AnalyzerConfig, theorem: Theorem) -> BTreeSet<String> {
    corpus_names()
        .into_iter()
        .filter(|n| {
            check_theorems_with(&corpus(n), 3, cfg, &OracleConfig::default())
                .unwrap()
                .count(theorem)
                > 0
        })
        .collect()
}

#[test]
fn dropping_label_propagation_is_caught() {
    let cfg = AnalyzerConfig {
        label_propagation: false,
        ..Default::default()
    };
    let hit = violations(&cfg, Theorem::T1);
    assert!(hit.contains("pause"), "{hit:?}");
}

#[test]
fn dropping_label_clause_is_caught() {
    let cfg = AnalyzerConfig {
        theta_clause: false,
        ..Default::default()
    };
    let hit = violations(&cfg, Theorem::T3);
    assert!(!hit.is_empty());
}
