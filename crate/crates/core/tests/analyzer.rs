mod common;

use std::collections::BTreeSet;

use janus_core::analyzer::*;
use janus_core::frontend::{parse, ContractAST};
use janus_core::summary::lattice_bound;
use proptest::prelude::*;

use common::*;

fn run(ast: &ContractAST) -> DifferenceSet {
    analyze(ast, &AnalyzerConfig::default()).unwrap()
}

fn rounds(ast: &ContractAST, n: usize) -> DifferenceSet {
    analyze(
        ast,
        &AnalyzerConfig {
            max_rounds: n,
            ..Default::default()
        },
    )
    .unwrap()
}

/// Order-insensitive fingerprint of a difference set.
fn fingerprint(d: &DifferenceSet) -> BTreeSet<(Vec<String>, BTreeSet<String>, BTreeSet<String>)> {
    d.differences
        .iter()
        .map(|a| {
            (
                a.provenance.functions.clone(),
                a.difference.variables(),
                a.difference.value_variables(),
            )
        })
        .collect()
}

fn all_vars(d: &DifferenceSet) -> BTreeSet<String> {
    d.differences
        .iter()
        .flat_map(|a| a.difference.variables())
        .collect()
}

#[test]
fn mint_converges_quickly() {
    let d = run(&corpus("mint"));
    assert!(d.rounds <= 2, "rounds = {}", d.rounds);
    assert!(!d.partial);
    let mint: Vec<_> = d
        .differences
        .iter()
        .filter(|a| a.provenance.functions == ["mint"])
        .collect();
    assert_eq!(mint.len(), 1);
    assert!(mint[0].difference.variables().contains("totalSupply"));
    assert_eq!(mint[0].round, 1);
}

#[test]
fn pause_needs_a_second_round() {
    let d = run(&corpus("pause"));
    let first = d
        .differences
        .iter()
        .find(|a| a.provenance.functions == ["setPaused"])
        .expect("setPaused difference");
    assert_eq!(first.round, 1);
    assert!(first.difference.variables().contains("paused"));
    let second = d
        .differences
        .iter()
        .find(|a| a.provenance.functions == ["setPaused", "transfer"])
        .expect("transfer after setPaused");
    assert_eq!(second.round, 2);
    // Both roles see the same flag; the difference is carried by its label.
    assert!(second.difference.labeled.contains("paused"));
    assert!(second.difference.variables().contains("exec_state"));
}

#[test]
fn safe_token_is_empty() {
    let d = run(&regression("safe_token"));
    assert!(d.is_empty(), "{:?}", fingerprint(&d));
    assert!(!d.partial);
}

#[test]
fn no_privileged_variables_means_nothing_to_compare() {
    let ast = parse("contract N { uint a; function f(uint x) public { a = x; } }").unwrap();
    let d = run(&ast);
    assert!(d.is_empty());
    assert!(d.privileged.is_empty());
}

#[test]
fn rounds_respect_the_lattice_bound() {
    for name in corpus_names() {
        let ast = corpus(&name);
        let d = run(&ast);
        assert_eq!(d.lattice_bound, lattice_bound(&ast));
        assert!((d.rounds as u128) <= d.lattice_bound, "{name}");
        assert!(d.rounds <= DEFAULT_MAX_ROUNDS, "{name}");
        assert_eq!(d.log.len(), d.rounds, "{name}");
        assert_eq!(
            d.log.last().map_or(0, |r| r.executions),
            d.executions,
            "{name}"
        );
        assert!(
            d.log.windows(2).all(|w| w[0].executions <= w[1].executions),
            "{name}"
        );
    }
}

#[test]
fn analysis_is_deterministic() {
    for name in corpus_names() {
        let ast = corpus(&name);
        let (a, b) = (run(&ast), run(&ast));
        assert_eq!(fingerprint(&a), fingerprint(&b), "{name}");
        assert_eq!(a.rounds, b.rounds, "{name}");
        assert_eq!(a.executions, b.executions, "{name}");
    }
}

#[test]
fn round_budget_marks_partial() {
    let d = rounds(&corpus("pause"), 1);
    assert!(d.partial);
    assert!(d.partial_reason.is_some());
    assert_eq!(d.rounds, 1);
}

#[test]
fn more_rounds_never_lose_differences() {
    for name in corpus_names() {
        let ast = corpus(&name);
        let mut prev = BTreeSet::new();
        for n in 1..=3 {
            let cur = fingerprint(&rounds(&ast, n));
            assert!(prev.is_subset(&cur), "{name} at {n}");
            prev = cur;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn function_order_does_not_matter(idx in 0usize..14, seed in any::<u64>()) {
        let ast = corpus(&corpus_names()[idx]);
        let mut shuffled = ast.clone();
        let n = shuffled.functions.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.functions.swap(i, (s >> 33) as usize % (i + 1));
        }
        let (a, b) = (run(&ast), run(&shuffled));
        prop_assert_eq!(all_vars(&a), all_vars(&b));
        let provs = |d: &DifferenceSet| -> BTreeSet<Vec<String>> {
            d.differences.iter().map(|x| x.provenance.functions.clone()).collect()
        };
        prop_assert_eq!(provs(&a), provs(&b));
    }
}
