mod common;

use std::collections::BTreeSet;

use janus_core::analyzer::{analyze, AnalyzerConfig};
use janus_core::financial::classify::NAME_SIMILARITY;
use janus_core::financial::lexicon::split_name;
use janus_core::financial::*;
use janus_core::frontend::{parse, ContractAST};
use janus_core::graphs::build_facts;

use common::*;

fn verdicts(ast: &ContractAST, mode: RecognitionMode) -> Vec<FinancialVerdict> {
    let g = build_vpg(ast, &build_facts(ast));
    let cfg = RecognitionConfig {
        mode,
        ..Default::default()
    };
    classify_financial_with(&g, ast, &cfg)
}

fn verdict<'a>(vs: &'a [FinancialVerdict], name: &str) -> &'a FinancialVerdict {
    vs.iter().find(|v| v.variable == name).unwrap()
}

#[test]
fn vpg_is_well_formed() {
    for name in corpus_names() {
        let ast = corpus(&name);
        let g = build_vpg(&ast, &build_facts(&ast));
        for v in &ast.state_vars {
            let i = g
                .node(&v.name)
                .unwrap_or_else(|| panic!("{name}: no node for {}", v.name));
            assert_eq!(g.nodes[i].kind, NodeKind::StateVar);
        }
        for e in &g.edges {
            assert!(e.from < g.nodes.len() && e.to < g.nodes.len(), "{name}");
            let (a, b) = (g.nodes[e.from].kind, g.nodes[e.to].kind);
            match e.kind {
                EdgeKind::Cfe | EdgeKind::Fce => {
                    assert_eq!((a, b), (NodeKind::Statement, NodeKind::Statement), "{name}")
                }
                EdgeKind::Dfe => assert!(
                    (a == NodeKind::Statement) != (b == NodeKind::Statement),
                    "{name}: {e:?}"
                ),
                EdgeKind::Cde => assert_eq!(b, NodeKind::Statement, "{name}"),
                EdgeKind::Dde | EdgeKind::Rfe => {
                    assert!(
                        a != NodeKind::Statement && b != NodeKind::Statement,
                        "{name}"
                    )
                }
            }
        }
        let uniq: BTreeSet<_> = g.nodes.iter().map(|n| &n.name).collect();
        assert_eq!(uniq.len(), g.nodes.len(), "{name}");
    }
}

#[test]
fn example_balances_are_financial() {
    let vs = verdicts(&parse(EXAMPLE).unwrap(), RecognitionMode::Rules);
    let b = verdict(&vs, "balances");
    assert!(b.is_financial);
    assert!(
        b.evidence.iter().any(|e| e == "transfer-shape"),
        "{:?}",
        b.evidence
    );
    assert!(!verdict(&vs, "owner").is_financial);
}

#[test]
fn obfuscated_names_need_shapes() {
    let src = EXAMPLE.replace("balances", "_x7");
    let ast = parse(&src).unwrap();
    let rules = verdicts(&ast, RecognitionMode::Rules);
    let names = verdicts(&ast, RecognitionMode::NameOnly);
    assert!(verdict(&rules, "_x7").is_financial);
    assert!(!verdict(&names, "_x7").is_financial);
}

#[test]
fn overrides_replace_scoring() {
    let ast = parse(EXAMPLE).unwrap();
    let g = build_vpg(&ast, &build_facts(&ast));
    let cfg = RecognitionConfig {
        overrides: Some(["owner".to_string()].into()),
        ..Default::default()
    };
    let vs = classify_financial_with(&g, &ast, &cfg);
    assert_eq!(financial_set(&vs), ["owner".to_string()].into());
}

#[test]
fn rules_score_at_least_name_only() {
    let dir = tests_dir().join("recognition");
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "msol") {
            let ast = load(&p);
            let rules = verdicts(&ast, RecognitionMode::Rules);
            let names = verdicts(&ast, RecognitionMode::NameOnly);
            for n in &names {
                let r = verdict(&rules, &n.variable);
                assert!(r.score >= n.score, "{}: {}", p.display(), n.variable);
                assert!(
                    !n.is_financial || r.is_financial,
                    "{}: {}",
                    p.display(),
                    n.variable
                );
            }
        }
    }
}

#[test]
fn lexicon_splits_identifiers() {
    assert_eq!(split_name("totalSupply"), vec!["total", "supply"]);
    assert_eq!(split_name("_fee_rate"), vec!["fee", "rate"]);
    let lex = Lexicon::default();
    assert!(lex.score("balances") >= NAME_SIMILARITY);
    assert_eq!(lex.score("s3"), 0.0);
}

#[test]
fn pied_fp_is_filtered_out() {
    let ast = regression("pied_fp");
    let d = analyze(&ast, &AnalyzerConfig::default()).unwrap();
    assert!(
        !d.is_empty(),
        "the raw analysis still sees privileged differences"
    );
    let g = build_vpg(&ast, &build_facts(&ast));
    let vs = classify_financial(&g, &ast);
    assert!(risk_filter(&d, &vs, &shapes(&ast, &g)).is_empty());
}

#[test]
fn desk_set_meets_accuracy() {
    let rules = desk_set_accuracy(RecognitionMode::Rules);
    let names = desk_set_accuracy(RecognitionMode::NameOnly);
    assert!(rules.contracts >= 20 && rules.total >= 50);
    assert!(rules.overall() >= 0.90, "{rules:?}");
    assert!(
        rules.obfuscated() > names.obfuscated(),
        "{rules:?} vs {names:?}"
    );
}
