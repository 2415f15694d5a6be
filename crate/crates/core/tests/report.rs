mod common;

use std::collections::BTreeSet;

use janus_core::frontend::parse;
use janus_core::report::*;

use common::*;

fn report(path: &std::path::Path) -> RiskReport {
    let ast = load(path);
    run_pipeline(
        &ast,
        Some(&path.display().to_string()),
        &PipelineOptions::default(),
    )
    .unwrap()
    .report
}

fn expected(name: &str) -> BTreeSet<RiskCategory> {
    use RiskCategory::*;
    let c = match name {
        "transfer" => Some(ArbitrarilyTransfer),
        "destroy" | "tokeer_fn" => Some(DestroyAccount),
        "mint" => Some(ArbitrarilyMint),
        "freeze" => Some(FreezeAccount),
        "pause" | "pied_fn" => Some(DisableTransferring),
        "param" => Some(ParameterManipulation),
        "whitelist" => Some(WhitelistEscalation),
        _ => None,
    };
    c.into_iter().collect()
}

fn all_paths() -> Vec<(String, std::path::PathBuf)> {
    let mut v: Vec<_> = corpus_names()
        .into_iter()
        .map(|n| (n.clone(), corpus_path(&n)))
        .collect();
    for n in ["pied_fp", "pied_fn", "tokeer_fn", "safe_token"] {
        v.push((n.to_string(), regression_path(n)));
    }
    v
}

#[test]
fn categories_per_contract() {
    for (name, path) in all_paths() {
        let r = report(&path);
        assert_eq!(r.categories(), expected(&name), "{name}: {:?}", r.risks);
        assert_eq!(
            r.exit_code(),
            i32::from(!expected(&name).is_empty()),
            "{name}"
        );
    }
}

#[test]
fn example_backdoor_is_an_arbitrary_transfer() {
    let ast = parse(EXAMPLE).unwrap();
    let r = run_pipeline(&ast, None, &PipelineOptions::default())
        .unwrap()
        .report;
    let risk = &r.risks[0];
    assert_eq!(risk.category, RiskCategory::ArbitrarilyTransfer);
    assert!(risk.variables.contains(&"balances".to_string()));
    assert_eq!(risk.provenance.functions, vec!["owner_transfer"]);
    assert_eq!(r.privileged, vec!["owner"]);
}

#[test]
fn json_round_trips() {
    for (name, path) in all_paths() {
        let r = report(&path);
        let s = serde_json::to_string(&r).unwrap();
        let back: RiskReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r, "{name}");
    }
}

#[test]
fn reports_match_the_documented_schema() {
    let schema_path = tests_dir().join("../../../docs/report-schema.json");
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    for (name, path) in all_paths() {
        let v = serde_json::to_value(report(&path)).unwrap();
        let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
    }
    assert_eq!(
        schema["properties"]["schema_version"]["const"],
        SCHEMA_VERSION
    );
}

#[test]
fn text_rendering_lists_each_risk() {
    let r = report(&corpus_path("mint"));
    let text = render_text(&r);
    assert!(text.starts_with("MintableToken ("));
    assert!(text.contains("ArbitrarilyMint"));
    assert_eq!(text.lines().count(), 1 + r.risks.len());
}
