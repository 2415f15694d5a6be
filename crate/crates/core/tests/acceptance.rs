//! End-to-end acceptance checks; prints one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use janus_core::analyzer::{analyze, AnalyzerConfig};
use janus_core::financial::RecognitionMode;
use janus_core::oracle::{check_theorems_with, full_traverse, OracleConfig};
use janus_core::report::{run_pipeline, PipelineOptions, RiskCategory};

use common::*;

const PER_CONTRACT: Duration = Duration::from_secs(5);
const THEOREM_TOTAL: Duration = Duration::from_secs(60);
const THEOREM_DEPTH: usize = 3;
const GROWTH_DEPTHS: [usize; 4] = [1, 2, 3, 4];
const MIN_ACCURACY: f64 = 0.90;
const MIN_DESK_CONTRACTS: usize = 20;
const MIN_DESK_VARS: usize = 50;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn corpus_verdicts() -> Outcome {
    let (mut tp, mut tn, mut fp, mut fn_, mut slowest) = (0, 0, 0, 0, Duration::ZERO);
    for name in corpus_names() {
        let ast = corpus(&name);
        let t = Instant::now();
        let r = run_pipeline(&ast, None, &PipelineOptions::default())
            .map_err(|e| format!("{name}: {e}"))?
            .report;
        slowest = slowest.max(t.elapsed());
        match (RISKY.contains(&name.as_str()), r.is_risky()) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
        }
    }
    let msg = format!("risky {tp}/7, clean {tn}/7, FP {fp}, FN {fn_}, slowest {slowest:.2?}");
    if tp == 7 && tn == 7 && slowest < PER_CONTRACT {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn regressions() -> Outcome {
    let cats = |n: &str| {
        run_pipeline(&regression(n), None, &PipelineOptions::default())
            .unwrap()
            .report
            .categories()
    };
    let fp = cats("pied_fp");
    let fn_ = cats("pied_fn");
    let msg = format!("pied_fp {fp:?}, pied_fn {fn_:?}");
    if fp.is_empty() && fn_.contains(&RiskCategory::DisableTransferring) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn theorems() -> Outcome {
    let t = Instant::now();
    let oracle = OracleConfig::default();
    let count = |cfg: &AnalyzerConfig| -> usize {
        corpus_names()
            .iter()
            .map(|n| {
                check_theorems_with(&corpus(n), THEOREM_DEPTH, cfg, &oracle)
                    .unwrap()
                    .violations
                    .len()
            })
            .sum()
    };
    let base = count(&AnalyzerConfig::default());
    let no_labels = count(&AnalyzerConfig {
        label_propagation: false,
        ..Default::default()
    });
    let no_clause = count(&AnalyzerConfig {
        theta_clause: false,
        ..Default::default()
    });
    let took = t.elapsed();
    let msg = format!(
        "violations: baseline {base}, no label propagation {no_labels}, no label clause {no_clause}; {took:.2?}"
    );
    if base == 0 && no_labels >= 1 && no_clause >= 1 && took < THEOREM_TOTAL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn convergence() -> Outcome {
    for name in corpus_names() {
        let d = analyze(&corpus(&name), &AnalyzerConfig::default()).unwrap();
        if d.rounds as u128 > d.lattice_bound {
            return Err(format!(
                "{name}: {} rounds > bound {}",
                d.rounds, d.lattice_bound
            ));
        }
    }
    let mint = corpus("mint");
    let mut ours = vec![];
    let mut tree = vec![];
    for d in GROWTH_DEPTHS {
        let cfg = AnalyzerConfig {
            max_rounds: d,
            ..Default::default()
        };
        ours.push(analyze(&mint, &cfg).unwrap().executions);
        tree.push(full_traverse(&mint, d).unwrap().tree_executions);
    }
    let linear = GROWTH_DEPTHS
        .iter()
        .zip(&ours)
        .all(|(&d, &e)| e <= d as u64 * ours[0]);
    let exponential = tree.windows(2).all(|w| w[1] >= 2 * w[0]);
    let smaller = GROWTH_DEPTHS
        .iter()
        .zip(ours.iter().zip(&tree))
        .all(|(&d, (&a, &o))| d < 2 || a < o);
    let msg = format!("analyzer {ours:?} vs oracle tree {tree:?} at depths {GROWTH_DEPTHS:?}");
    if linear && exponential && smaller {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn safe_token() -> Outcome {
    let d = analyze(&regression("safe_token"), &AnalyzerConfig::default()).unwrap();
    let msg = format!("{} difference(s)", d.differences.len());
    if d.is_empty() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn recognition() -> Outcome {
    let rules = desk_set_accuracy(RecognitionMode::Rules);
    let names = desk_set_accuracy(RecognitionMode::NameOnly);
    let msg = format!(
        "{} contracts, {} vars; accuracy {:.3} (name-only {:.3}); obfuscated {:.3} vs {:.3}",
        rules.contracts,
        rules.total,
        rules.overall(),
        names.overall(),
        rules.obfuscated(),
        names.obfuscated()
    );
    if rules.contracts >= MIN_DESK_CONTRACTS
        && rules.total >= MIN_DESK_VARS
        && rules.overall() >= MIN_ACCURACY
        && rules.obfuscated() > names.obfuscated()
    {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("corpus verdicts", corpus_verdicts),
        ("regression contracts", regressions),
        ("oracle theorems", theorems),
        ("convergence and growth", convergence),
        ("compliant token", safe_token),
        ("financial recognition", recognition),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(m) => println!("criterion {}: PASS {name}: {m}", i + 1),
            Err(m) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {m}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
