//! Completeness, soundness and summary-distinction checks against the oracle.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::traverse::*;
use crate::analyzer::{analyze, AnalyzeError, AnalyzerConfig, DifferenceSet};
use crate::frontend::ContractAST;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Theorem {
    /// Oracle pair implies an analyzer difference covering its branch variables.
    T1,
    /// Analyzer difference implies an oracle pair along the same calls.
    T2,
    /// Every branch variable of an analyzer pair appears in its difference.
    T3,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub theorem: Theorem,
    pub message: String,
    /// Smallest concrete or symbolic witness.
    pub counterexample: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub contract: String,
    pub depth: usize,
    pub oracle_pairs: usize,
    pub oracle_tree_executions: u64,
    pub oracle_executions: u64,
    pub oracle_roots: usize,
    pub analyzer_differences: usize,
    pub analyzer_executions: u64,
    pub analyzer_rounds: usize,
    pub violations: Vec<Violation>,
}

impl TheoremReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, t: Theorem) -> usize {
        self.violations.iter().filter(|v| v.theorem == t).count()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TheoremError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Analyze(#[from] AnalyzeError),
}

fn render(set: &BTreeSet<String>) -> String {
    format!("{{{}}}", set.iter().cloned().collect::<Vec<_>>().join(", "))
}

/// Compare an analyzer result with an oracle traversal.
pub fn compare(dset: &DifferenceSet, oracle: &TraverseResult) -> Vec<Violation> {
    let mut out = vec![];
    for (bv, w) in &oracle.pairs {
        let covered = dset
            .differences
            .iter()
            .any(|d| bv.is_subset(&d.difference.variables()));
        if !covered {
            out.push(Violation {
                theorem: Theorem::T1,
                message: format!(
                    "no difference covers oracle branch variables {}",
                    render(bv)
                ),
                counterexample: w.render(),
            });
        }
    }
    for d in &dset.differences {
        let seq = &d.provenance.functions;
        if seq.len() > oracle.depth {
            continue;
        }
        let values = d.difference.value_variables();
        match oracle.by_sequence.get(seq) {
            None => out.push(Violation {
                theorem: Theorem::T2,
                message: format!("no concrete differential pair along {}", seq.join(" -> ")),
                counterexample: d.provenance.render(),
            }),
            Some(bv) if !values.is_subset(bv) => out.push(Violation {
                theorem: Theorem::T2,
                message: format!(
                    "difference variables {} not concretely differing (oracle saw {})",
                    render(&values),
                    render(bv)
                ),
                counterexample: d.provenance.render(),
            }),
            Some(_) => {}
        }
    }
    for a in &dset.pair_audit {
        if !a.branch_vars.is_subset(&a.diff_vars) {
            let missing: BTreeSet<String> =
                a.branch_vars.difference(&a.diff_vars).cloned().collect();
            out.push(Violation {
                theorem: Theorem::T3,
                message: format!(
                    "branch variables {} have equal summaries and no label",
                    render(&missing)
                ),
                counterexample: a.provenance.render(),
            });
        }
    }
    out
}

pub fn check_theorems(ast: &ContractAST, depth: usize) -> Result<TheoremReport, TheoremError> {
    check_theorems_with(
        ast,
        depth,
        &AnalyzerConfig::default(),
        &OracleConfig::default(),
    )
}

pub fn check_theorems_with(
    ast: &ContractAST,
    depth: usize,
    analyzer: &AnalyzerConfig,
    oracle_cfg: &OracleConfig,
) -> Result<TheoremReport, TheoremError> {
    let oracle = full_traverse_with(ast, depth, oracle_cfg)?;
    let dset = analyze(ast, analyzer)?;
    let violations = compare(&dset, &oracle);
    Ok(TheoremReport {
        contract: ast.name.clone(),
        depth,
        oracle_pairs: oracle.pairs.len(),
        oracle_tree_executions: oracle.tree_executions,
        oracle_executions: oracle.executions,
        oracle_roots: oracle.roots,
        analyzer_differences: dset.differences.len(),
        analyzer_executions: dset.executions,
        analyzer_rounds: dset.rounds,
        violations,
    })
}
