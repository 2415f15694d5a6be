//! Keep only differences that touch financial state.

use std::collections::BTreeSet;

use super::classify::{FinancialVerdict, Shapes};
use crate::analyzer::{AdmittedDifference, DifferenceSet};
use crate::graphs::{ETHER, EXEC_STATE};

/// Why a difference survived the filter.
pub fn relevance(
    d: &AdmittedDifference,
    financial: &BTreeSet<String>,
    shapes: &Shapes,
) -> Vec<String> {
    let mut why = vec![];
    for v in d.difference.value_variables() {
        if financial.contains(&v) {
            why.push(format!("financial:{v}"));
        } else if v == ETHER {
            why.push("ether".into());
        } else if shapes.transfer_guards.contains_key(&v) {
            why.push(format!("transfer-guard:{v}"));
        } else if v == EXEC_STATE {
            let last = d
                .provenance
                .functions
                .last()
                .map(String::as_str)
                .unwrap_or("");
            if shapes.transfer_functions.contains(last) {
                why.push(format!("transfer-exec-state:{last}"));
            }
        }
    }
    why
}

pub fn financial_set(verdicts: &[FinancialVerdict]) -> BTreeSet<String> {
    verdicts
        .iter()
        .filter(|v| v.is_financial)
        .map(|v| v.variable.clone())
        .collect()
}

/// Differences whose disagreeing entries touch financial variables, ether,
/// guards of transfer-shaped statements, or the outcome of a transfer.
pub fn risk_filter<'a>(
    dset: &'a DifferenceSet,
    verdicts: &[FinancialVerdict],
    shapes: &Shapes,
) -> Vec<&'a AdmittedDifference> {
    let financial = financial_set(verdicts);
    dset.differences
        .iter()
        .filter(|d| !relevance(d, &financial, shapes).is_empty())
        .collect()
}
