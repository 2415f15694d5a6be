//! Risk categories, the per-contract report and the end-to-end pipeline.

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analyzer::{analyze, AdmittedDifference, AnalyzeError, AnalyzerConfig, DifferenceSet};
use crate::engine::Role;
use crate::financial::*;
use crate::frontend::{ContractAST, Type};
use crate::graphs::{build_facts, ETHER, EXEC_STATE};
use crate::summary::VariableSummary;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskCategory {
    ArbitrarilyTransfer,
    DestroyAccount,
    ArbitrarilyMint,
    FreezeAccount,
    DisableTransferring,
    ParameterManipulation,
    WhitelistEscalation,
    GenericFinancialDifference,
}

impl fmt::Display for RiskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Confidence {
    Exact,
    ApproximatePaths,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceReport {
    pub functions: Vec<String>,
    pub privileged_roles: Vec<Role>,
    pub ordinary_roles: Vec<Role>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Risk {
    pub category: RiskCategory,
    pub variables: Vec<String>,
    pub provenance: ProvenanceReport,
    pub confidence: Confidence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub rounds: usize,
    pub executions: u64,
    pub wall_time_ms: f64,
    /// Saturating size bound of the summary lattice, as a decimal string.
    pub lattice_bound: String,
    pub differences: usize,
    pub filtered: usize,
    pub partial: bool,
    pub partial_reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub schema_version: String,
    pub contract: String,
    pub file: Option<String>,
    pub privileged: Vec<String>,
    pub financial_variables: Vec<String>,
    pub risks: Vec<Risk>,
    pub stats: Stats,
}

impl RiskReport {
    pub fn is_risky(&self) -> bool {
        !self.risks.is_empty()
    }

    pub fn categories(&self) -> BTreeSet<RiskCategory> {
        self.risks.iter().map(|r| r.category).collect()
    }

    /// Exit status for this report alone: 1 when risks were found.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.is_risky())
    }
}

fn entries(s: &VariableSummary) -> Vec<(&str, &VariableSummary)> {
    match s {
        VariableSummary::Mapping { entries } => {
            entries.iter().map(|(k, v)| (k.as_str(), v)).collect()
        }
        other => vec![("", other)],
    }
}

fn moves(s: &VariableSummary) -> (bool, bool) {
    match s {
        VariableSummary::Numeric {
            is_increased,
            is_decreased,
            ..
        } => (*is_increased, *is_decreased),
        _ => (false, false),
    }
}

fn own_key(k: &str) -> bool {
    k.split('=').any(|t| t == "msg.sender")
}

/// Entries that move only in the privileged run: (key, increased, decreased).
fn privileged_moves<'a>(
    p: &'a VariableSummary,
    o: &'a VariableSummary,
) -> Vec<(&'a str, bool, bool)> {
    let oe = entries(o);
    entries(p)
        .into_iter()
        .filter_map(|(k, sp)| {
            let (pi, pd) = moves(sp);
            let (oi, od) = oe
                .iter()
                .find(|(ok, _)| *ok == k)
                .map(|(_, s)| moves(s))
                .unwrap_or((false, false));
            // A move in both directions is an arbitrary reassignment.
            let (i, d) = (pi && !pd && !oi, pd && !pi && !od);
            (i || d).then_some((k, i, d))
        })
        .collect()
}

/// Category of one filtered difference, with the variables that justify it.
pub fn classify_difference(
    d: &AdmittedDifference,
    financial: &BTreeSet<String>,
    shapes: &Shapes,
    ast: &ContractAST,
) -> (RiskCategory, Vec<String>) {
    let diff = &d.difference;
    let vv = diff.value_variables();
    if let Some((
        VariableSummary::ExecState {
            selfdestruct: true, ..
        },
        _,
    )) = diff.entries.get(EXEC_STATE)
    {
        let mut vars = vec![EXEC_STATE.to_string()];
        if vv.contains(ETHER) {
            vars.push(ETHER.into());
        }
        return (RiskCategory::DestroyAccount, vars);
    }
    let fin: Vec<&String> = vv.iter().filter(|v| financial.contains(*v)).collect();
    let mut increased = vec![];
    let mut others_decreased = vec![];
    for v in &fin {
        let (p, o) = &diff.entries[*v];
        for (k, inc, dec) in privileged_moves(p, o) {
            if dec && !k.is_empty() && !own_key(k) {
                others_decreased.push((*v).clone());
            }
            if inc {
                increased.push((*v).clone());
            }
        }
    }
    others_decreased.dedup();
    increased.dedup();
    if !others_decreased.is_empty() {
        let transfer = increased.iter().any(|v| others_decreased.contains(v));
        let mut vars = others_decreased.clone();
        if transfer {
            return (RiskCategory::ArbitrarilyTransfer, vars);
        }
        vars.extend(increased);
        vars.sort();
        vars.dedup();
        return (RiskCategory::DestroyAccount, vars);
    }
    let any_decrease = fin.iter().any(|v| {
        let (p, o) = &diff.entries[*v];
        privileged_moves(p, o).iter().any(|(_, _, dec)| *dec)
    });
    if !increased.is_empty() && !any_decrease {
        return (RiskCategory::ArbitrarilyMint, increased);
    }
    let fees: Vec<String> = vv
        .iter()
        .filter(|v| shapes.fee_factors.contains(*v))
        .cloned()
        .collect();
    if !fees.is_empty() {
        return (RiskCategory::ParameterManipulation, fees);
    }
    // Guard divergence: value-differing guards first, then labeled ones.
    let labeled: BTreeSet<String> = diff.labeled.iter().cloned().collect();
    for pool in [&vv, &labeled] {
        let guards: Vec<&String> = pool
            .iter()
            .filter(|v| {
                shapes.transfer_guards.contains_key(*v) && !shapes.transfer_maps.contains(*v)
            })
            .collect();
        let is_map = |v: &str| {
            ast.state_var(v)
                .is_some_and(|s| matches!(s.ty, Type::Mapping(_)))
        };
        for g in &guards {
            if is_map(g) {
                let pol = &shapes.transfer_guards[*g];
                let cat = if pol.contains(&false) {
                    RiskCategory::FreezeAccount
                } else {
                    RiskCategory::WhitelistEscalation
                };
                return (cat, vec![(*g).clone()]);
            }
        }
        if let Some(g) = guards.first() {
            return (RiskCategory::DisableTransferring, vec![(*g).clone()]);
        }
    }
    let mut vars: Vec<String> = vv.into_iter().filter(|v| v != EXEC_STATE).collect();
    if vars.is_empty() {
        vars.push(EXEC_STATE.into());
    }
    (RiskCategory::GenericFinancialDifference, vars)
}

/// One risk per (category, variables), citing the shortest provenance.
/// Generic risks are kept only when no specific risk covers their variables.
pub fn classify_risks(
    filtered: &[&AdmittedDifference],
    verdicts: &[FinancialVerdict],
    shapes: &Shapes,
    ast: &ContractAST,
    partial: bool,
) -> Vec<Risk> {
    let financial = financial_set(verdicts);
    let mut risks: Vec<Risk> = vec![];
    let mut sorted: Vec<&&AdmittedDifference> = filtered.iter().collect();
    sorted.sort_by_key(|d| d.provenance.functions.len());
    for d in sorted {
        let (category, variables) = classify_difference(d, &financial, shapes, ast);
        if risks
            .iter()
            .any(|r| r.category == category && r.variables == variables)
        {
            continue;
        }
        risks.push(Risk {
            category,
            variables,
            provenance: ProvenanceReport {
                functions: d.provenance.functions.clone(),
                privileged_roles: d.provenance.roles(Role::Privileged),
                ordinary_roles: d.provenance.roles(Role::Ordinary),
            },
            confidence: if d.approximate || partial {
                Confidence::ApproximatePaths
            } else {
                Confidence::Exact
            },
        });
    }
    let covered: BTreeSet<String> = risks
        .iter()
        .filter(|r| r.category != RiskCategory::GenericFinancialDifference)
        .flat_map(|r| r.variables.iter().cloned())
        .collect();
    risks.retain(|r| {
        r.category != RiskCategory::GenericFinancialDifference
            || !r.variables.iter().all(|v| covered.contains(v))
    });
    risks.sort_by(|a, b| (a.category, &a.variables).cmp(&(b.category, &b.variables)));
    risks
}

#[derive(Clone, Debug, Default)]
pub struct PipelineOptions {
    pub analyzer: AnalyzerConfig,
    pub recognition: RecognitionConfig,
}

/// Everything computed for one contract.
pub struct Analysis {
    pub differences: DifferenceSet,
    pub graph: VariablePropertyGraph,
    pub verdicts: Vec<FinancialVerdict>,
    pub shapes: Shapes,
    pub report: RiskReport,
}

pub fn run_pipeline(
    ast: &ContractAST,
    file: Option<&str>,
    opts: &PipelineOptions,
) -> Result<Analysis, AnalyzeError> {
    let started = Instant::now();
    let facts = build_facts(ast);
    let graph = build_vpg(ast, &facts);
    let verdicts = classify_financial_with(&graph, ast, &opts.recognition);
    let shapes = shapes(ast, &graph);
    let dset = analyze(ast, &opts.analyzer)?;
    let filtered = risk_filter(&dset, &verdicts, &shapes);
    let risks = classify_risks(&filtered, &verdicts, &shapes, ast, dset.partial);
    let report = RiskReport {
        schema_version: SCHEMA_VERSION.into(),
        contract: ast.name.clone(),
        file: file.map(String::from),
        privileged: dset.privileged.iter().cloned().collect(),
        financial_variables: financial_set(&verdicts).into_iter().collect(),
        risks,
        stats: Stats {
            rounds: dset.rounds,
            executions: dset.executions,
            wall_time_ms: started.elapsed().as_secs_f64() * 1000.0,
            lattice_bound: dset.lattice_bound.to_string(),
            differences: dset.differences.len(),
            filtered: filtered.len(),
            partial: dset.partial,
            partial_reason: dset.partial_reason.clone(),
        },
    };
    Ok(Analysis {
        differences: dset,
        graph,
        verdicts,
        shapes,
        report,
    })
}

/// Fixed-width text rendering of a report.
pub fn render_text(r: &RiskReport) -> String {
    let mut out = format!(
        "{} ({}): {} risk(s); rounds={} executions={} time={:.1}ms{}\n",
        r.contract,
        r.file.as_deref().unwrap_or("-"),
        r.risks.len(),
        r.stats.rounds,
        r.stats.executions,
        r.stats.wall_time_ms,
        if r.stats.partial { " [partial]" } else { "" }
    );
    for risk in &r.risks {
        out.push_str(&format!(
            "  {:<28} {:<30} {}{}\n",
            risk.category.to_string(),
            risk.variables.join(","),
            risk.provenance.functions.join(" -> "),
            if risk.confidence == Confidence::ApproximatePaths {
                " (approximate)"
            } else {
                ""
            }
        ));
    }
    out
}
