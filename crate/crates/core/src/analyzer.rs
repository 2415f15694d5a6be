//! Iterative difference analysis over privileged successors.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::engine::solver::{check, entails, SatResult};
use crate::engine::state::{LabeledState, MapDefault, MapVal, Slot, ETHER, EXEC_STATE};
use crate::engine::value::{Addr, Formula};
use crate::engine::*;
use crate::frontend::ContractAST;
use crate::graphs::{build_facts, related_funcs_search, DependenceFacts};
use crate::summary::{diff, lattice_bound, summarize_state, Difference};

pub const DEFAULT_MAX_ROUNDS: usize = 16;
pub const DEFAULT_MAX_PATHS: usize = 64;
pub const DEFAULT_BUDGET_SECS: u64 = 10;

#[derive(Clone, Debug)]
pub struct AnalyzerConfig {
    pub max_rounds: usize,
    pub max_paths: usize,
    pub time_budget: Duration,
    /// Propagate labels through data and control dependence.
    pub label_propagation: bool,
    /// Include labeled variables in differences.
    pub theta_clause: bool,
    pub trace: bool,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        let secs = std::env::var("JANUS_BUDGET_SECS")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_BUDGET_SECS);
        AnalyzerConfig {
            max_rounds: DEFAULT_MAX_ROUNDS,
            max_paths: DEFAULT_MAX_PATHS,
            time_budget: Duration::from_secs(secs),
            label_propagation: true,
            theta_clause: true,
            trace: false,
        }
    }
}

/// The function sequence behind a difference: the privileged run executes
/// every step privileged; the ordinary run differs only in the last step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub functions: Vec<String>,
}

impl Provenance {
    pub fn roles(&self, last: Role) -> Vec<Role> {
        let mut r = vec![Role::Privileged; self.functions.len().saturating_sub(1)];
        r.push(last);
        r
    }

    pub fn render(&self) -> String {
        let n = self.functions.len();
        self.functions
            .iter()
            .enumerate()
            .map(|(i, f)| {
                if i + 1 == n {
                    format!("{f}[p|o]")
                } else {
                    format!("{f}[p]")
                }
            })
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmittedDifference {
    pub difference: Difference,
    pub provenance: Provenance,
    pub round: usize,
    pub approximate: bool,
    /// Privileged successor that seeds the next round.
    #[serde(skip)]
    pub state: LabeledState,
}

/// One executed privileged/ordinary pair, kept for the branch-variable audit.
#[derive(Clone, Debug, Serialize)]
pub struct PairAudit {
    pub provenance: Provenance,
    pub branch_vars: BTreeSet<String>,
    pub diff_vars: BTreeSet<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundLog {
    pub round: usize,
    pub new_differences: usize,
    /// Cumulative engine executions at the end of the round.
    pub executions: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DifferenceSet {
    pub differences: Vec<AdmittedDifference>,
    pub rounds: usize,
    pub executions: u64,
    pub lattice_bound: u128,
    pub partial: bool,
    pub partial_reason: Option<String>,
    pub approximate: bool,
    pub privileged: BTreeSet<String>,
    pub primary: Option<String>,
    pub log: Vec<RoundLog>,
    pub pair_audit: Vec<PairAudit>,
    pub trace: Vec<String>,
}

impl DifferenceSet {
    fn empty(privileged: BTreeSet<String>, bound: u128) -> Self {
        DifferenceSet {
            differences: vec![],
            rounds: 0,
            executions: 0,
            lattice_bound: bound,
            partial: false,
            partial_reason: None,
            approximate: false,
            privileged,
            primary: None,
            log: vec![],
            pair_audit: vec![],
            trace: vec![],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.differences.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Mapping values not fixed by the constructor become per-key symbols.
pub fn generalize(l0: &LabeledState) -> LabeledState {
    let mut l = l0.clone();
    for slot in l.sigma.values_mut() {
        if let Slot::Map(m) = slot {
            m.default = MapDefault::Fresh;
        }
    }
    l.ether.default = MapDefault::Fresh;
    l
}

fn map_differs(pc: &[Formula], p: &MapVal, o: &MapVal) -> bool {
    let touched = |m: &MapVal| -> Vec<Addr> {
        m.entries
            .iter()
            .filter(|e| e.written || e.value != e.initial)
            .map(|e| e.key.clone())
            .collect()
    };
    let keys: BTreeSet<Addr> = touched(p).into_iter().chain(touched(o)).collect();
    keys.into_iter().any(|k| {
        let value_at = |m: &MapVal, other: &MapVal| {
            m.entries
                .iter()
                .find(|e| e.key == k)
                .map(|e| e.value.clone())
                .or_else(|| {
                    other
                        .entries
                        .iter()
                        .find(|e| e.key == k)
                        .map(|e| e.initial.clone())
                })
        };
        match (value_at(p, o), value_at(o, p)) {
            (Some(a), Some(b)) => !entails(pc, &a.equals(&b)),
            _ => true,
        }
    })
}

/// Variables whose values differ between the two successors.
pub fn value_branch_vars(lp: &LabeledState, lo: &LabeledState) -> BTreeSet<String> {
    let mut pc = lp.path_cond.clone();
    pc.extend(lo.path_cond.iter().cloned());
    let mut out = BTreeSet::new();
    for (v, sp) in &lp.sigma {
        let differs = match (sp, &lo.sigma[v]) {
            (Slot::Scalar(a), Slot::Scalar(b)) => a != b && !entails(&pc, &a.equals(b)),
            (Slot::Map(a), Slot::Map(b)) => map_differs(&pc, a, b),
            _ => true,
        };
        if differs {
            out.insert(v.clone());
        }
    }
    if map_differs(&pc, &lp.ether, &lo.ether) {
        out.insert(ETHER.into());
    }
    if lp.exec_state != lo.exec_state {
        out.insert(EXEC_STATE.into());
    }
    out
}

struct Run<'a> {
    ast: &'a ContractAST,
    facts: DependenceFacts,
    engine: Engine<'a>,
    cfg: AnalyzerConfig,
    account: Addr,
    started: Instant,
    out: DifferenceSet,
}

impl<'a> Run<'a> {
    fn over_budget(&mut self) -> bool {
        if self.started.elapsed() > self.cfg.time_budget {
            self.out.partial = true;
            self.out.partial_reason = Some(format!(
                "time budget of {:?} exceeded",
                self.cfg.time_budget
            ));
            return true;
        }
        false
    }

    /// Execute `f` from `l` under both roles; return admitted (new) differences.
    fn pair_round(
        &mut self,
        f: &str,
        l: &LabeledState,
        prov: &[String],
        round: usize,
    ) -> Result<Vec<usize>, AnalyzeError> {
        let decl = self.ast.function(f).expect("entry function");
        let inputs = self.engine.fresh_inputs(decl, &self.account);
        let ps =
            self.engine
                .exec_function(f, &CallerContext::privileged(&self.account), l, &inputs)?;
        let os =
            self.engine
                .exec_function(f, &CallerContext::ordinary(&self.account), l, &inputs)?;
        let mut provenance = prov.to_vec();
        provenance.push(f.to_string());
        let provenance = Provenance {
            functions: provenance,
        };
        let mut admitted = vec![];
        for p in &ps {
            if self.cfg.trace {
                for line in &p.trace.lines {
                    self.out
                        .trace
                        .push(format!("[{}] p {line}", provenance.render()));
                }
            }
            let phi_p = summarize_state(l, p);
            for o in &os {
                let mut joint = p.path_cond.clone();
                joint.extend(o.path_cond.iter().cloned());
                if check(&joint) == SatResult::Unsat {
                    continue;
                }
                let phi_o = summarize_state(l, o);
                let delta =
                    diff(&phi_p, &phi_o, &p.theta, self.cfg.theta_clause).expect("same universe");
                let values = value_branch_vars(p, o);
                let mut branch_vars = values.clone();
                branch_vars.extend(p.theta.iter().cloned());
                self.out.pair_audit.push(PairAudit {
                    provenance: provenance.clone(),
                    branch_vars,
                    diff_vars: delta.as_ref().map(|d| d.variables()).unwrap_or_default(),
                });
                let Some(delta) = delta else { continue };
                if self.out.differences.iter().any(|d| d.difference == delta) {
                    continue;
                }
                let mut seeded = p.clone();
                seeded
                    .theta
                    .extend(values.into_iter().filter(|v| v != EXEC_STATE));
                let approximate = p.approximate || o.approximate;
                self.out.approximate |= approximate;
                self.out.differences.push(AdmittedDifference {
                    difference: delta,
                    provenance: provenance.clone(),
                    round,
                    approximate,
                    state: seeded,
                });
                admitted.push(self.out.differences.len() - 1);
            }
        }
        Ok(admitted)
    }

    fn execute(mut self) -> Result<DifferenceSet, AnalyzeError> {
        let l0 = generalize(&self.engine.exec_constructor_as(&self.account.clone())?);
        let entry: Vec<String> = self.ast.entry_functions().map(|f| f.name.clone()).collect();
        // (state, provenance, functions to run)
        let mut work: Vec<(LabeledState, Vec<String>, Vec<String>)> = vec![(l0, vec![], entry)];
        let mut round = 0;
        'rounds: while !work.is_empty() {
            round += 1;
            let before = self.out.differences.len();
            let mut next = vec![];
            for (l, prov, funcs) in &work {
                for f in funcs {
                    if self.over_budget() {
                        break 'rounds;
                    }
                    for i in self.pair_round(f, l, prov, round)? {
                        let d = &self.out.differences[i];
                        let related =
                            related_funcs_search(self.ast, &self.facts, &d.difference.variables())
                                .expect("difference variables are state variables");
                        next.push((
                            d.state.clone(),
                            d.provenance.functions.clone(),
                            related.into_iter().collect(),
                        ));
                    }
                }
            }
            self.out.log.push(RoundLog {
                round,
                new_differences: self.out.differences.len() - before,
                executions: self.engine.executions,
            });
            self.out.rounds = round;
            if !next.is_empty() && round >= self.cfg.max_rounds {
                self.out.partial = true;
                self.out.partial_reason =
                    Some(format!("round budget of {} exhausted", self.cfg.max_rounds));
                break;
            }
            work = next;
        }
        self.out.executions = self.engine.executions;
        if self.engine.paths_truncated {
            self.out.approximate = true;
            self.out.partial = true;
            self.out.partial_reason.get_or_insert_with(|| {
                format!(
                    "path budget of {} per function exceeded",
                    self.cfg.max_paths
                )
            });
        }
        assert!(
            self.out.rounds as u128 <= self.out.lattice_bound,
            "rounds exceed the summary lattice bound"
        );
        Ok(self.out)
    }
}

/// Converged difference set for a contract.
pub fn analyze(ast: &ContractAST, cfg: &AnalyzerConfig) -> Result<DifferenceSet, AnalyzeError> {
    let facts = build_facts(ast);
    let privileged = identify_privileged(ast, &facts);
    let bound = lattice_bound(ast);
    let Some(primary) = primary_privileged(ast, &privileged) else {
        return Ok(DifferenceSet::empty(privileged, bound));
    };
    let mut engine = Engine::new(
        ast,
        EngineOptions {
            label_propagation: cfg.label_propagation,
            max_paths: cfg.max_paths,
            trace: cfg.trace,
        },
    );
    let probe = engine.exec_constructor()?;
    let account = probe.scalar(&primary).address().clone();
    let mut out = DifferenceSet::empty(privileged, bound);
    out.primary = Some(primary);
    let run = Run {
        ast,
        facts,
        engine,
        cfg: cfg.clone(),
        account,
        started: Instant::now(),
        out,
    };
    run.execute()
}

/// Per-variable count of differences, for logs and reports.
pub fn variable_histogram(d: &DifferenceSet) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for a in &d.differences {
        for v in a.difference.entries.keys() {
            *h.entry(v.clone()).or_insert(0) += 1;
        }
    }
    h
}
