//! Variable summaries, state summaries and the difference operator.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::engine::solver::{check, entails, SatResult};
use crate::engine::state::{ExecState, LabeledState, MapVal, Slot, ETHER, EXEC_STATE};
use crate::engine::value::{Formula, Num, Value};
use crate::frontend::*;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableSummary {
    Numeric {
        is_increased: bool,
        is_decreased: bool,
        related_const_var: BTreeSet<String>,
    },
    Address {
        is_constant: bool,
        is_changed: bool,
        related_const_var: BTreeSet<String>,
    },
    /// Raw values; booleans are not abstracted.
    Boolean { prev: String, next: String },
    /// Key-variable token to value summary; untouched keys are omitted.
    Mapping {
        entries: BTreeMap<String, VariableSummary>,
    },
    ExecState {
        success: bool,
        revert: bool,
        selfdestruct: bool,
    },
}

impl VariableSummary {
    pub fn is_neutral(&self) -> bool {
        match self {
            VariableSummary::Numeric {
                is_increased,
                is_decreased,
                related_const_var,
            } => !is_increased && !is_decreased && related_const_var.is_empty(),
            VariableSummary::Address {
                is_constant,
                is_changed,
                related_const_var,
            } => !is_constant && !is_changed && related_const_var.is_empty(),
            VariableSummary::Boolean { prev, next } => prev == next,
            VariableSummary::Mapping { entries } => entries.is_empty(),
            VariableSummary::ExecState { .. } => false,
        }
    }
}

pub type StateSummary = BTreeMap<String, VariableSummary>;

fn value_summary(
    pc: &[Formula],
    prev: &Value,
    next: &Value,
    related: BTreeSet<String>,
    is_constant: bool,
) -> VariableSummary {
    match (prev, next) {
        (Value::Num(a), Value::Num(b)) => {
            let d = b.sub(a);
            // May-semantics: a direction is recorded when the path allows it.
            let (inc, dec) = if d.is_zero() {
                (false, false)
            } else {
                let one = Num::constant(1);
                let may = |delta: Num| {
                    let mut q = pc.to_vec();
                    q.push(Formula::ge0(delta.sub(&one)));
                    check(&q) != SatResult::Unsat
                };
                (may(d.clone()), may(d.neg()))
            };
            VariableSummary::Numeric {
                is_increased: inc,
                is_decreased: dec,
                related_const_var: related,
            }
        }
        (Value::Addr { a, .. }, Value::Addr { a: b, .. }) => VariableSummary::Address {
            is_constant,
            is_changed: a != b && !entails(pc, &Formula::addr_eq(a.clone(), b.clone())),
            related_const_var: related,
        },
        (Value::Bool(a), Value::Bool(b)) => {
            let prev = a.summary_label();
            let mut next = b.summary_label();
            // Distinct symbols of one parameter share a label; mark the newer one.
            if a != b && next == prev {
                next.push('\'');
            }
            VariableSummary::Boolean { prev, next }
        }
        _ => unreachable!("type-consistent values"),
    }
}

fn mapping_summary(next: &LabeledState, m: &MapVal) -> VariableSummary {
    let mut entries = BTreeMap::new();
    for (i, e) in m.entries.iter().enumerate() {
        if !e.written && e.value == e.initial {
            continue;
        }
        let related = next
            .trace
            .entry_related
            .get(&(m.name.clone(), i))
            .cloned()
            .unwrap_or_default();
        let s = value_summary(&next.path_cond, &e.initial, &e.value, related, false);
        if s.is_neutral() {
            continue;
        }
        let key: Vec<&str> = e.tokens.iter().map(String::as_str).collect();
        entries.insert(key.join("="), s);
    }
    VariableSummary::Mapping { entries }
}

/// Summary of `v` across the execution from `prev` to `next`.
pub fn summarize(prev: &LabeledState, next: &LabeledState, v: &str) -> VariableSummary {
    if v == EXEC_STATE {
        return VariableSummary::ExecState {
            success: next.exec_state == ExecState::Success,
            revert: next.exec_state == ExecState::Revert,
            selfdestruct: next.exec_state == ExecState::Selfdestruct,
        };
    }
    if v == ETHER {
        return mapping_summary(next, &next.ether);
    }
    match (&prev.sigma[v], &next.sigma[v]) {
        (Slot::Scalar(a), Slot::Scalar(b)) => {
            let related = next.trace.related.get(v).cloned().unwrap_or_default();
            let is_constant = next.trace.const_assigned.contains(v);
            value_summary(&next.path_cond, a, b, related, is_constant)
        }
        (_, Slot::Map(m)) => mapping_summary(next, m),
        _ => unreachable!("slot kinds are fixed per variable"),
    }
}

/// Summaries of every state variable plus `ether` and `exec_state`.
pub fn summarize_state(prev: &LabeledState, next: &LabeledState) -> StateSummary {
    next.variables()
        .into_iter()
        .map(|v| {
            let s = summarize(prev, next, &v);
            (v, s)
        })
        .collect()
}

/// Per-variable disagreement between a privileged and an ordinary execution.
/// Identity (equality, ordering, hashing) is the entry map; `labeled` records
/// which entries are present because of a label.
#[derive(Clone, Debug, Serialize)]
pub struct Difference {
    pub entries: BTreeMap<String, (VariableSummary, VariableSummary)>,
    pub labeled: BTreeSet<String>,
}

impl PartialEq for Difference {
    fn eq(&self, o: &Self) -> bool {
        self.entries == o.entries
    }
}

impl Eq for Difference {}

impl PartialOrd for Difference {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Difference {
    fn cmp(&self, o: &Self) -> Ordering {
        self.entries.cmp(&o.entries)
    }
}

impl Hash for Difference {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.entries.hash(h);
    }
}

impl Difference {
    pub fn variables(&self) -> BTreeSet<String> {
        self.entries.keys().cloned().collect()
    }

    /// Entries whose summaries actually disagree.
    pub fn value_variables(&self) -> BTreeSet<String> {
        self.entries
            .iter()
            .filter(|(_, (p, o))| p != o)
            .map(|(k, _)| k.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SummaryError {
    #[error("summaries range over different variables")]
    UniverseMismatch,
}

/// Entries for variables whose summaries differ or that are labeled in the
/// privileged successor. `use_labels = false` drops the label clause.
pub fn diff(
    phi_p: &StateSummary,
    phi_o: &StateSummary,
    theta_p: &BTreeSet<String>,
    use_labels: bool,
) -> Result<Option<Difference>, SummaryError> {
    if phi_p.len() != phi_o.len() || phi_p.keys().zip(phi_o.keys()).any(|(a, b)| a != b) {
        return Err(SummaryError::UniverseMismatch);
    }
    let mut entries = BTreeMap::new();
    let mut labeled = BTreeSet::new();
    for (v, sp) in phi_p {
        let so = &phi_o[v];
        let is_labeled = use_labels && theta_p.contains(v);
        if sp != so || is_labeled {
            entries.insert(v.clone(), (sp.clone(), so.clone()));
            if is_labeled {
                labeled.insert(v.clone());
            }
        }
    }
    Ok((!entries.is_empty()).then_some(Difference { entries, labeled }))
}

fn sat_pow(base: u128, exp: u128) -> u128 {
    let mut r: u128 = 1;
    for _ in 0..exp.min(256) {
        r = r.saturating_mul(base);
        if r == u128::MAX {
            break;
        }
    }
    r
}

/// Size bound on the set of possible differences for this contract:
/// (product of per-variable summary domain sizes)^2, saturating.
pub fn lattice_bound(ast: &ContractAST) -> u128 {
    let mut literals = BTreeSet::new();
    let mut key_tokens = BTreeSet::from(["this".to_string()]);
    let mut bool_params = 0u128;
    let visit_expr = |e: &Expr, literals: &mut BTreeSet<String>, keys: &mut BTreeSet<String>| {
        e.walk(&mut |x| match x {
            Expr::Number(_) | Expr::Bool(_) | Expr::Address(_) => {
                literals.insert(crate::frontend::printer::expr_to_string(x));
            }
            Expr::Index(_, k) => {
                keys.insert(crate::frontend::printer::expr_to_string(k));
            }
            _ => {}
        });
    };
    for f in ast.functions.iter().chain(ast.constructor.iter()) {
        bool_params += f.params.iter().filter(|p| p.ty == Type::Boolean).count() as u128;
    }
    let bodies = ast
        .functions
        .iter()
        .chain(ast.constructor.iter())
        .map(|f| &f.body)
        .chain(ast.modifiers.iter().map(|m| &m.body));
    for body in bodies {
        walk_block(body, &mut |s| {
            for e in s.exprs() {
                visit_expr(e, &mut literals, &mut key_tokens);
            }
            if let StmtKind::Assign {
                target: LValue::Index(_, k),
                ..
            } = &s.kind
            {
                key_tokens.insert(crate::frontend::printer::expr_to_string(k));
            }
            if let StmtKind::SelfDestruct(e) = &s.kind {
                key_tokens.insert(crate::frontend::printer::expr_to_string(e));
            }
        });
    }
    let related = (ast.state_vars.len() + literals.len()) as u128;
    let rel_sets = sat_pow(2, related);
    let num = 3u128.saturating_mul(rel_sets);
    let addr = 4u128.saturating_mul(rel_sets);
    let bool_labels =
        3 + 2 * bool_params + 2 * key_tokens.len() as u128 * ast.state_vars.len() as u128;
    let boolean = bool_labels.saturating_mul(bool_labels);
    // Each subset of key tokens names one entry; absent entries count once.
    let keys = sat_pow(2, key_tokens.len() as u128);
    let mapping = |inner: u128| sat_pow(inner.saturating_add(1), keys);
    let mut phi: u128 = 3; // exec_state
    phi = phi.saturating_mul(mapping(num)); // ether
    for v in &ast.state_vars {
        let d = match &v.ty {
            Type::Numeric => num,
            Type::Address => addr,
            Type::Boolean => boolean,
            Type::Mapping(inner) => mapping(match **inner {
                Type::Numeric => num,
                Type::Address => addr,
                _ => boolean,
            }),
        };
        phi = phi.saturating_mul(d);
    }
    phi.saturating_mul(phi)
}
