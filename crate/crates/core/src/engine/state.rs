//! Labeled states `(sigma, pi, theta)` plus path condition and exec state.

use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

use super::value::{Addr, Formula, Num, Value};
use crate::frontend::Type;

pub use crate::graphs::{StmtId, ETHER, EXEC_STATE};
/// Ether key token for the contract's own balance.
pub const THIS: &str = "this";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecState {
    Success,
    Revert,
    Selfdestruct,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapEntry {
    pub key: Addr,
    pub value: Value,
    /// Value when the current execution started (or when first read in it).
    pub initial: Value,
    /// Syntactic key tokens used for this entry in the current execution.
    pub tokens: BTreeSet<String>,
    pub written: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MapDefault {
    /// Unwritten keys hold the type default.
    Zero,
    /// Unwritten keys hold an unconstrained symbol each.
    Fresh,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapVal {
    pub name: String,
    pub value_ty: Type,
    pub entries: Vec<MapEntry>,
    pub default: MapDefault,
}

impl MapVal {
    pub fn new(name: &str, value_ty: Type) -> MapVal {
        MapVal {
            name: name.to_string(),
            value_ty,
            entries: vec![],
            default: MapDefault::Zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slot {
    Scalar(Value),
    Map(MapVal),
}

impl Slot {
    pub fn scalar(&self) -> &Value {
        match self {
            Slot::Scalar(v) => v,
            Slot::Map(m) => panic!("`{}` is a mapping", m.name),
        }
    }

    pub fn map(&self) -> &MapVal {
        match self {
            Slot::Map(m) => m,
            Slot::Scalar(_) => panic!("expected mapping"),
        }
    }

    pub fn map_mut(&mut self) -> &mut MapVal {
        match self {
            Slot::Map(m) => m,
            Slot::Scalar(_) => panic!("expected mapping"),
        }
    }
}

/// Per-execution bookkeeping used by the statement-based summary keys.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExecTrace {
    /// State variables and literals reaching each assigned scalar.
    pub related: BTreeMap<String, BTreeSet<String>>,
    /// Same, per mapping entry index.
    pub entry_related: BTreeMap<(String, usize), BTreeSet<String>>,
    /// Address variables whose last assignment was a literal.
    pub const_assigned: BTreeSet<String>,
    pub lines: Vec<String>,
}

pub fn default_value(ty: &Type) -> Value {
    match ty {
        Type::Numeric => Value::Num(Num::constant(0)),
        Type::Address => Value::addr(Addr::Const("0x0".into())),
        Type::Boolean => Value::Bool(Formula::Const(false)),
        Type::Mapping(v) => default_value(v),
    }
}

#[derive(Clone, Debug)]
pub struct LabeledState {
    pub sigma: BTreeMap<String, Slot>,
    pub ether: MapVal,
    pub pi: Vec<StmtId>,
    pub theta: BTreeSet<String>,
    pub path_cond: Vec<Formula>,
    pub exec_state: ExecState,
    pub destroyed: bool,
    /// Set when a solver query on this path came back unknown or a budget cut paths.
    pub approximate: bool,
    pub trace: ExecTrace,
}

impl LabeledState {
    pub fn scalar(&self, v: &str) -> &Value {
        self.sigma[v].scalar()
    }

    pub fn is_labeled(&self, v: &str) -> bool {
        self.theta.contains(v)
    }

    /// Reset per-execution fields before running a function.
    pub fn begin_execution(&mut self) {
        self.pi.clear();
        self.trace = ExecTrace::default();
        self.theta.remove(EXEC_STATE);
        self.exec_state = ExecState::Success;
        for slot in self.sigma.values_mut() {
            if let Slot::Map(m) = slot {
                reset_entries(m);
            }
        }
        reset_entries(&mut self.ether);
    }

    /// State variables and the synthetic variables, in a fixed order.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = self.sigma.keys().cloned().collect();
        out.push(ETHER.into());
        out.push(EXEC_STATE.into());
        out
    }

    pub fn render(&self) -> String {
        let mut parts = vec![];
        for (k, slot) in &self.sigma {
            match slot {
                Slot::Scalar(v) => parts.push(format!("{k}={v}")),
                Slot::Map(m) => parts.push(format!("{k}={}", render_map(m))),
            }
        }
        parts.push(format!("ether={}", render_map(&self.ether)));
        format!("{{{}}}", parts.join(", "))
    }
}

fn reset_entries(m: &mut MapVal) {
    for e in &mut m.entries {
        e.initial = e.value.clone();
        e.tokens.clear();
        e.written = false;
    }
}

fn render_map(m: &MapVal) -> String {
    let items: Vec<String> = m
        .entries
        .iter()
        .map(|e| format!("{}:{}", e.key, e.value))
        .collect();
    format!("[{}]", items.join(", "))
}
