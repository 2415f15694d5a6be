//! Dependence facts over the AST and related-function search.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::frontend::*;

pub const ETHER: &str = "ether";
pub const EXEC_STATE: &str = "exec_state";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StmtId {
    pub function: String,
    pub index: usize,
}

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.function, self.index)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DependenceFacts {
    /// Per function: state variables read, including its modifiers and callees.
    pub reads: BTreeMap<String, BTreeSet<String>>,
    pub writes: BTreeMap<String, BTreeSet<String>>,
    /// `(left, right)`: left depends on right. Locals are written `f::x`.
    pub data_dep: BTreeSet<(String, String)>,
    /// `(stmt, var)`: stmt is guarded by a condition reading state variable var.
    pub ctrl_dep: BTreeSet<(StmtId, String)>,
    /// State variables read by guards (requires, if conditions, implicit checks).
    pub guard_reads: BTreeMap<String, BTreeSet<String>>,
    pub calls: BTreeMap<String, BTreeSet<String>>,
    pub moves_ether: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown variable `{0}` in difference")]
    UnknownVariable(String),
}

/// Direct facts of one function or modifier body.
#[derive(Default)]
struct Unit {
    reads: BTreeSet<String>,
    writes: BTreeSet<String>,
    guard_reads: BTreeSet<String>,
    calls: BTreeSet<String>,
    selfdestructs: bool,
}

struct Walker<'a> {
    ast: &'a ContractAST,
    owner: String,
    params: BTreeSet<String>,
    local_deps: BTreeMap<String, BTreeSet<String>>,
    running: BTreeSet<String>,
    unit: Unit,
    facts: &'a mut DependenceFacts,
}

impl Walker<'_> {
    fn is_state(&self, n: &str) -> bool {
        self.ast.state_var(n).is_some()
            && !self.local_deps.contains_key(n)
            && !self.params.contains(n)
    }

    fn qualify(&self, n: &str) -> String {
        if self.is_state(n) {
            n.to_string()
        } else {
            format!("{}::{n}", self.owner)
        }
    }

    /// State variables an expression depends on, through locals.
    fn state_deps(&self, e: &Expr) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for n in e.identifiers() {
            if self.is_state(n) {
                out.insert(n.to_string());
            } else if let Some(d) = self.local_deps.get(n) {
                out.extend(d.iter().cloned());
            }
        }
        out
    }

    fn implicit_guard_deps(&self, e: &Expr) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        e.walk(&mut |x| {
            if let Expr::Binary(BinOp::Sub, l, r) = x {
                out.extend(self.state_deps(l));
                out.extend(self.state_deps(r));
            }
            if let Expr::Binary(BinOp::Div, _, r) = x {
                out.extend(self.state_deps(r));
            }
        });
        out
    }

    fn block(&mut self, body: &[Stmt], enclosing: &BTreeSet<String>) {
        for s in body {
            self.stmt(s, enclosing);
        }
    }

    fn stmt(&mut self, s: &Stmt, enclosing: &BTreeSet<String>) {
        let id = StmtId {
            function: self.owner.clone(),
            index: s.index,
        };
        for v in self.running.iter().chain(enclosing) {
            self.facts.ctrl_dep.insert((id.clone(), v.clone()));
        }
        for e in s.exprs() {
            let d = self.state_deps(e);
            self.unit.reads.extend(d);
        }
        match &s.kind {
            StmtKind::Local { name, init, .. } => {
                let deps = init
                    .as_ref()
                    .map(|e| self.state_deps(e))
                    .unwrap_or_default();
                let target = format!("{}::{name}", self.owner);
                if let Some(e) = init {
                    for n in e.identifiers() {
                        self.facts
                            .data_dep
                            .insert((target.clone(), self.qualify(n)));
                    }
                }
                self.local_deps.insert(name.clone(), deps);
            }
            StmtKind::Assign { target, op, value } => {
                let base = target.base().to_string();
                let lhs = self.qualify(&base);
                let mut srcs: Vec<&str> = value.identifiers();
                if let LValue::Index(_, k) = target {
                    srcs.extend(k.identifiers());
                }
                for n in srcs {
                    self.facts.data_dep.insert((lhs.clone(), self.qualify(n)));
                }
                if self.is_state(&base) {
                    self.unit.writes.insert(base.clone());
                    if *op != AssignOp::Set || matches!(target, LValue::Index(..)) {
                        self.unit.reads.insert(base.clone());
                    }
                } else {
                    let mut d = self.state_deps(value);
                    if *op != AssignOp::Set {
                        d.extend(self.local_deps.get(&base).cloned().unwrap_or_default());
                    }
                    self.local_deps.insert(base, d);
                }
                let mut implicit = self.implicit_guard_deps(value);
                if *op == AssignOp::Sub {
                    implicit.extend(self.state_deps(value));
                    if self.is_state(target.base()) {
                        implicit.insert(target.base().to_string());
                    }
                }
                self.unit.guard_reads.extend(implicit.iter().cloned());
                self.running.extend(implicit);
            }
            StmtKind::Require { cond, .. } => {
                let mut d = self.state_deps(cond);
                d.extend(self.implicit_guard_deps(cond));
                self.unit.guard_reads.extend(d.iter().cloned());
                self.running.extend(d);
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let d = self.state_deps(cond);
                self.unit.guard_reads.extend(d.iter().cloned());
                let implicit = self.implicit_guard_deps(cond);
                self.running.extend(implicit);
                let mut inner = enclosing.clone();
                inner.extend(d);
                let saved = self.local_deps.clone();
                self.block(then_body, &inner);
                let after_then = std::mem::replace(&mut self.local_deps, saved);
                self.block(else_body, &inner);
                // Locals assigned in either branch keep both dependency sets.
                for (k, v) in after_then {
                    if let Some(cur) = self.local_deps.get_mut(&k) {
                        cur.extend(v);
                    }
                }
            }
            StmtKind::SelfDestruct(_) => self.unit.selfdestructs = true,
            StmtKind::Call { callee, .. } => {
                self.unit.calls.insert(callee.clone());
            }
            StmtKind::Revert | StmtKind::Return(_) | StmtKind::Placeholder => {}
        }
    }
}

fn walk_unit(
    ast: &ContractAST,
    facts: &mut DependenceFacts,
    owner: &str,
    params: &[Param],
    body: &[Stmt],
    inherited_guards: &BTreeSet<String>,
) -> Unit {
    let mut w = Walker {
        ast,
        owner: owner.to_string(),
        params: params.iter().map(|p| p.name.clone()).collect(),
        local_deps: BTreeMap::new(),
        running: inherited_guards.clone(),
        unit: Unit::default(),
        facts,
    };
    w.block(body, &BTreeSet::new());
    w.unit
}

pub fn build_facts(ast: &ContractAST) -> DependenceFacts {
    let mut facts = DependenceFacts::default();
    let mut mods: BTreeMap<String, Unit> = BTreeMap::new();
    for m in &ast.modifiers {
        let u = walk_unit(ast, &mut facts, &m.name, &[], &m.body, &BTreeSet::new());
        mods.insert(m.name.clone(), u);
    }
    let mut units: BTreeMap<String, Unit> = BTreeMap::new();
    let mut payable = BTreeSet::new();
    for f in ast.functions.iter().chain(ast.constructor.iter()) {
        let mut guards = BTreeSet::new();
        for m in &f.modifiers {
            guards.extend(mods[m].guard_reads.iter().cloned());
        }
        let mut u = walk_unit(ast, &mut facts, &f.name, &f.params, &f.body, &guards);
        for m in &f.modifiers {
            let mu = &mods[m];
            u.reads.extend(mu.reads.iter().cloned());
            u.writes.extend(mu.writes.iter().cloned());
            u.guard_reads.extend(mu.guard_reads.iter().cloned());
            u.calls.extend(mu.calls.iter().cloned());
            u.selfdestructs |= mu.selfdestructs;
        }
        if f.is_payable {
            payable.insert(f.name.clone());
        }
        units.insert(f.name.clone(), u);
    }
    // Close over internal calls; the call graph is acyclic.
    let names: Vec<String> = units.keys().cloned().collect();
    for name in &names {
        let mut reads = BTreeSet::new();
        let mut writes = BTreeSet::new();
        let mut guards = BTreeSet::new();
        let mut calls = BTreeSet::new();
        let mut destroys = false;
        let mut stack = vec![name.clone()];
        while let Some(n) = stack.pop() {
            let u = &units[&n];
            reads.extend(u.reads.iter().cloned());
            writes.extend(u.writes.iter().cloned());
            guards.extend(u.guard_reads.iter().cloned());
            destroys |= u.selfdestructs;
            for c in &u.calls {
                if calls.insert(c.clone()) {
                    stack.push(c.clone());
                }
            }
        }
        if destroys || payable.contains(name) {
            facts.moves_ether.insert(name.clone());
        }
        facts.reads.insert(name.clone(), reads);
        facts.writes.insert(name.clone(), writes);
        facts.guard_reads.insert(name.clone(), guards);
        facts.calls.insert(name.clone(), calls);
    }
    facts
}

/// Entry functions that read or write any of `vars`.
pub fn related_funcs_search(
    ast: &ContractAST,
    facts: &DependenceFacts,
    vars: &BTreeSet<String>,
) -> Result<BTreeSet<String>, GraphError> {
    for v in vars {
        if ast.state_var(v).is_none() && v != ETHER && v != EXEC_STATE {
            return Err(GraphError::UnknownVariable(v.clone()));
        }
    }
    let mut out = BTreeSet::new();
    for f in ast.entry_functions() {
        let touches = vars.iter().any(|v| {
            if v == EXEC_STATE {
                return false;
            }
            if v == ETHER {
                return facts.moves_ether.contains(&f.name);
            }
            facts.reads[&f.name].contains(v) || facts.writes[&f.name].contains(v)
        });
        if touches {
            out.insert(f.name.clone());
        }
    }
    Ok(out)
}
