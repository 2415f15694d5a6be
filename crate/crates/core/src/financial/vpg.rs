//! Heterogeneous variable property graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::frontend::*;
use crate::graphs::{DependenceFacts, StmtId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum NodeKind {
    StateVar,
    LocalVar,
    Statement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EdgeKind {
    /// Control flow between statements.
    Cfe,
    /// Statement reads (var -> stmt) or writes (stmt -> var) a variable.
    Dfe,
    /// Callee parameter to call argument.
    Rfe,
    /// Variable constraining a statement.
    Cde,
    /// Variable to variable data dependence.
    Dde,
    /// Call site to callee entry.
    Fce,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Node {
    pub kind: NodeKind,
    /// State var name, `owner::local`, or `owner#index`.
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub kind: EdgeKind,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VariablePropertyGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl VariablePropertyGraph {
    pub fn node(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn add_node(&mut self, kind: NodeKind, name: String) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        self.nodes.push(Node {
            kind,
            name: name.clone(),
        });
        self.index.insert(name, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn add_edge(&mut self, kind: EdgeKind, from: usize, to: usize) {
        self.edges.push(Edge { kind, from, to });
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    pub fn edges_of(&self, kind: EdgeKind) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().filter(move |e| e.kind == kind).map(|e| {
            (
                self.nodes[e.from].name.as_str(),
                self.nodes[e.to].name.as_str(),
            )
        })
    }

    /// Statements a variable constrains.
    pub fn constrained_by(&self, var: &str) -> BTreeSet<&str> {
        self.edges_of(EdgeKind::Cde)
            .filter(|(v, _)| *v == var)
            .map(|(_, s)| s)
            .collect()
    }

    /// Check the endpoint typing of every edge and node-name uniqueness.
    pub fn check_well_formed(&self) -> Result<(), String> {
        use NodeKind::*;
        let names: BTreeSet<&str> = self.nodes.iter().map(|n| n.name.as_str()).collect();
        if names.len() != self.nodes.len() {
            return Err("duplicate node".into());
        }
        let is_var = |k: NodeKind| k == StateVar || k == LocalVar;
        for e in &self.edges {
            let (a, b) = (self.nodes[e.from].kind, self.nodes[e.to].kind);
            let ok = match e.kind {
                EdgeKind::Cfe | EdgeKind::Fce => a == Statement && b == Statement,
                EdgeKind::Dfe => (is_var(a) && b == Statement) || (a == Statement && is_var(b)),
                EdgeKind::Rfe => a == LocalVar && is_var(b),
                EdgeKind::Cde => is_var(a) && b == Statement,
                EdgeKind::Dde => is_var(a) && is_var(b),
            };
            if !ok {
                return Err(format!(
                    "{:?} edge {} -> {} has endpoints {a:?} -> {b:?}",
                    e.kind, self.nodes[e.from].name, self.nodes[e.to].name
                ));
            }
        }
        Ok(())
    }
}

struct Owner<'a> {
    name: &'a str,
    params: &'a [Param],
    body: &'a [Stmt],
    modifiers: &'a [String],
}

fn owners(ast: &ContractAST) -> Vec<Owner<'_>> {
    let mut out: Vec<Owner> = ast
        .modifiers
        .iter()
        .map(|m| Owner {
            name: &m.name,
            params: &[],
            body: &m.body,
            modifiers: &[],
        })
        .collect();
    for f in ast.functions.iter().chain(ast.constructor.iter()) {
        out.push(Owner {
            name: &f.name,
            params: &f.params,
            body: &f.body,
            modifiers: &f.modifiers,
        });
    }
    out
}

fn stmt_name(owner: &str, s: &Stmt) -> String {
    StmtId {
        function: owner.to_string(),
        index: s.index,
    }
    .to_string()
}

struct Builder<'a> {
    g: VariablePropertyGraph,
    ast: &'a ContractAST,
    locals: BTreeSet<String>,
    owner: &'a str,
}

impl Builder<'_> {
    fn var(&mut self, n: &str) -> Option<usize> {
        if self.locals.contains(n) {
            return self.g.node(&format!("{}::{n}", self.owner));
        }
        self.ast.state_var(n).and_then(|_| self.g.node(n))
    }

    /// Control-flow edges; returns (entry, exits) of the block.
    fn flow(&mut self, body: &[Stmt]) -> (Option<usize>, Vec<usize>) {
        let mut entry = None;
        let mut exits: Vec<usize> = vec![];
        for s in body {
            let id = self
                .g
                .node(&stmt_name(self.owner, s))
                .expect("statement node");
            for &x in &exits {
                self.g.add_edge(EdgeKind::Cfe, x, id);
            }
            if entry.is_none() && exits.is_empty() {
                entry = Some(id);
            }
            exits = match &s.kind {
                StmtKind::If {
                    then_body,
                    else_body,
                    ..
                } => {
                    let mut out = vec![];
                    for b in [then_body, else_body] {
                        let (e, x) = self.flow(b);
                        match e {
                            Some(e) => {
                                self.g.add_edge(EdgeKind::Cfe, id, e);
                                out.extend(x);
                            }
                            None => out.push(id),
                        }
                    }
                    out.sort();
                    out.dedup();
                    out
                }
                StmtKind::Return(_) | StmtKind::Revert | StmtKind::SelfDestruct(_) => vec![],
                _ => vec![id],
            };
            if exits.is_empty() {
                break;
            }
        }
        (entry, exits)
    }

    fn stmt_edges(&mut self, s: &Stmt, guards: &BTreeSet<usize>) {
        let id = self
            .g
            .node(&stmt_name(self.owner, s))
            .expect("statement node");
        for &v in guards {
            self.g.add_edge(EdgeKind::Cde, v, id);
        }
        let mut reads = BTreeSet::new();
        for e in s.exprs() {
            for n in e.identifiers() {
                if let Some(v) = self.var(n) {
                    reads.insert(v);
                }
            }
        }
        let mut writes = BTreeSet::new();
        match &s.kind {
            StmtKind::Local { name, .. } => {
                writes.insert(self.var(name).expect("local node"));
            }
            StmtKind::Assign { target, op, .. } => {
                let t = self.var(target.base()).expect("assign target");
                writes.insert(t);
                if *op != AssignOp::Set {
                    reads.insert(t);
                }
            }
            StmtKind::Call { callee, args } => {
                if let Some(g) = self.ast.function(callee) {
                    for (p, a) in g.params.iter().zip(args) {
                        let pn = self
                            .g
                            .node(&format!("{callee}::{}", p.name))
                            .expect("param node");
                        for n in a.identifiers() {
                            if let Some(v) = self.var(n) {
                                self.g.add_edge(EdgeKind::Rfe, pn, v);
                            }
                        }
                    }
                    if let Some(first) = g.body.first() {
                        let callee_entry = self
                            .g
                            .node(&stmt_name(callee, first))
                            .expect("callee entry");
                        self.g.add_edge(EdgeKind::Fce, id, callee_entry);
                    }
                }
            }
            _ => {}
        }
        for v in reads {
            self.g.add_edge(EdgeKind::Dfe, v, id);
        }
        for v in writes {
            self.g.add_edge(EdgeKind::Dfe, id, v);
        }
    }

    /// DFE/CDE/RFE/FCE edges; local guards are tracked here, state-variable
    /// guards come from the dependence facts.
    fn block(&mut self, body: &[Stmt], guards: &mut BTreeSet<usize>) {
        for s in body {
            self.stmt_edges(s, guards);
            match &s.kind {
                StmtKind::Require { cond, .. } => {
                    for n in cond.identifiers() {
                        if self.locals.contains(n) {
                            guards.insert(self.var(n).expect("local"));
                        }
                    }
                }
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    let mut inner = guards.clone();
                    for n in cond.identifiers() {
                        if self.locals.contains(n) {
                            inner.insert(self.var(n).expect("local"));
                        }
                    }
                    self.block(then_body, &mut inner.clone());
                    self.block(else_body, &mut inner);
                }
                _ => {}
            }
        }
    }
}

pub fn build_vpg(ast: &ContractAST, facts: &DependenceFacts) -> VariablePropertyGraph {
    let mut g = VariablePropertyGraph::default();
    for v in &ast.state_vars {
        g.add_node(NodeKind::StateVar, v.name.clone());
    }
    let owners = owners(ast);
    let mut local_sets = BTreeMap::new();
    for o in &owners {
        let mut locals: BTreeSet<String> = BTreeSet::new();
        for p in o.params {
            locals.insert(p.name.clone());
            g.add_node(NodeKind::LocalVar, format!("{}::{}", o.name, p.name));
        }
        walk_block(o.body, &mut |s| {
            if let StmtKind::Local { name, .. } = &s.kind {
                locals.insert(name.clone());
            }
        });
        walk_block(o.body, &mut |s| {
            if let StmtKind::Local { name, .. } = &s.kind {
                g.add_node(NodeKind::LocalVar, format!("{}::{name}", o.name));
            }
            g.add_node(NodeKind::Statement, stmt_name(o.name, s));
        });
        local_sets.insert(o.name, locals);
    }
    let mut b = Builder {
        g,
        ast,
        locals: BTreeSet::new(),
        owner: "",
    };
    for o in &owners {
        b.owner = o.name;
        b.locals = local_sets[o.name].clone();
        b.flow(o.body);
        b.block(o.body, &mut BTreeSet::new());
        // Each modifier's placeholder hands control to the function body.
        if let Some(first) = o.body.first() {
            let entry = b.g.node(&stmt_name(o.name, first)).expect("entry");
            for m in o.modifiers {
                if let Some(m) = ast.modifier(m) {
                    let mut holes = vec![];
                    walk_block(&m.body, &mut |s| {
                        if s.kind == StmtKind::Placeholder {
                            holes.push(stmt_name(&m.name, s));
                        }
                    });
                    for h in holes {
                        let h = b.g.node(&h).expect("placeholder");
                        b.g.add_edge(EdgeKind::Fce, h, entry);
                    }
                }
            }
        }
    }
    let mut g = b.g;
    for (sid, v) in &facts.ctrl_dep {
        if let (Some(v), Some(s)) = (g.node(v), g.node(&sid.to_string())) {
            g.add_edge(EdgeKind::Cde, v, s);
        }
    }
    for (l, r) in &facts.data_dep {
        if let (Some(l), Some(r)) = (g.node(l), g.node(r)) {
            g.add_edge(EdgeKind::Dde, r, l);
        }
    }
    g.edges.sort();
    g.edges.dedup();
    g
}
