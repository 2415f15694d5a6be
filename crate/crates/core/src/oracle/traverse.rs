//! Exhaustive enumeration of account-choice trees and differential pairs.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::concrete::*;
use crate::engine::Role;
use crate::frontend::*;

pub const MAX_DEPTH: usize = 4;
pub const DEFAULT_NUMERIC_DOMAIN: [u128; 3] = [0, 1, 2];
/// Third-party accounts used for address parameters.
pub const THIRD_PARTIES: [&str; 2] = ["A", "B"];
const MAX_ROOTS: usize = 512;

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub numeric_domain: Vec<u128>,
    pub accounts: Vec<String>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            numeric_domain: DEFAULT_NUMERIC_DOMAIN.to_vec(),
            accounts: THIRD_PARTIES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("depth {0} exceeds the oracle limit of {MAX_DEPTH}")]
    DomainTooLarge(usize),
    #[error("{0} root states exceed the oracle limit of {MAX_ROOTS}")]
    TooManyRoots(usize),
    #[error(transparent)]
    Concrete(#[from] ConcreteError),
}

/// A concrete differential pair: shared calls, differing role vectors.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Witness {
    pub root: usize,
    pub calls: Vec<CallInput>,
    pub roles_p: Vec<Role>,
    pub roles_o: Vec<Role>,
}

impl Witness {
    fn rank(&self) -> (usize, usize, String) {
        (self.calls.len(), self.root, self.render())
    }

    pub fn render(&self) -> String {
        let side = |roles: &[Role]| {
            self.calls
                .iter()
                .zip(roles)
                .map(|(c, r)| format!("{c}[{}]", if *r == Role::Privileged { "p" } else { "o" }))
                .collect::<Vec<_>>()
                .join(" -> ")
        };
        format!(
            "root#{}: {}  vs  {}",
            self.root,
            side(&self.roles_p),
            side(&self.roles_o)
        )
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TraverseResult {
    /// Distinct branch-variable sets, each with its smallest witness.
    pub pairs: BTreeMap<BTreeSet<String>, Witness>,
    /// Per function sequence, the union of branch variables of its pairs.
    pub by_sequence: BTreeMap<Vec<String>, BTreeSet<String>>,
    /// Executions a naive enumeration of every role vector performs.
    pub tree_executions: u64,
    /// Executions actually performed after merging equal states.
    pub executions: u64,
    pub roots: usize,
    pub depth: usize,
}

impl TraverseResult {
    fn merge(&mut self, o: TraverseResult) {
        for (bv, w) in o.pairs {
            match self.pairs.get(&bv) {
                Some(cur) if cur.rank() <= w.rank() => {}
                _ => {
                    self.pairs.insert(bv, w);
                }
            }
        }
        for (seq, bv) in o.by_sequence {
            self.by_sequence.entry(seq).or_default().extend(bv);
        }
        self.tree_executions += o.tree_executions;
        self.executions += o.executions;
    }
}

fn mentions_block_number(ast: &ContractAST, f: &FunctionDecl) -> bool {
    let mut found = false;
    let mut stack = vec![f];
    let mut seen = BTreeSet::new();
    while let Some(g) = stack.pop() {
        if !seen.insert(g.name.clone()) {
            continue;
        }
        let mut bodies: Vec<&[Stmt]> = vec![&g.body];
        bodies.extend(
            g.modifiers
                .iter()
                .filter_map(|m| ast.modifier(m))
                .map(|m| m.body.as_slice()),
        );
        for b in bodies {
            walk_block(b, &mut |s| {
                for e in s.exprs() {
                    e.walk(&mut |x| found |= matches!(x, Expr::BlockNumber));
                }
                if let StmtKind::Call { callee, .. } = &s.kind {
                    if let Some(c) = ast.function(callee) {
                        stack.push(c);
                    }
                }
            });
        }
    }
    found
}

/// Every concrete call of every entry function over the configured domains.
pub fn call_inputs(ast: &ContractAST, cfg: &OracleConfig) -> Vec<CallInput> {
    let mut out = vec![];
    for f in ast.entry_functions() {
        let mut tuples: Vec<Vec<CValue>> = vec![vec![]];
        for p in &f.params {
            let dom: Vec<CValue> = match p.ty {
                Type::Numeric => cfg.numeric_domain.iter().map(|n| CValue::Num(*n)).collect(),
                Type::Boolean => vec![CValue::Bool(false), CValue::Bool(true)],
                _ => cfg.accounts.iter().map(|a| CValue::addr(a)).collect(),
            };
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    dom.iter().map(move |v| {
                        let mut t = t.clone();
                        t.push(v.clone());
                        t
                    })
                })
                .collect();
        }
        let values: Vec<u128> = if f.is_payable {
            cfg.numeric_domain.clone()
        } else {
            vec![0]
        };
        let blocks: Vec<u128> = if mentions_block_number(ast, f) {
            cfg.numeric_domain.clone()
        } else {
            vec![0]
        };
        for t in &tuples {
            for v in &values {
                for b in &blocks {
                    out.push(CallInput {
                        function: f.name.clone(),
                        args: t.clone(),
                        msg_value: *v,
                        block_number: *b,
                    });
                }
            }
        }
    }
    out
}

/// Deployed states with every combination of uniform mapping defaults.
pub fn root_states(
    ast: &ContractAST,
    cfg: &OracleConfig,
) -> Result<Vec<ConcreteState>, OracleError> {
    let base = Interpreter::new(ast).deploy(PRIVILEGED)?;
    let mut roots = vec![base];
    let domain_of = |v: &CValue| -> Vec<CValue> {
        match v {
            CValue::Num(_) => cfg.numeric_domain.iter().map(|n| CValue::Num(*n)).collect(),
            CValue::Bool(_) => vec![CValue::Bool(false), CValue::Bool(true)],
            CValue::Addr { .. } => vec![CValue::addr("0x0")],
        }
    };
    let maps: Vec<Option<String>> = ast
        .state_vars
        .iter()
        .filter(|v| v.ty.is_mapping())
        .map(|v| Some(v.name.clone()))
        .chain([None])
        .collect();
    for m in maps {
        let mut next = vec![];
        for r in &roots {
            let cur = match &m {
                Some(n) => match &r.sigma[n] {
                    CSlot::Map(map) => map.default.clone(),
                    CSlot::Scalar(_) => unreachable!(),
                },
                None => r.ether.default.clone(),
            };
            for d in domain_of(&cur) {
                let mut s = r.clone();
                match &m {
                    Some(n) => {
                        if let Some(CSlot::Map(map)) = s.sigma.get_mut(n) {
                            map.default = d;
                        }
                    }
                    None => s.ether.default = d,
                }
                next.push(s);
            }
        }
        roots = next;
        if roots.len() > MAX_ROOTS {
            return Err(OracleError::TooManyRoots(roots.len()));
        }
    }
    // Drop entries that now equal their default.
    for r in &mut roots {
        for s in r.sigma.values_mut() {
            if let CSlot::Map(m) = s {
                let d = m.default.clone();
                m.entries.retain(|_, v| *v != d);
            }
        }
        let d = r.ether.default.clone();
        r.ether.entries.retain(|_, v| *v != d);
    }
    Ok(roots)
}

/// One node of the merged account-choice tree.
#[derive(Clone)]
struct Node {
    state: ConcreteState,
    roles: Vec<Role>,
    /// Number of role vectors reaching this state.
    weight: u64,
}

struct Walk<'a> {
    interp: Interpreter<'a>,
    inputs: &'a [CallInput],
    depth: usize,
    root: usize,
    out: TraverseResult,
}

impl Walk<'_> {
    fn record(&mut self, nodes: &[Node], calls: &[CallInput]) {
        if nodes.len() < 2 {
            return;
        }
        let seq: Vec<String> = calls.iter().map(|c| c.function.clone()).collect();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                let bv = nodes[i].state.branch_vars(&nodes[j].state);
                if bv.is_empty() {
                    continue;
                }
                // Orient so the "privileged" side has more privileged steps.
                let (a, b) = if nodes[i].roles <= nodes[j].roles {
                    (i, j)
                } else {
                    (j, i)
                };
                let w = Witness {
                    root: self.root,
                    calls: calls.to_vec(),
                    roles_p: nodes[a].roles.clone(),
                    roles_o: nodes[b].roles.clone(),
                };
                self.out
                    .by_sequence
                    .entry(seq.clone())
                    .or_default()
                    .extend(bv.iter().cloned());
                match self.out.pairs.get(&bv) {
                    Some(cur) if cur.rank() <= w.rank() => {}
                    _ => {
                        self.out.pairs.insert(bv, w);
                    }
                }
            }
        }
    }

    fn dfs(&mut self, nodes: Vec<Node>, calls: &mut Vec<CallInput>) -> Result<(), OracleError> {
        self.record(&nodes, calls);
        if calls.len() == self.depth {
            return Ok(());
        }
        for call in self.inputs {
            let mut merged: BTreeMap<ConcreteState, Node> = BTreeMap::new();
            for n in &nodes {
                for role in [Role::Privileged, Role::Ordinary] {
                    let sender = CValue::Addr {
                        name: PRIVILEGED.into(),
                        twin: role == Role::Ordinary,
                    };
                    let s = self.interp.exec(&n.state, call, sender)?;
                    self.out.executions += 1;
                    self.out.tree_executions += n.weight;
                    let mut roles = n.roles.clone();
                    roles.push(role);
                    merged
                        .entry(s.clone())
                        .and_modify(|m| {
                            m.weight += n.weight;
                            if roles < m.roles {
                                m.roles = roles.clone();
                            }
                        })
                        .or_insert(Node {
                            state: s,
                            roles,
                            weight: n.weight,
                        });
                }
            }
            calls.push(call.clone());
            self.dfs(merged.into_values().collect(), calls)?;
            calls.pop();
        }
        Ok(())
    }
}

/// All differential pairs reachable within `depth` calls from every root.
pub fn full_traverse(ast: &ContractAST, depth: usize) -> Result<TraverseResult, OracleError> {
    full_traverse_with(ast, depth, &OracleConfig::default())
}

pub fn full_traverse_with(
    ast: &ContractAST,
    depth: usize,
    cfg: &OracleConfig,
) -> Result<TraverseResult, OracleError> {
    if depth > MAX_DEPTH {
        return Err(OracleError::DomainTooLarge(depth));
    }
    let roots = root_states(ast, cfg)?;
    let inputs = call_inputs(ast, cfg);
    let parts: Vec<Result<TraverseResult, OracleError>> = roots
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let mut w = Walk {
                interp: Interpreter::new(ast),
                inputs: &inputs,
                depth,
                root: i,
                out: TraverseResult::default(),
            };
            let start = Node {
                state: r.clone(),
                roles: vec![],
                weight: 1,
            };
            w.dfs(vec![start], &mut vec![])?;
            Ok(w.out)
        })
        .collect();
    let mut out = TraverseResult {
        roots: roots.len(),
        depth,
        ..Default::default()
    };
    for p in parts {
        out.merge(p?);
    }
    Ok(out)
}
