//! Rule-based financial-variable scorer over the property graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::lexicon::Lexicon;
use super::vpg::{EdgeKind, NodeKind, VariablePropertyGraph};
use crate::frontend::*;

pub const W_TRANSFER: f64 = 0.6;
pub const W_MSG_VALUE: f64 = 0.6;
pub const W_SUPPLY: f64 = 0.6;
pub const W_FEE: f64 = 0.6;
pub const W_AMOUNT: f64 = 0.6;
pub const W_RATE: f64 = 0.6;
pub const W_NAME: f64 = 0.5;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Minimum lexicon similarity for the name rule to fire.
pub const NAME_SIMILARITY: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinancialVerdict {
    pub variable: String,
    pub is_financial: bool,
    pub score: f64,
    pub evidence: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RecognitionMode {
    #[default]
    Rules,
    /// Lexicon similarity only.
    NameOnly,
}

#[derive(Clone, Debug)]
pub struct RecognitionConfig {
    pub mode: RecognitionMode,
    pub threshold: f64,
    pub lexicon: Lexicon,
    /// User-specified financial variables; replaces scoring when set.
    pub overrides: Option<BTreeSet<String>>,
}

impl Default for RecognitionConfig {
    fn default() -> Self {
        RecognitionConfig {
            mode: RecognitionMode::Rules,
            threshold: DEFAULT_THRESHOLD,
            lexicon: Lexicon::default(),
            overrides: None,
        }
    }
}

/// Syntactic shapes shared by the scorer, the risk filter and the report.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Shapes {
    /// address => numeric mappings both decreased and increased in one function.
    pub transfer_maps: BTreeSet<String>,
    /// Entry functions that move a transfer-shaped mapping (through callees too).
    pub transfer_functions: BTreeSet<String>,
    /// Numeric scalars multiplied or divided into amounts of a transfer-shaped mapping.
    pub fee_factors: BTreeSet<String>,
    /// address => numeric mappings moved by a non-constant amount.
    pub amount_maps: BTreeSet<String>,
    /// Numeric scalars multiplied or divided into amounts moving an amount
    /// mapping or a msg.value accumulator.
    pub rate_factors: BTreeSet<String>,
    /// Numeric scalars moved by parameter amounts or flowing to or from a
    /// transfer-shaped mapping.
    pub supply_vars: BTreeSet<String>,
    /// Variables compared with or assigned from msg.value.
    pub value_vars: BTreeSet<String>,
    /// Variables constraining a statement that writes a transfer-shaped mapping,
    /// with the polarities (true = required to hold) they appear in.
    pub transfer_guards: BTreeMap<String, BTreeSet<bool>>,
}

fn is_map_entry(e: &Expr, m: &str) -> bool {
    matches!(e, Expr::Index(n, _) if n == m)
}

/// `+1` for an increase of `target`, `-1` for a decrease, 0 otherwise.
fn direction(target: &LValue, op: AssignOp, value: &Expr) -> i8 {
    match op {
        AssignOp::Add => 1,
        AssignOp::Sub => -1,
        AssignOp::Set => match (target, value) {
            (LValue::Index(m, _), Expr::Binary(BinOp::Add, l, r))
                if is_map_entry(l, m) || is_map_entry(r, m) =>
            {
                1
            }
            (LValue::Index(m, _), Expr::Binary(BinOp::Sub, l, _)) if is_map_entry(l, m) => -1,
            (LValue::Var(v), Expr::Binary(BinOp::Add, l, r))
                if **l == Expr::Ident(v.clone()) || **r == Expr::Ident(v.clone()) =>
            {
                1
            }
            (LValue::Var(v), Expr::Binary(BinOp::Sub, l, _)) if **l == Expr::Ident(v.clone()) => -1,
            _ => 0,
        },
    }
}

/// The amount added or subtracted by a moving assignment.
fn moved_amount<'e>(target: &LValue, op: AssignOp, value: &'e Expr) -> Option<&'e Expr> {
    match (op, value) {
        (AssignOp::Add | AssignOp::Sub, v) => Some(v),
        (AssignOp::Set, Expr::Binary(BinOp::Add | BinOp::Sub, l, r)) => {
            let is_self = |e: &Expr| match target {
                LValue::Index(m, _) => is_map_entry(e, m),
                LValue::Var(v) => *e == Expr::Ident(v.clone()),
            };
            if is_self(l) {
                Some(r)
            } else if is_self(r) {
                Some(l)
            } else {
                None
            }
        }
        _ => None,
    }
}

fn is_constant(e: &Expr) -> bool {
    let mut c = true;
    e.walk(&mut |x| {
        c &= matches!(
            x,
            Expr::Number(_) | Expr::Bool(_) | Expr::Address(_) | Expr::Binary(..)
        )
    });
    c
}

fn bodies(ast: &ContractAST) -> Vec<(&str, &[Param], &[Stmt])> {
    let mut out: Vec<(&str, &[Param], &[Stmt])> = ast
        .functions
        .iter()
        .chain(ast.constructor.iter())
        .map(|f| (f.name.as_str(), f.params.as_slice(), f.body.as_slice()))
        .collect();
    out.extend(
        ast.modifiers
            .iter()
            .map(|m| (m.name.as_str(), &[][..], m.body.as_slice())),
    );
    out
}

fn numeric_scalar(ast: &ContractAST, n: &str) -> bool {
    ast.state_var(n).is_some_and(|v| v.ty == Type::Numeric)
}

/// State scalars appearing as direct operands of `*` or `/`.
fn mul_div_factors(
    ast: &ContractAST,
    e: &Expr,
    locals: &BTreeMap<String, BTreeSet<String>>,
) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    e.walk(&mut |x| {
        if let Expr::Binary(BinOp::Mul | BinOp::Div, l, r) = x {
            for side in [l, r] {
                if let Expr::Ident(n) = side.as_ref() {
                    if numeric_scalar(ast, n) {
                        out.insert(n.clone());
                    }
                }
            }
        }
        if let Expr::Ident(n) = x {
            if let Some(f) = locals.get(n) {
                out.extend(f.iter().cloned());
            }
        }
    });
    out
}

fn polarities(e: &Expr, positive: bool, out: &mut BTreeMap<String, BTreeSet<bool>>) {
    match e {
        Expr::Not(x) => polarities(x, !positive, out),
        Expr::Binary(BinOp::And | BinOp::Or, l, r) => {
            polarities(l, positive, out);
            polarities(r, positive, out);
        }
        other => {
            for n in other.identifiers() {
                out.entry(n.to_string()).or_default().insert(positive);
            }
        }
    }
}

pub fn shapes(ast: &ContractAST, g: &VariablePropertyGraph) -> Shapes {
    let mut s = Shapes::default();
    let candidate = |n: &str| {
        ast.state_var(n)
            .is_some_and(|v| matches!(&v.ty, Type::Mapping(inner) if **inner == Type::Numeric))
    };
    let all = bodies(ast);
    let mut moves: BTreeMap<&str, BTreeMap<String, BTreeSet<i8>>> = BTreeMap::new();
    for (owner, params, body) in &all {
        let params: BTreeSet<&str> = params.iter().map(|p| p.name.as_str()).collect();
        let mut m = BTreeMap::new();
        let mut map_amounts: Vec<&Expr> = vec![];
        let mut scalar_amounts: Vec<(&str, &Expr)> = vec![];
        walk_block(body, &mut |st| {
            let StmtKind::Assign { target, op, value } = &st.kind else {
                return;
            };
            let d = direction(target, *op, value);
            let amount = moved_amount(target, *op, value).filter(|a| d != 0 && !is_constant(a));
            if let LValue::Index(name, _) = target {
                if candidate(name) && d != 0 {
                    m.entry(name.clone())
                        .or_insert_with(BTreeSet::new)
                        .insert(d);
                }
                if let Some(a) = amount.filter(|_| candidate(name)) {
                    s.amount_maps.insert(name.clone());
                    map_amounts.push(a);
                }
            }
            if let (LValue::Var(v), Some(a)) = (target, amount) {
                if numeric_scalar(ast, v) {
                    scalar_amounts.push((v.as_str(), a));
                }
            }
            if let LValue::Var(v) = target {
                let amount_from_param = value.identifiers().iter().any(|n| params.contains(n));
                if numeric_scalar(ast, v) && d != 0 && amount_from_param {
                    s.supply_vars.insert(v.clone());
                }
            }
            if value.mentions_value() && ast.state_var(target.base()).is_some() {
                s.value_vars.insert(target.base().to_string());
            }
        });
        // A scalar moved by the same amount as a mapping entry mirrors it.
        for (v, a) in scalar_amounts {
            if map_amounts.contains(&a) {
                s.supply_vars.insert(v.to_string());
            }
        }
        moves.insert(owner, m);
    }
    for m in moves.values() {
        for (name, dirs) in m {
            if dirs.len() == 2 {
                s.transfer_maps.insert(name.clone());
            }
        }
    }
    // Comparisons against msg.value.
    for (_, _, body) in &all {
        walk_block(body, &mut |st| {
            for e in st.exprs() {
                e.walk(&mut |x| {
                    if let Expr::Binary(op, l, r) = x {
                        if op.is_comparison() && (l.mentions_value() || r.mentions_value()) {
                            for n in l.identifiers().into_iter().chain(r.identifiers()) {
                                if ast.state_var(n).is_some() {
                                    s.value_vars.insert(n.to_string());
                                }
                            }
                        }
                    }
                });
            }
        });
    }
    // Fee factors and transfer-shaped functions.
    let mut direct: BTreeMap<&str, bool> = BTreeMap::new();
    for (owner, _, body) in &all {
        let mut local_factors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut dirs: BTreeMap<&str, BTreeSet<i8>> = BTreeMap::new();
        walk_block(body, &mut |st| match &st.kind {
            StmtKind::Local {
                name,
                init: Some(e),
                ..
            } => {
                let f = mul_div_factors(ast, e, &local_factors);
                local_factors.insert(name.clone(), f);
            }
            StmtKind::Assign { target, op, value } => {
                let moving = direction(target, *op, value) != 0;
                let feeds = match target {
                    LValue::Index(m, _) => s.amount_maps.contains(m),
                    LValue::Var(v) => moving && s.value_vars.contains(v),
                };
                if feeds {
                    s.rate_factors
                        .extend(mul_div_factors(ast, value, &local_factors));
                }
                if let LValue::Index(m, _) = target {
                    if s.transfer_maps.contains(m) {
                        s.fee_factors
                            .extend(mul_div_factors(ast, value, &local_factors));
                        let d = direction(target, *op, value);
                        if d != 0 {
                            dirs.entry(m.as_str()).or_default().insert(d);
                        }
                    }
                } else if local_factors.contains_key(target.base()) {
                    let f = mul_div_factors(ast, value, &local_factors);
                    local_factors
                        .entry(target.base().to_string())
                        .or_default()
                        .extend(f);
                }
            }
            _ => {}
        });
        direct.insert(owner, dirs.values().any(|d| d.len() == 2));
    }
    for f in ast.entry_functions() {
        let mut stack = vec![f.name.as_str()];
        stack.extend(f.modifiers.iter().map(String::as_str));
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if direct.get(n).copied().unwrap_or(false) {
                s.transfer_functions.insert(f.name.clone());
                break;
            }
            if let Some(g) = ast.function(n) {
                walk_block(&g.body, &mut |st| {
                    if let StmtKind::Call { callee, .. } = &st.kind {
                        stack.push(callee.as_str());
                    }
                });
            }
        }
    }
    // Supply: numeric scalars data-dependent with a transfer-shaped mapping.
    for (a, b) in g.edges_of(EdgeKind::Dde) {
        for (x, y) in [(a, b), (b, a)] {
            if numeric_scalar(ast, x) && s.transfer_maps.contains(y) {
                s.supply_vars.insert(x.to_string());
            }
        }
    }
    // Guards of statements writing a transfer-shaped mapping.
    let writers: BTreeSet<&str> = g
        .edges_of(EdgeKind::Dfe)
        .filter(|(_, v)| s.transfer_maps.contains(*v))
        .map(|(st, _)| st)
        .collect();
    let mut guard_vars = BTreeSet::new();
    for (v, st) in g.edges_of(EdgeKind::Cde) {
        let is_state = g
            .node(v)
            .is_some_and(|i| g.nodes[i].kind == NodeKind::StateVar);
        // Address scalars guarding transfers are caller checks, not controls.
        let is_addr = ast.state_var(v).is_some_and(|d| d.ty == Type::Address);
        if is_state && !is_addr && writers.contains(st) {
            guard_vars.insert(v.to_string());
        }
    }
    let mut pol: BTreeMap<String, BTreeSet<bool>> = BTreeMap::new();
    for (_, _, body) in &all {
        walk_block(body, &mut |st| {
            if let StmtKind::Require { cond, .. } | StmtKind::If { cond, .. } = &st.kind {
                polarities(cond, true, &mut pol);
            }
        });
    }
    for v in guard_vars {
        let p = pol.get(&v).cloned().unwrap_or_default();
        s.transfer_guards.insert(v, p);
    }
    s
}

/// Name rule; only numeric variables and numeric mappings can hold amounts.
fn name_score(cfg: &RecognitionConfig, ast: &ContractAST, name: &str) -> f64 {
    let numeric = ast.state_var(name).is_some_and(|v| match &v.ty {
        Type::Numeric => true,
        Type::Mapping(inner) => **inner == Type::Numeric,
        _ => false,
    });
    if numeric && cfg.lexicon.score(name) >= NAME_SIMILARITY {
        W_NAME
    } else {
        0.0
    }
}

pub fn classify_financial(g: &VariablePropertyGraph, ast: &ContractAST) -> Vec<FinancialVerdict> {
    classify_financial_with(g, ast, &RecognitionConfig::default())
}

/// One verdict per state variable, in name order.
pub fn classify_financial_with(
    g: &VariablePropertyGraph,
    ast: &ContractAST,
    cfg: &RecognitionConfig,
) -> Vec<FinancialVerdict> {
    let sh = shapes(ast, g);
    let has_token = !sh.transfer_maps.is_empty();
    let mut names: Vec<&str> = ast.state_vars.iter().map(|v| v.name.as_str()).collect();
    names.sort();
    names
        .into_iter()
        .map(|v| {
            if let Some(o) = &cfg.overrides {
                let yes = o.contains(v);
                return FinancialVerdict {
                    variable: v.to_string(),
                    is_financial: yes,
                    score: if yes { 1.0 } else { 0.0 },
                    evidence: vec!["user-specified".into()],
                };
            }
            let mut evidence = vec![];
            let mut score = 0.0;
            let mut fire = |hit: bool, w: f64, tag: &str, score: &mut f64| {
                if hit {
                    *score += w;
                    evidence.push(tag.to_string());
                }
            };
            let name = name_score(cfg, ast, v);
            if cfg.mode == RecognitionMode::Rules {
                fire(
                    sh.transfer_maps.contains(v),
                    W_TRANSFER,
                    "transfer-shape",
                    &mut score,
                );
                fire(
                    sh.value_vars.contains(v),
                    W_MSG_VALUE,
                    "msg-value",
                    &mut score,
                );
                fire(
                    has_token && sh.supply_vars.contains(v),
                    W_SUPPLY,
                    "supply-shape",
                    &mut score,
                );
                fire(sh.fee_factors.contains(v), W_FEE, "fee-shape", &mut score);
                fire(
                    sh.amount_maps.contains(v),
                    W_AMOUNT,
                    "amount-shape",
                    &mut score,
                );
                fire(
                    sh.rate_factors.contains(v),
                    W_RATE,
                    "rate-shape",
                    &mut score,
                );
                fire(
                    sh.transfer_guards.contains_key(v),
                    0.0,
                    "guards-transfer",
                    &mut score,
                );
            }
            fire(name > 0.0, name, "name-similarity", &mut score);
            let score: f64 = score.min(1.0);
            FinancialVerdict {
                variable: v.to_string(),
                is_financial: score >= cfg.threshold,
                score,
                evidence,
            }
        })
        .collect()
}
