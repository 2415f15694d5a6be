//! Privileged address variables: a greatest fixpoint over caller guards.

use std::collections::BTreeSet;

use crate::frontend::*;
use crate::graphs::DependenceFacts;

/// Variables `p` such that `cond` has a top-level conjunct `msg.sender == p`.
pub fn sender_guards(cond: &Expr) -> Vec<&str> {
    match cond {
        Expr::Binary(BinOp::And, l, r) => {
            let mut out = sender_guards(l);
            out.extend(sender_guards(r));
            out
        }
        Expr::Binary(BinOp::Eq, l, r) => match (l.as_ref(), r.as_ref()) {
            (Expr::MsgSender, Expr::Ident(p)) | (Expr::Ident(p), Expr::MsgSender) => {
                vec![p.as_str()]
            }
            _ => vec![],
        },
        _ => vec![],
    }
}

fn top_level_guards(body: &[Stmt]) -> Vec<&str> {
    body.iter()
        .filter_map(|s| match &s.kind {
            StmtKind::Require { cond, .. } => Some(sender_guards(cond)),
            _ => None,
        })
        .flatten()
        .collect()
}

/// Whether the function's modifiers or top-level requires restrict the caller
/// to one of `set`.
fn is_guarded(ast: &ContractAST, f: &FunctionDecl, set: &BTreeSet<String>) -> bool {
    let mut guards = top_level_guards(&f.body);
    for m in &f.modifiers {
        if let Some(m) = ast.modifier(m) {
            guards.extend(top_level_guards(&m.body));
        }
    }
    guards.iter().any(|g| set.contains(*g))
}

/// State variables written by `body` outside any sender-guarded `if`, following
/// internal calls into unguarded callees.
fn unguarded_writes(
    ast: &ContractAST,
    body: &[Stmt],
    set: &BTreeSet<String>,
    out: &mut BTreeSet<String>,
    seen: &mut BTreeSet<String>,
) {
    for s in body {
        match &s.kind {
            StmtKind::Assign { target, .. } => {
                if ast.state_var(target.base()).is_some() {
                    out.insert(target.base().to_string());
                }
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                if !sender_guards(cond).iter().any(|g| set.contains(*g)) {
                    unguarded_writes(ast, then_body, set, out, seen);
                }
                unguarded_writes(ast, else_body, set, out, seen);
            }
            StmtKind::Call { callee, .. } => {
                if let Some(g) = ast.function(callee) {
                    if seen.insert(g.name.clone()) && !is_guarded(ast, g, set) {
                        unguarded_writes(ast, &g.body, set, out, seen);
                        for m in &g.modifiers {
                            if let Some(m) = ast.modifier(m) {
                                unguarded_writes(ast, &m.body, set, out, seen);
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
}

/// Address variables assignable only by the constructor or by functions whose
/// caller is restricted to other privileged variables.
pub fn identify_privileged(ast: &ContractAST, _facts: &DependenceFacts) -> BTreeSet<String> {
    let mut set: BTreeSet<String> = ast
        .state_vars
        .iter()
        .filter(|v| v.ty == Type::Address)
        .map(|v| v.name.clone())
        .collect();
    loop {
        let mut exposed = BTreeSet::new();
        for f in ast.entry_functions() {
            if is_guarded(ast, f, &set) {
                continue;
            }
            let mut seen = BTreeSet::new();
            unguarded_writes(ast, &f.body, &set, &mut exposed, &mut seen);
            for m in &f.modifiers {
                if let Some(m) = ast.modifier(m) {
                    unguarded_writes(ast, &m.body, &set, &mut exposed, &mut seen);
                }
            }
        }
        let next: BTreeSet<String> = set.difference(&exposed).cloned().collect();
        if next == set {
            return set;
        }
        set = next;
    }
}

/// The privileged variable whose value acts as the privileged account: the
/// first one, in declaration order, that some guard compares with msg.sender.
pub fn primary_privileged(ast: &ContractAST, privileged: &BTreeSet<String>) -> Option<String> {
    let mut compared = BTreeSet::new();
    let bodies = ast
        .functions
        .iter()
        .map(|f| &f.body)
        .chain(ast.modifiers.iter().map(|m| &m.body));
    for body in bodies {
        walk_block(body, &mut |s| match &s.kind {
            StmtKind::Require { cond, .. } | StmtKind::If { cond, .. } => {
                compared.extend(sender_guards(cond).into_iter().map(String::from));
            }
            _ => {}
        });
    }
    ast.state_vars
        .iter()
        .find(|v| privileged.contains(&v.name) && compared.contains(&v.name))
        .map(|v| v.name.clone())
}
