//! Name resolution and type checking.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::ParseError;

struct Scope<'a> {
    ast: &'a ContractAST,
    frames: Vec<BTreeMap<String, Type>>,
    in_modifier: bool,
    placeholders: usize,
    returns: Option<Type>,
}

impl<'a> Scope<'a> {
    fn lookup(&self, name: &str) -> Option<Type> {
        for f in self.frames.iter().rev() {
            if let Some(t) = f.get(name) {
                return Some(t.clone());
            }
        }
        self.ast.state_var(name).map(|v| v.ty.clone())
    }

    fn declare(&mut self, span: Span, name: &str, ty: Type) -> Result<(), ParseError> {
        if self.ast.state_var(name).is_some() || self.frames.iter().any(|f| f.contains_key(name)) {
            return Err(ParseError::validation(
                span,
                format!("`{name}` shadows an existing declaration"),
            ));
        }
        self.frames
            .last_mut()
            .expect("frame")
            .insert(name.to_string(), ty);
        Ok(())
    }

    fn type_of(&self, span: Span, e: &Expr) -> Result<Type, ParseError> {
        match e {
            Expr::Number(_) => Ok(Type::Numeric),
            Expr::Bool(_) => Ok(Type::Boolean),
            Expr::Address(_) | Expr::MsgSender => Ok(Type::Address),
            Expr::MsgValue | Expr::BlockNumber => Ok(Type::Numeric),
            Expr::Ident(n) => match self.lookup(n) {
                Some(Type::Mapping(_)) => Err(ParseError::validation(
                    span,
                    format!("mapping `{n}` used without an index"),
                )),
                Some(t) => Ok(t),
                None => Err(ParseError::validation(
                    span,
                    format!("unresolved identifier `{n}`"),
                )),
            },
            Expr::Index(n, k) => {
                let Some(Type::Mapping(v)) = self.lookup(n) else {
                    return Err(ParseError::validation(
                        span,
                        format!("`{n}` is not a mapping"),
                    ));
                };
                self.expect(span, k, &Type::Address)?;
                Ok(*v)
            }
            Expr::Not(inner) => {
                self.expect(span, inner, &Type::Boolean)?;
                Ok(Type::Boolean)
            }
            Expr::Binary(op, l, r) => {
                use BinOp::*;
                match op {
                    Add | Sub | Mul | Div => {
                        self.expect(span, l, &Type::Numeric)?;
                        self.expect(span, r, &Type::Numeric)?;
                        Ok(Type::Numeric)
                    }
                    Lt | Le | Gt | Ge => {
                        self.expect(span, l, &Type::Numeric)?;
                        self.expect(span, r, &Type::Numeric)?;
                        Ok(Type::Boolean)
                    }
                    Eq | Ne => {
                        let lt = self.type_of(span, l)?;
                        self.expect(span, r, &lt)?;
                        Ok(Type::Boolean)
                    }
                    And | Or => {
                        self.expect(span, l, &Type::Boolean)?;
                        self.expect(span, r, &Type::Boolean)?;
                        Ok(Type::Boolean)
                    }
                }
            }
        }
    }

    fn expect(&self, span: Span, e: &Expr, want: &Type) -> Result<(), ParseError> {
        let got = self.type_of(span, e)?;
        if &got != want {
            return Err(ParseError::validation(
                span,
                format!("type mismatch: expected {want}, found {got}"),
            ));
        }
        Ok(())
    }

    fn block(&mut self, body: &[Stmt]) -> Result<(), ParseError> {
        self.frames.push(BTreeMap::new());
        for s in body {
            self.stmt(s)?;
        }
        self.frames.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), ParseError> {
        let span = s.span;
        match &s.kind {
            StmtKind::Local { name, ty, init } => {
                if let Some(e) = init {
                    self.expect(span, e, ty)?;
                }
                self.declare(span, name, ty.clone())?;
            }
            StmtKind::Assign { target, op, value } => {
                let tty = match target {
                    LValue::Var(n) => match self.lookup(n) {
                        Some(Type::Mapping(_)) => {
                            return Err(ParseError::validation(
                                span,
                                format!("cannot assign whole mapping `{n}`"),
                            ))
                        }
                        Some(t) => t,
                        None => {
                            return Err(ParseError::validation(
                                span,
                                format!("unresolved identifier `{n}`"),
                            ))
                        }
                    },
                    LValue::Index(n, k) => {
                        let Some(Type::Mapping(v)) = self.lookup(n) else {
                            return Err(ParseError::validation(
                                span,
                                format!("`{n}` is not a mapping"),
                            ));
                        };
                        self.expect(span, k, &Type::Address)?;
                        *v
                    }
                };
                if *op != AssignOp::Set && tty != Type::Numeric {
                    return Err(ParseError::validation(
                        span,
                        format!("`{}` requires a numeric target", op.symbol()),
                    ));
                }
                self.expect(span, value, &tty)?;
            }
            StmtKind::Require { cond, .. } => self.expect(span, cond, &Type::Boolean)?,
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                self.expect(span, cond, &Type::Boolean)?;
                self.block(then_body)?;
                self.block(else_body)?;
            }
            StmtKind::Revert => {}
            StmtKind::SelfDestruct(e) => self.expect(span, e, &Type::Address)?,
            StmtKind::Call { callee, args } => {
                let Some(f) = self.ast.function(callee) else {
                    return Err(ParseError::validation(
                        span,
                        format!("call to undeclared function `{callee}`"),
                    ));
                };
                if f.params.len() != args.len() {
                    return Err(ParseError::validation(
                        span,
                        format!(
                            "`{callee}` expects {} arguments, got {}",
                            f.params.len(),
                            args.len()
                        ),
                    ));
                }
                for (p, a) in f.params.iter().zip(args) {
                    self.expect(span, a, &p.ty)?;
                }
            }
            StmtKind::Return(e) => match (e, &self.returns) {
                (None, None) => {}
                (Some(e), Some(t)) => {
                    let t = t.clone();
                    self.expect(span, e, &t)?;
                }
                (Some(_), None) => {
                    return Err(ParseError::validation(
                        span,
                        "return value in a function without `returns`",
                    ))
                }
                (None, Some(_)) => {
                    return Err(ParseError::validation(span, "missing return value"))
                }
            },
            StmtKind::Placeholder => {
                if !self.in_modifier {
                    return Err(ParseError::validation(span, "`_;` outside a modifier"));
                }
                self.placeholders += 1;
            }
        }
        Ok(())
    }
}

fn check_constant(ast: &ContractAST, v: &StateVarDecl) -> Result<(), ParseError> {
    let Some(init) = &v.initializer else {
        return Ok(());
    };
    let mut ok = true;
    init.walk(&mut |e| {
        ok &= !matches!(
            e,
            Expr::Ident(_) | Expr::Index(..) | Expr::MsgValue | Expr::BlockNumber
        )
    });
    if !ok {
        return Err(ParseError::validation(
            v.span,
            format!("initializer of `{}` is not a constant expression", v.name),
        ));
    }
    let scope = Scope {
        ast,
        frames: vec![],
        in_modifier: false,
        placeholders: 0,
        returns: None,
    };
    scope.expect(v.span, init, &v.ty)
}

fn call_graph_acyclic(ast: &ContractAST) -> Result<(), ParseError> {
    fn visit<'a>(
        ast: &'a ContractAST,
        f: &'a FunctionDecl,
        stack: &mut Vec<&'a str>,
        done: &mut BTreeSet<&'a str>,
    ) -> Result<(), ParseError> {
        if done.contains(f.name.as_str()) {
            return Ok(());
        }
        if stack.contains(&f.name.as_str()) {
            return Err(ParseError::unsupported(
                f.span,
                format!("recursion through `{}`", f.name),
            ));
        }
        stack.push(&f.name);
        let mut callees = vec![];
        let bodies = std::iter::once(&f.body).chain(
            f.modifiers
                .iter()
                .filter_map(|m| ast.modifier(m))
                .map(|m| &m.body),
        );
        for body in bodies {
            walk_block(body, &mut |s| {
                if let StmtKind::Call { callee, .. } = &s.kind {
                    callees.push(callee.as_str());
                }
            });
        }
        for c in callees {
            if let Some(g) = ast.function(c) {
                visit(ast, g, stack, done)?;
            }
        }
        stack.pop();
        done.insert(&f.name);
        Ok(())
    }
    let mut done = BTreeSet::new();
    for f in ast.functions.iter().chain(ast.constructor.iter()) {
        visit(ast, f, &mut vec![], &mut done)?;
    }
    Ok(())
}

pub fn validate(ast: &ContractAST) -> Result<(), ParseError> {
    let mut seen = BTreeSet::new();
    for v in &ast.state_vars {
        if !seen.insert(v.name.as_str()) {
            return Err(ParseError::validation(
                v.span,
                format!("duplicate state variable `{}`", v.name),
            ));
        }
        if matches!(v.name.as_str(), "ether" | "exec_state") {
            return Err(ParseError::validation(
                v.span,
                format!("`{}` is a reserved name", v.name),
            ));
        }
        check_constant(ast, v)?;
    }
    let mut fnames = BTreeSet::new();
    for f in &ast.functions {
        if !fnames.insert(f.name.as_str()) {
            return Err(ParseError::unsupported(
                f.span,
                format!("function overloading (`{}`)", f.name),
            ));
        }
    }
    let mut mnames = BTreeSet::new();
    for m in &ast.modifiers {
        if !mnames.insert(m.name.as_str()) {
            return Err(ParseError::validation(
                m.span,
                format!("duplicate modifier `{}`", m.name),
            ));
        }
        let mut scope = Scope {
            ast,
            frames: vec![],
            in_modifier: true,
            placeholders: 0,
            returns: None,
        };
        scope.block(&m.body)?;
        if scope.placeholders != 1 {
            return Err(ParseError::validation(
                m.span,
                format!("modifier `{}` must contain exactly one `_;`", m.name),
            ));
        }
    }
    if let Some(c) = &ast.constructor {
        if !c.params.is_empty() {
            return Err(ParseError::unsupported(c.span, "constructor parameters"));
        }
    }
    for f in ast.functions.iter().chain(ast.constructor.iter()) {
        for m in &f.modifiers {
            if ast.modifier(m).is_none() {
                return Err(ParseError::validation(
                    f.span,
                    format!("undeclared modifier `{m}` on `{}`", f.name),
                ));
            }
        }
        let mut scope = Scope {
            ast,
            frames: vec![BTreeMap::new()],
            in_modifier: false,
            placeholders: 0,
            returns: f.returns.clone(),
        };
        for p in &f.params {
            scope.declare(f.span, &p.name, p.ty.clone())?;
        }
        scope.block(&f.body)?;
    }
    call_graph_acyclic(ast)
}
