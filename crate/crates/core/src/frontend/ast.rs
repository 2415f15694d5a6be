//! Syntax tree for MiniSol contracts.

use std::fmt;

use serde::Serialize;

/// Source position, 1-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Type {
    Numeric,
    Address,
    Boolean,
    /// Always keyed by `address`; the value is never itself a mapping.
    Mapping(Box<Type>),
}

impl Type {
    pub fn is_mapping(&self) -> bool {
        matches!(self, Type::Mapping(_))
    }

    pub fn value_type(&self) -> &Type {
        match self {
            Type::Mapping(v) => v,
            other => other,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Numeric => f.write_str("uint256"),
            Type::Address => f.write_str("address"),
            Type::Boolean => f.write_str("bool"),
            Type::Mapping(v) => write!(f, "mapping(address => {v})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StateVarDecl {
    pub name: String,
    pub ty: Type,
    pub initializer: Option<Expr>,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Visibility {
    Public,
    External,
    Internal,
    Private,
}

impl Visibility {
    /// Whether an account can invoke the function directly.
    pub fn is_entry(self) -> bool {
        matches!(self, Visibility::Public | Visibility::External)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub modifiers: Vec<String>,
    pub body: Vec<Stmt>,
    pub visibility: Visibility,
    pub is_view: bool,
    pub is_payable: bool,
    pub returns: Option<Type>,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModifierDecl {
    pub name: String,
    pub body: Vec<Stmt>,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContractAST {
    pub name: String,
    pub state_vars: Vec<StateVarDecl>,
    pub functions: Vec<FunctionDecl>,
    pub modifiers: Vec<ModifierDecl>,
    pub constructor: Option<FunctionDecl>,
}

impl ContractAST {
    pub fn state_var(&self, name: &str) -> Option<&StateVarDecl> {
        self.state_vars.iter().find(|v| v.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn modifier(&self, name: &str) -> Option<&ModifierDecl> {
        self.modifiers.iter().find(|m| m.name == name)
    }

    /// Functions an account can call, in declaration order.
    pub fn entry_functions(&self) -> impl Iterator<Item = &FunctionDecl> {
        self.functions.iter().filter(|f| f.visibility.is_entry())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum LValue {
    Var(String),
    Index(String, Expr),
}

impl LValue {
    pub fn base(&self) -> &str {
        match self {
            LValue::Var(n) | LValue::Index(n, _) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stmt {
    /// Pre-order ordinal inside the declaring function or modifier.
    pub index: usize,
    pub kind: StmtKind,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum StmtKind {
    Local {
        name: String,
        ty: Type,
        init: Option<Expr>,
    },
    Assign {
        target: LValue,
        op: AssignOp,
        value: Expr,
    },
    Require {
        cond: Expr,
        message: Option<String>,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    Revert,
    SelfDestruct(Expr),
    Call {
        callee: String,
        args: Vec<Expr>,
    },
    Return(Option<Expr>),
    /// `_;` inside a modifier.
    Placeholder,
}

impl Stmt {
    /// Visit this statement and all nested ones in pre-order.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Stmt)) {
        visit(self);
        if let StmtKind::If {
            then_body,
            else_body,
            ..
        } = &self.kind
        {
            for s in then_body.iter().chain(else_body) {
                s.walk(visit);
            }
        }
    }

    /// Expressions evaluated directly by this statement (not nested blocks).
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Local { init, .. } => init.iter().collect(),
            StmtKind::Assign { target, value, .. } => {
                let mut out = vec![value];
                if let LValue::Index(_, k) = target {
                    out.push(k);
                }
                out
            }
            StmtKind::Require { cond, .. } | StmtKind::If { cond, .. } => vec![cond],
            StmtKind::SelfDestruct(e) => vec![e],
            StmtKind::Call { args, .. } => args.iter().collect(),
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Revert | StmtKind::Placeholder => vec![],
        }
    }
}

pub fn walk_block<'a>(body: &'a [Stmt], visit: &mut impl FnMut(&'a Stmt)) {
    for s in body {
        s.walk(visit);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Expr {
    Number(u128),
    Bool(bool),
    /// Address literal: `address(0)` is stored as `"0x0"`.
    Address(String),
    Ident(String),
    MsgSender,
    MsgValue,
    BlockNumber,
    Index(String, Box<Expr>),
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Expr)) {
        visit(self);
        match self {
            Expr::Index(_, k) => k.walk(visit),
            Expr::Not(e) => e.walk(visit),
            Expr::Binary(_, l, r) => {
                l.walk(visit);
                r.walk(visit);
            }
            _ => {}
        }
    }

    /// Identifiers read by this expression, including indexed mapping names.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| match e {
            Expr::Ident(n) | Expr::Index(n, _) => out.push(n.as_str()),
            _ => {}
        });
        out
    }

    pub fn mentions_sender(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::MsgSender));
        found
    }

    pub fn mentions_value(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::MsgValue));
        found
    }
}
