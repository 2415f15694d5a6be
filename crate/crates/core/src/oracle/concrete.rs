//! Concrete small-domain interpreter.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::engine::state::{ExecState, ETHER, EXEC_STATE, THIS};
use crate::frontend::*;

/// The privileged account; the ordinary caller is its twin.
pub const PRIVILEGED: &str = "P";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CValue {
    Num(u128),
    /// `twin` marks the ordinary caller: same account data, never equal to
    /// the plain account in comparisons.
    Addr {
        name: String,
        twin: bool,
    },
    Bool(bool),
}

impl CValue {
    pub fn addr(name: &str) -> CValue {
        CValue::Addr {
            name: name.to_string(),
            twin: false,
        }
    }

    fn num(&self) -> u128 {
        match self {
            CValue::Num(n) => *n,
            other => panic!("expected number, got {other:?}"),
        }
    }

    fn boolean(&self) -> bool {
        match self {
            CValue::Bool(b) => *b,
            other => panic!("expected bool, got {other:?}"),
        }
    }

    fn key(&self) -> &str {
        match self {
            CValue::Addr { name, .. } => name,
            other => panic!("expected address, got {other:?}"),
        }
    }

    fn stored(self) -> CValue {
        match self {
            CValue::Addr { name, .. } => CValue::Addr { name, twin: false },
            other => other,
        }
    }

    pub fn default_of(ty: &Type) -> CValue {
        match ty {
            Type::Numeric => CValue::Num(0),
            Type::Address => CValue::addr("0x0"),
            Type::Boolean => CValue::Bool(false),
            Type::Mapping(v) => CValue::default_of(v),
        }
    }
}

impl fmt::Display for CValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CValue::Num(n) => write!(f, "{n}"),
            CValue::Addr { name, twin: false } => write!(f, "{name}"),
            CValue::Addr { name, twin: true } => write!(f, "{name}'"),
            CValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Mapping with a uniform default for unwritten keys. Entries equal to the
/// default are dropped by `normalize`, so equal maps compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CMap {
    pub default: CValue,
    pub entries: BTreeMap<String, CValue>,
}

impl CMap {
    pub fn get(&self, k: &str) -> &CValue {
        self.entries.get(k).unwrap_or(&self.default)
    }

    fn normalize(&mut self) {
        let d = self.default.clone();
        self.entries.retain(|_, v| *v != d);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CSlot {
    Scalar(CValue),
    Map(CMap),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ConcreteState {
    pub sigma: BTreeMap<String, CSlot>,
    pub ether: CMap,
    pub exec_state: ExecState,
    pub destroyed: bool,
}

impl ConcreteState {
    fn normalize(&mut self) {
        for s in self.sigma.values_mut() {
            if let CSlot::Map(m) = s {
                m.normalize();
            }
        }
        self.ether.normalize();
    }

    /// Variables (state, ether, exec_state) whose values differ.
    pub fn branch_vars(&self, o: &ConcreteState) -> std::collections::BTreeSet<String> {
        let mut out: std::collections::BTreeSet<String> = self
            .sigma
            .iter()
            .filter(|(k, v)| o.sigma.get(*k) != Some(*v))
            .map(|(k, _)| k.clone())
            .collect();
        if self.ether != o.ether {
            out.insert(ETHER.into());
        }
        if self.exec_state != o.exec_state {
            out.insert(EXEC_STATE.into());
        }
        out
    }
}

/// Concrete arguments of one call.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CallInput {
    pub function: String,
    pub args: Vec<CValue>,
    pub msg_value: u128,
    pub block_number: u128,
}

impl fmt::Display for CallInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.function, args.join(", "))?;
        if self.msg_value > 0 {
            write!(f, "{{value: {}}}", self.msg_value)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConcreteError {
    #[error("constructor reverts")]
    ConstructorRevert,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Flow {
    Normal,
    Return,
    Revert,
    Destroyed,
}

struct Env {
    sender: CValue,
    value: u128,
    block: u128,
}

type Frame = Vec<BTreeMap<String, CValue>>;

pub struct Interpreter<'a> {
    pub ast: &'a ContractAST,
}

impl<'a> Interpreter<'a> {
    pub fn new(ast: &'a ContractAST) -> Self {
        Interpreter { ast }
    }

    fn empty_state(&self) -> ConcreteState {
        let mut sigma = BTreeMap::new();
        for v in &self.ast.state_vars {
            let slot = match &v.ty {
                Type::Mapping(inner) => CSlot::Map(CMap {
                    default: CValue::default_of(inner),
                    entries: BTreeMap::new(),
                }),
                ty => CSlot::Scalar(CValue::default_of(ty)),
            };
            sigma.insert(v.name.clone(), slot);
        }
        ConcreteState {
            sigma,
            ether: CMap {
                default: CValue::Num(0),
                entries: BTreeMap::new(),
            },
            exec_state: ExecState::Success,
            destroyed: false,
        }
    }

    /// Deploy from `deployer`; mapping entries are left unnormalized so roots
    /// can change defaults without touching constructor writes.
    pub fn deploy(&self, deployer: &str) -> Result<ConcreteState, ConcreteError> {
        let mut st = self.empty_state();
        let env = Env {
            sender: CValue::addr(deployer),
            value: 0,
            block: 0,
        };
        for v in &self.ast.state_vars {
            if let Some(e) = &v.initializer {
                let val = self
                    .eval(&st, &vec![], e, &env)
                    .map_err(|_| ConcreteError::ConstructorRevert)?;
                st.sigma.insert(v.name.clone(), CSlot::Scalar(val.stored()));
            }
        }
        if let Some(ctor) = &self.ast.constructor {
            match self.layer(&mut st, ctor, &[], 0, &env) {
                Flow::Revert => return Err(ConcreteError::ConstructorRevert),
                Flow::Destroyed => st.exec_state = ExecState::Selfdestruct,
                _ => {}
            }
        }
        Ok(st)
    }

    /// Execute one call; the result is normalized.
    pub fn exec(
        &self,
        pre: &ConcreteState,
        call: &CallInput,
        sender: CValue,
    ) -> Result<ConcreteState, ConcreteError> {
        let f = self
            .ast
            .function(&call.function)
            .ok_or_else(|| ConcreteError::UnknownFunction(call.function.clone()))?;
        let mut st = pre.clone();
        st.exec_state = ExecState::Success;
        if pre.destroyed {
            st.exec_state = ExecState::Revert;
            return Ok(st);
        }
        let env = Env {
            sender,
            value: call.msg_value,
            block: call.block_number,
        };
        if f.is_payable && call.msg_value > 0 {
            let cur = st.ether.get(THIS).num();
            st.ether
                .entries
                .insert(THIS.into(), CValue::Num(cur + call.msg_value));
        }
        match self.layer(&mut st, f, &call.args, 0, &env) {
            Flow::Revert => {
                st = pre.clone();
                st.exec_state = ExecState::Revert;
            }
            Flow::Destroyed => st.exec_state = ExecState::Selfdestruct,
            _ => st.exec_state = ExecState::Success,
        }
        st.normalize();
        Ok(st)
    }

    fn layer(
        &self,
        st: &mut ConcreteState,
        f: &FunctionDecl,
        args: &[CValue],
        index: usize,
        env: &Env,
    ) -> Flow {
        let (body, frame) = if index < f.modifiers.len() {
            let m = self
                .ast
                .modifier(&f.modifiers[index])
                .expect("validated modifier");
            (&m.body, BTreeMap::new())
        } else {
            let frame = f
                .params
                .iter()
                .zip(args)
                .map(|(p, a)| (p.name.clone(), a.clone()))
                .collect();
            (&f.body, frame)
        };
        let mut frame: Frame = vec![frame];
        match self.block(st, &mut frame, f, args, index, body, env) {
            Flow::Return => Flow::Normal,
            other => other,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn block(
        &self,
        st: &mut ConcreteState,
        frame: &mut Frame,
        f: &FunctionDecl,
        args: &[CValue],
        index: usize,
        body: &[Stmt],
        env: &Env,
    ) -> Flow {
        frame.push(BTreeMap::new());
        let mut flow = Flow::Normal;
        for s in body {
            flow = self.stmt(st, frame, f, args, index, s, env);
            if flow != Flow::Normal {
                break;
            }
        }
        frame.pop();
        flow
    }

    fn local<'f>(frame: &'f Frame, n: &str) -> Option<&'f CValue> {
        frame.iter().rev().find_map(|s| s.get(n))
    }

    #[allow(clippy::too_many_arguments)]
    fn stmt(
        &self,
        st: &mut ConcreteState,
        frame: &mut Frame,
        f: &FunctionDecl,
        args: &[CValue],
        index: usize,
        s: &Stmt,
        env: &Env,
    ) -> Flow {
        macro_rules! ev {
            ($e:expr) => {
                match self.eval(st, frame, $e, env) {
                    Ok(v) => v,
                    Err(()) => return Flow::Revert,
                }
            };
        }
        match &s.kind {
            StmtKind::Local { name, ty, init } => {
                let v = match init {
                    Some(e) => ev!(e),
                    None => CValue::default_of(ty),
                };
                frame.last_mut().expect("scope").insert(name.clone(), v);
                Flow::Normal
            }
            StmtKind::Assign { target, op, value } => {
                let key = match target {
                    LValue::Index(_, k) => Some(ev!(k).key().to_string()),
                    LValue::Var(_) => None,
                };
                let rhs = ev!(value);
                let base = target.base();
                let current = match (&key, Self::local(frame, base)) {
                    (None, Some(l)) => l.clone(),
                    (None, None) => match &st.sigma[base] {
                        CSlot::Scalar(v) => v.clone(),
                        CSlot::Map(_) => unreachable!("validated"),
                    },
                    (Some(k), _) => match &st.sigma[base] {
                        CSlot::Map(m) => m.get(k).clone(),
                        CSlot::Scalar(_) => unreachable!("validated"),
                    },
                };
                let new = match op {
                    AssignOp::Set => rhs,
                    AssignOp::Add => CValue::Num(current.num() + rhs.num()),
                    AssignOp::Sub => match current.num().checked_sub(rhs.num()) {
                        Some(n) => CValue::Num(n),
                        None => return Flow::Revert,
                    },
                };
                if key.is_none() {
                    if let Some(scope) = frame.iter_mut().rev().find(|s| s.contains_key(base)) {
                        scope.insert(base.to_string(), new);
                        return Flow::Normal;
                    }
                }
                match (st.sigma.get_mut(base).expect("state var"), key) {
                    (CSlot::Scalar(v), None) => *v = new.stored(),
                    (CSlot::Map(m), Some(k)) => {
                        m.entries.insert(k, new.stored());
                    }
                    _ => unreachable!("validated"),
                }
                Flow::Normal
            }
            StmtKind::Require { cond, .. } => {
                if ev!(cond).boolean() {
                    Flow::Normal
                } else {
                    Flow::Revert
                }
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let b = if ev!(cond).boolean() {
                    then_body
                } else {
                    else_body
                };
                self.block(st, frame, f, args, index, b, env)
            }
            StmtKind::Revert => Flow::Revert,
            StmtKind::SelfDestruct(e) => {
                let target = ev!(e).key().to_string();
                let amount = st.ether.get(THIS).num();
                st.ether.entries.insert(THIS.into(), CValue::Num(0));
                if target != THIS {
                    let cur = st.ether.get(&target).num();
                    st.ether.entries.insert(target, CValue::Num(cur + amount));
                }
                st.destroyed = true;
                Flow::Destroyed
            }
            StmtKind::Call {
                callee,
                args: actual,
            } => {
                let g = self.ast.function(callee).expect("validated callee");
                let mut vals = vec![];
                for a in actual {
                    vals.push(ev!(a));
                }
                self.layer(st, g, &vals, 0, env)
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    ev!(e);
                }
                Flow::Return
            }
            StmtKind::Placeholder => match self.layer(st, f, args, index + 1, env) {
                Flow::Return => Flow::Normal,
                other => other,
            },
        }
    }

    fn eval(&self, st: &ConcreteState, frame: &Frame, e: &Expr, env: &Env) -> Result<CValue, ()> {
        Ok(match e {
            Expr::Number(n) => CValue::Num(*n),
            Expr::Bool(b) => CValue::Bool(*b),
            Expr::Address(a) => CValue::addr(a),
            Expr::Ident(n) => match Self::local(frame, n) {
                Some(v) => v.clone(),
                None => match &st.sigma[n] {
                    CSlot::Scalar(v) => v.clone(),
                    CSlot::Map(_) => unreachable!("validated"),
                },
            },
            Expr::MsgSender => env.sender.clone(),
            Expr::MsgValue => CValue::Num(env.value),
            Expr::BlockNumber => CValue::Num(env.block),
            Expr::Index(m, k) => {
                let key = self.eval(st, frame, k, env)?;
                match &st.sigma[m] {
                    CSlot::Map(map) => map.get(key.key()).clone(),
                    CSlot::Scalar(_) => unreachable!("validated"),
                }
            }
            Expr::Not(x) => CValue::Bool(!self.eval(st, frame, x, env)?.boolean()),
            Expr::Binary(op, l, r) => {
                let a = self.eval(st, frame, l, env)?;
                match op {
                    BinOp::And if !a.boolean() => return Ok(CValue::Bool(false)),
                    BinOp::Or if a.boolean() => return Ok(CValue::Bool(true)),
                    BinOp::And | BinOp::Or => return self.eval(st, frame, r, env),
                    _ => {}
                }
                let b = self.eval(st, frame, r, env)?;
                match op {
                    BinOp::Add => CValue::Num(a.num() + b.num()),
                    BinOp::Sub => CValue::Num(a.num().checked_sub(b.num()).ok_or(())?),
                    BinOp::Mul => CValue::Num(a.num() * b.num()),
                    BinOp::Div => CValue::Num(a.num().checked_div(b.num()).ok_or(())?),
                    BinOp::Eq => CValue::Bool(a == b),
                    BinOp::Ne => CValue::Bool(a != b),
                    BinOp::Lt => CValue::Bool(a.num() < b.num()),
                    BinOp::Le => CValue::Bool(a.num() <= b.num()),
                    BinOp::Gt => CValue::Bool(a.num() > b.num()),
                    BinOp::Ge => CValue::Bool(a.num() >= b.num()),
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
        })
    }
}
