//! Labeled symbolic execution of one function under one caller.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::solver::{check, SatResult};
use super::state::*;
use super::value::{Addr, Formula, Num, Symbol, Value};
use crate::frontend::printer::expr_to_string;
use crate::frontend::*;

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Privileged,
    Ordinary,
}

#[derive(Clone, Debug)]
pub struct CallerContext {
    pub role: Role,
    pub sender: Value,
}

impl CallerContext {
    pub fn privileged(account: &Addr) -> Self {
        CallerContext {
            role: Role::Privileged,
            sender: Value::addr(account.clone()),
        }
    }

    /// The ordinary caller owns the same data as the privileged account but
    /// never passes an identity check against it.
    pub fn ordinary(account: &Addr) -> Self {
        CallerContext {
            role: Role::Ordinary,
            sender: Value::Addr {
                a: account.clone(),
                twin: true,
            },
        }
    }
}

/// Inputs shared by the privileged and ordinary executions of a pair.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub params: Vec<Value>,
    pub msg_value: Num,
    pub block_number: Num,
    pub constraints: Vec<Formula>,
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub label_propagation: bool,
    pub max_paths: usize,
    pub trace: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            label_propagation: true,
            max_paths: 64,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("constructor always reverts")]
    ConstructorRevert,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
}

pub struct Engine<'a> {
    pub ast: &'a ContractAST,
    pub opts: EngineOptions,
    /// Number of `exec_function` calls.
    pub executions: u64,
    pub paths_truncated: bool,
    next_id: u32,
    const_addrs: Vec<Addr>,
    /// Initial symbol per (mapping, key), shared by every execution so that
    /// paired runs agree on untouched entries.
    initial_syms: HashMap<(String, Addr), Symbol>,
}

#[derive(Clone, Debug)]
struct Local {
    value: Value,
    labeled: bool,
    deps: BTreeSet<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Halt {
    Revert,
    Return,
    Destroyed,
}

#[derive(Clone, Debug)]
struct Path {
    st: LabeledState,
    /// Call frames, each a stack of block scopes.
    calls: Vec<Vec<BTreeMap<String, Local>>>,
    req_taint: bool,
    if_taint: Vec<bool>,
    guard_taint: bool,
    /// Mapping entry chosen for each `Index` node of the current statement.
    resolved: HashMap<usize, usize>,
    target_entry: Option<usize>,
    halt: Option<Halt>,
}

impl Path {
    fn local(&self, n: &str) -> Option<&Local> {
        self.calls.last()?.iter().rev().find_map(|s| s.get(n))
    }

    fn local_mut(&mut self, n: &str) -> Option<&mut Local> {
        self.calls
            .last_mut()?
            .iter_mut()
            .rev()
            .find_map(|s| s.get_mut(n))
    }

    fn ctrl_tainted(&self) -> bool {
        self.req_taint || self.if_taint.iter().any(|t| *t)
    }
}

struct Env {
    sender: Value,
    msg_value: Num,
    block_number: Num,
}

struct Layer<'a, 'b> {
    f: &'a FunctionDecl,
    args: &'b [Local],
    index: usize,
    owner: &'a str,
}

fn node_id(e: &Expr) -> usize {
    e as *const Expr as usize
}

impl<'a> Engine<'a> {
    pub fn new(ast: &'a ContractAST, opts: EngineOptions) -> Self {
        let mut consts = BTreeSet::new();
        let mut collect = |e: &Expr| {
            e.walk(&mut |x| {
                if let Expr::Address(a) = x {
                    consts.insert(a.clone());
                }
            })
        };
        for v in &ast.state_vars {
            if let Some(e) = &v.initializer {
                collect(e);
            }
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
                    collect(e);
                }
                if let StmtKind::Assign {
                    target: LValue::Index(_, k),
                    ..
                } = &s.kind
                {
                    collect(k);
                }
            });
        }
        Engine {
            ast,
            opts,
            executions: 0,
            paths_truncated: false,
            next_id: 0,
            const_addrs: consts.into_iter().map(Addr::Const).collect(),
            initial_syms: HashMap::new(),
        }
    }

    pub fn fresh(&mut self, label: &str) -> Symbol {
        self.next_id += 1;
        Symbol {
            id: self.next_id,
            label: label.to_string(),
        }
    }

    pub fn constant_addresses(&self) -> &[Addr] {
        &self.const_addrs
    }

    /// Fresh symbols for the parameters of `f`; addresses are third parties.
    pub fn fresh_inputs(&mut self, f: &FunctionDecl, privileged: &Addr) -> Inputs {
        let mut params = vec![];
        let mut constraints = vec![];
        for p in &f.params {
            let v = match p.ty {
                Type::Numeric => Value::Num(Num::sym(self.fresh(&p.name))),
                Type::Boolean => Value::Bool(Formula::Var(self.fresh(&p.name))),
                _ => {
                    let a = Addr::Sym(self.fresh(&p.name));
                    constraints.push(Formula::addr_eq(a.clone(), privileged.clone()).not());
                    for c in &self.const_addrs {
                        constraints.push(Formula::addr_eq(a.clone(), c.clone()).not());
                    }
                    Value::addr(a)
                }
            };
            params.push(v);
        }
        let msg_value = if f.is_payable {
            Num::sym(self.fresh("msg.value"))
        } else {
            Num::constant(0)
        };
        let block_number = Num::sym(self.fresh("block.number"));
        Inputs {
            params,
            msg_value,
            block_number,
            constraints,
        }
    }

    fn initial_state(&self) -> LabeledState {
        let mut sigma = BTreeMap::new();
        for v in &self.ast.state_vars {
            let slot = match &v.ty {
                Type::Mapping(val) => Slot::Map(MapVal::new(&v.name, (**val).clone())),
                ty => Slot::Scalar(default_value(ty)),
            };
            sigma.insert(v.name.clone(), slot);
        }
        LabeledState {
            sigma,
            ether: MapVal::new(ETHER, Type::Numeric),
            pi: vec![],
            theta: BTreeSet::new(),
            path_cond: vec![],
            exec_state: ExecState::Success,
            destroyed: false,
            approximate: false,
            trace: ExecTrace::default(),
        }
    }

    /// Deploy: initializers, then the constructor, sent by a deployer symbol.
    pub fn exec_constructor(&mut self) -> Result<LabeledState, EngineError> {
        let deployer = Addr::Sym(self.fresh("deployer"));
        self.exec_constructor_as(&deployer)
    }

    pub fn exec_constructor_as(&mut self, deployer: &Addr) -> Result<LabeledState, EngineError> {
        let mut st = self.initial_state();
        let env = Env {
            sender: Value::addr(deployer.clone()),
            msg_value: Num::constant(0),
            block_number: Num::sym(self.fresh("block.number")),
        };
        let mut path = self.new_path(st.clone());
        path.calls.push(vec![BTreeMap::new()]);
        for v in &self.ast.state_vars {
            if let Some(e) = &v.initializer {
                let (val, _) = self.eval(&path, e, &env);
                if let Some(Slot::Scalar(s)) = path.st.sigma.get_mut(&v.name) {
                    *s = val.stored();
                }
            }
        }
        st = path.st;
        let Some(ctor) = self.ast.constructor.as_ref() else {
            return Ok(st);
        };
        let mut paths = self.run(ctor, &[], &env, st);
        paths.retain(|p| p.exec_state == ExecState::Success);
        if paths.is_empty() {
            return Err(EngineError::ConstructorRevert);
        }
        let mut l0 = paths.remove(0);
        l0.approximate |= !paths.is_empty();
        l0.theta.clear();
        Ok(l0)
    }

    fn new_path(&self, st: LabeledState) -> Path {
        Path {
            st,
            calls: vec![],
            req_taint: false,
            if_taint: vec![],
            guard_taint: false,
            resolved: HashMap::new(),
            target_entry: None,
            halt: None,
        }
    }

    /// One successor per feasible path.
    pub fn exec_function(
        &mut self,
        name: &str,
        ctx: &CallerContext,
        l: &LabeledState,
        inputs: &Inputs,
    ) -> Result<Vec<LabeledState>, EngineError> {
        let f = self
            .ast
            .function(name)
            .ok_or_else(|| EngineError::UnknownFunction(name.to_string()))?;
        self.executions += 1;
        let mut start = l.clone();
        start.begin_execution();
        start.path_cond.extend(inputs.constraints.iter().cloned());
        if l.destroyed {
            start.exec_state = ExecState::Revert;
            return Ok(vec![start]);
        }
        let env = Env {
            sender: ctx.sender.clone(),
            msg_value: inputs.msg_value.clone(),
            block_number: inputs.block_number.clone(),
        };
        let args: Vec<Local> = inputs
            .params
            .iter()
            .map(|v| Local {
                value: v.clone(),
                labeled: false,
                deps: BTreeSet::new(),
            })
            .collect();
        Ok(self.run(f, &args, &env, start))
    }

    fn run(
        &mut self,
        f: &'a FunctionDecl,
        args: &[Local],
        env: &Env,
        start: LabeledState,
    ) -> Vec<LabeledState> {
        let pre = start.clone();
        let path = self.new_path(start);
        let mut paths = vec![path];
        if !env.msg_value.is_zero() {
            paths = self.lookup_ether(paths.remove(0), Addr::Const(THIS.into()), THIS);
            for p in &mut paths {
                let i = p.target_entry.take().unwrap();
                let e = &mut p.st.ether.entries[i];
                e.value = Value::Num(e.value.num().add(&env.msg_value));
                e.written = true;
            }
        }
        let paths = self.run_function(f, args, env, paths);
        paths.into_iter().map(|p| self.finish(&pre, p)).collect()
    }

    fn finish(&self, pre: &LabeledState, p: Path) -> LabeledState {
        let mut st = p.st;
        let label_exec = self.opts.label_propagation && p.guard_taint;
        match p.halt {
            Some(Halt::Revert) => {
                st.sigma = pre.sigma.clone();
                st.ether = pre.ether.clone();
                st.theta = pre.theta.clone();
                st.destroyed = pre.destroyed;
                st.trace.related.clear();
                st.trace.entry_related.clear();
                st.trace.const_assigned.clear();
                st.exec_state = ExecState::Revert;
            }
            Some(Halt::Destroyed) => st.exec_state = ExecState::Selfdestruct,
            _ => st.exec_state = ExecState::Success,
        }
        if label_exec || st.exec_state == ExecState::Selfdestruct {
            st.theta.insert(EXEC_STATE.into());
        } else {
            st.theta.remove(EXEC_STATE);
        }
        st
    }

    fn run_function(
        &mut self,
        f: &'a FunctionDecl,
        args: &[Local],
        env: &Env,
        paths: Vec<Path>,
    ) -> Vec<Path> {
        self.run_layer(f, args, 0, env, paths)
    }

    fn run_layer(
        &mut self,
        f: &'a FunctionDecl,
        args: &[Local],
        index: usize,
        env: &Env,
        mut paths: Vec<Path>,
    ) -> Vec<Path> {
        let ast = self.ast;
        let (body, owner, frame): (&'a [Stmt], &'a str, BTreeMap<String, Local>) =
            if index < f.modifiers.len() {
                let m = ast
                    .modifier(&f.modifiers[index])
                    .expect("validated modifier");
                (&m.body, &m.name, BTreeMap::new())
            } else {
                let frame = f
                    .params
                    .iter()
                    .zip(args)
                    .map(|(p, a)| (p.name.clone(), a.clone()))
                    .collect();
                (&f.body, &f.name, frame)
            };
        for p in &mut paths {
            p.calls.push(vec![frame.clone()]);
        }
        let layer = Layer {
            f,
            args,
            index,
            owner,
        };
        let mut out = self.run_block(&layer, body, env, paths);
        for p in &mut out {
            p.calls.pop();
            if p.halt == Some(Halt::Return) {
                p.halt = None;
            }
        }
        out
    }

    fn run_block(
        &mut self,
        layer: &Layer<'a, '_>,
        body: &'a [Stmt],
        env: &Env,
        mut paths: Vec<Path>,
    ) -> Vec<Path> {
        for p in &mut paths {
            if let Some(frame) = p.calls.last_mut() {
                frame.push(BTreeMap::new());
            }
        }
        for s in body {
            let (active, mut done): (Vec<Path>, Vec<Path>) =
                paths.into_iter().partition(|p| p.halt.is_none());
            if active.is_empty() {
                paths = done;
                break;
            }
            let mut next = self.stmt(layer, s, env, active);
            next.append(&mut done);
            if next.len() > self.opts.max_paths {
                next.truncate(self.opts.max_paths);
                self.paths_truncated = true;
                for p in &mut next {
                    p.st.approximate = true;
                }
            }
            paths = next;
        }
        for p in &mut paths {
            if let Some(frame) = p.calls.last_mut() {
                frame.pop();
            }
        }
        paths
    }

    // ---- forking -------------------------------------------------------

    fn feasible(&self, p: &mut Path, f: &Formula) -> bool {
        if let Some(b) = f.as_const() {
            return b;
        }
        let mut cs = p.st.path_cond.clone();
        cs.push(f.clone());
        match check(&cs) {
            SatResult::Sat => true,
            SatResult::Unsat => false,
            SatResult::Unknown => {
                p.st.approximate = true;
                true
            }
        }
    }

    /// Split on `cond`: (paths where it holds, paths where it fails).
    fn fork(&self, mut p: Path, cond: Formula) -> (Option<Path>, Option<Path>) {
        match cond.as_const() {
            Some(true) => return (Some(p), None),
            Some(false) => return (None, Some(p)),
            None => {}
        }
        let neg = cond.clone().not();
        let mut q = p.clone();
        let yes = self.feasible(&mut p, &cond).then(|| {
            p.st.path_cond.push(cond);
            p
        });
        let no = self.feasible(&mut q, &neg).then(|| {
            q.st.path_cond.push(neg);
            q
        });
        (yes, no)
    }

    // ---- mapping resolution -------------------------------------------

    /// Resolve `key` in mapping `map` (or ether when `map` is None), forking on
    /// unknown aliasing with existing entries. Sets `target_entry`.
    fn lookup_in(&mut self, p: Path, map: Option<&str>, key: Addr, token: &str) -> Vec<Path> {
        let mut out = vec![];
        let mut cur = Some(p);
        let n = {
            let p = cur.as_ref().unwrap();
            map_ref(&p.st, map).entries.len()
        };
        for i in 0..n {
            let Some(p) = cur.take() else { break };
            let ek = map_ref(&p.st, map).entries[i].key.clone();
            let (hit, miss) = self.fork(p, Formula::addr_eq(key.clone(), ek));
            if let Some(mut h) = hit {
                map_mut(&mut h.st, map).entries[i]
                    .tokens
                    .insert(token.to_string());
                h.target_entry = Some(i);
                out.push(h);
            }
            cur = miss;
        }
        if let Some(mut p) = cur {
            let m = map_ref(&p.st, map);
            let value = match m.default {
                MapDefault::Zero => default_value(&m.value_ty),
                MapDefault::Fresh => {
                    let label = format!("{}[{token}]", m.name);
                    let ty = m.value_ty.clone();
                    let memo = (m.name.clone(), key.clone());
                    let s = match self.initial_syms.get(&memo) {
                        Some(s) => s.clone(),
                        None => {
                            let s = self.fresh(&label);
                            self.initial_syms.insert(memo, s.clone());
                            s
                        }
                    };
                    match ty {
                        Type::Numeric => Value::Num(Num::sym(s)),
                        Type::Boolean => Value::Bool(Formula::Var(s)),
                        _ => Value::addr(Addr::Sym(s)),
                    }
                }
            };
            let m = map_mut(&mut p.st, map);
            m.entries.push(MapEntry {
                key,
                initial: value.clone(),
                value,
                tokens: BTreeSet::from([token.to_string()]),
                written: false,
            });
            p.target_entry = Some(m.entries.len() - 1);
            out.push(p);
        }
        out
    }

    fn lookup_ether(&mut self, p: Path, key: Addr, token: &str) -> Vec<Path> {
        self.lookup_in(p, None, key, token)
    }

    /// Resolve every `Index` node inside `e`, innermost first.
    fn resolve(&mut self, paths: Vec<Path>, e: &Expr, env: &Env) -> Vec<Path> {
        match e {
            Expr::Index(name, k) => {
                let paths = self.resolve(paths, k, env);
                let mut out = vec![];
                for p in paths {
                    let (key, _) = self.eval(&p, k, env);
                    let key = key.address().clone();
                    for mut q in self.lookup_in(p, Some(name), key.clone(), &expr_to_string(k)) {
                        let i = q.target_entry.take().unwrap();
                        q.resolved.insert(node_id(e), i);
                        out.push(q);
                    }
                }
                out
            }
            Expr::Not(inner) => self.resolve(paths, inner, env),
            Expr::Binary(_, l, r) => {
                let paths = self.resolve(paths, l, env);
                self.resolve(paths, r, env)
            }
            _ => paths,
        }
    }

    // ---- evaluation ------------------------------------------------------

    /// Value of `e` plus implicit guards (no underflow, no division by zero).
    fn eval(&self, p: &Path, e: &Expr, env: &Env) -> (Value, Vec<Formula>) {
        match e {
            Expr::Number(n) => (Value::Num(Num::constant(*n as i128)), vec![]),
            Expr::Bool(b) => (Value::Bool(Formula::Const(*b)), vec![]),
            Expr::Address(a) => (Value::addr(Addr::Const(a.clone())), vec![]),
            Expr::MsgSender => (env.sender.clone(), vec![]),
            Expr::MsgValue => (Value::Num(env.msg_value.clone()), vec![]),
            Expr::BlockNumber => (Value::Num(env.block_number.clone()), vec![]),
            Expr::Ident(n) => match p.local(n) {
                Some(l) => (l.value.clone(), vec![]),
                None => (p.st.scalar(n).clone(), vec![]),
            },
            Expr::Index(name, _) => {
                let i = p.resolved[&node_id(e)];
                (p.st.sigma[name].map().entries[i].value.clone(), vec![])
            }
            Expr::Not(inner) => {
                let (v, g) = self.eval(p, inner, env);
                (Value::Bool(v.formula().clone().not()), g)
            }
            Expr::Binary(op, l, r) => {
                let (a, mut ga) = self.eval(p, l, env);
                let (b, gb) = self.eval(p, r, env);
                let v = match op {
                    BinOp::And => {
                        let fa = a.formula().clone();
                        ga.extend(
                            gb.into_iter()
                                .map(|g| Formula::or(vec![fa.clone().not(), g])),
                        );
                        Value::Bool(Formula::and(vec![fa, b.formula().clone()]))
                    }
                    BinOp::Or => {
                        let fa = a.formula().clone();
                        ga.extend(gb.into_iter().map(|g| Formula::or(vec![fa.clone(), g])));
                        Value::Bool(Formula::or(vec![fa, b.formula().clone()]))
                    }
                    _ => {
                        ga.extend(gb);
                        match op {
                            BinOp::Add => Value::Num(a.num().add(b.num())),
                            BinOp::Sub => {
                                let d = a.num().sub(b.num());
                                ga.push(Formula::ge0(d.clone()));
                                Value::Num(d)
                            }
                            BinOp::Mul => Value::Num(a.num().mul(b.num())),
                            BinOp::Div => {
                                ga.push(Formula::eq0(b.num().clone()).not());
                                Value::Num(a.num().div(b.num()))
                            }
                            BinOp::Eq => Value::Bool(a.equals(&b)),
                            BinOp::Ne => Value::Bool(a.equals(&b).not()),
                            BinOp::Lt => Value::Bool(Formula::ge0(
                                b.num().sub(a.num()).sub(&Num::constant(1)),
                            )),
                            BinOp::Le => Value::Bool(Formula::ge0(b.num().sub(a.num()))),
                            BinOp::Gt => Value::Bool(Formula::ge0(
                                a.num().sub(b.num()).sub(&Num::constant(1)),
                            )),
                            BinOp::Ge => Value::Bool(Formula::ge0(a.num().sub(b.num()))),
                            BinOp::And | BinOp::Or => unreachable!(),
                        }
                    }
                };
                (v, ga)
            }
        }
    }

    /// Whether `e` reads a labeled variable.
    fn tainted(&self, p: &Path, e: &Expr) -> bool {
        let mut t = false;
        e.walk(&mut |x| match x {
            Expr::Ident(n) => {
                t |= match p.local(n) {
                    Some(l) => l.labeled,
                    None => p.st.is_labeled(n),
                }
            }
            Expr::Index(n, _) => t |= p.st.is_labeled(n),
            _ => {}
        });
        t
    }

    /// State variables and literals reaching `e`, through locals.
    fn deps(&self, p: &Path, e: &Expr) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        e.walk(&mut |x| match x {
            Expr::Ident(n) => match p.local(n) {
                Some(l) => out.extend(l.deps.iter().cloned()),
                None => {
                    out.insert(n.clone());
                }
            },
            Expr::Index(n, _) => {
                out.insert(n.clone());
            }
            Expr::Number(_) | Expr::Bool(_) | Expr::Address(_) => {
                out.insert(expr_to_string(x));
            }
            _ => {}
        });
        out
    }

    // ---- statements ------------------------------------------------------

    /// Fork on implicit guards; failing paths revert.
    fn guard_paths(
        &self,
        p: Path,
        guards: Vec<Formula>,
        tainted: bool,
        out: &mut Vec<Path>,
    ) -> Option<Path> {
        if guards.is_empty() {
            return Some(p);
        }
        let (ok, bad) = self.fork(p, Formula::and(guards));
        if let Some(mut b) = bad {
            b.guard_taint |= tainted;
            b.halt = Some(Halt::Revert);
            out.push(b);
        }
        ok.map(|mut p| {
            p.guard_taint |= tainted;
            p
        })
    }

    fn stmt(
        &mut self,
        layer: &Layer<'a, '_>,
        s: &'a Stmt,
        env: &Env,
        paths: Vec<Path>,
    ) -> Vec<Path> {
        let sid = StmtId {
            function: layer.owner.to_string(),
            index: s.index,
        };
        let mut paths = paths;
        for p in &mut paths {
            p.resolved.clear();
            p.target_entry = None;
            p.st.pi.push(sid.clone());
            if self.opts.trace {
                p.st.trace
                    .lines
                    .push(format!("{sid}: {}", stmt_headline(s)));
            }
        }
        if !matches!(s.kind, StmtKind::If { .. }) {
            for e in s.exprs() {
                if let StmtKind::Assign {
                    target: LValue::Index(_, k),
                    ..
                } = &s.kind
                {
                    if std::ptr::eq(e, k) {
                        continue;
                    }
                }
                paths = self.resolve(paths, e, env);
            }
        }
        let prop = self.opts.label_propagation;
        let mut out = vec![];
        for p in paths {
            match &s.kind {
                StmtKind::Local { name, ty, init } => {
                    let (value, guards, labeled, deps) = match init {
                        Some(e) => {
                            let (v, g) = self.eval(&p, e, env);
                            (v, g, self.tainted(&p, e), self.deps(&p, e))
                        }
                        None => (default_value(ty), vec![], false, BTreeSet::new()),
                    };
                    let tainted = prop && labeled;
                    if let Some(mut p) = self.guard_paths(p, guards, tainted, &mut out) {
                        let labeled = prop && (labeled || p.ctrl_tainted());
                        let scope = p
                            .calls
                            .last_mut()
                            .and_then(|c| c.last_mut())
                            .expect("scope");
                        scope.insert(
                            name.clone(),
                            Local {
                                value,
                                labeled,
                                deps,
                            },
                        );
                        out.push(p);
                    }
                }
                StmtKind::Assign { target, op, value } => {
                    self.assign(p, target, *op, value, env, &mut out)
                }
                StmtKind::Require { cond, .. } => {
                    let (v, mut g) = self.eval(&p, cond, env);
                    let tainted = prop && self.tainted(&p, cond);
                    g.push(v.formula().clone());
                    let (pass, fail) = self.fork(p, Formula::and(g));
                    if let Some(mut f) = fail {
                        f.guard_taint |= tainted;
                        f.halt = Some(Halt::Revert);
                        out.push(f);
                    }
                    if let Some(mut q) = pass {
                        q.guard_taint |= tainted;
                        q.req_taint |= tainted;
                        out.push(q);
                    }
                }
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    let mut ps = self.resolve(vec![p], cond, env);
                    for p in ps.drain(..) {
                        let (v, g) = self.eval(&p, cond, env);
                        let tainted = prop && self.tainted(&p, cond);
                        let Some(p) = self.guard_paths(p, g, tainted, &mut out) else {
                            continue;
                        };
                        let (yes, no) = self.fork(p, v.formula().clone());
                        for (branch, body) in [(yes, then_body), (no, else_body)] {
                            let Some(mut b) = branch else { continue };
                            b.guard_taint |= tainted;
                            b.if_taint.push(tainted);
                            let mut res = self.run_block(layer, body, env, vec![b]);
                            for r in &mut res {
                                r.if_taint.pop();
                            }
                            out.extend(res);
                        }
                    }
                }
                StmtKind::Revert => {
                    let mut p = p;
                    p.halt = Some(Halt::Revert);
                    out.push(p);
                }
                StmtKind::SelfDestruct(e) => self.selfdestruct(p, e, env, &mut out),
                StmtKind::Call { callee, args } => {
                    let f = self.ast.function(callee).expect("validated callee");
                    let mut guards = vec![];
                    let mut locals = vec![];
                    let ctrl = p.ctrl_tainted();
                    for a in args {
                        let (v, g) = self.eval(&p, a, env);
                        guards.extend(g);
                        locals.push(Local {
                            value: v,
                            labeled: prop && (self.tainted(&p, a) || ctrl),
                            deps: self.deps(&p, a),
                        });
                    }
                    let tainted = prop && args.iter().any(|a| self.tainted(&p, a));
                    if let Some(p) = self.guard_paths(p, guards, tainted, &mut out) {
                        let saved_req = p.req_taint;
                        let mut res = self.run_function(f, &locals, env, vec![p]);
                        for r in &mut res {
                            r.req_taint |= saved_req;
                        }
                        out.extend(res);
                    }
                }
                StmtKind::Return(e) => {
                    let mut p = p;
                    if let Some(e) = e {
                        let (_, g) = self.eval(&p, e, env);
                        let tainted = prop && self.tainted(&p, e);
                        match self.guard_paths(p, g, tainted, &mut out) {
                            Some(q) => p = q,
                            None => continue,
                        }
                    }
                    p.halt = Some(Halt::Return);
                    out.push(p);
                }
                StmtKind::Placeholder => {
                    let res = self.run_layer(layer.f, layer.args, layer.index + 1, env, vec![p]);
                    out.extend(res);
                }
            }
        }
        out
    }

    fn assign(
        &mut self,
        p: Path,
        target: &LValue,
        op: AssignOp,
        value: &Expr,
        env: &Env,
        out: &mut Vec<Path>,
    ) {
        let prop = self.opts.label_propagation;
        let mut targets = match target {
            LValue::Index(name, k) => {
                let ps = self.resolve(vec![p], k, env);
                let mut res = vec![];
                for p in ps {
                    let (key, _) = self.eval(&p, k, env);
                    let key = key.address().clone();
                    res.extend(self.lookup_in(p, Some(name), key, &expr_to_string(k)));
                }
                res
            }
            LValue::Var(_) => vec![p],
        };
        for p in targets.drain(..) {
            let (rhs, mut guards) = self.eval(&p, value, env);
            let base = target.base();
            let is_local = p.local(base).is_some();
            let current = || -> Value {
                match target {
                    LValue::Var(n) => match p.local(n) {
                        Some(l) => l.value.clone(),
                        None => p.st.scalar(n).clone(),
                    },
                    LValue::Index(n, _) => p.st.sigma[n].map().entries[p.target_entry.unwrap()]
                        .value
                        .clone(),
                }
            };
            let new = match op {
                AssignOp::Set => rhs,
                AssignOp::Add => Value::Num(current().num().add(rhs.num())),
                AssignOp::Sub => {
                    let d = current().num().sub(rhs.num());
                    guards.push(Formula::ge0(d.clone()));
                    Value::Num(d)
                }
            };
            let target_labeled = match target {
                LValue::Var(n) => match p.local(n) {
                    Some(l) => l.labeled,
                    None => p.st.is_labeled(n),
                },
                LValue::Index(n, _) => p.st.is_labeled(n),
            };
            let mut src_taint = self.tainted(&p, value);
            if let LValue::Index(_, k) = target {
                src_taint |= self.tainted(&p, k);
            }
            if op != AssignOp::Set {
                src_taint |= target_labeled;
            }
            let mut deps = self.deps(&p, value);
            if op != AssignOp::Set && !is_local {
                deps.insert(base.to_string());
            }
            let guard_taint =
                prop && (self.tainted(&p, value) || (op == AssignOp::Sub && target_labeled));
            let Some(mut p) = self.guard_paths(p, guards, guard_taint, out) else {
                continue;
            };
            let labeled = prop && (src_taint || p.ctrl_tainted());
            let is_const = matches!(value, Expr::Address(_)) && op == AssignOp::Set;
            if let Some(l) = p.local_mut(base) {
                l.value = new;
                if op == AssignOp::Set {
                    l.deps = deps;
                } else {
                    l.deps.extend(deps);
                }
                l.labeled = labeled || (!prop && l.labeled && op != AssignOp::Set);
                out.push(p);
                continue;
            }
            match target {
                LValue::Var(n) => {
                    if let Some(Slot::Scalar(v)) = p.st.sigma.get_mut(n) {
                        *v = new.stored();
                    }
                    let rel = p.st.trace.related.entry(n.clone()).or_default();
                    if op == AssignOp::Set {
                        *rel = deps;
                    } else {
                        rel.extend(deps);
                    }
                    if is_const {
                        p.st.trace.const_assigned.insert(n.clone());
                    } else {
                        p.st.trace.const_assigned.remove(n);
                    }
                    if labeled {
                        p.st.theta.insert(n.clone());
                    } else if !(op != AssignOp::Set && target_labeled) {
                        p.st.theta.remove(n);
                    }
                }
                LValue::Index(n, _) => {
                    let i = p.target_entry.unwrap();
                    let e = &mut p.st.sigma.get_mut(n).unwrap().map_mut().entries[i];
                    e.value = new.stored();
                    e.written = true;
                    let rel = p.st.trace.entry_related.entry((n.clone(), i)).or_default();
                    if op == AssignOp::Set {
                        *rel = deps;
                    } else {
                        rel.extend(deps);
                    }
                    if labeled {
                        p.st.theta.insert(n.clone());
                    }
                }
            }
            out.push(p);
        }
    }

    fn selfdestruct(&mut self, p: Path, e: &Expr, env: &Env, out: &mut Vec<Path>) {
        let (target, _) = self.eval(&p, e, env);
        let target = target.address().clone();
        for p in self.lookup_ether(p, Addr::Const(THIS.into()), THIS) {
            let mut p = p;
            let this = p.target_entry.take().unwrap();
            let amount = p.st.ether.entries[this].value.num().clone();
            for mut q in self.lookup_ether(p, target.clone(), &expr_to_string(e)) {
                let t = q.target_entry.take().unwrap();
                q.st.ether.entries[this].value = Value::Num(Num::constant(0));
                q.st.ether.entries[this].written = true;
                if t != this {
                    let ent = &mut q.st.ether.entries[t];
                    ent.value = Value::Num(ent.value.num().add(&amount));
                    ent.written = true;
                }
                q.st.destroyed = true;
                let all = q.st.variables();
                q.st.theta.extend(all);
                q.halt = Some(Halt::Destroyed);
                out.push(q);
            }
        }
    }
}

fn map_ref<'s>(st: &'s LabeledState, map: Option<&str>) -> &'s MapVal {
    match map {
        Some(n) => st.sigma[n].map(),
        None => &st.ether,
    }
}

fn map_mut<'s>(st: &'s mut LabeledState, map: Option<&str>) -> &'s mut MapVal {
    match map {
        Some(n) => st.sigma.get_mut(n).unwrap().map_mut(),
        None => &mut st.ether,
    }
}

fn stmt_headline(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Local { name, .. } => format!("local {name}"),
        StmtKind::Assign { target, op, value } => {
            let t = match target {
                LValue::Var(n) => n.clone(),
                LValue::Index(n, k) => format!("{n}[{}]", expr_to_string(k)),
            };
            format!("{t} {} {}", op.symbol(), expr_to_string(value))
        }
        StmtKind::Require { cond, .. } => format!("require({})", expr_to_string(cond)),
        StmtKind::If { cond, .. } => format!("if ({})", expr_to_string(cond)),
        StmtKind::Revert => "revert()".into(),
        StmtKind::SelfDestruct(e) => format!("selfdestruct({})", expr_to_string(e)),
        StmtKind::Call { callee, .. } => format!("call {callee}"),
        StmtKind::Return(_) => "return".into(),
        StmtKind::Placeholder => "_".into(),
    }
}
