mod common;

use janus_core::engine::solver::{check, entails, SatResult};
use janus_core::engine::state::{ExecState, Slot};
use janus_core::engine::value::{Addr, Formula, Num, Symbol, Value};
use janus_core::engine::*;
use janus_core::frontend::{parse, ContractAST};
use proptest::prelude::*;

use common::*;

fn engine(ast: &ContractAST) -> Engine<'_> {
    Engine::new(ast, EngineOptions::default())
}

fn run(ast: &ContractAST, f: &str, role: Role) -> (LabeledState, Vec<LabeledState>) {
    let mut e = engine(ast);
    let p = Addr::Const("P".into());
    let l0 = e.exec_constructor_as(&p).unwrap();
    let inputs = e.fresh_inputs(ast.function(f).unwrap(), &p);
    let ctx = match role {
        Role::Privileged => CallerContext::privileged(&p),
        Role::Ordinary => CallerContext::ordinary(&p),
    };
    let out = e.exec_function(f, &ctx, &l0, &inputs).unwrap();
    (l0, out)
}

#[test]
fn constructor_sets_owner_to_deployer() {
    let ast = parse(EXAMPLE).unwrap();
    let l0 = engine(&ast).exec_constructor().unwrap();
    match l0.scalar("owner") {
        Value::Addr {
            a: Addr::Sym(s),
            twin: false,
        } => assert_eq!(s.label, "deployer"),
        v => panic!("owner = {v:?}"),
    }
    let Slot::Map(m) = &l0.sigma["balances"] else {
        panic!("mapping")
    };
    assert!(m.entries.is_empty());
    assert_eq!(l0.exec_state, ExecState::Success);
    assert!(l0.theta.is_empty());
}

#[test]
fn no_constructor_means_defaults() {
    let ast = parse("contract D { uint a; bool b; address c; }").unwrap();
    let l0 = engine(&ast).exec_constructor().unwrap();
    assert_eq!(l0.scalar("a"), &Value::Num(Num::constant(0)));
    assert_eq!(l0.scalar("b"), &Value::Bool(Formula::Const(false)));
    assert_eq!(l0.scalar("c"), &Value::addr(Addr::Const("0x0".into())));
}

#[test]
fn whitelist_starts_locked() {
    let ast = corpus("whitelist");
    let l0 = engine(&ast).exec_constructor().unwrap();
    assert_eq!(l0.scalar("locked"), &Value::Bool(Formula::Const(true)));
}

#[test]
fn privileged_mint_succeeds_once() {
    let ast = corpus("mint");
    let (_, out) = run(&ast, "mint", Role::Privileged);
    assert_eq!(out.len(), 1);
    let s = &out[0];
    assert_eq!(s.exec_state, ExecState::Success);
    let Value::Num(n) = s.scalar("totalSupply") else {
        panic!("numeric")
    };
    assert_eq!(n.as_const(), None);
    assert_eq!(n.to_string(), "_value");
}

#[test]
fn ordinary_mint_reverts() {
    let ast = corpus("mint");
    let (l0, out) = run(&ast, "mint", Role::Ordinary);
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].exec_state, ExecState::Revert);
    assert_eq!(out[0].scalar("totalSupply"), l0.scalar("totalSupply"));
}

#[test]
fn empty_body_is_identity() {
    let ast = parse("contract I { uint a; function f() public { } }").unwrap();
    let (l0, out) = run(&ast, "f", Role::Ordinary);
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].scalar("a"), l0.scalar("a"));
    assert_eq!(out[0].theta, l0.theta);
    assert_eq!(out[0].exec_state, ExecState::Success);
}

#[test]
fn transfer_splits_on_balance_guard() {
    let ast = corpus("transfer");
    let (_, out) = run(&ast, "transfer", Role::Ordinary);
    assert!(out.iter().any(|s| s.exec_state == ExecState::Success));
    assert!(out.iter().any(|s| s.exec_state == ExecState::Revert));
    for s in &out {
        assert_ne!(check(&s.path_cond), SatResult::Unsat);
    }
}

#[test]
fn selfdestruct_labels_everything() {
    let ast = regression("tokeer_fn");
    let (_, out) = run(&ast, "destroy", Role::Privileged);
    let s = out
        .iter()
        .find(|s| s.exec_state == ExecState::Selfdestruct)
        .expect("destroy path");
    assert!(s.destroyed);
    for v in ast.state_vars.iter() {
        assert!(s.is_labeled(&v.name), "{}", v.name);
    }
}

#[test]
fn path_budget_marks_approximation() {
    let mut body = String::new();
    for i in 0..8 {
        body.push_str(&format!("if (x > {i}) {{ a += 1; }} "));
    }
    let src = format!("contract B {{ uint a; function f(uint x) public {{ {body} }} }}");
    let ast = parse(&src).unwrap();
    let mut e = Engine::new(
        &ast,
        EngineOptions {
            max_paths: 4,
            ..Default::default()
        },
    );
    let p = Addr::Const("P".into());
    let l0 = e.exec_constructor_as(&p).unwrap();
    let inputs = e.fresh_inputs(ast.function("f").unwrap(), &p);
    let out = e
        .exec_function("f", &CallerContext::ordinary(&p), &l0, &inputs)
        .unwrap();
    assert!(out.len() <= 4);
    assert!(out.iter().any(|s| s.approximate));
}

#[test]
fn unknown_function_is_an_error() {
    let ast = corpus("mint");
    let mut e = engine(&ast);
    let p = Addr::Const("P".into());
    let l0 = e.exec_constructor_as(&p).unwrap();
    let inputs = e.fresh_inputs(ast.function("mint").unwrap(), &p);
    let err = e
        .exec_function("nope", &CallerContext::privileged(&p), &l0, &inputs)
        .unwrap_err();
    assert_eq!(err, EngineError::UnknownFunction("nope".into()));
}

fn sym(id: u32) -> Num {
    Num::sym(Symbol {
        id,
        label: format!("x{id}"),
    })
}

#[test]
fn solver_basics() {
    let x = sym(1);
    assert_eq!(
        check(&[Formula::ge0(x.neg().sub(&Num::constant(1)))]),
        SatResult::Unsat
    );
    assert_eq!(
        check(&[Formula::eq0(x.scale(2).sub(&Num::constant(3)))]),
        SatResult::Unsat
    );
    assert_eq!(
        check(&[Formula::eq0(x.scale(2).sub(&Num::constant(4)))]),
        SatResult::Sat
    );
    assert!(entails(
        &[Formula::ge0(x.sub(&Num::constant(3)))],
        &Formula::ge0(x.sub(&Num::constant(1)))
    ));
    let (a, b) = (Addr::Const("A".into()), Addr::Const("B".into()));
    assert_eq!(check(&[Formula::addr_eq(a.clone(), b)]), SatResult::Unsat);
    assert_eq!(check(&[Formula::addr_eq(a.clone(), a)]), SatResult::Sat);
}

#[derive(Clone, Debug)]
struct Lin {
    cx: i128,
    cy: i128,
    c: i128,
}

impl Lin {
    fn num(&self) -> Num {
        sym(1)
            .scale(self.cx)
            .add(&sym(2).scale(self.cy))
            .add(&Num::constant(self.c))
    }

    fn eval(&self, x: i128, y: i128) -> i128 {
        self.cx * x + self.cy * y + self.c
    }
}

#[derive(Clone, Debug)]
enum Atomic {
    Ge(Lin),
    Eq(Lin),
    Ne(Lin),
}

fn lin() -> impl Strategy<Value = Lin> {
    (-2i128..=2, -2i128..=2, -5i128..=5).prop_map(|(cx, cy, c)| Lin { cx, cy, c })
}

fn atomic() -> impl Strategy<Value = Atomic> {
    prop_oneof![
        lin().prop_map(Atomic::Ge),
        lin().prop_map(Atomic::Eq),
        lin().prop_map(Atomic::Ne)
    ]
}

proptest! {
    #[test]
    fn solver_agrees_with_enumeration(cs in prop::collection::vec(atomic(), 1..5)) {
        let formulas: Vec<Formula> = cs
            .iter()
            .map(|a| match a {
                Atomic::Ge(l) => Formula::ge0(l.num()),
                Atomic::Eq(l) => Formula::eq0(l.num()),
                Atomic::Ne(l) => Formula::eq0(l.num()).not(),
            })
            .collect();
        let holds = |x: i128, y: i128| {
            cs.iter().all(|a| match a {
                Atomic::Ge(l) => l.eval(x, y) >= 0,
                Atomic::Eq(l) => l.eval(x, y) == 0,
                Atomic::Ne(l) => l.eval(x, y) != 0,
            })
        };
        let model = (0..=60).any(|x| (0..=60).any(|y| holds(x, y)));
        match check(&formulas) {
            SatResult::Unsat => prop_assert!(!model, "solver says unsat but a model exists"),
            SatResult::Sat => prop_assert!(model, "solver says sat but no small model exists"),
            SatResult::Unknown => {}
        }
    }
}
