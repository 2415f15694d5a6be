mod common;

use janus_core::frontend::printer::{expr_to_string, print_contract};
use janus_core::frontend::*;
use proptest::prelude::*;

use common::*;

fn structure(ast: &ContractAST) -> serde_json::Value {
    serde_json::to_value(ast).unwrap()
}

#[test]
fn example_contract_shape() {
    let ast = parse(EXAMPLE).unwrap();
    assert_eq!(ast.name, "Example");
    let vars: Vec<(&str, &Type)> = ast
        .state_vars
        .iter()
        .map(|v| (v.name.as_str(), &v.ty))
        .collect();
    assert_eq!(
        vars,
        vec![
            ("owner", &Type::Address),
            ("balances", &Type::Mapping(Box::new(Type::Numeric)))
        ]
    );
    let funcs: Vec<&str> = ast.functions.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(funcs, vec!["owner_transfer", "transfer"]);
    assert_eq!(ast.modifiers.len(), 1);
    assert_eq!(ast.modifiers[0].name, "onlyOwner");
    assert!(ast.constructor.is_some());
    assert_eq!(
        ast.function("owner_transfer").unwrap().modifiers,
        vec!["onlyOwner".to_string()]
    );
}

#[test]
fn empty_contract() {
    let ast = parse("contract E {}").unwrap();
    assert_eq!(ast.name, "E");
    assert!(ast.state_vars.is_empty() && ast.functions.is_empty() && ast.modifiers.is_empty());
    assert!(ast.constructor.is_none());
}

#[test]
fn missing_semicolon_is_located() {
    // Line 3 of EXAMPLE is `address owner;`.
    let src = EXAMPLE.replacen("address owner;", "address owner", 1);
    let e = parse(&src).unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::Syntax);
    assert!(e.span.line == 3 || e.span.line == 4, "{e}");
    assert!(e.to_string().starts_with(&format!("{}:", e.span.line)));
}

#[test]
fn corpus_parses() {
    for name in corpus_names() {
        let ast = corpus(&name);
        assert!(!ast.functions.is_empty(), "{name}");
    }
    for name in ["pied_fp", "pied_fn", "tokeer_fn", "safe_token"] {
        regression(name);
    }
}

#[test]
fn print_round_trip_on_corpus() {
    let mut paths: Vec<_> = corpus_names().iter().map(|n| corpus_path(n)).collect();
    paths.extend(["pied_fp", "pied_fn", "tokeer_fn", "safe_token"].map(regression_path));
    for p in paths {
        let a = load(&p);
        let printed = print_contract(&a);
        let b = parse(&printed)
            .unwrap_or_else(|e| panic!("{}: reparse failed: {e}\n{printed}", p.display()));
        assert_eq!(structure(&a), structure(&b), "{}", p.display());
        assert_eq!(printed, print_contract(&b));
    }
}

#[test]
fn whitelist_locked_initialized() {
    let ast = corpus("whitelist");
    assert!(ast
        .state_var("locked")
        .is_some_and(|v| v.ty == Type::Boolean));
    assert!(ast
        .state_var("whitelist")
        .is_some_and(|v| v.ty == Type::Mapping(Box::new(Type::Boolean))));
}

fn wrap_fn(body: &str) -> String {
    format!("contract C {{ uint a; function f() public {{ {body} }} }}")
}

#[test]
fn unsupported_constructs_are_rejected() {
    let cases = [
        wrap_fn("for (uint i = 0; i < 2; i++) { a += 1; }"),
        wrap_fn("while (a < 2) { a += 1; }"),
        wrap_fn("emit Transfer(a);"),
        wrap_fn("a = 1 ether;"),
        wrap_fn("a = a ** 2;"),
        wrap_fn("msg.sender.transfer(a);"),
        wrap_fn("a = b ? 1 : 2;"),
        "contract C { string name; }".to_string(),
        "contract C { int a; }".to_string(),
        "contract C { mapping(uint => uint) m; }".to_string(),
        "contract C { mapping(address => mapping(address => uint)) m; }".to_string(),
        "contract C { struct S { uint x; } }".to_string(),
        "contract C is D { }".to_string(),
        "contract C {} contract D {}".to_string(),
    ];
    for src in cases {
        let e = parse(&src).unwrap_err();
        assert!(e.is_unsupported(), "{src}: {e}");
    }
}

#[test]
fn validation_errors() {
    for src in [
        wrap_fn("b = 1;"),
        wrap_fn("a = true;"),
        "contract C { function f() public { g(); } }".to_string(),
    ] {
        let e = parse(&src).unwrap_err();
        assert!(!e.is_unsupported(), "{src}: {e}");
    }
}

fn arith() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u128..100).prop_map(Expr::Number),
        Just(Expr::Ident("a".into())),
        Just(Expr::Ident("b".into())),
        Just(Expr::BlockNumber),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        (
            prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div)
            ],
            inner.clone(),
            inner,
        )
            .prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r)))
    })
}

fn cond() -> impl Strategy<Value = Expr> {
    let cmp = (
        prop_oneof![
            Just(BinOp::Eq),
            Just(BinOp::Ne),
            Just(BinOp::Lt),
            Just(BinOp::Le),
            Just(BinOp::Gt),
            Just(BinOp::Ge)
        ],
        arith(),
        arith(),
    )
        .prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r)));
    let leaf = prop_oneof![cmp, Just(Expr::Ident("p".into())), Just(Expr::Bool(true))];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Not(Box::new(e))),
            (
                prop_oneof![Just(BinOp::And), Just(BinOp::Or)],
                inner.clone(),
                inner
            )
                .prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r))),
        ]
    })
}

proptest! {
    #[test]
    fn printed_conditions_reparse_identically(e in cond()) {
        let src = format!(
            "contract C {{ uint a; uint b; bool p; function f() public {{ require({}); }} }}",
            expr_to_string(&e)
        );
        let ast = parse(&src).unwrap();
        let StmtKind::Require { cond, .. } = &ast.functions[0].body[0].kind else { panic!("require") };
        prop_assert_eq!(cond, &e);
    }

    #[test]
    fn printing_is_idempotent(e in arith()) {
        let src = format!("contract C {{ uint a; uint b; function f() public {{ a = {}; }} }}", expr_to_string(&e));
        let ast = parse(&src).unwrap();
        let printed = print_contract(&ast);
        prop_assert_eq!(printed.clone(), print_contract(&parse(&printed).unwrap()));
    }
}
