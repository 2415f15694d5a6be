//! Pretty-printer; its output reparses to the same AST.

use std::fmt::Write;

use super::ast::*;

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &Expr, parent_prec: u8) {
    match e {
        Expr::Number(n) => write!(out, "{n}").unwrap(),
        Expr::Bool(b) => write!(out, "{b}").unwrap(),
        Expr::Address(a) if a == "0x0" => out.push_str("address(0)"),
        Expr::Address(a) => out.push_str(a),
        Expr::Ident(n) => out.push_str(n),
        Expr::MsgSender => out.push_str("msg.sender"),
        Expr::MsgValue => out.push_str("msg.value"),
        Expr::BlockNumber => out.push_str("block.number"),
        Expr::Index(n, k) => {
            write!(out, "{n}[").unwrap();
            write_expr(out, k, 0);
            out.push(']');
        }
        Expr::Not(inner) => {
            out.push('!');
            write_expr(out, inner, u8::MAX);
        }
        Expr::Binary(op, l, r) => {
            let prec = op.precedence();
            let paren = prec <= parent_prec;
            if paren {
                out.push('(');
            }
            write_expr(out, l, prec);
            write!(out, " {} ", op.symbol()).unwrap();
            write_expr(out, r, prec);
            if paren {
                out.push(')');
            }
        }
    }
}

fn write_block(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        write_stmt(out, s, depth);
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "    ".repeat(depth);
    match &s.kind {
        StmtKind::Local { name, ty, init } => {
            write!(out, "{pad}{ty} {name}").unwrap();
            if let Some(e) = init {
                write!(out, " = {}", expr_to_string(e)).unwrap();
            }
            out.push_str(";\n");
        }
        StmtKind::Assign { target, op, value } => {
            let t = match target {
                LValue::Var(n) => n.clone(),
                LValue::Index(n, k) => format!("{n}[{}]", expr_to_string(k)),
            };
            writeln!(out, "{pad}{t} {} {};", op.symbol(), expr_to_string(value)).unwrap();
        }
        StmtKind::Require { cond, message } => {
            write!(out, "{pad}require({}", expr_to_string(cond)).unwrap();
            if let Some(m) = message {
                write!(out, ", \"{m}\"").unwrap();
            }
            out.push_str(");\n");
        }
        StmtKind::If {
            cond,
            then_body,
            else_body,
        } => {
            writeln!(out, "{pad}if ({}) {{", expr_to_string(cond)).unwrap();
            write_block(out, then_body, depth + 1);
            if else_body.is_empty() {
                writeln!(out, "{pad}}}").unwrap();
            } else {
                writeln!(out, "{pad}}} else {{").unwrap();
                write_block(out, else_body, depth + 1);
                writeln!(out, "{pad}}}").unwrap();
            }
        }
        StmtKind::Revert => writeln!(out, "{pad}revert();").unwrap(),
        StmtKind::SelfDestruct(e) => {
            writeln!(out, "{pad}selfdestruct({});", expr_to_string(e)).unwrap()
        }
        StmtKind::Call { callee, args } => {
            let args: Vec<String> = args.iter().map(expr_to_string).collect();
            writeln!(out, "{pad}{callee}({});", args.join(", ")).unwrap();
        }
        StmtKind::Return(None) => writeln!(out, "{pad}return;").unwrap(),
        StmtKind::Return(Some(e)) => writeln!(out, "{pad}return {};", expr_to_string(e)).unwrap(),
        StmtKind::Placeholder => writeln!(out, "{pad}_;").unwrap(),
    }
}

fn write_function(out: &mut String, f: &FunctionDecl, is_ctor: bool) {
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| format!("{} {}", p.ty, p.name))
        .collect();
    if is_ctor {
        write!(out, "    constructor({})", params.join(", ")).unwrap();
    } else {
        let vis = match f.visibility {
            Visibility::Public => "public",
            Visibility::External => "external",
            Visibility::Internal => "internal",
            Visibility::Private => "private",
        };
        write!(out, "    function {}({}) {vis}", f.name, params.join(", ")).unwrap();
    }
    if f.is_view {
        out.push_str(" view");
    }
    if f.is_payable {
        out.push_str(" payable");
    }
    for m in &f.modifiers {
        write!(out, " {m}").unwrap();
    }
    if let Some(t) = &f.returns {
        write!(out, " returns ({t})").unwrap();
    }
    out.push_str(" {\n");
    write_block(out, &f.body, 2);
    out.push_str("    }\n");
}

pub fn print_contract(ast: &ContractAST) -> String {
    let mut out = format!("contract {} {{\n", ast.name);
    for v in &ast.state_vars {
        write!(out, "    {} {}", v.ty, v.name).unwrap();
        if let Some(e) = &v.initializer {
            write!(out, " = {}", expr_to_string(e)).unwrap();
        }
        out.push_str(";\n");
    }
    for m in &ast.modifiers {
        writeln!(out, "    modifier {} {{", m.name).unwrap();
        write_block(&mut out, &m.body, 2);
        out.push_str("    }\n");
    }
    if let Some(c) = &ast.constructor {
        write_function(&mut out, c, true);
    }
    for f in &ast.functions {
        write_function(&mut out, f, false);
    }
    out.push_str("}\n");
    out
}
