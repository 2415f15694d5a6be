use super::ast::*;
use super::lexer::{Tok, Token};
use super::ParseError;

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

const ELEMENTARY_NUMERIC_BITS: std::ops::RangeInclusive<u32> = 8..=256;

fn is_uint_name(s: &str) -> bool {
    if s == "uint" {
        return true;
    }
    s.strip_prefix("uint")
        .and_then(|b| b.parse::<u32>().ok())
        .is_some_and(|b| b % 8 == 0 && ELEMENTARY_NUMERIC_BITS.contains(&b))
}

fn is_int_name(s: &str) -> bool {
    s == "int"
        || s.strip_prefix("int")
            .and_then(|b| b.parse::<u32>().ok())
            .is_some()
}

fn canonical_hex(digits: &str) -> String {
    let trimmed = digits.trim_start_matches('0');
    if trimmed.is_empty() {
        "0x0".to_string()
    } else {
        format!("0x{trimmed}")
    }
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Hex(h) => format!("hex literal `0x{h}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        ParseError::syntax(
            self.span(),
            format!("expected {what}, found {}", Self::describe(self.peek())),
        )
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{p}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.expected("identifier")),
        }
    }

    pub fn parse_source(&mut self) -> Result<ContractAST, ParseError> {
        while self.is_kw("pragma") {
            while !self.is_punct(";") {
                if matches!(self.peek(), Tok::Eof) {
                    return Err(self.expected("`;`"));
                }
                self.advance();
            }
            self.advance();
        }
        for kw in ["interface", "library", "abstract", "import"] {
            if self.is_kw(kw) {
                return Err(ParseError::unsupported(
                    self.span(),
                    format!("`{kw}` declarations"),
                ));
            }
        }
        if !self.eat_kw("contract") {
            return Err(self.expected("`contract`"));
        }
        let contract = self.parse_contract()?;
        if !matches!(self.peek(), Tok::Eof) {
            if self.is_kw("contract") {
                return Err(ParseError::unsupported(
                    self.span(),
                    "multiple contracts per file",
                ));
            }
            return Err(self.expected("end of input"));
        }
        Ok(contract)
    }

    fn parse_contract(&mut self) -> Result<ContractAST, ParseError> {
        let name = self.expect_ident()?;
        if self.is_kw("is") {
            return Err(ParseError::unsupported(self.span(), "inheritance (`is`)"));
        }
        self.expect_punct("{")?;
        let mut ast = ContractAST {
            name,
            state_vars: vec![],
            functions: vec![],
            modifiers: vec![],
            constructor: None,
        };
        while !self.eat_punct("}") {
            let span = self.span();
            match self.peek().clone() {
                Tok::Ident(kw) => match kw.as_str() {
                    "function" => {
                        self.advance();
                        let f = self.parse_function(span, None)?;
                        ast.functions.push(f);
                    }
                    "constructor" => {
                        self.advance();
                        if ast.constructor.is_some() {
                            return Err(ParseError::syntax(span, "duplicate constructor"));
                        }
                        let f = self.parse_function(span, Some("constructor"))?;
                        ast.constructor = Some(f);
                    }
                    "modifier" => {
                        self.advance();
                        ast.modifiers.push(self.parse_modifier(span)?);
                    }
                    "event" | "emit" => return Err(ParseError::unsupported(span, "events")),
                    "struct" => return Err(ParseError::unsupported(span, "structs")),
                    "enum" => return Err(ParseError::unsupported(span, "enums")),
                    "using" => return Err(ParseError::unsupported(span, "`using` directives")),
                    "fallback" | "receive" => {
                        return Err(ParseError::unsupported(span, "fallback/receive functions"))
                    }
                    _ => ast.state_vars.push(self.parse_state_var()?),
                },
                Tok::Eof => return Err(self.expected("`}`")),
                _ => return Err(self.expected("contract member")),
            }
        }
        Ok(ast)
    }

    fn parse_type(&mut self) -> Result<Type, ParseError> {
        let span = self.span();
        let name = self.expect_ident()?;
        match name.as_str() {
            n if is_uint_name(n) => Ok(Type::Numeric),
            n if is_int_name(n) => Err(ParseError::unsupported(span, "signed integer types")),
            "address" => {
                self.eat_kw("payable");
                Ok(Type::Address)
            }
            "bool" => Ok(Type::Boolean),
            "mapping" => {
                self.expect_punct("(")?;
                let kspan = self.span();
                let key = self.parse_type()?;
                if key != Type::Address {
                    return Err(ParseError::unsupported(
                        kspan,
                        "mapping keys other than `address`",
                    ));
                }
                self.expect_punct("=>")?;
                let vspan = self.span();
                let val = self.parse_type()?;
                if val.is_mapping() {
                    return Err(ParseError::unsupported(vspan, "nested mappings"));
                }
                self.expect_punct(")")?;
                Ok(Type::Mapping(Box::new(val)))
            }
            "string" | "bytes" => Err(ParseError::unsupported(span, format!("`{name}` type"))),
            n if n.starts_with("bytes") => {
                Err(ParseError::unsupported(span, format!("`{name}` type")))
            }
            _ => Err(ParseError::syntax(span, format!("unknown type `{name}`"))),
        }
    }

    fn starts_type(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                is_uint_name(s)
                    || is_int_name(s)
                    || matches!(
                        s.as_str(),
                        "address" | "bool" | "mapping" | "string" | "bytes"
                    )
                    || (s.starts_with("bytes") && s[5..].parse::<u32>().is_ok())
            }
            _ => false,
        }
    }

    fn parse_state_var(&mut self) -> Result<StateVarDecl, ParseError> {
        let span = self.span();
        if !self.starts_type() {
            return Err(self.expected("contract member"));
        }
        let ty = self.parse_type()?;
        loop {
            if self.eat_kw("public") || self.eat_kw("private") || self.eat_kw("internal") {
                continue;
            }
            if self.is_kw("constant") || self.is_kw("immutable") {
                self.advance();
                continue;
            }
            break;
        }
        let name = self.expect_ident()?;
        let initializer = if self.eat_punct("=") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        self.expect_punct(";")?;
        Ok(StateVarDecl {
            name,
            ty,
            initializer,
            span,
        })
    }

    fn parse_params(&mut self) -> Result<Vec<Param>, ParseError> {
        self.expect_punct("(")?;
        let mut params = vec![];
        if self.eat_punct(")") {
            return Ok(params);
        }
        loop {
            let span = self.span();
            let ty = self.parse_type()?;
            if ty.is_mapping() {
                return Err(ParseError::unsupported(span, "mapping-typed parameters"));
            }
            if self.is_kw("memory") || self.is_kw("calldata") || self.is_kw("storage") {
                return Err(ParseError::unsupported(
                    self.span(),
                    "data-location specifiers",
                ));
            }
            let name = self.expect_ident()?;
            params.push(Param { name, ty });
            if self.eat_punct(")") {
                break;
            }
            self.expect_punct(",")?;
        }
        Ok(params)
    }

    fn parse_modifier(&mut self, span: Span) -> Result<ModifierDecl, ParseError> {
        let name = self.expect_ident()?;
        if self.is_punct("(") {
            let pspan = self.span();
            let params = self.parse_params()?;
            if !params.is_empty() {
                return Err(ParseError::unsupported(pspan, "modifier parameters"));
            }
        }
        let body = self.parse_block()?;
        Ok(ModifierDecl { name, body, span })
    }

    fn parse_function(
        &mut self,
        span: Span,
        fixed_name: Option<&str>,
    ) -> Result<FunctionDecl, ParseError> {
        let name = match fixed_name {
            Some(n) => n.to_string(),
            None => self.expect_ident()?,
        };
        let params = self.parse_params()?;
        let mut visibility = None;
        let (mut is_view, mut is_payable) = (false, false);
        let mut modifiers = vec![];
        let mut returns = None;
        loop {
            let aspan = self.span();
            match self.peek().clone() {
                Tok::Ident(s) => match s.as_str() {
                    "public" => visibility = Some(Visibility::Public),
                    "external" => visibility = Some(Visibility::External),
                    "internal" => visibility = Some(Visibility::Internal),
                    "private" => visibility = Some(Visibility::Private),
                    "view" | "pure" => is_view = true,
                    "payable" => is_payable = true,
                    "virtual" | "override" => {
                        return Err(ParseError::unsupported(
                            aspan,
                            "inheritance (`virtual`/`override`)",
                        ))
                    }
                    "returns" => {
                        self.advance();
                        self.expect_punct("(")?;
                        let ty = self.parse_type()?;
                        if let Tok::Ident(_) = self.peek() {
                            self.advance();
                        }
                        if self.is_punct(",") {
                            return Err(ParseError::unsupported(
                                self.span(),
                                "multiple return values",
                            ));
                        }
                        self.expect_punct(")")?;
                        returns = Some(ty);
                        continue;
                    }
                    _ => {
                        self.advance();
                        if self.is_punct("(") {
                            self.advance();
                            if !self.eat_punct(")") {
                                return Err(ParseError::unsupported(aspan, "modifier arguments"));
                            }
                        }
                        modifiers.push(s);
                        continue;
                    }
                },
                _ => break,
            }
            self.advance();
        }
        if self.is_punct(";") {
            return Err(ParseError::unsupported(
                self.span(),
                "functions without a body",
            ));
        }
        let body = self.parse_block()?;
        let visibility = visibility.unwrap_or(Visibility::Public);
        Ok(FunctionDecl {
            name,
            params,
            modifiers,
            body,
            visibility,
            is_view,
            is_payable,
            returns,
            span,
        })
    }

    fn parse_block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect_punct("{")?;
        let mut body = vec![];
        while !self.eat_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(self.expected("`}`"));
            }
            body.push(self.parse_stmt()?);
        }
        Ok(body)
    }

    fn parse_branch(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if self.is_punct("{") {
            self.parse_block()
        } else {
            Ok(vec![self.parse_stmt()?])
        }
    }

    fn stmt(span: Span, kind: StmtKind) -> Stmt {
        Stmt {
            index: 0,
            kind,
            span,
        }
    }

    fn parse_stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        if self.is_punct("{") {
            return Err(ParseError::unsupported(span, "nested blocks"));
        }
        if let Tok::Ident(kw) = self.peek().clone() {
            match kw.as_str() {
                "if" => {
                    self.advance();
                    self.expect_punct("(")?;
                    let cond = self.parse_expr()?;
                    self.expect_punct(")")?;
                    let then_body = self.parse_branch()?;
                    let else_body = if self.eat_kw("else") {
                        self.parse_branch()?
                    } else {
                        vec![]
                    };
                    return Ok(Self::stmt(
                        span,
                        StmtKind::If {
                            cond,
                            then_body,
                            else_body,
                        },
                    ));
                }
                "require" => {
                    self.advance();
                    self.expect_punct("(")?;
                    let cond = self.parse_expr()?;
                    let message = if self.eat_punct(",") {
                        match self.advance().tok {
                            Tok::Str(s) => Some(s),
                            _ => {
                                return Err(ParseError::syntax(
                                    span,
                                    "expected string message in `require`",
                                ))
                            }
                        }
                    } else {
                        None
                    };
                    self.expect_punct(")")?;
                    self.expect_punct(";")?;
                    return Ok(Self::stmt(span, StmtKind::Require { cond, message }));
                }
                "revert" => {
                    self.advance();
                    self.expect_punct("(")?;
                    if let Tok::Str(_) = self.peek() {
                        self.advance();
                    }
                    self.expect_punct(")")?;
                    self.expect_punct(";")?;
                    return Ok(Self::stmt(span, StmtKind::Revert));
                }
                "selfdestruct" => {
                    self.advance();
                    self.expect_punct("(")?;
                    let e = self.parse_expr()?;
                    self.expect_punct(")")?;
                    self.expect_punct(";")?;
                    return Ok(Self::stmt(span, StmtKind::SelfDestruct(e)));
                }
                "return" => {
                    self.advance();
                    let e = if self.is_punct(";") {
                        None
                    } else {
                        Some(self.parse_expr()?)
                    };
                    self.expect_punct(";")?;
                    return Ok(Self::stmt(span, StmtKind::Return(e)));
                }
                "_" => {
                    self.advance();
                    self.expect_punct(";")?;
                    return Ok(Self::stmt(span, StmtKind::Placeholder));
                }
                "for" | "while" | "do" => return Err(ParseError::unsupported(span, "loops")),
                "emit" => return Err(ParseError::unsupported(span, "events")),
                "assembly" => return Err(ParseError::unsupported(span, "inline assembly")),
                "delete" => return Err(ParseError::unsupported(span, "`delete`")),
                "unchecked" => return Err(ParseError::unsupported(span, "`unchecked` blocks")),
                "try" => return Err(ParseError::unsupported(span, "external calls")),
                _ => {}
            }
        }
        if self.starts_type() && matches!(self.peek_at(1), Tok::Ident(_)) || self.is_kw("mapping") {
            let ty = self.parse_type()?;
            if ty.is_mapping() {
                return Err(ParseError::unsupported(span, "local mappings"));
            }
            if self.is_kw("memory") || self.is_kw("storage") {
                return Err(ParseError::unsupported(
                    self.span(),
                    "data-location specifiers",
                ));
            }
            let name = self.expect_ident()?;
            let init = if self.eat_punct("=") {
                Some(self.parse_expr()?)
            } else {
                None
            };
            self.expect_punct(";")?;
            return Ok(Self::stmt(span, StmtKind::Local { name, ty, init }));
        }
        let name = match self.peek().clone() {
            Tok::Ident(n) => n,
            _ => return Err(self.expected("statement")),
        };
        match self.peek_at(1).clone() {
            Tok::Punct("(") => {
                self.advance();
                let args = self.parse_args()?;
                if self.is_punct(".") {
                    return Err(ParseError::unsupported(span, "external calls"));
                }
                self.expect_punct(";")?;
                Ok(Self::stmt(span, StmtKind::Call { callee: name, args }))
            }
            Tok::Punct(".") => Err(ParseError::unsupported(span, "external calls")),
            _ => {
                self.advance();
                let target = if self.eat_punct("[") {
                    let k = self.parse_expr()?;
                    self.expect_punct("]")?;
                    if self.is_punct("[") {
                        return Err(ParseError::unsupported(self.span(), "nested mappings"));
                    }
                    LValue::Index(name, k)
                } else {
                    LValue::Var(name)
                };
                let op_span = self.span();
                let op = match self.advance().tok {
                    Tok::Punct("=") => AssignOp::Set,
                    Tok::Punct("+=") => AssignOp::Add,
                    Tok::Punct("-=") => AssignOp::Sub,
                    Tok::Punct(p @ ("++" | "--" | "*=" | "/=" | "%=")) => {
                        return Err(ParseError::unsupported(op_span, format!("`{p}` operator")))
                    }
                    t => {
                        return Err(ParseError::syntax(
                            op_span,
                            format!("expected assignment operator, found {}", Self::describe(&t)),
                        ))
                    }
                };
                let value = self.parse_expr()?;
                self.expect_punct(";")?;
                Ok(Self::stmt(span, StmtKind::Assign { target, op, value }))
            }
        }
    }

    fn parse_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect_punct("(")?;
        let mut args = vec![];
        if self.eat_punct(")") {
            return Ok(args);
        }
        loop {
            args.push(self.parse_expr()?);
            if self.eat_punct(")") {
                return Ok(args);
            }
            self.expect_punct(",")?;
        }
    }

    pub fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        self.parse_binary(1)
    }

    fn binop(&self) -> Result<Option<BinOp>, ParseError> {
        let op = match self.peek() {
            Tok::Punct(p) => match *p {
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                "*" => BinOp::Mul,
                "/" => BinOp::Div,
                "==" => BinOp::Eq,
                "!=" => BinOp::Ne,
                "<" => BinOp::Lt,
                "<=" => BinOp::Le,
                ">" => BinOp::Gt,
                ">=" => BinOp::Ge,
                "&&" => BinOp::And,
                "||" => BinOp::Or,
                "%" | "&" | "|" | "^" | "<<" | ">>" | "**" => {
                    return Err(ParseError::unsupported(
                        self.span(),
                        format!("`{p}` operator"),
                    ))
                }
                "?" => {
                    return Err(ParseError::unsupported(
                        self.span(),
                        "conditional expressions",
                    ))
                }
                _ => return Ok(None),
            },
            _ => return Ok(None),
        };
        Ok(Some(op))
    }

    fn parse_binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = self.binop()? {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            // Comparisons do not chain.
            let rhs = self.parse_binary(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        if self.eat_punct("!") {
            return Ok(Expr::Not(Box::new(self.parse_unary()?)));
        }
        if self.is_punct("-") || self.is_punct("~") {
            return Err(ParseError::unsupported(span, "unary arithmetic operators"));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.advance().tok {
            Tok::Number(n) => {
                const UNITS: [&str; 10] = [
                    "wei", "gwei", "szabo", "finney", "ether", "seconds", "minutes", "hours",
                    "days", "weeks",
                ];
                if matches!(self.peek(), Tok::Ident(u) if UNITS.contains(&u.as_str())) {
                    return Err(ParseError::unsupported(
                        self.span(),
                        "numeric literal suffixes, units and decimals",
                    ));
                }
                Ok(Expr::Number(n))
            }
            Tok::Hex(h) => Ok(Expr::Address(canonical_hex(&h))),
            Tok::Str(_) => Err(ParseError::unsupported(span, "string values")),
            Tok::Punct("(") => {
                let e = self.parse_expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "true" => Ok(Expr::Bool(true)),
                "false" => Ok(Expr::Bool(false)),
                "msg" | "block" | "tx" => {
                    self.expect_punct(".")?;
                    let fspan = self.span();
                    let field = self.expect_ident()?;
                    match (name.as_str(), field.as_str()) {
                        ("msg", "sender") => Ok(Expr::MsgSender),
                        ("msg", "value") => Ok(Expr::MsgValue),
                        ("block", "number") => Ok(Expr::BlockNumber),
                        _ => Err(ParseError::unsupported(
                            fspan,
                            format!("builtin `{name}.{field}`"),
                        )),
                    }
                }
                "address" => {
                    self.expect_punct("(")?;
                    let aspan = self.span();
                    let e = match self.advance().tok {
                        Tok::Number(0) => Expr::Address("0x0".into()),
                        Tok::Hex(h) => Expr::Address(canonical_hex(&h)),
                        Tok::Ident(t) if t == "this" => {
                            return Err(ParseError::unsupported(aspan, "`address(this)`"))
                        }
                        _ => {
                            return Err(ParseError::unsupported(
                                aspan,
                                "address conversions of non-literals",
                            ))
                        }
                    };
                    self.expect_punct(")")?;
                    Ok(e)
                }
                "payable" => {
                    self.expect_punct("(")?;
                    let e = self.parse_expr()?;
                    self.expect_punct(")")?;
                    if self.is_punct(".") {
                        return Err(ParseError::unsupported(span, "external calls"));
                    }
                    Ok(e)
                }
                "this" | "now" => Err(ParseError::unsupported(span, format!("`{name}`"))),
                _ => {
                    if self.eat_punct("[") {
                        let k = self.parse_expr()?;
                        self.expect_punct("]")?;
                        if self.is_punct("[") {
                            return Err(ParseError::unsupported(self.span(), "nested mappings"));
                        }
                        Ok(Expr::Index(name, Box::new(k)))
                    } else if self.is_punct("(") {
                        Err(ParseError::unsupported(
                            span,
                            "function calls in expressions",
                        ))
                    } else if self.is_punct(".") {
                        Err(ParseError::unsupported(
                            span,
                            "member access and external calls",
                        ))
                    } else {
                        Ok(Expr::Ident(name))
                    }
                }
            },
            t => Err(ParseError::syntax(
                span,
                format!("expected expression, found {}", Self::describe(&t)),
            )),
        }
    }
}
