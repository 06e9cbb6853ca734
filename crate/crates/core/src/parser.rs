//! Recursive-descent parser for programs and property declarations.

use std::collections::HashMap;

use crate::ast::*;
use crate::lexer::{tokenize, Tok, Token};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{span}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        span: Span,
        expected: Vec<String>,
        found: String,
    },
    #[error("{span}: unbound interval symbol `{name}`")]
    UnboundIntervalSymbol { span: Span, name: String },
    #[error("{span}: `{construct}` is not in the supported language subset")]
    NotInSubset { span: Span, construct: String },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::UnboundIntervalSymbol { span, .. }
            | ParseError::NotInSubset { span, .. } => *span,
        }
    }
}

type PResult<T> = Result<T, ParseError>;

const KEYWORDS: &[&str] = &[
    "process",
    "component",
    "is",
    "states",
    "var",
    "init",
    "from",
    "to",
    "loop",
    "null",
    "select",
    "unless",
    "end",
    "if",
    "then",
    "else",
    "elsif",
    "on",
    "wait",
    "any",
    "port",
    "in",
    "priority",
    "par",
    "type",
    "const",
    "union",
    "bool",
    "int",
    "none",
    "true",
    "false",
    "and",
    "or",
    "not",
    "property",
    "ltl",
    "leadsto",
    "within",
    "absent",
    "after",
    "event",
    "state",
    "value",
    "start",
    "read",
    "write",
    "until",
    "release",
    "next",
    "dead",
    "inf",
];

/// Fiacre constructs recognised but outside the supported subset.
const UNSUPPORTED: &[&str] = &[
    "while", "case", "foreach", "queue", "array", "record", "function", "channel", "nat", "of",
    "out", "do",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Keywords plus words reserved for unsupported constructs.
pub fn is_reserved(s: &str) -> bool {
    is_keyword(s) || UNSUPPORTED.contains(&s)
}

/// Parses a complete program. Symbolic interval bounds must name `const`
/// declarations of the same program.
pub fn parse_program(text: &str) -> PResult<Program> {
    let mut p = Parser::new(text)?;
    let prog = p.program()?;
    let consts: HashMap<&str, i64> = prog
        .consts
        .iter()
        .map(|c| (c.name.as_str(), c.value))
        .collect();
    for (name, span) in p.symbols.drain(..) {
        if !consts.contains_key(name.as_str()) {
            return Err(ParseError::UnboundIntervalSymbol { span, name });
        }
    }
    Ok(prog)
}

/// Parses a single `property NAME is ...` declaration; `scope` binds the
/// symbolic interval bounds it may use.
pub fn parse_property(text: &str, scope: &HashMap<String, i64>) -> PResult<PropertyDecl> {
    let mut p = Parser::new(text)?;
    let decl = p.property()?;
    p.expect(Tok::Eof, "end of input")?;
    for (name, span) in p.symbols.drain(..) {
        if !scope.contains_key(&name) {
            return Err(ParseError::UnboundIntervalSymbol { span, name });
        }
    }
    Ok(decl)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Symbolic interval bounds seen, for scope checking.
    symbols: Vec<(String, Span)>,
}

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        let toks = tokenize(text).map_err(|e| ParseError::Syntax {
            span: e.span,
            expected: vec!["a token".into()],
            found: e.found,
        })?;
        Ok(Parser {
            toks,
            pos: 0,
            symbols: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError::Syntax {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.error(&[what])
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if UNSUPPORTED.contains(&s.as_str()) => Err(ParseError::NotInSubset {
                span: self.span(),
                construct: s,
            }),
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(&[what]),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => self.error(&["integer literal"]),
        }
    }

    fn not_in_subset<T>(&self) -> PResult<T> {
        Err(ParseError::NotInSubset {
            span: self.span(),
            construct: self.peek().text(),
        })
    }

    // ---- declarations -------------------------------------------------

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        loop {
            let start = self.span();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(kw) => match kw.as_str() {
                    "const" => {
                        self.bump();
                        let name = self.ident("constant name")?;
                        self.expect(Tok::Colon, "`:`")?;
                        self.expect_kw("int")?;
                        self.expect_kw("is")?;
                        let value = self.int()?;
                        prog.consts.push(ConstDecl {
                            name,
                            value,
                            span: start.to(self.prev_span()),
                        });
                    }
                    "type" => {
                        self.bump();
                        let name = self.ident("type name")?;
                        self.expect_kw("is")?;
                        let ty = self.data_type()?;
                        prog.types.push(TypeDecl {
                            name,
                            ty,
                            span: start.to(self.prev_span()),
                        });
                    }
                    "process" => prog.processes.push(self.process()?),
                    "component" => prog.components.push(self.component()?),
                    "property" => prog.properties.push(self.property()?),
                    k if UNSUPPORTED.contains(&k) => return self.not_in_subset(),
                    k if !is_keyword(k) => {
                        self.bump();
                        prog.root = Some(kw);
                        if *self.peek() != Tok::Eof {
                            return self.error(&["end of input"]);
                        }
                    }
                    _ => return self.error(&["declaration"]),
                },
                _ => return self.error(&["declaration"]),
            }
        }
        Ok(prog)
    }

    fn data_type(&mut self) -> PResult<DataType> {
        if self.eat_kw("bool") {
            return Ok(DataType::Bool);
        }
        if self.eat_kw("union") {
            let mut names = vec![self.ident("constructor name")?];
            while self.eat(&Tok::Pipe) {
                names.push(self.ident("constructor name")?);
            }
            self.expect_kw("end")?;
            return Ok(DataType::Enum(names));
        }
        if self.is_kw("int") {
            return self.not_in_subset();
        }
        if matches!(self.peek(), Tok::Int(_) | Tok::Minus) {
            let lo = self.int()?;
            self.expect(Tok::DotDot, "`..`")?;
            let hi = self.int()?;
            return Ok(DataType::Range(lo, hi));
        }
        match self.peek() {
            Tok::Ident(_) => Ok(DataType::Named(self.ident("type")?)),
            _ => self.error(&["type"]),
        }
    }

    /// `[a, b : none, c : none]`
    fn port_params(&mut self) -> PResult<Vec<String>> {
        let mut out = Vec::new();
        if self.eat(&Tok::Box) {
            return Ok(out);
        }
        self.expect(Tok::LBrack, "`[`")?;
        loop {
            out.push(self.ident("port name")?);
            if self.eat(&Tok::Colon) {
                if !self.eat_kw("none") {
                    if matches!(self.peek(), Tok::Ident(_)) {
                        return self.not_in_subset();
                    }
                    return self.error(&["port type"]);
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            } else if !self.eat(&Tok::Comma) {
                return self.error(&["`:` and a port type", "`,`"]);
            }
        }
        self.expect(Tok::RBrack, "`]`")?;
        Ok(out)
    }

    /// `(&x, &y : read write bool, &z : 0..3)`
    fn var_params(&mut self) -> PResult<Vec<VarParam>> {
        let mut out: Vec<VarParam> = Vec::new();
        self.expect(Tok::LParen, "`(`")?;
        let mut group: Vec<String> = Vec::new();
        loop {
            self.eat(&Tok::Amp);
            group.push(self.ident("variable name")?);
            if self.eat(&Tok::Colon) {
                let read = self.eat_kw("read");
                let write = self.eat_kw("write");
                let ty = self.data_type()?;
                let (read, write) = if !read && !write {
                    (true, true)
                } else {
                    (read, write)
                };
                for name in group.drain(..) {
                    out.push(VarParam {
                        name,
                        ty: ty.clone(),
                        read,
                        write,
                    });
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            } else if !self.eat(&Tok::Comma) {
                return self.error(&["`:`", "`,`"]);
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(out)
    }

    fn var_decls(&mut self) -> PResult<Vec<VarDecl>> {
        let mut out = Vec::new();
        let mut group: Vec<String> = Vec::new();
        loop {
            group.push(self.ident("variable name")?);
            if self.eat(&Tok::Colon) {
                let ty = self.data_type()?;
                let init = if self.eat(&Tok::Assign) {
                    Some(self.expr()?)
                } else {
                    None
                };
                for name in group.drain(..) {
                    out.push(VarDecl {
                        name,
                        ty: ty.clone(),
                        init: init.clone(),
                    });
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            } else if !self.eat(&Tok::Comma) {
                return self.error(&["`:`", "`,`"]);
            }
        }
        Ok(out)
    }

    fn process(&mut self) -> PResult<ProcessDecl> {
        let start = self.span();
        self.expect_kw("process")?;
        let name = self.ident("process name")?;
        let ports = if matches!(self.peek(), Tok::LBrack | Tok::Box) {
            self.port_params()?
        } else {
            vec![]
        };
        let vars = if *self.peek() == Tok::LParen {
            self.var_params()?
        } else {
            vec![]
        };
        self.expect_kw("is")?;
        self.expect_kw("states")?;
        let mut states = vec![self.ident("state name")?];
        while self.eat(&Tok::Comma) {
            states.push(self.ident("state name")?);
        }
        let locals = if self.eat_kw("var") {
            self.var_decls()?
        } else {
            vec![]
        };
        let init = if self.eat_kw("init") {
            Some(self.stmt()?)
        } else {
            None
        };
        let mut from = Vec::new();
        while self.is_kw("from") {
            let fstart = self.span();
            self.bump();
            let state = self.ident("state name")?;
            let body = self.stmt()?;
            from.push(FromBlock {
                state,
                body,
                span: fstart.to(self.prev_span()),
            });
        }
        Ok(ProcessDecl {
            name,
            ports,
            vars,
            states,
            locals,
            init,
            from,
            span: start.to(self.prev_span()),
        })
    }

    fn component(&mut self) -> PResult<ComponentDecl> {
        let start = self.span();
        self.expect_kw("component")?;
        let name = self.ident("component name")?;
        let port_params = if matches!(self.peek(), Tok::LBrack | Tok::Box) {
            self.port_params()?
        } else {
            vec![]
        };
        let var_params = if *self.peek() == Tok::LParen {
            self.var_params()?
        } else {
            vec![]
        };
        self.expect_kw("is")?;
        let mut comp = ComponentDecl {
            name,
            port_params,
            var_params,
            ports: vec![],
            vars: vec![],
            priorities: vec![],
            instances: vec![],
            span: start,
        };
        loop {
            if self.eat_kw("var") {
                comp.vars.extend(self.var_decls()?);
            } else if self.eat_kw("port") {
                self.port_decls(&mut comp.ports)?;
            } else if self.eat_kw("priority") {
                loop {
                    let mut chain = vec![self.ident("port name")?];
                    self.expect(Tok::Gt, "`>`")?;
                    chain.push(self.ident("port name")?);
                    while self.eat(&Tok::Gt) {
                        chain.push(self.ident("port name")?);
                    }
                    comp.priorities.push(chain);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            } else {
                break;
            }
        }
        self.expect_kw("par")?;
        comp.instances.push(self.instance()?);
        while self.eat(&Tok::Par) {
            comp.instances.push(self.instance()?);
        }
        self.expect_kw("end")?;
        comp.span = start.to(self.prev_span());
        Ok(comp)
    }

    fn port_decls(&mut self, out: &mut Vec<PortDecl>) -> PResult<()> {
        let mut group = Vec::new();
        loop {
            group.push(self.ident("port name")?);
            if self.eat(&Tok::Colon) {
                if !self.eat_kw("none") {
                    return self.error(&["port type"]);
                }
                let interval = if self.eat_kw("in") {
                    Some(self.interval()?)
                } else {
                    None
                };
                for name in group.drain(..) {
                    out.push(PortDecl {
                        name,
                        interval: interval.clone(),
                    });
                }
                if !self.eat(&Tok::Comma) {
                    return Ok(());
                }
            } else if !self.eat(&Tok::Comma) {
                return self.error(&["`:` and a port type", "`,`"]);
            }
        }
    }

    fn instance(&mut self) -> PResult<Instance> {
        let start = self.span();
        let first = self.ident("process or component name")?;
        let (label, target) = if self.eat(&Tok::Colon) {
            (Some(first), self.ident("process or component name")?)
        } else {
            (None, first)
        };
        let mut ports = Vec::new();
        if self.eat(&Tok::LBrack) {
            ports.push(self.ident("port name")?);
            while self.eat(&Tok::Comma) {
                ports.push(self.ident("port name")?);
            }
            self.expect(Tok::RBrack, "`]`")?;
        } else {
            self.eat(&Tok::Box);
        }
        let mut vars = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                self.eat(&Tok::Amp);
                vars.push(self.ident("variable name")?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(Instance {
            label,
            target,
            ports,
            vars,
            span: start.to(self.prev_span()),
        })
    }

    fn interval(&mut self) -> PResult<IntervalExpr> {
        let lower_strict = match self.peek() {
            Tok::LBrack => false,
            Tok::RBrack => true,
            _ => return self.error(&["`[`", "`]`"]),
        };
        self.bump();
        let lower = self.bound()?;
        if !self.eat(&Tok::Comma) && !self.eat(&Tok::Semi) {
            return self.error(&["`,`", "`;`"]);
        }
        let upper = if self.eat(&Tok::Ellipsis) || self.eat_kw("inf") {
            None
        } else {
            Some(self.bound()?)
        };
        let upper_strict = match self.peek() {
            Tok::RBrack => false,
            Tok::LBrack => true,
            _ => return self.error(&["`]`", "`[`"]),
        };
        self.bump();
        let upper_strict = upper.is_none() || upper_strict;
        Ok(IntervalExpr {
            lower,
            lower_strict,
            upper,
            upper_strict,
        })
    }

    fn bound(&mut self) -> PResult<BoundExpr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(BoundExpr::Lit(v))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                let span = self.span();
                self.bump();
                self.symbols.push((s.clone(), span));
                Ok(BoundExpr::Sym(s))
            }
            _ => self.error(&["interval bound"]),
        }
    }

    // ---- statements ---------------------------------------------------

    fn stmt(&mut self) -> PResult<Stmt> {
        let mut items = vec![self.simple_stmt()?];
        while self.eat(&Tok::Semi) {
            items.push(self.simple_stmt()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Stmt::Seq(items)
        })
    }

    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let tok = self.peek().clone();
        let Tok::Ident(word) = tok else {
            return self.error(&["statement"]);
        };
        match word.as_str() {
            "null" => {
                self.bump();
                Ok(Stmt::Null)
            }
            "loop" => {
                self.bump();
                Ok(Stmt::Loop)
            }
            "to" => {
                self.bump();
                Ok(Stmt::To(self.ident("state name")?))
            }
            "wait" => {
                self.bump();
                Ok(Stmt::Wait(self.interval()?))
            }
            "on" => {
                self.bump();
                Ok(Stmt::On(self.expr()?))
            }
            "if" => {
                self.bump();
                self.if_rest()
            }
            "select" => {
                self.bump();
                let mut branches = vec![self.stmt()?];
                while self.eat(&Tok::Box) {
                    branches.push(self.stmt()?);
                }
                let mut unless = Vec::new();
                if self.eat_kw("unless") {
                    unless.push(self.stmt()?);
                    while self.eat(&Tok::Box) {
                        unless.push(self.stmt()?);
                    }
                }
                self.expect_kw("end")?;
                Ok(Stmt::Select { branches, unless })
            }
            w if UNSUPPORTED.contains(&w) => self.not_in_subset(),
            w if is_keyword(w) => self.error(&["statement"]),
            _ => {
                let name = self.ident("statement")?;
                if self.eat(&Tok::Assign) {
                    if self.eat_kw("any") {
                        Ok(Stmt::Any(name))
                    } else {
                        Ok(Stmt::Assign(name, self.expr()?))
                    }
                } else {
                    Ok(Stmt::Sync(name))
                }
            }
        }
    }

    fn if_rest(&mut self) -> PResult<Stmt> {
        let cond = self.expr()?;
        self.expect_kw("then")?;
        let then = self.stmt()?;
        let otherwise = if self.eat_kw("elsif") {
            return Ok(Stmt::If(cond, Box::new(then), Box::new(self.if_rest()?)));
        } else if self.eat_kw("else") {
            self.stmt()?
        } else {
            Stmt::Null
        };
        self.expect_kw("end")?;
        Ok(Stmt::If(cond, Box::new(then), Box::new(otherwise)))
    }

    // ---- expressions --------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            lhs = Expr::bin(BinOp::Or, lhs, self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("and") {
            lhs = Expr::bin(BinOp::And, lhs, self.not_expr()?);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::not(self.not_expr()?));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Diamond => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        Ok(Expr::bin(op, lhs, self.add_expr()?))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::bin(op, lhs, self.unary_expr()?);
        }
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary_expr()?)));
        }
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(_) => Ok(Expr::Ident(self.ident("expression")?)),
            _ => self.error(&["expression"]),
        }
    }

    // ---- properties ---------------------------------------------------

    fn property(&mut self) -> PResult<PropertyDecl> {
        let start = self.span();
        self.expect_kw("property")?;
        let name = self.ident("property name")?;
        self.expect_kw("is")?;
        let body = self.property_body()?;
        Ok(PropertyDecl {
            name,
            body,
            span: start.to(self.prev_span()),
        })
    }

    fn property_body(&mut self) -> PResult<PropertyBody> {
        if self.eat_kw("ltl") {
            return Ok(Pattern::Ltl(self.formula()?));
        }
        self.pattern()
    }

    fn pattern(&mut self) -> PResult<PropertyBody> {
        if self.eat_kw("absent") {
            let forbidden = self.operand()?;
            if self.eat_kw("after") {
                let trigger = self.operand()?;
                self.expect_kw("within")?;
                let within = self.interval()?;
                return Ok(Pattern::AbsentAfter {
                    forbidden,
                    trigger,
                    within,
                });
            }
            return Ok(Pattern::Absent(forbidden));
        }
        if self.eat_kw("NoGlobalDeadlock") {
            return Ok(Pattern::NoGlobalDeadlock);
        }
        if self.eat_kw("Unreachable") {
            return Ok(Pattern::Unreachable(self.operand()?));
        }
        if self.eat_kw("Resettable") {
            return Ok(Pattern::Resettable(self.operand()?));
        }
        let save = (self.pos, self.symbols.len());
        let first = self.leadsto();
        match first {
            Ok(p) => Ok(p),
            Err(e1) if *self.peek_at_pos(save.0) == Tok::LParen => {
                let far1 = self.pos;
                self.pos = save.0 + 1;
                self.symbols.truncate(save.1);
                match self
                    .pattern()
                    .and_then(|p| self.expect(Tok::RParen, "`)`").map(|_| p))
                {
                    Ok(p) => Ok(p),
                    Err(e2) => {
                        // report whichever attempt got further
                        if self.pos >= far1 {
                            Err(e2)
                        } else {
                            Err(e1)
                        }
                    }
                }
            }
            Err(e) => Err(e),
        }
    }

    fn peek_at_pos(&self, pos: usize) -> &Tok {
        &self.toks[pos].tok
    }

    fn leadsto(&mut self) -> PResult<PropertyBody> {
        let trigger = self.operand()?;
        self.expect_kw("leadsto")?;
        let response = self.operand()?;
        self.expect_kw("within")?;
        let within = self.interval()?;
        Ok(Pattern::LeadsTo {
            trigger,
            response,
            within,
        })
    }

    /// A propositional combination of observables.
    fn operand(&mut self) -> PResult<Formula<Observable>> {
        let start = self.span();
        let f = self.or_formula()?;
        if !f.is_propositional() {
            return Err(ParseError::NotInSubset {
                span: start,
                construct: "temporal operator inside a pattern operand".into(),
            });
        }
        Ok(f)
    }

    fn formula(&mut self) -> PResult<Formula<Observable>> {
        let lhs = self.or_formula()?;
        if self.eat(&Tok::Arrow) {
            return Ok(Formula::implies(lhs, self.formula()?));
        }
        Ok(lhs)
    }

    fn or_formula(&mut self) -> PResult<Formula<Observable>> {
        let mut lhs = self.and_formula()?;
        while self.eat_kw("or") {
            lhs = Formula::or(lhs, self.and_formula()?);
        }
        Ok(lhs)
    }

    fn and_formula(&mut self) -> PResult<Formula<Observable>> {
        let mut lhs = self.until_formula()?;
        while self.eat_kw("and") {
            lhs = Formula::and(lhs, self.until_formula()?);
        }
        Ok(lhs)
    }

    fn until_formula(&mut self) -> PResult<Formula<Observable>> {
        let lhs = self.unary_formula()?;
        if self.eat_kw("until") {
            return Ok(Formula::until(lhs, self.until_formula()?));
        }
        if self.eat_kw("release") {
            return Ok(Formula::Release(
                Box::new(lhs),
                Box::new(self.until_formula()?),
            ));
        }
        Ok(lhs)
    }

    fn unary_formula(&mut self) -> PResult<Formula<Observable>> {
        if self.eat_kw("not") || self.eat(&Tok::Minus) {
            return Ok(Formula::not(self.unary_formula()?));
        }
        if self.eat(&Tok::Box) {
            return Ok(Formula::always(self.unary_formula()?));
        }
        if self.eat(&Tok::Diamond) {
            return Ok(Formula::eventually(self.unary_formula()?));
        }
        if self.eat_kw("next") {
            return Ok(Formula::Next(Box::new(self.unary_formula()?)));
        }
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(s) if s == "dead" => {
                self.bump();
                Ok(Formula::Dead)
            }
            Tok::Ident(_) => Ok(Formula::Atom(self.observable()?)),
            _ => self.error(&["formula"]),
        }
    }

    fn observable(&mut self) -> PResult<Observable> {
        let mut segs = vec![PathSeg::Name(self.ident("instance path")?)];
        loop {
            self.expect(Tok::Slash, "`/`")?;
            match self.peek().clone() {
                Tok::Int(v) if v >= 1 && v <= u32::MAX as i64 => {
                    self.bump();
                    segs.push(PathSeg::Index(v as u32));
                }
                Tok::Ident(k) if k == "event" => {
                    self.bump();
                    let port = self.ident("port name")?;
                    return Ok(Observable::Event {
                        path: InstancePath(segs),
                        port,
                    });
                }
                Tok::Ident(k) if k == "state" => {
                    self.bump();
                    let state = self.ident("state name")?;
                    return Ok(Observable::State {
                        path: InstancePath(segs),
                        state,
                    });
                }
                Tok::Ident(k) if k == "value" => {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let pred = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Observable::Value {
                        path: InstancePath(segs),
                        pred,
                    });
                }
                Tok::Ident(k) if k == "start" => {
                    self.bump();
                    return Ok(Observable::Start {
                        path: InstancePath(segs),
                    });
                }
                Tok::Ident(_) => segs.push(PathSeg::Name(self.ident("instance name")?)),
                _ => {
                    return self.error(&[
                        "instance index",
                        "`event`",
                        "`state`",
                        "`value`",
                        "`start`",
                    ])
                }
            }
        }
    }
}
