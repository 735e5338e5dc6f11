//! Recursive-descent parser for `.mbx` programs, followed by a
//! resolution pass (scoping, arity, int arguments, alpha-renaming).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use super::lexer::{tokenize, Token};
use super::{Arg, Binder, Branch, CmpOp, Cond, Definition, IntExpr, Name, Param, Process, Program, Span};
use crate::depgraph::DepGraph;
use crate::patterns::{Atom, Pattern};
use crate::types::{TyId, TypeTable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub span: Span,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxErrors(pub Vec<ParseError>);

impl fmt::Display for SyntaxErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, col)
}

/// Raw error before line information is attached.
#[derive(Debug)]
pub(crate) struct PErr(pub String, pub Span);

pub(crate) type PResult<T> = Result<T, PErr>;

pub(crate) struct Parser<'a> {
    toks: Vec<(Token, Span)>,
    pos: usize,
    pub table: &'a mut TypeTable,
}

impl<'a> Parser<'a> {
    pub fn new(src: &str, table: &'a mut TypeTable) -> Result<Self, SyntaxErrors> {
        let toks = tokenize(src).map_err(|e| {
            let (line, col) = line_col(src, e.span.start);
            SyntaxErrors(vec![ParseError { message: e.to_string(), span: e.span, line, col }])
        })?;
        Ok(Parser { toks, pos: 0, table })
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.pos].0
    }

    pub fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    pub fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].1.end
        }
    }

    pub fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, t: &Token) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Token::Ident(s) if s == kw)
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error<T>(&self, expected: &str) -> PResult<T> {
        Err(PErr(format!("expected {expected}, found {}", self.peek().describe()), self.span()))
    }

    pub fn expect(&mut self, t: &Token) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.error(&t.describe())
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    pub fn ident(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Token::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Name::from(s))
            }
            _ => self.error("an identifier"),
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Token::Eof)
    }

    // ---- types and patterns ----

    pub fn ty(&mut self) -> PResult<TyId> {
        match self.peek().clone() {
            Token::Query => {
                self.bump();
                let p = self.pattern()?;
                Ok(self.table.input(p))
            }
            Token::Bang => {
                self.bump();
                let p = self.pattern()?;
                Ok(self.table.output(p))
            }
            Token::Ident(s) if s == "int" => {
                self.bump();
                Ok(self.table.int())
            }
            Token::Ident(_) => {
                let n = self.ident()?;
                Ok(self.table.declare(&n))
            }
            _ => self.error("a type"),
        }
    }

    pub fn pattern(&mut self) -> PResult<Pattern> {
        let mut items = vec![self.pattern_prod()?];
        while self.eat(&Token::Plus) {
            items.push(self.pattern_prod()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Pattern::Sum(items) })
    }

    fn pattern_prod(&mut self) -> PResult<Pattern> {
        let mut items = vec![self.pattern_star()?];
        while self.eat(&Token::Dot) {
            items.push(self.pattern_star()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Pattern::Prod(items) })
    }

    fn pattern_star(&mut self) -> PResult<Pattern> {
        let mut p = self.pattern_factor()?;
        while self.eat(&Token::Star) {
            p = Pattern::Star(Box::new(p));
        }
        Ok(p)
    }

    fn pattern_factor(&mut self) -> PResult<Pattern> {
        match self.peek().clone() {
            Token::Int(0) => {
                self.bump();
                Ok(Pattern::Zero)
            }
            Token::Int(1) => {
                self.bump();
                Ok(Pattern::One)
            }
            Token::LParen => {
                self.bump();
                let p = self.pattern()?;
                self.expect(&Token::RParen)?;
                Ok(p)
            }
            Token::Ident(_) => {
                let tag = self.ident()?;
                let mut args = Vec::new();
                if self.eat(&Token::LParen) {
                    if !self.eat(&Token::RParen) {
                        loop {
                            args.push(self.ty()?);
                            if self.eat(&Token::RParen) {
                                break;
                            }
                            self.expect(&Token::Comma)?;
                        }
                    }
                }
                Ok(Pattern::Atom(Atom::new(tag, args)))
            }
            _ => self.error("a pattern"),
        }
    }

    // ---- dependency graphs ----

    fn graph(&mut self) -> PResult<DepGraph> {
        self.expect(&Token::LBrace)?;
        let mut g = DepGraph::Empty;
        if self.eat(&Token::RBrace) {
            return Ok(g);
        }
        loop {
            g = DepGraph::union(g, self.graph_item()?);
            if self.eat(&Token::RBrace) {
                return Ok(g);
            }
            self.expect(&Token::Comma)?;
        }
    }

    fn graph_item(&mut self) -> PResult<DepGraph> {
        let start = self.span().start;
        if self.eat_kw("new") {
            let a = self.ident()?;
            self.expect(&Token::Dot)?;
            let body = if matches!(self.peek(), Token::LBrace) { self.graph()? } else { self.graph_item()? };
            return Ok(DepGraph::Restrict(a, Box::new(body)));
        }
        let u = self.ident()?;
        self.expect(&Token::Minus)?;
        let v = self.ident()?;
        Ok(DepGraph::Edge(u, v, Span::new(start, self.prev_end())))
    }

    // ---- processes ----

    pub fn process(&mut self) -> PResult<Process> {
        let mut items = vec![self.sum()?];
        while self.eat(&Token::Bar) {
            items.push(self.sum()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Process::Par(items) })
    }

    fn sum(&mut self) -> PResult<Process> {
        let start = self.span().start;
        let first = self.prefix()?;
        if !matches!(self.peek(), Token::Plus) {
            return Ok(first);
        }
        let mut branches = Vec::new();
        let push = |p: Process, span: Span, branches: &mut Vec<Branch>| -> PResult<()> {
            match p {
                Process::Guard { branches: bs, .. } => {
                    branches.extend(bs);
                    Ok(())
                }
                _ => Err(PErr("only receive, free and fail actions can be combined with `+`".into(), span)),
            }
        };
        push(first, Span::new(start, self.prev_end()), &mut branches)?;
        while self.eat(&Token::Plus) {
            let s = self.span().start;
            let p = self.prefix()?;
            push(p, Span::new(s, self.prev_end()), &mut branches)?;
        }
        Ok(Process::Guard { branches, span: Span::new(start, self.prev_end()) })
    }

    fn args(&mut self) -> PResult<Vec<Arg>> {
        self.expect(&Token::LParen)?;
        let mut args = Vec::new();
        if self.eat(&Token::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.arg()?);
            if self.eat(&Token::RParen) {
                return Ok(args);
            }
            self.expect(&Token::Comma)?;
        }
    }

    fn arg(&mut self) -> PResult<Arg> {
        let e = self.int_expr()?;
        Ok(match e {
            IntExpr::Var(x) => Arg::Name(x),
            e => Arg::Int(e),
        })
    }

    fn int_expr(&mut self) -> PResult<IntExpr> {
        let mut e = self.int_atom()?;
        loop {
            if self.eat(&Token::Plus) {
                e = IntExpr::Add(Box::new(e), Box::new(self.int_atom()?));
            } else if self.eat(&Token::Minus) {
                e = IntExpr::Sub(Box::new(e), Box::new(self.int_atom()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn int_atom(&mut self) -> PResult<IntExpr> {
        match self.peek().clone() {
            Token::Int(n) => {
                self.bump();
                Ok(IntExpr::Lit(n))
            }
            Token::Minus => {
                self.bump();
                match self.bump() {
                    Token::Int(n) => Ok(IntExpr::Lit(-n)),
                    _ => Err(PErr("expected an integer after `-`".into(), self.span())),
                }
            }
            Token::LParen => {
                self.bump();
                let e = self.int_expr()?;
                self.expect(&Token::RParen)?;
                Ok(e)
            }
            Token::Ident(_) => Ok(IntExpr::Var(self.ident()?)),
            _ => self.error("a name or an integer expression"),
        }
    }

    fn cond(&mut self) -> PResult<Cond> {
        let lhs = self.int_expr()?;
        let op = match self.bump() {
            Token::EqEq => CmpOp::Eq,
            Token::Ne => CmpOp::Ne,
            Token::Lt => CmpOp::Lt,
            Token::Le => CmpOp::Le,
            Token::Gt => CmpOp::Gt,
            Token::Ge => CmpOp::Ge,
            _ => return Err(PErr("expected a comparison operator".into(), self.toks[self.pos - 1].1)),
        };
        let rhs = self.int_expr()?;
        Ok(Cond { op, lhs, rhs })
    }

    fn binders(&mut self) -> PResult<Vec<Binder>> {
        self.expect(&Token::LParen)?;
        let mut out = Vec::new();
        if self.eat(&Token::RParen) {
            return Ok(out);
        }
        loop {
            let name = self.ident()?;
            self.expect(&Token::Colon)?;
            let ty = self.ty()?;
            out.push(Binder { name, ty });
            if self.eat(&Token::RParen) {
                return Ok(out);
            }
            self.expect(&Token::Comma)?;
        }
    }

    fn prefix(&mut self) -> PResult<Process> {
        let start = self.span().start;
        let sp = |p: &Parser| Span::new(start, p.prev_end());
        if self.eat_kw("done") {
            return Ok(Process::Done);
        }
        if self.eat_kw("fail") {
            let u = self.ident()?;
            let span = sp(self);
            return Ok(Process::Guard { branches: vec![Branch::Fail { mailbox: u, span }], span });
        }
        if self.eat_kw("free") {
            let u = self.ident()?;
            let head = sp(self);
            self.expect(&Token::Dot)?;
            let body = self.prefix()?;
            return Ok(Process::Guard {
                branches: vec![Branch::Free { mailbox: u, body: Box::new(body), span: head }],
                span: sp(self),
            });
        }
        if self.eat_kw("new") {
            let a = self.ident()?;
            let span = sp(self);
            self.expect_kw("in")?;
            let body = self.prefix()?;
            return Ok(Process::New { name: a, body: Box::new(body), span });
        }
        if self.eat_kw("if") {
            let cond = self.cond()?;
            let span = sp(self);
            self.expect_kw("then")?;
            let then = self.prefix()?;
            self.expect_kw("else")?;
            let els = self.prefix()?;
            return Ok(Process::If { cond, then: Box::new(then), els: Box::new(els), span });
        }
        if self.eat_kw("either") {
            self.expect(&Token::LBrace)?;
            let p = self.process()?;
            self.expect(&Token::RBrace)?;
            self.expect_kw("or")?;
            self.expect(&Token::LBrace)?;
            let q = self.process()?;
            self.expect(&Token::RBrace)?;
            return Ok(choice(p, q, sp(self)));
        }
        if self.eat(&Token::LParen) {
            let p = self.process()?;
            self.expect(&Token::RParen)?;
            return Ok(p);
        }
        let u = self.ident()?;
        match self.peek() {
            Token::Query => {
                self.bump();
                let tag = self.ident()?;
                let binders = self.binders()?;
                let head = sp(self);
                self.expect(&Token::Dot)?;
                let body = self.prefix()?;
                Ok(Process::Guard {
                    branches: vec![Branch::Receive { mailbox: u, tag, binders, body: Box::new(body), span: head }],
                    span: sp(self),
                })
            }
            Token::Bang => {
                self.bump();
                let tag = self.ident()?;
                let args = self.args()?;
                Ok(Process::Send { target: u, tag, args, span: sp(self) })
            }
            Token::LParen => {
                let args = self.args()?;
                Ok(Process::Invoke { def: u, args, span: sp(self) })
            }
            _ => self.error("`?`, `!` or `(` after a name"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "done", "fail", "free", "new", "in", "if", "then", "else", "either", "or", "def", "type", "main", "int",
];

pub(crate) const CHOICE_TAG: &str = "pick";

/// `new c in (c!pick() | c?pick().free c.P + c?pick().free c.Q)`
fn choice(p: Process, q: Process, span: Span) -> Process {
    let mut fv = p.free_names();
    fv.extend(q.free_names());
    let mut c = Name::from("choice");
    let mut k = 1;
    while fv.contains(&c) {
        c = Name::from(format!("choice_{k}"));
        k += 1;
    }
    let branch = |body: Process| Branch::Receive {
        mailbox: c.clone(),
        tag: Name::from(CHOICE_TAG),
        binders: vec![],
        body: Box::new(Process::Guard {
            branches: vec![Branch::Free { mailbox: c.clone(), body: Box::new(body), span }],
            span,
        }),
        span,
    };
    Process::New {
        name: c.clone(),
        body: Box::new(Process::Par(vec![
            Process::Send { target: c.clone(), tag: Name::from(CHOICE_TAG), args: vec![], span },
            Process::Guard { branches: vec![branch(p), branch(q)], span },
        ])),
        span,
    }
}

pub(crate) fn attach(src: &str, e: PErr) -> ParseError {
    let (line, col) = line_col(src, e.1.start);
    ParseError { message: e.0, span: e.1, line, col }
}

/// Parse and resolve a complete program.
pub fn parse(src: &str) -> Result<Program, SyntaxErrors> {
    let mut table = TypeTable::new();
    let mut raw_defs = Vec::new();
    let mut main = None;
    let mut main_span = Span::default();
    {
        let mut p = Parser::new(src, &mut table)?;
        let r: PResult<()> = (|| {
            while !p.at_eof() {
                let start = p.span().start;
                if p.eat_kw("type") {
                    let name = p.ident()?;
                    let span = Span::new(start, p.prev_end());
                    p.expect(&Token::Assign)?;
                    let t = p.ty()?;
                    p.expect(&Token::Semi)?;
                    p.table.define(&name, t).map_err(|e| PErr(e.to_string(), span))?;
                } else if p.eat_kw("def") {
                    let name = p.ident()?;
                    p.expect(&Token::LParen)?;
                    let mut params = Vec::new();
                    if !p.eat(&Token::RParen) {
                        loop {
                            let x = p.ident()?;
                            p.expect(&Token::Colon)?;
                            let ty = p.ty()?;
                            params.push(Param { name: x, ty });
                            if p.eat(&Token::RParen) {
                                break;
                            }
                            p.expect(&Token::Comma)?;
                        }
                    }
                    let span = Span::new(start, p.prev_end());
                    let graph = if p.eat(&Token::Colon) { p.graph()? } else { DepGraph::Empty };
                    p.expect(&Token::Assign)?;
                    let body = p.process()?;
                    p.expect(&Token::Semi)?;
                    raw_defs.push(Definition { name, params, graph, body, span });
                } else if p.eat_kw("main") {
                    main_span = Span::new(start, p.prev_end());
                    if main.is_some() {
                        return Err(PErr("`main` is defined more than once".into(), main_span));
                    }
                    p.expect(&Token::Assign)?;
                    main = Some(p.process()?);
                    p.expect(&Token::Semi)?;
                } else {
                    return p.error("`type`, `def` or `main`");
                }
            }
            Ok(())
        })();
        r.map_err(|e| SyntaxErrors(vec![attach(src, e)]))?;
    }
    let mut errors = Vec::new();
    if let Err(e) = table.validate() {
        errors.push(PErr(e.to_string(), Span::default()));
    }
    let mut prog = Program::new(table, Vec::new(), Process::Done);
    prog.main_span = main_span;
    let sigs: HashMap<Name, usize> = raw_defs.iter().map(|d| (d.name.clone(), d.params.len())).collect();
    let mut seen = HashSet::new();
    for d in &raw_defs {
        if !seen.insert(d.name.clone()) {
            errors.push(PErr(format!("process `{}` is defined more than once", d.name), d.span));
        }
    }
    let mut defs = Vec::new();
    for d in raw_defs {
        let mut r = Resolver::new(&prog.types, &sigs, false);
        let mut names = HashSet::new();
        for x in &d.params {
            if !names.insert(x.name.clone()) {
                errors.push(PErr(format!("parameter `{}` is declared twice", x.name), d.span));
            }
            r.bind_param(&x.name, x.ty);
        }
        for u in d.graph.free_names() {
            if !names.contains(&u) {
                errors.push(PErr(format!("dependency graph of `{}` mentions `{u}`, which is not a parameter", d.name), d.span));
            }
        }
        let body = r.process(&d.body);
        errors.extend(r.errors);
        defs.push(Definition { body, ..d });
    }
    let main = main.unwrap_or(Process::Done);
    let mut r = Resolver::new(&prog.types, &sigs, true);
    for x in main.free_names() {
        r.used.insert(x);
    }
    let main = r.process(&main);
    errors.extend(r.errors);
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.1.start);
        return Err(SyntaxErrors(errors.into_iter().map(|e| attach(src, e)).collect()));
    }
    let types = prog.types;
    let mut prog = Program::new(types, defs, main);
    prog.main_span = main_span;
    Ok(prog)
}

/// Parse a standalone process against an existing program. Free names
/// are allowed.
pub fn parse_process_in(src: &str, prog: &mut Program) -> Result<Process, SyntaxErrors> {
    let raw = {
        let mut p = Parser::new(src, &mut prog.types)?;
        let r = p.process().and_then(|x| if p.at_eof() { Ok(x) } else { p.error("end of input") });
        r.map_err(|e| SyntaxErrors(vec![attach(src, e)]))?
    };
    let sigs: HashMap<Name, usize> = prog.defs.iter().map(|d| (d.name.clone(), d.params.len())).collect();
    let mut r = Resolver::new(&prog.types, &sigs, true);
    for x in raw.free_names() {
        r.used.insert(x);
    }
    let out = r.process(&raw);
    if r.errors.is_empty() {
        Ok(out)
    } else {
        Err(SyntaxErrors(r.errors.into_iter().map(|e| attach(src, e)).collect()))
    }
}

pub fn parse_pattern(src: &str, table: &mut TypeTable) -> Result<Pattern, SyntaxErrors> {
    let mut p = Parser::new(src, table)?;
    let r = p.pattern().and_then(|x| if p.at_eof() { Ok(x) } else { p.error("end of input") });
    r.map_err(|e| SyntaxErrors(vec![attach(src, e)]))
}

pub fn parse_type(src: &str, table: &mut TypeTable) -> Result<TyId, SyntaxErrors> {
    let mut p = Parser::new(src, table)?;
    let r = p.ty().and_then(|x| if p.at_eof() { Ok(x) } else { p.error("end of input") });
    r.map_err(|e| SyntaxErrors(vec![attach(src, e)]))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Mailbox,
    Int,
}

/// Scoping pass: checks names and arities, turns int-typed names into
/// integer expressions and renames bound names apart.
struct Resolver<'a> {
    table: &'a TypeTable,
    sigs: &'a HashMap<Name, usize>,
    open: bool,
    scope: Vec<(Name, Name, Kind)>,
    used: BTreeSet<Name>,
    errors: Vec<PErr>,
}

impl<'a> Resolver<'a> {
    fn new(table: &'a TypeTable, sigs: &'a HashMap<Name, usize>, open: bool) -> Self {
        Resolver { table, sigs, open, scope: Vec::new(), used: BTreeSet::new(), errors: Vec::new() }
    }

    fn kind_of(&self, ty: TyId) -> Kind {
        if self.table.is_int(ty) {
            Kind::Int
        } else {
            Kind::Mailbox
        }
    }

    fn bind_param(&mut self, x: &Name, ty: TyId) {
        let k = self.kind_of(ty);
        self.used.insert(x.clone());
        self.scope.push((x.clone(), x.clone(), k));
    }

    fn bind(&mut self, x: &Name, kind: Kind) -> Name {
        let mut fresh = x.clone();
        let mut k = 1;
        while self.used.contains(&fresh) {
            fresh = Name::from(format!("{x}_{k}"));
            k += 1;
        }
        self.used.insert(fresh.clone());
        self.scope.push((x.clone(), fresh.clone(), kind));
        fresh
    }

    fn lookup(&mut self, x: &Name, span: Span) -> Option<(Name, Kind)> {
        if let Some((_, n, k)) = self.scope.iter().rev().find(|(s, _, _)| s == x) {
            return Some((n.clone(), *k));
        }
        if self.open {
            None
        } else {
            self.errors.push(PErr(format!("unbound name `{x}`"), span));
            None
        }
    }

    fn mailbox(&mut self, x: &Name, span: Span) -> Name {
        match self.lookup(x, span) {
            Some((n, Kind::Mailbox)) => n,
            Some((n, Kind::Int)) => {
                self.errors.push(PErr(format!("`{x}` is an integer, not a mailbox"), span));
                n
            }
            None => x.clone(),
        }
    }

    fn int_expr(&mut self, e: &IntExpr, span: Span) -> IntExpr {
        match e {
            IntExpr::Lit(n) => IntExpr::Lit(*n),
            IntExpr::Var(x) => match self.lookup(x, span) {
                Some((n, Kind::Int)) => IntExpr::Var(n),
                Some((n, Kind::Mailbox)) => {
                    self.errors.push(PErr(format!("`{x}` is a mailbox, not an integer"), span));
                    IntExpr::Var(n)
                }
                None => IntExpr::Var(x.clone()),
            },
            IntExpr::Add(a, b) => IntExpr::Add(Box::new(self.int_expr(a, span)), Box::new(self.int_expr(b, span))),
            IntExpr::Sub(a, b) => IntExpr::Sub(Box::new(self.int_expr(a, span)), Box::new(self.int_expr(b, span))),
        }
    }

    fn arg(&mut self, a: &Arg, span: Span) -> Arg {
        match a {
            Arg::Name(x) => match self.lookup(x, span) {
                Some((n, Kind::Int)) => Arg::Int(IntExpr::Var(n)),
                Some((n, Kind::Mailbox)) => Arg::Name(n),
                None => Arg::Name(x.clone()),
            },
            Arg::Int(e) => Arg::Int(self.int_expr(e, span)),
        }
    }

    fn process(&mut self, p: &Process) -> Process {
        match p {
            Process::Done => Process::Done,
            Process::Invoke { def, args, span } => {
                match self.sigs.get(def) {
                    None => self.errors.push(PErr(format!("unknown process `{def}`"), *span)),
                    Some(&n) if n != args.len() => self.errors.push(PErr(
                        format!("`{def}` expects {n} argument{}, got {}", if n == 1 { "" } else { "s" }, args.len()),
                        *span,
                    )),
                    _ => {}
                }
                Process::Invoke { def: def.clone(), args: args.iter().map(|a| self.arg(a, *span)).collect(), span: *span }
            }
            Process::Send { target, tag, args, span } => Process::Send {
                target: self.mailbox(target, *span),
                tag: tag.clone(),
                args: args.iter().map(|a| self.arg(a, *span)).collect(),
                span: *span,
            },
            Process::Par(ps) => Process::Par(ps.iter().map(|q| self.process(q)).collect()),
            Process::If { cond, then, els, span } => Process::If {
                cond: Cond { op: cond.op, lhs: self.int_expr(&cond.lhs, *span), rhs: self.int_expr(&cond.rhs, *span) },
                then: Box::new(self.process(then)),
                els: Box::new(self.process(els)),
                span: *span,
            },
            Process::New { name, body, span } => {
                let fresh = self.bind(name, Kind::Mailbox);
                let body = self.process(body);
                self.scope.pop();
                Process::New { name: fresh, body: Box::new(body), span: *span }
            }
            Process::Guard { branches, span } => {
                let branches = branches
                    .iter()
                    .map(|b| match b {
                        Branch::Fail { mailbox, span } => Branch::Fail { mailbox: self.mailbox(mailbox, *span), span: *span },
                        Branch::Free { mailbox, body, span } => {
                            let u = self.mailbox(mailbox, *span);
                            Branch::Free { mailbox: u, body: Box::new(self.process(body)), span: *span }
                        }
                        Branch::Receive { mailbox, tag, binders, body, span } => {
                            let u = self.mailbox(mailbox, *span);
                            let mut seen = HashSet::new();
                            let mut bs = Vec::new();
                            for x in binders {
                                if !seen.insert(x.name.clone()) {
                                    self.errors.push(PErr(format!("binder `{}` is repeated", x.name), *span));
                                }
                                let k = self.kind_of(x.ty);
                                bs.push(Binder { name: self.bind(&x.name, k), ty: x.ty });
                            }
                            let body = self.process(body);
                            self.scope.truncate(self.scope.len() - binders.len());
                            Branch::Receive { mailbox: u, tag: tag.clone(), binders: bs, body: Box::new(body), span: *span }
                        }
                    })
                    .collect();
                Process::Guard { branches, span: *span }
            }
        }
    }
}
