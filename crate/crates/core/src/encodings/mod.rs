//! Binary session types (with forks and joins) and their encoding into
//! mailbox types and processes.
//!
//! A session is modelled as a mailbox `self` used concurrently by the two
//! peers. `Session_T(self)` forwards every message stored by the sender
//! side to the receiver side and notifies both peers with a reference to
//! `self` typed according to the rest of the conversation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::patterns::Pattern;
use crate::syntax::{attach, parse, parse_pattern, PErr, PResult, Parser, Program, SyntaxErrors, Tag, Token};
use crate::types::{TyId, TypeTable};

mod subtype;

pub use subtype::session_subtype;

/// A message description `ℓ(τ)` in a fork or join.
pub type Item = (Tag, Vec<TyId>);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SessionType {
    End,
    In(TyId, Box<SessionType>),
    Out(TyId, Box<SessionType>),
    /// `T & S`: the peer selects.
    Ext(Box<SessionType>, Box<SessionType>),
    /// `T (+) S`: this endpoint selects.
    Int(Box<SessionType>, Box<SessionType>),
    /// Collect all the messages, then continue.
    Join(Vec<Item>, Box<SessionType>),
    /// Send all the messages, possibly from independent processes.
    Fork(Vec<Item>, Box<SessionType>),
    /// A named session, possibly dualized.
    Ref { name: String, dual: bool },
}

pub fn dual(t: &SessionType) -> SessionType {
    use SessionType::*;
    match t {
        End => End,
        In(p, k) => Out(*p, Box::new(dual(k))),
        Out(p, k) => In(*p, Box::new(dual(k))),
        Ext(a, b) => Int(Box::new(dual(a)), Box::new(dual(b))),
        Int(a, b) => Ext(Box::new(dual(a)), Box::new(dual(b))),
        Join(items, k) => Fork(items.clone(), Box::new(dual(k))),
        Fork(items, k) => Join(items.clone(), Box::new(dual(k))),
        Ref { name, dual: d } => Ref { name: name.clone(), dual: !d },
    }
}

impl SessionType {
    pub fn input(p: TyId, k: SessionType) -> Self {
        SessionType::In(p, Box::new(k))
    }

    pub fn output(p: TyId, k: SessionType) -> Self {
        SessionType::Out(p, Box::new(k))
    }

    pub fn external(a: SessionType, b: SessionType) -> Self {
        SessionType::Ext(Box::new(a), Box::new(b))
    }

    pub fn internal(a: SessionType, b: SessionType) -> Self {
        SessionType::Int(Box::new(a), Box::new(b))
    }

    pub fn named(name: &str) -> Self {
        SessionType::Ref { name: name.to_string(), dual: false }
    }

    pub fn display<'a>(&'a self, table: &'a TypeTable) -> SessionDisplay<'a> {
        SessionDisplay { t: self, table }
    }

    /// The endpoint waits for the peer to act first: the stage is driven
    /// by the other side.
    fn passive(&self) -> bool {
        !matches!(self, SessionType::Out(..) | SessionType::Int(..) | SessionType::Fork(..))
    }
}

pub struct SessionDisplay<'a> {
    t: &'a SessionType,
    table: &'a TypeTable,
}

impl fmt::Display for SessionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        show(self.t, self.table, 0, f)
    }
}

fn show(t: &SessionType, table: &TypeTable, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    use SessionType::*;
    let items = |items: &[Item], f: &mut fmt::Formatter<'_>| -> fmt::Result {
        let xs: Vec<String> = items.iter().map(|(t, a)| item_text(t, a, table)).collect();
        write!(f, "{{{}}}", xs.join(", "))
    };
    match t {
        End => write!(f, "end"),
        In(p, k) | Out(p, k) => {
            let c = if matches!(t, In(..)) { '?' } else { '!' };
            write!(f, "{c}{}.", payload_text(*p, table))?;
            show(k, table, 1, f)
        }
        Ext(a, b) | Int(a, b) => {
            if prec > 0 {
                write!(f, "(")?;
            }
            show(a, table, 1, f)?;
            write!(f, "{}", if matches!(t, Ext(..)) { " & " } else { " (+) " })?;
            show(b, table, 1, f)?;
            if prec > 0 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Join(xs, k) | Fork(xs, k) => {
            write!(f, "{}", if matches!(t, Join(..)) { "join" } else { "fork" })?;
            items(xs, f)?;
            write!(f, ";")?;
            show(k, table, 1, f)
        }
        Ref { name, dual: false } => write!(f, "{name}"),
        Ref { name, dual: true } => write!(f, "dual {name}"),
    }
}

fn payload_text(p: TyId, table: &TypeTable) -> String {
    match table.node(p) {
        crate::types::TyNode::Mailbox(..) => format!("({})", table.display(p)),
        _ => table.display(p).to_string(),
    }
}

fn item_text(tag: &Tag, args: &[TyId], table: &TypeTable) -> String {
    if args.is_empty() {
        tag.to_string()
    } else {
        let a: Vec<String> = args.iter().map(|t| table.display(*t).to_string()).collect();
        format!("{tag}({})", a.join(", "))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Syntax(#[from] SyntaxErrors),
    #[error("unknown session `{0}`")]
    Unknown(String),
    #[error("session `{0}` is not contractive")]
    NotContractive(String),
    #[error("join or fork in `{0}` uses tag `{1}` with different argument types")]
    TagClash(String, String),
    #[error("generated program does not parse: {0}")]
    Generated(SyntaxErrors),
}

/// The contents of a `.st` file: mailbox type definitions and named
/// session types.
#[derive(Clone, Debug)]
pub struct SessionFile {
    pub types: TypeTable,
    pub sessions: BTreeMap<String, SessionType>,
    /// Session names in source order.
    pub order: Vec<String>,
}

impl SessionFile {
    pub fn get(&self, name: &str) -> Option<&SessionType> {
        self.sessions.get(name)
    }

    /// Replace a leading reference by the session it names.
    pub fn unfold(&self, t: &SessionType) -> SessionType {
        let mut cur = t.clone();
        for _ in 0..=self.sessions.len() {
            match &cur {
                SessionType::Ref { name, dual: d } => {
                    let body = self.sessions[name].clone();
                    cur = if *d { dual(&body) } else { body };
                }
                _ => return cur,
            }
        }
        cur
    }

    /// Parse an extra session type against the definitions of this file.
    pub fn parse_session(&mut self, src: &str) -> Result<SessionType, SessionError> {
        let t = {
            let mut p = Parser::new(src, &mut self.types)?;
            let r = session(&mut p).and_then(|t| if p.at_eof() { Ok(t) } else { p.error("end of input") });
            r.map_err(|e| SyntaxErrors(vec![attach(src, e)]))?
        };
        self.validate_type(&t, "<input>")?;
        Ok(t)
    }

    fn validate_type(&self, t: &SessionType, owner: &str) -> Result<(), SessionError> {
        use SessionType::*;
        match t {
            End => Ok(()),
            In(_, k) | Out(_, k) => self.validate_type(k, owner),
            Ext(a, b) | Int(a, b) => {
                self.validate_type(a, owner)?;
                self.validate_type(b, owner)
            }
            Join(items, k) | Fork(items, k) => {
                let mut seen: BTreeMap<&Tag, &Vec<TyId>> = BTreeMap::new();
                for (tag, args) in items {
                    if let Some(prev) = seen.insert(tag, args) {
                        if prev != args {
                            return Err(SessionError::TagClash(owner.to_string(), tag.to_string()));
                        }
                    }
                }
                self.validate_type(k, owner)
            }
            Ref { name, .. } => {
                if self.sessions.contains_key(name) {
                    Ok(())
                } else {
                    Err(SessionError::Unknown(name.clone()))
                }
            }
        }
    }

    fn validate(&self) -> Result<(), SessionError> {
        for (name, t) in &self.sessions {
            self.validate_type(t, name)?;
        }
        for name in self.sessions.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = name.clone();
            while let SessionType::Ref { name: next, .. } = &self.sessions[&cur] {
                if !seen.insert(cur.clone()) {
                    return Err(SessionError::NotContractive(name.clone()));
                }
                cur = next.clone();
            }
        }
        Ok(())
    }
}

/// Parse a session file:
///
/// ```text
/// type Payload = !data(int);
/// session T = !int.!int.?int.end;
/// session Loop = ?int.Loop & end;
/// ```
pub fn parse_sessions(src: &str) -> Result<SessionFile, SessionError> {
    let mut table = TypeTable::new();
    let mut sessions = BTreeMap::new();
    let mut order = Vec::new();
    {
        let mut p = Parser::new(src, &mut table)?;
        let r: PResult<()> = (|| {
            while !p.at_eof() {
                let start = p.span().start;
                if p.eat_kw("type") {
                    let name = p.ident()?;
                    let span = crate::syntax::Span::new(start, p.prev_end());
                    p.expect(&Token::Assign)?;
                    let t = p.ty()?;
                    p.expect(&Token::Semi)?;
                    p.table.define(&name, t).map_err(|e| PErr(e.to_string(), span))?;
                } else if p.eat_kw("session") {
                    let name = p.ident()?;
                    let span = crate::syntax::Span::new(start, p.prev_end());
                    p.expect(&Token::Assign)?;
                    let t = session(&mut p)?;
                    p.expect(&Token::Semi)?;
                    if sessions.insert(name.to_string(), t).is_some() {
                        return Err(PErr(format!("session `{name}` is defined more than once"), span));
                    }
                    order.push(name.to_string());
                } else {
                    return p.error("`type` or `session`");
                }
            }
            Ok(())
        })();
        r.map_err(|e| SyntaxErrors(vec![attach(src, e)]))?;
    }
    table.validate().map_err(|e| {
        SyntaxErrors(vec![attach(src, PErr(e.to_string(), crate::syntax::Span::default()))])
    })?;
    let file = SessionFile { types: table, sessions, order };
    file.validate()?;
    Ok(file)
}

fn session(p: &mut Parser<'_>) -> PResult<SessionType> {
    let a = session_prefix(p)?;
    if p.eat(&Token::Amp) {
        let b = session(p)?;
        return Ok(SessionType::external(a, b));
    }
    if p.eat(&Token::OPlus) {
        let b = session(p)?;
        return Ok(SessionType::internal(a, b));
    }
    Ok(a)
}

fn session_prefix(p: &mut Parser<'_>) -> PResult<SessionType> {
    match p.peek().clone() {
        Token::Query | Token::Bang => {
            let input = p.bump() == Token::Query;
            let ty = payload(p)?;
            p.expect(&Token::Dot)?;
            let k = session_prefix(p)?;
            Ok(if input { SessionType::input(ty, k) } else { SessionType::output(ty, k) })
        }
        Token::LParen => {
            p.bump();
            let t = session(p)?;
            p.expect(&Token::RParen)?;
            Ok(t)
        }
        Token::Ident(s) if s == "end" => {
            p.bump();
            Ok(SessionType::End)
        }
        Token::Ident(s) if s == "join" || s == "fork" => {
            p.bump();
            p.expect(&Token::LBrace)?;
            let mut items = Vec::new();
            if !p.eat(&Token::RBrace) {
                loop {
                    let tag = p.ident()?;
                    let mut args = Vec::new();
                    if p.eat(&Token::LParen) && !p.eat(&Token::RParen) {
                        loop {
                            args.push(p.ty()?);
                            if p.eat(&Token::RParen) {
                                break;
                            }
                            p.expect(&Token::Comma)?;
                        }
                    }
                    items.push((tag, args));
                    if p.eat(&Token::RBrace) {
                        break;
                    }
                    p.expect(&Token::Comma)?;
                }
            }
            p.expect(&Token::Semi)?;
            let k = Box::new(session_prefix(p)?);
            Ok(if s == "join" { SessionType::Join(items, k) } else { SessionType::Fork(items, k) })
        }
        Token::Ident(s) if s == "dual" => {
            p.bump();
            let name = p.ident()?;
            Ok(SessionType::Ref { name: name.to_string(), dual: true })
        }
        Token::Ident(_) => {
            let name = p.ident()?;
            Ok(SessionType::named(name.as_str()))
        }
        _ => p.error("a session type"),
    }
}

fn payload(p: &mut Parser<'_>) -> PResult<TyId> {
    if p.eat(&Token::LParen) {
        let t = p.ty()?;
        p.expect(&Token::RParen)?;
        return Ok(t);
    }
    match p.peek() {
        Token::Ident(_) => p.ty(),
        _ => p.error("a payload type: `int`, a type name or a parenthesized type"),
    }
}

/// Generated source for the medium of a session.
#[derive(Clone, Debug)]
pub struct Encoded {
    /// `.mbx` source with type definitions and process definitions.
    pub source: String,
    /// Name of the definition implementing the requested session.
    pub entry: String,
    /// The pattern `E(T)` in surface syntax.
    pub pattern: String,
    /// The pattern `E(T)·E(dual T)` expected in `entry`'s mailbox.
    pub medium: String,
}

struct Gen<'a> {
    file: &'a SessionFile,
    ty_names: BTreeMap<SessionType, String>,
    ty_queue: VecDeque<(String, SessionType)>,
    def_names: BTreeMap<SessionType, String>,
    def_queue: VecDeque<(String, SessionType)>,
    fresh_ty: usize,
    fresh_def: usize,
    out_types: Vec<String>,
    out_defs: Vec<String>,
}

impl<'a> Gen<'a> {
    fn new(file: &'a SessionFile) -> Self {
        Gen {
            file,
            ty_names: BTreeMap::new(),
            ty_queue: VecDeque::new(),
            def_names: BTreeMap::new(),
            def_queue: VecDeque::new(),
            fresh_ty: 0,
            fresh_def: 0,
            out_types: Vec::new(),
            out_defs: Vec::new(),
        }
    }

    fn table(&self) -> &TypeTable {
        &self.file.types
    }

    fn ty(&self, t: TyId) -> String {
        self.table().display(t).to_string()
    }

    fn item(&self, (tag, args): &Item) -> String {
        item_text(tag, args, self.table())
    }

    /// Name of the type `!E(t)`.
    fn tyref(&mut self, t: &SessionType) -> String {
        if self.file.unfold(t) == SessionType::End {
            return "!1".to_string();
        }
        if let Some(n) = self.ty_names.get(t) {
            return n.clone();
        }
        let name = match t {
            SessionType::Ref { name, dual: false } => format!("E_{name}"),
            SessionType::Ref { name, dual: true } => format!("E_co_{name}"),
            _ => {
                self.fresh_ty += 1;
                format!("E{}", self.fresh_ty)
            }
        };
        self.ty_names.insert(t.clone(), name.clone());
        self.ty_queue.push_back((name.clone(), t.clone()));
        name
    }

    /// `E(t)` as a pattern; sums are parenthesized when `tight`.
    fn enc(&mut self, t: &SessionType, tight: bool) -> String {
        use SessionType::*;
        match self.file.unfold(t) {
            End => "1".to_string(),
            In(p, k) => format!("receive(!reply({}, {}))", self.ty(p), self.tyref(&k)),
            Out(p, k) => format!("send({}, !reply({}))", self.ty(p), self.tyref(&k)),
            Ext(a, b) => format!("receive(!(left({}) + right({})))", self.tyref(&a), self.tyref(&b)),
            Int(a, b) => {
                let s = format!("left(!reply({})) + right(!reply({}))", self.tyref(&a), self.tyref(&b));
                if tight {
                    format!("({s})")
                } else {
                    s
                }
            }
            Fork(items, k) => {
                let mut parts = vec![format!("send(!reply({}))", self.tyref(&k))];
                parts.extend(items.iter().map(|i| self.item(i)));
                parts.join(" . ")
            }
            Join(items, k) => {
                let mut parts: Vec<String> = items.iter().map(|i| self.item(i)).collect();
                parts.push(format!("reply({})", self.tyref(&k)));
                format!("receive(!({}))", parts.join(" . "))
            }
            Ref { .. } => unreachable!("unfold removes references"),
        }
    }

    fn medium(&mut self, t: &SessionType) -> String {
        let a = self.enc(t, true);
        let b = self.enc(&dual(t), true);
        format!("{a} . {b}")
    }

    /// Name of `Session_t`; the passive side of each stage is generated.
    fn session(&mut self, t: &SessionType) -> String {
        let key = if self.file.unfold(t).passive() { t.clone() } else { dual(t) };
        if let Some(n) = self.def_names.get(&key) {
            return n.clone();
        }
        let name = match &key {
            SessionType::End => "Session_end".to_string(),
            SessionType::Ref { name, dual: false } => format!("Session_{name}"),
            SessionType::Ref { name, dual: true } => format!("Session_co_{name}"),
            _ => {
                self.fresh_def += 1;
                format!("Session{}", self.fresh_def)
            }
        };
        self.def_names.insert(key.clone(), name.clone());
        self.def_queue.push_back((name.clone(), key));
        name
    }

    fn emit_session(&mut self, name: &str, key: &SessionType) {
        use SessionType::*;
        let medium = self.medium(key);
        let body = match self.file.unfold(key) {
            End => "free self.done".to_string(),
            In(p, k) => {
                let s_ty = self.tyref(&dual(&k));
                let r_ty = format!("!reply({}, {})", self.ty(p), self.tyref(&k));
                let next = self.session(&k);
                format!(
                    "self?send(x: {}, s: !reply({s_ty})).self?receive(r: {r_ty}).\n        \
                     (s!reply(self) | r!reply(x, self) | {next}(self))",
                    self.ty(p)
                )
            }
            Ext(a, b) => {
                let r_ty = format!("!(left({}) + right({}))", self.tyref(&a), self.tyref(&b));
                let mut branches = Vec::new();
                for (tag, k) in [("left", &a), ("right", &b)] {
                    let s_ty = self.tyref(&dual(k));
                    let next = self.session(k);
                    branches.push(format!(
                        "self?{tag}(s: !reply({s_ty})).self?receive(r: {r_ty}).\n        \
                         (s!reply(self) | r!{tag}(self) | {next}(self))"
                    ));
                }
                branches.join("\n  + ")
            }
            Join(items, k) => {
                let s_ty = format!("!reply({})", self.tyref(&dual(&k)));
                let collect = self.emit_join(name, &items, &k, &s_ty);
                let r_ty = self.join_receiver(&items, &k);
                format!("self?send(s: {s_ty}).self?receive(r: {r_ty}).{collect}(self, s, r)")
            }
            Out(..) | Int(..) | Fork(..) | Ref { .. } => unreachable!("only passive stages are generated"),
        };
        let self_ty = if medium == "1 . 1" { "?1".to_string() } else { format!("?({medium})") };
        self.out_defs.push(format!("def {name}(self: {self_ty}) =\n    {body};\n"));
    }

    fn join_receiver(&mut self, items: &[Item], k: &SessionType) -> String {
        let mut parts: Vec<String> = items.iter().map(|i| self.item(i)).collect();
        parts.push(format!("reply({})", self.tyref(k)));
        format!("!({})", parts.join(" . "))
    }

    /// `Join` definitions forwarding `items` in order; returns the first.
    fn emit_join(&mut self, owner: &str, items: &[Item], k: &SessionType, s_ty: &str) -> String {
        let names: Vec<String> = (0..=items.len()).map(|j| format!("Join_{owner}_{j}")).collect();
        for j in 0..=items.len() {
            let rest = &items[j..];
            let self_pat = if rest.is_empty() {
                "1".to_string()
            } else {
                rest.iter().map(|i| self.item(i)).collect::<Vec<_>>().join(" . ")
            };
            let r_ty = self.join_receiver(rest, k);
            let body = match rest.first() {
                None => {
                    let next = self.session(k);
                    format!("s!reply(self) | r!reply(self) | {next}(self)")
                }
                Some((tag, args)) => {
                    let xs: Vec<String> = (0..args.len()).map(|n| format!("x{n}")).collect();
                    let binders: Vec<String> = xs.iter().zip(args).map(|(x, t)| format!("{x}: {}", self.ty(*t))).collect();
                    let call = &names[j + 1];
                    format!("self?{tag}({}).(r!{tag}({}) | {call}(self, s, r))", binders.join(", "), xs.join(", "))
                }
            };
            self.out_defs.push(format!(
                "def {}(self: ?({self_pat}), s: {s_ty}, r: {r_ty}) : {{ self - s, self - r }} =\n    {body};\n",
                names[j]
            ));
        }
        names[0].clone()
    }

    fn drain(&mut self) {
        loop {
            if let Some((name, key)) = self.def_queue.pop_front() {
                self.emit_session(&name, &key);
            } else if let Some((name, t)) = self.ty_queue.pop_front() {
                let e = self.enc(&t, true);
                self.out_types.push(format!("type {name} = !{e};"));
            } else {
                break;
            }
        }
    }
}

/// Generate the medium for session `t`, interpreted in `file`.
pub fn encode_session(file: &SessionFile, t: &SessionType, entry: Option<&str>) -> Result<Encoded, SessionError> {
    let mut g = Gen::new(file);
    let pattern = g.enc(t, false);
    let medium = g.medium(t);
    let inner = g.session(t);
    g.drain();
    let entry = match entry {
        Some(e) if e != inner => {
            g.out_defs.push(format!("def {e}(self: ?({medium})) =\n    {inner}(self);\n"));
            g.drain();
            e.to_string()
        }
        _ => inner,
    };
    let mut source = String::new();
    for (name, id) in file.types.definitions() {
        source.push_str(&format!("type {name} = {};\n", file.types.display_expanded(id)));
    }
    for line in &g.out_types {
        source.push_str(line);
        source.push('\n');
    }
    for d in &g.out_defs {
        source.push('\n');
        source.push_str(d);
    }
    parse(&source).map_err(SessionError::Generated)?;
    Ok(Encoded { source, entry, pattern, medium })
}

/// Generate the medium for the named session; the entry definition is
/// called `Session_<name>`.
pub fn encode_named(file: &SessionFile, name: &str) -> Result<Encoded, SessionError> {
    if !file.sessions.contains_key(name) {
        return Err(SessionError::Unknown(name.to_string()));
    }
    encode_session(file, &SessionType::named(name), Some(&format!("Session_{name}")))
}

/// `E(t)` as a pattern over a table holding the generated type
/// definitions.
pub fn encode_pattern(file: &SessionFile, t: &SessionType) -> Result<(Program, Pattern), SessionError> {
    let enc = encode_session(file, t, None)?;
    let mut prog = parse(&enc.source).map_err(SessionError::Generated)?;
    let p = parse_pattern(&enc.pattern, &mut prog.types).map_err(SessionError::Generated)?;
    Ok((prog, p))
}

/// The program defining `Session_t` and the definitions it relies on.
pub fn generate_session_process(file: &SessionFile, t: &SessionType) -> Result<(Program, String), SessionError> {
    let enc = encode_session(file, t, None)?;
    let prog = parse(&enc.source).map_err(SessionError::Generated)?;
    Ok((prog, enc.entry))
}
