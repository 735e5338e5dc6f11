//! Surface syntax of the mailbox calculus.

mod lexer;
mod normal;
mod parser;
mod print;

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::depgraph::DepGraph;
use crate::types::{TyId, TypeTable};

pub use lexer::{LexError, Token};
pub use normal::{congruence_normal_form, normal_form_pinned};
pub(crate) use normal::split_normal;
pub(crate) use parser::{attach, PErr, PResult, Parser};
pub use parser::{line_col, parse, parse_pattern, parse_process_in, parse_type, ParseError, SyntaxErrors};
pub use print::{ProcessDisplay, ProgramDisplay};

/// An interned identifier.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

/// Message tags share the representation of names.
pub type Tag = Name;

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

impl From<&Name> for Name {
    fn from(n: &Name) -> Self {
        n.clone()
    }
}

impl serde::Serialize for Name {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl Borrow<str> for Name {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Byte range in the source. Spans never affect equality or ordering.
#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl PartialOrd for Span {
    fn partial_cmp(&self, other: &Span) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Span {
    fn cmp(&self, _: &Span) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntExpr {
    Lit(i64),
    Var(Name),
    Add(Box<IntExpr>, Box<IntExpr>),
    Sub(Box<IntExpr>, Box<IntExpr>),
}

impl IntExpr {
    pub fn eval(&self) -> Option<i64> {
        match self {
            IntExpr::Lit(n) => Some(*n),
            IntExpr::Var(_) => None,
            IntExpr::Add(a, b) => a.eval()?.checked_add(b.eval()?),
            IntExpr::Sub(a, b) => a.eval()?.checked_sub(b.eval()?),
        }
    }

    /// Fold closed subexpressions to literals.
    pub fn fold(&self) -> IntExpr {
        if let Some(n) = self.eval() {
            return IntExpr::Lit(n);
        }
        match self {
            IntExpr::Add(a, b) => IntExpr::Add(Box::new(a.fold()), Box::new(b.fold())),
            IntExpr::Sub(a, b) => IntExpr::Sub(Box::new(a.fold()), Box::new(b.fold())),
            e => e.clone(),
        }
    }

    pub(crate) fn vars(&self, out: &mut Vec<Name>) {
        match self {
            IntExpr::Lit(_) => {}
            IntExpr::Var(x) => out.push(x.clone()),
            IntExpr::Add(a, b) | IntExpr::Sub(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    fn subst(&self, m: &HashMap<Name, Arg>) -> IntExpr {
        match self {
            IntExpr::Lit(n) => IntExpr::Lit(*n),
            IntExpr::Var(x) => match m.get(x) {
                Some(Arg::Int(e)) => e.clone(),
                Some(Arg::Name(y)) => IntExpr::Var(y.clone()),
                None => IntExpr::Var(x.clone()),
            },
            IntExpr::Add(a, b) => IntExpr::Add(Box::new(a.subst(m)), Box::new(b.subst(m))),
            IntExpr::Sub(a, b) => IntExpr::Sub(Box::new(a.subst(m)), Box::new(b.subst(m))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn apply(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cond {
    pub op: CmpOp,
    pub lhs: IntExpr,
    pub rhs: IntExpr,
}

impl Cond {
    pub fn eval(&self) -> Option<bool> {
        Some(self.op.apply(self.lhs.eval()?, self.rhs.eval()?))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arg {
    Name(Name),
    Int(IntExpr),
}

impl Arg {
    pub fn as_name(&self) -> Option<&Name> {
        match self {
            Arg::Name(n) => Some(n),
            Arg::Int(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Binder {
    pub name: Name,
    pub ty: TyId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Fail { mailbox: Name, span: Span },
    Free { mailbox: Name, body: Box<Process>, span: Span },
    Receive { mailbox: Name, tag: Tag, binders: Vec<Binder>, body: Box<Process>, span: Span },
}

impl Branch {
    pub fn mailbox(&self) -> &Name {
        match self {
            Branch::Fail { mailbox, .. } | Branch::Free { mailbox, .. } | Branch::Receive { mailbox, .. } => mailbox,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Branch::Fail { span, .. } | Branch::Free { span, .. } | Branch::Receive { span, .. } => *span,
        }
    }

    pub fn body(&self) -> Option<&Process> {
        match self {
            Branch::Fail { .. } => None,
            Branch::Free { body, .. } | Branch::Receive { body, .. } => Some(body),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    Done,
    Invoke { def: Name, args: Vec<Arg>, span: Span },
    Guard { branches: Vec<Branch>, span: Span },
    Send { target: Name, tag: Tag, args: Vec<Arg>, span: Span },
    Par(Vec<Process>),
    New { name: Name, body: Box<Process>, span: Span },
    If { cond: Cond, then: Box<Process>, els: Box<Process>, span: Span },
}

impl Process {
    pub fn par(items: Vec<Process>) -> Process {
        let mut flat = Vec::new();
        for p in items {
            match p {
                Process::Par(ps) => flat.extend(ps),
                Process::Done => {}
                p => flat.push(p),
            }
        }
        match flat.len() {
            0 => Process::Done,
            1 => flat.pop().unwrap(),
            _ => Process::Par(flat),
        }
    }

    pub fn new_scope(name: Name, body: Process) -> Process {
        Process::New { name, body: Box::new(body), span: Span::default() }
    }

    pub fn span(&self) -> Span {
        match self {
            Process::Done | Process::Par(_) => Span::default(),
            Process::Invoke { span, .. }
            | Process::Guard { span, .. }
            | Process::Send { span, .. }
            | Process::New { span, .. }
            | Process::If { span, .. } => *span,
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        fn add(n: &Name, bound: &[Name], out: &mut BTreeSet<Name>) {
            if !bound.contains(n) {
                out.insert(n.clone());
            }
        }
        match self {
            Process::Done => {}
            Process::Invoke { args, .. } => {
                for a in args {
                    arg_names(a).iter().for_each(|n| add(n, bound, out));
                }
            }
            Process::Send { target, args, .. } => {
                add(target, bound, out);
                for a in args {
                    arg_names(a).iter().for_each(|n| add(n, bound, out));
                }
            }
            Process::Par(ps) => ps.iter().for_each(|p| p.collect_free(bound, out)),
            Process::New { name, body, .. } => {
                bound.push(name.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Process::If { cond, then, els, .. } => {
                let mut vs = Vec::new();
                cond.lhs.vars(&mut vs);
                cond.rhs.vars(&mut vs);
                vs.iter().for_each(|n| add(n, bound, out));
                then.collect_free(bound, out);
                els.collect_free(bound, out);
            }
            Process::Guard { branches, .. } => {
                for b in branches {
                    add(b.mailbox(), bound, out);
                    match b {
                        Branch::Fail { .. } => {}
                        Branch::Free { body, .. } => body.collect_free(bound, out),
                        Branch::Receive { binders, body, .. } => {
                            let n = bound.len();
                            bound.extend(binders.iter().map(|x| x.name.clone()));
                            body.collect_free(bound, out);
                            bound.truncate(n);
                        }
                    }
                }
            }
        }
    }

    /// Names bound anywhere in the process.
    pub fn bound_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |p| match p {
            Process::New { name, .. } => {
                out.insert(name.clone());
            }
            Process::Guard { branches, .. } => {
                for b in branches {
                    if let Branch::Receive { binders, .. } = b {
                        out.extend(binders.iter().map(|x| x.name.clone()));
                    }
                }
            }
            _ => {}
        });
        out
    }

    /// Pre-order traversal of every subprocess.
    pub fn visit(&self, f: &mut impl FnMut(&Process)) {
        f(self);
        match self {
            Process::Done | Process::Invoke { .. } | Process::Send { .. } => {}
            Process::Par(ps) => ps.iter().for_each(|p| p.visit(f)),
            Process::New { body, .. } => body.visit(f),
            Process::If { then, els, .. } => {
                then.visit(f);
                els.visit(f);
            }
            Process::Guard { branches, .. } => {
                for b in branches {
                    if let Some(p) = b.body() {
                        p.visit(f);
                    }
                }
            }
        }
    }

    /// Simultaneous capture-avoiding substitution. Bound names that
    /// would capture a name in the range of the mapping are renamed.
    pub fn substitute(&self, mapping: &HashMap<Name, Arg>) -> Process {
        if mapping.is_empty() {
            return self.clone();
        }
        let mut avoid: BTreeSet<Name> = BTreeSet::new();
        for a in mapping.values() {
            avoid.extend(arg_names(a));
        }
        self.subst(mapping, &avoid)
    }

    pub fn substitute_names(&self, mapping: &HashMap<Name, Name>) -> Process {
        let m = mapping.iter().map(|(k, v)| (k.clone(), Arg::Name(v.clone()))).collect();
        self.substitute(&m)
    }

    fn subst(&self, m: &HashMap<Name, Arg>, avoid: &BTreeSet<Name>) -> Process {
        let name = |n: &Name| match m.get(n) {
            Some(Arg::Name(x)) => x.clone(),
            _ => n.clone(),
        };
        let arg = |a: &Arg| match a {
            Arg::Name(n) => m.get(n).cloned().unwrap_or_else(|| a.clone()),
            Arg::Int(e) => Arg::Int(e.subst(m)),
        };
        match self {
            Process::Done => Process::Done,
            Process::Invoke { def, args, span } => {
                Process::Invoke { def: def.clone(), args: args.iter().map(arg).collect(), span: *span }
            }
            Process::Send { target, tag, args, span } => Process::Send {
                target: name(target),
                tag: tag.clone(),
                args: args.iter().map(arg).collect(),
                span: *span,
            },
            Process::Par(ps) => Process::Par(ps.iter().map(|p| p.subst(m, avoid)).collect()),
            Process::If { cond, then, els, span } => Process::If {
                cond: Cond { op: cond.op, lhs: cond.lhs.subst(m), rhs: cond.rhs.subst(m) },
                then: Box::new(then.subst(m, avoid)),
                els: Box::new(els.subst(m, avoid)),
                span: *span,
            },
            Process::New { name: a, body, span } => {
                let (a2, inner) = rebind(a, body, m, avoid);
                Process::New { name: a2, body: Box::new(body.subst(&inner, avoid)), span: *span }
            }
            Process::Guard { branches, span } => {
                let branches = branches
                    .iter()
                    .map(|b| match b {
                        Branch::Fail { mailbox, span } => Branch::Fail { mailbox: name(mailbox), span: *span },
                        Branch::Free { mailbox, body, span } => {
                            Branch::Free { mailbox: name(mailbox), body: Box::new(body.subst(m, avoid)), span: *span }
                        }
                        Branch::Receive { mailbox, tag, binders, body, span } => {
                            let mut inner = m.clone();
                            let mut new_binders = Vec::new();
                            for x in binders {
                                let (x2, next) = rebind(&x.name, body, &inner, avoid);
                                inner = next;
                                new_binders.push(Binder { name: x2, ty: x.ty });
                            }
                            Branch::Receive {
                                mailbox: name(mailbox),
                                tag: tag.clone(),
                                binders: new_binders,
                                body: Box::new(body.subst(&inner, avoid)),
                                span: *span,
                            }
                        }
                    })
                    .collect();
                Process::Guard { branches, span: *span }
            }
        }
    }

    pub fn display<'a>(&'a self, table: &'a TypeTable) -> ProcessDisplay<'a> {
        ProcessDisplay::new(self, table)
    }
}

/// Remove `a` from the mapping and rename it if it would capture.
fn rebind(a: &Name, body: &Process, m: &HashMap<Name, Arg>, avoid: &BTreeSet<Name>) -> (Name, HashMap<Name, Arg>) {
    let mut inner = m.clone();
    inner.remove(a);
    if !avoid.contains(a) {
        return (a.clone(), inner);
    }
    let fv = body.free_names();
    let mut k = 1;
    let fresh = loop {
        let cand = Name::from(format!("{a}_{k}"));
        if !avoid.contains(&cand) && !fv.contains(&cand) && !m.contains_key(&cand) {
            break cand;
        }
        k += 1;
    };
    inner.insert(a.clone(), Arg::Name(fresh.clone()));
    (fresh, inner)
}

pub(crate) fn arg_names(a: &Arg) -> Vec<Name> {
    match a {
        Arg::Name(n) => vec![n.clone()],
        Arg::Int(e) => {
            let mut v = Vec::new();
            e.vars(&mut v);
            v
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: Name,
    pub ty: TyId,
}

#[derive(Clone, Debug)]
pub struct Definition {
    pub name: Name,
    pub params: Vec<Param>,
    pub graph: DepGraph,
    pub body: Process,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct Program {
    pub types: TypeTable,
    pub defs: Vec<Definition>,
    pub main: Process,
    pub main_span: Span,
    index: HashMap<Name, usize>,
}

impl Program {
    pub fn new(types: TypeTable, defs: Vec<Definition>, main: Process) -> Self {
        let index = defs.iter().enumerate().map(|(i, d)| (d.name.clone(), i)).collect();
        Program { types, defs, main, main_span: Span::default(), index }
    }

    pub fn def(&self, name: &str) -> Option<&Definition> {
        self.index.get(name).map(|&i| &self.defs[i])
    }

    pub fn display(&self) -> ProgramDisplay<'_> {
        ProgramDisplay::new(self)
    }
}
