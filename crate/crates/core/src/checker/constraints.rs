//! Constraint generation for pattern inference.
//!
//! Every type annotation of the program is treated as a hole `κα`; the
//! inference rules produce a multiset of constraints over the pattern
//! variables. Solving is not attempted: [`solve_forward`] only computes
//! the internal variables once the annotation variables are fixed, and
//! [`check_solution`] verifies an assignment.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::synth::Synth;
use crate::depgraph::DepGraph;
use crate::patterns::{Atom, Pattern, Undecided};
use crate::syntax::{arg_names, Arg, Branch, Name, Process, Program, Span, Tag};
use crate::types::{Capability, Ty, TyId, TypeCtx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PVar(pub u32);

impl fmt::Display for PVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "α{}", self.0)
    }
}

/// Argument of an atom in a pattern expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArgTy {
    Mailbox(Capability, PVar),
    Int,
}

/// Pattern expressions: patterns over variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PExpr {
    Zero,
    One,
    Var(PVar),
    Atom(Tag, Vec<ArgTy>),
    Sum(Vec<PExpr>),
    Prod(Vec<PExpr>),
    Star(Box<PExpr>),
}

impl fmt::Display for PExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(e: &PExpr, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                PExpr::Zero => write!(f, "0"),
                PExpr::One => write!(f, "1"),
                PExpr::Var(v) => write!(f, "{v}"),
                PExpr::Atom(tag, args) => {
                    write!(f, "{tag}")?;
                    if !args.is_empty() {
                        let shown: Vec<String> = args
                            .iter()
                            .map(|a| match a {
                                ArgTy::Mailbox(c, v) => format!("{}{v}", c.symbol()),
                                ArgTy::Int => "int".to_string(),
                            })
                            .collect();
                        write!(f, "({})", shown.join(", "))?;
                    }
                    Ok(())
                }
                PExpr::Sum(es) => {
                    if prec > 1 {
                        write!(f, "(")?;
                    }
                    for (i, x) in es.iter().enumerate() {
                        if i > 0 {
                            write!(f, " + ")?;
                        }
                        go(x, 1, f)?;
                    }
                    if prec > 1 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                PExpr::Prod(es) => {
                    if prec > 2 {
                        write!(f, "(")?;
                    }
                    for (i, x) in es.iter().enumerate() {
                        if i > 0 {
                            write!(f, " · ")?;
                        }
                        go(x, 2, f)?;
                    }
                    if prec > 2 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                PExpr::Star(x) => {
                    go(x, 3, f)?;
                    write!(f, "*")
                }
            }
        }
        go(self, 0, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    False(String),
    /// `E ⊑ F`
    Sub(PExpr, PExpr),
    /// `κE ≤ κF`
    TyLe(Capability, PExpr, PExpr),
    /// `α ≪ ℓ(κ̄ᾱ)`, read as: the residual of `whole` with respect to
    /// the atom is defined and equivalent to `var`.
    Residual { var: PVar, atom: PExpr, whole: PVar },
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::False(why) => write!(f, "⊥ ({why})"),
            Constraint::Sub(e, g) => write!(f, "{e} ⊑ {g}"),
            Constraint::TyLe(c, e, g) => {
                let s = c.symbol();
                write!(f, "{s}({e}) ≤ {s}({g})")
            }
            Constraint::Residual { var, atom, whole } => write!(f, "{var} ≪ {atom}  [in {whole}]"),
        }
    }
}

/// How an internal variable is computed from earlier ones.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Recipe {
    /// A type annotation of the program; its value is supplied.
    Annotation,
    Expr(PExpr),
    /// The largest F with `den · F ⊑ num`.
    Quotient { num: PVar, den: PVar },
    /// One of the variables included in all the others.
    Meet(Vec<PVar>),
}

#[derive(Clone, Debug)]
pub struct VarInfo {
    pub origin: String,
    /// The pattern written in the program, for annotation variables.
    pub declared: Option<Pattern>,
    recipe: Recipe,
}

#[derive(Clone, Debug)]
pub struct Located {
    pub constraint: Constraint,
    /// Definition (or `main`) that produced it.
    pub scope: String,
    pub span: Span,
}

#[derive(Clone, Debug, Default)]
pub struct ConstraintSet {
    pub vars: Vec<VarInfo>,
    pub constraints: Vec<Located>,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Annotation variables with the patterns the program declares.
    pub fn declared_solution(&self) -> HashMap<PVar, Pattern> {
        self.vars
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.declared.clone().map(|p| (PVar(i as u32), p)))
            .collect()
    }

    pub fn annotations(&self) -> Vec<PVar> {
        (0..self.vars.len() as u32).map(PVar).filter(|v| self.vars[v.0 as usize].recipe == Recipe::Annotation).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionError {
    pub index: usize,
    pub constraint: String,
    pub reason: String,
}

impl fmt::Display for SolutionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {}: {}", self.index, self.constraint, self.reason)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Entry {
    Int,
    Mb(Capability, PVar),
}

type CEnv = BTreeMap<Name, Entry>;

struct Gen<'a> {
    synth: Synth<'a>,
    ctx: &'a TypeCtx,
    prog: &'a Program,
    set: ConstraintSet,
    params: HashMap<Name, Vec<Option<(Capability, PVar)>>>,
    scope: String,
}

/// Constraints of every definition and of `main`, with all annotations
/// replaced by variables.
pub fn generate_constraints(prog: &Program) -> ConstraintSet {
    let ctx = TypeCtx::new(prog.types.clone());
    let mut g = Gen {
        synth: Synth::new(prog, &ctx, false),
        ctx: &ctx,
        prog,
        set: ConstraintSet::default(),
        params: HashMap::new(),
        scope: String::new(),
    };
    for d in &prog.defs {
        let vars = d
            .params
            .iter()
            .map(|p| g.annotation(p.ty, format!("{}.{}", d.name, p.name)))
            .collect();
        g.params.insert(d.name.clone(), vars);
    }
    for d in &prog.defs {
        g.scope = d.name.to_string();
        let scope: Vec<(Name, Vec<Atom>)> =
            d.params.iter().map(|p| (p.name.clone(), g.synth.candidates(&p.name, Some(p.ty), &d.body))).collect();
        let (mut env, graph) = g.scoped(scope, |g| g.gen(&d.body));
        let declared = g.params[&d.name].clone();
        for (p, ann) in d.params.iter().zip(declared) {
            let got = env.remove(&p.name);
            g.bind(ann, got, d.span, &p.name);
        }
        for x in env.keys() {
            g.push(Constraint::False(format!("`{x}` is not a parameter of `{}`", d.name)), d.span);
        }
        if !d.graph.entails(&graph) {
            g.push(Constraint::False(format!("graph of `{}` not entailed by its declaration", d.name)), d.span);
        }
    }
    g.scope = "main".to_string();
    let free: Vec<(Name, Vec<Atom>)> =
        prog.main.free_names().into_iter().map(|x| (x.clone(), g.synth.candidates(&x, None, &prog.main))).collect();
    let (env, _) = g.scoped(free, |g| g.gen(&prog.main));
    for x in env.keys() {
        g.push(Constraint::False(format!("`{x}` is free in main")), prog.main_span);
    }
    g.set
}

fn var(v: PVar) -> PExpr {
    PExpr::Var(v)
}

impl<'a> Gen<'a> {
    fn fresh(&mut self, origin: impl Into<String>, recipe: Recipe) -> PVar {
        self.set.vars.push(VarInfo { origin: origin.into(), declared: None, recipe });
        PVar(self.set.vars.len() as u32 - 1)
    }

    fn annotation(&mut self, t: TyId, origin: String) -> Option<(Capability, PVar)> {
        match self.ctx.table.view(t)? {
            Ty::Int => None,
            Ty::Mailbox(c, p) => {
                self.set.vars.push(VarInfo { origin, declared: Some(p.clone()), recipe: Recipe::Annotation });
                Some((c, PVar(self.set.vars.len() as u32 - 1)))
            }
        }
    }

    fn push(&mut self, c: Constraint, span: Span) {
        self.set.constraints.push(Located { constraint: c, scope: self.scope.clone(), span });
    }

    fn scoped<T>(&mut self, names: Vec<(Name, Vec<Atom>)>, f: impl FnOnce(&mut Self) -> T) -> T {
        let saved: Vec<(Name, Option<Vec<Atom>>)> =
            names.iter().map(|(n, _)| (n.clone(), self.synth.sigs_get(n))).collect();
        for (n, c) in names {
            self.synth.sigs_set(n, Some(c));
        }
        let r = f(self);
        for (n, old) in saved {
            self.synth.sigs_set(n, old);
        }
        r
    }

    /// Relate an annotation `κγ` to the synthesized entry of the same
    /// name: `κγ ≤ κα`, padding an absent name with `κ1`.
    fn bind(&mut self, ann: Option<(Capability, PVar)>, got: Option<Entry>, span: Span, x: &Name) {
        match (ann, got) {
            (None, None) | (None, Some(Entry::Int)) => {}
            (Some((c, g)), None) => self.push(Constraint::TyLe(c, var(g), PExpr::One), span),
            (Some((c, g)), Some(Entry::Mb(k, a))) if c == k => self.push(Constraint::TyLe(c, var(g), var(a)), span),
            _ => self.push(Constraint::False(format!("`{x}` used with the wrong kind or capability")), span),
        }
    }

    fn entry_for(&mut self, t: TyId, origin: String) -> Entry {
        match self.ctx.table.view(t) {
            Some(Ty::Mailbox(c, p)) => {
                let declared = Some(p.clone());
                self.set.vars.push(VarInfo { origin, declared, recipe: Recipe::Annotation });
                Entry::Mb(c, PVar(self.set.vars.len() as u32 - 1))
            }
            _ => Entry::Int,
        }
    }

    /// The join operator `Γ1 ∥ Γ2`.
    fn join(&mut self, mut a: CEnv, b: CEnv, span: Span) -> CEnv {
        for (x, e2) in b {
            let Some(e1) = a.remove(&x) else {
                a.insert(x, e2);
                continue;
            };
            let e = match (e1, e2) {
                (Entry::Int, Entry::Int) => Entry::Int,
                (Entry::Mb(Capability::Output, a1), Entry::Mb(Capability::Output, a2)) => {
                    let prod = PExpr::Prod(vec![var(a1), var(a2)]);
                    let v = self.fresh(format!("{x} joined"), Recipe::Expr(prod.clone()));
                    self.push(Constraint::TyLe(Capability::Output, var(v), prod), span);
                    Entry::Mb(Capability::Output, v)
                }
                (Entry::Mb(Capability::Output, a1), Entry::Mb(Capability::Input, a2))
                | (Entry::Mb(Capability::Input, a2), Entry::Mb(Capability::Output, a1)) => {
                    let v = self.fresh(format!("{x} joined"), Recipe::Quotient { num: a2, den: a1 });
                    self.push(Constraint::TyLe(Capability::Input, PExpr::Prod(vec![var(a1), var(v)]), var(a2)), span);
                    Entry::Mb(Capability::Input, v)
                }
                (Entry::Mb(Capability::Input, a1), Entry::Mb(Capability::Input, _)) => {
                    self.push(Constraint::False(format!("`{x}` read by two parallel processes")), span);
                    Entry::Mb(Capability::Input, a1)
                }
                (e1, _) => {
                    self.push(Constraint::False(format!("`{x}` used both as integer and mailbox")), span);
                    e1
                }
            };
            a.insert(x, e);
        }
        a
    }

    /// The merge operator over the residual environments of branches;
    /// names missing from a branch are padded with `κ1`.
    fn merge(&mut self, envs: Vec<CEnv>, span: Span) -> CEnv {
        let names: BTreeSet<Name> = envs.iter().flat_map(|e| e.keys().cloned()).collect();
        let mut out = CEnv::new();
        for x in names {
            let kinds: Vec<Option<&Entry>> = envs.iter().map(|e| e.get(&x)).collect();
            let first = kinds.iter().flatten().next().cloned().cloned().unwrap();
            let Entry::Mb(cap, _) = first else {
                if kinds.iter().flatten().any(|e| **e != Entry::Int) {
                    self.push(Constraint::False(format!("`{x}` used both as integer and mailbox")), span);
                }
                out.insert(x, Entry::Int);
                continue;
            };
            let mut parts = Vec::new();
            for k in kinds {
                match k {
                    Some(Entry::Mb(c, v)) if *c == cap => parts.push(*v),
                    Some(_) => {
                        self.push(Constraint::False(format!("`{x}` used inconsistently across branches")), span);
                    }
                    None => {
                        let pad = self.fresh(format!("{x} unused"), Recipe::Expr(PExpr::One));
                        self.push(Constraint::TyLe(cap, var(pad), PExpr::One), span);
                        parts.push(pad);
                    }
                }
            }
            let recipe = match cap {
                Capability::Output => Recipe::Expr(PExpr::Sum(parts.iter().map(|v| var(*v)).collect())),
                Capability::Input => Recipe::Meet(parts.clone()),
            };
            let v = self.fresh(format!("{x} merged"), recipe);
            for p in parts {
                self.push(Constraint::TyLe(cap, var(v), var(p)), span);
            }
            out.insert(x, Entry::Mb(cap, v));
        }
        out
    }

    fn gen(&mut self, p: &Process) -> (CEnv, DepGraph) {
        match p {
            Process::Done => (CEnv::new(), DepGraph::Empty),
            Process::Send { target, tag, args, span } => {
                let sig = match self.synth.signature(target, tag, args.len(), *span) {
                    Ok(a) => Some(a),
                    Err(d) => {
                        self.push(Constraint::False(d.message), *span);
                        None
                    }
                };
                let mut env = CEnv::new();
                let mut graph = DepGraph::Empty;
                let mut atom_args = Vec::new();
                for (k, a) in args.iter().enumerate() {
                    let t = sig.as_ref().map(|s| s.args[k]);
                    let (cap, hint) = match t.and_then(|t| self.ctx.table.view(t)) {
                        Some(Ty::Mailbox(c, p)) => (Some(c), p.clone()),
                        Some(Ty::Int) => (None, Pattern::One),
                        None => (if a.as_name().is_some() { Some(Capability::Output) } else { None }, Pattern::One),
                    };
                    match (a, cap) {
                        (Arg::Name(v), Some(c)) => {
                            let x = self.fresh(format!("{tag} argument {k}"), Recipe::Annotation);
                            self.set.vars[x.0 as usize].declared = Some(hint);
                            atom_args.push(ArgTy::Mailbox(c, x));
                            env = self.join(env, CEnv::from([(v.clone(), Entry::Mb(c, x))]), *span);
                            graph = DepGraph::union(graph, DepGraph::Edge(target.clone(), v.clone(), *span));
                        }
                        _ => {
                            atom_args.push(ArgTy::Int);
                            for x in arg_names(a) {
                                env = self.join(env, CEnv::from([(x, Entry::Int)]), *span);
                            }
                        }
                    }
                }
                let atom = PExpr::Atom(tag.clone(), atom_args);
                let b = self.fresh(format!("{target}!{tag}"), Recipe::Expr(atom.clone()));
                self.push(Constraint::TyLe(Capability::Output, var(b), atom), *span);
                env = self.join(env, CEnv::from([(target.clone(), Entry::Mb(Capability::Output, b))]), *span);
                if !graph.acyclic() {
                    self.push(Constraint::False("cyclic dependency graph".into()), *span);
                }
                (env, graph)
            }
            Process::Invoke { def, args, span } => {
                let (Some(d), Some(params)) = (self.prog.def(def.as_str()), self.params.get(def).cloned()) else {
                    self.push(Constraint::False(format!("unknown process `{def}`")), *span);
                    return (CEnv::new(), DepGraph::Empty);
                };
                if d.params.len() != args.len() {
                    self.push(Constraint::False(format!("arity of `{def}`")), *span);
                    return (CEnv::new(), DepGraph::Empty);
                }
                let mut env = CEnv::new();
                let mut mapping = HashMap::new();
                for ((param, a), ann) in d.params.iter().zip(args).zip(params) {
                    match (a, ann) {
                        (Arg::Name(v), Some((c, g))) => {
                            let x = self.fresh(format!("{def} argument {}", param.name), Recipe::Expr(var(g)));
                            self.push(Constraint::TyLe(c, var(x), var(g)), *span);
                            env = self.join(env, CEnv::from([(v.clone(), Entry::Mb(c, x))]), *span);
                            mapping.insert(param.name.clone(), v.clone());
                        }
                        (a, None) => {
                            for x in arg_names(a) {
                                env = self.join(env, CEnv::from([(x, Entry::Int)]), *span);
                            }
                        }
                        (Arg::Int(_), Some(_)) => {
                            self.push(Constraint::False(format!("integer passed to `{def}`.{}", param.name)), *span);
                        }
                    }
                }
                (env, d.graph.substitute(&mapping))
            }
            Process::Par(ps) => {
                let span = super::synth::span_of(p);
                let mut env = CEnv::new();
                let mut graph = DepGraph::Empty;
                for q in ps {
                    let (e, g) = self.gen(q);
                    env = self.join(env, e, span);
                    graph = DepGraph::union(graph, g);
                }
                if !graph.acyclic() {
                    self.push(Constraint::False("cyclic dependency graph".into()), span);
                }
                (env, graph)
            }
            Process::New { name, body, span } => {
                let cands = self.synth.candidates(name, None, body);
                let (mut env, graph) = self.scoped(vec![(name.clone(), cands)], |g| g.gen(body));
                let a = match env.remove(name) {
                    Some(Entry::Mb(Capability::Input, a)) => a,
                    None => {
                        let pad = self.fresh(format!("{name} unused"), Recipe::Expr(PExpr::One));
                        self.push(Constraint::TyLe(Capability::Input, var(pad), PExpr::One), *span);
                        pad
                    }
                    Some(_) => {
                        self.push(Constraint::False(format!("`{name}` is never read")), *span);
                        return (env, DepGraph::restrict(name.clone(), graph));
                    }
                };
                self.push(Constraint::TyLe(Capability::Input, PExpr::One, var(a)), *span);
                (env, DepGraph::restrict(name.clone(), graph))
            }
            Process::If { cond, then, els, span } => {
                let (e1, _) = self.gen(then);
                let (e2, _) = self.gen(els);
                let mut env = self.merge(vec![e1, e2], *span);
                let mut vars = Vec::new();
                cond.lhs.vars(&mut vars);
                cond.rhs.vars(&mut vars);
                for x in vars {
                    env = self.join(env, CEnv::from([(x, Entry::Int)]), *span);
                }
                let hub = Name::from("%if");
                let graph = DepGraph::restrict(
                    hub.clone(),
                    DepGraph::union_all(
                        env.iter()
                            .filter(|(_, e)| **e != Entry::Int)
                            .map(|(x, _)| DepGraph::Edge(hub.clone(), x.clone(), *span)),
                    ),
                );
                (env, graph)
            }
            Process::Guard { branches, span } => self.guard(branches, *span),
        }
    }

    fn guard(&mut self, branches: &[Branch], span: Span) -> (CEnv, DepGraph) {
        let u = branches[0].mailbox().clone();
        if branches.iter().any(|b| *b.mailbox() != u) {
            self.push(Constraint::False("guard refers to several mailboxes".into()), span);
        }
        let mut terms = Vec::new();
        let mut envs = Vec::new();
        let mut residuals = Vec::new();
        for b in branches {
            match b {
                Branch::Fail { .. } => terms.push(PExpr::Zero),
                Branch::Free { body, span, .. } => {
                    let (env, _) = self.gen(body);
                    if env.contains_key(&u) {
                        self.push(Constraint::False(format!("`{u}` used after free")), *span);
                    }
                    terms.push(PExpr::One);
                    envs.push(env);
                }
                Branch::Receive { tag, binders, body, span, .. } => {
                    let anns: Vec<Entry> = binders
                        .iter()
                        .map(|x| self.entry_for(x.ty, format!("{u}?{tag} binder {}", x.name)))
                        .collect();
                    let scope: Vec<(Name, Vec<Atom>)> = binders
                        .iter()
                        .map(|x| (x.name.clone(), self.synth.candidates(&x.name, Some(x.ty), body)))
                        .collect();
                    let (mut env, _) = self.scoped(scope, |g| g.gen(body));
                    for (x, ann) in binders.iter().zip(&anns) {
                        let got = env.remove(&x.name);
                        let ann = match ann {
                            Entry::Mb(c, v) => Some((*c, *v)),
                            Entry::Int => None,
                        };
                        self.bind(ann, got, *span, &x.name);
                    }
                    let beta_i = match env.remove(&u) {
                        Some(Entry::Mb(Capability::Input, v)) => v,
                        None => {
                            let pad = self.fresh(format!("{u} unused"), Recipe::Expr(PExpr::One));
                            self.push(Constraint::TyLe(Capability::Input, var(pad), PExpr::One), *span);
                            pad
                        }
                        Some(_) => {
                            self.push(Constraint::False(format!("`{u}` not read after `{tag}`")), *span);
                            self.fresh(format!("{u} unused"), Recipe::Expr(PExpr::Zero))
                        }
                    };
                    let atom = PExpr::Atom(
                        tag.clone(),
                        anns.iter()
                            .map(|e| match e {
                                Entry::Mb(c, v) => ArgTy::Mailbox(*c, *v),
                                Entry::Int => ArgTy::Int,
                            })
                            .collect(),
                    );
                    terms.push(PExpr::Prod(vec![atom.clone(), var(beta_i)]));
                    residuals.push((beta_i, atom, *span));
                    envs.push(env);
                }
            }
        }
        let delta = if envs.is_empty() { CEnv::new() } else { self.merge(envs, span) };
        let sum = PExpr::Sum(terms);
        let beta = self.fresh(format!("{u} guard"), Recipe::Expr(sum.clone()));
        self.push(Constraint::TyLe(Capability::Input, var(beta), sum), span);
        for (v, atom, s) in residuals {
            self.push(Constraint::Residual { var: v, atom, whole: beta }, s);
        }
        let graph = DepGraph::union_all(
            delta
                .iter()
                .filter(|(_, e)| **e != Entry::Int)
                .map(|(x, _)| DepGraph::Edge(u.clone(), x.clone(), span)),
        );
        let mut env = delta;
        if env.contains_key(&u) {
            self.push(Constraint::False(format!("`{u}` read by the guard and used by a continuation")), span);
        }
        env.insert(u, Entry::Mb(Capability::Input, beta));
        (env, graph)
    }
}

/// Evaluation of pattern expressions under an assignment.
struct Eval<'c> {
    ctx: &'c mut TypeCtx,
    values: HashMap<PVar, Pattern>,
}

impl Eval<'_> {
    fn get(&self, v: PVar) -> Result<&Pattern, String> {
        self.values.get(&v).ok_or_else(|| format!("{v} is unassigned"))
    }

    fn eval(&mut self, e: &PExpr) -> Result<Pattern, String> {
        Ok(match e {
            PExpr::Zero => Pattern::Zero,
            PExpr::One => Pattern::One,
            PExpr::Var(v) => self.get(*v)?.clone(),
            PExpr::Atom(tag, args) => {
                let mut ids = Vec::new();
                for a in args {
                    ids.push(match a {
                        ArgTy::Int => self.ctx.table.int(),
                        ArgTy::Mailbox(c, v) => {
                            let p = self.get(*v)?.clone();
                            self.ctx.table.mailbox(*c, p)
                        }
                    });
                }
                Pattern::Atom(Atom::new(tag.clone(), ids))
            }
            PExpr::Sum(es) => {
                let ps = es.iter().map(|x| self.eval(x)).collect::<Result<Vec<_>, _>>()?;
                Pattern::sum_all(ps)
            }
            PExpr::Prod(es) => {
                let ps = es.iter().map(|x| self.eval(x)).collect::<Result<Vec<_>, _>>()?;
                Pattern::prod_all(ps)
            }
            PExpr::Star(x) => Pattern::star(self.eval(x)?),
        })
    }
}

fn und(u: Undecided) -> String {
    u.to_string()
}

/// Complete an assignment of the annotation variables by computing every
/// internal variable from its defining rule. Returns the variables that
/// could not be computed alongside the assignment.
pub fn solve_forward(
    set: &ConstraintSet,
    ctx: &mut TypeCtx,
    annotations: &HashMap<PVar, Pattern>,
) -> (HashMap<PVar, Pattern>, Vec<(PVar, String)>) {
    let mut ev = Eval { ctx, values: annotations.clone() };
    let mut failed = Vec::new();
    for (i, info) in set.vars.iter().enumerate() {
        let v = PVar(i as u32);
        if ev.values.contains_key(&v) {
            continue;
        }
        let r: Result<Pattern, String> = match &info.recipe {
            Recipe::Annotation => info.declared.clone().ok_or_else(|| "annotation without a value".to_string()),
            Recipe::Expr(e) => ev.eval(e),
            Recipe::Quotient { num, den } => match (ev.get(*num).cloned(), ev.get(*den).cloned()) {
                (Ok(n), Ok(d)) => {
                    if d == Pattern::One {
                        Ok(n)
                    } else {
                        ev.ctx.largest_quotient(&n, &d).map_err(und).and_then(|q| q.ok_or("no quotient found".into()))
                    }
                }
                (Err(e), _) | (_, Err(e)) => Err(e),
            },
            Recipe::Meet(vs) => (|| {
                let ps: Vec<Pattern> = vs.iter().map(|x| ev.get(*x).cloned()).collect::<Result<_, _>>()?;
                'outer: for p in &ps {
                    for q in &ps {
                        if !ev.ctx.included(p, q).map_err(und)? {
                            continue 'outer;
                        }
                    }
                    return Ok(p.clone());
                }
                Err("no branch pattern is included in the others".to_string())
            })(),
        };
        match r {
            Ok(p) => {
                ev.values.insert(v, p);
            }
            Err(e) => failed.push((v, e)),
        }
    }
    (ev.values, failed)
}

/// Constraints violated by an assignment.
pub fn check_solution(set: &ConstraintSet, ctx: &mut TypeCtx, assignment: &HashMap<PVar, Pattern>) -> Vec<SolutionError> {
    let mut ev = Eval { ctx, values: assignment.clone() };
    let mut out = Vec::new();
    for (index, l) in set.constraints.iter().enumerate() {
        let r: Result<(), String> = (|| match &l.constraint {
            Constraint::False(why) => Err(why.clone()),
            Constraint::Sub(e, f) => {
                let (e, f) = (ev.eval(e)?, ev.eval(f)?);
                holds(ev.ctx.included(&e, &f).map_err(und)?, "inclusion fails")
            }
            Constraint::TyLe(c, e, f) => {
                let (e, f) = (ev.eval(e)?, ev.eval(f)?);
                let ok = match c {
                    Capability::Input => ev.ctx.included(&e, &f),
                    Capability::Output => ev.ctx.included(&f, &e),
                }
                .map_err(und)?;
                holds(ok, "subtyping fails")
            }
            Constraint::Residual { var, atom, whole } => {
                let m = match ev.eval(atom)? {
                    Pattern::Atom(m) => m,
                    _ => unreachable!(),
                };
                let w = ev.get(*whole)?.clone();
                let v = ev.get(*var)?.clone();
                match ev.ctx.residual(&w, &m).map_err(und)? {
                    None => Err("residual undefined".into()),
                    Some(r) => holds(ev.ctx.pattern_equiv(&r, &v).map_err(und)?, "residual not equivalent"),
                }
            }
        })();
        if let Err(reason) = r {
            out.push(SolutionError { index, constraint: l.constraint.to_string(), reason });
        }
    }
    out
}

fn holds(b: bool, why: &str) -> Result<(), String> {
    if b {
        Ok(())
    } else {
        Err(why.to_string())
    }
}
