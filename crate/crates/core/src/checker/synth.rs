use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::usage::{Conflict, Usage, UsageEnv};
use super::{name_list, Code, Diagnostic, Witness};
use crate::depgraph::DepGraph;
use crate::patterns::{Atom, Inclusion, NormalFormViolation, Pattern, Undecided};
use crate::syntax::{arg_names, Arg, Branch, Definition, Name, Process, Program, Span};
use crate::types::{Ty, TyId, TypeCtx, TypeEnv};

type R<T> = Result<T, Diagnostic>;

/// Result of synthesis: `⊢ P ▹ env; graph`.
#[derive(Clone, Debug)]
pub struct Judgment {
    pub env: UsageEnv,
    pub graph: DepGraph,
}

impl Judgment {
    fn empty() -> Self {
        Judgment { env: UsageEnv::new(), graph: DepGraph::Empty }
    }
}

pub(crate) struct Synth<'a> {
    prog: &'a Program,
    ctx: &'a TypeCtx,
    mixed: bool,
    /// Message signatures known for the names in scope.
    sigs: HashMap<Name, Vec<Atom>>,
    fresh: usize,
}

struct BranchOut {
    mailbox: Name,
    span: Span,
    term: Pattern,
    /// Leading atom and continuation pattern of a receive.
    recv: Option<(Atom, Pattern)>,
    /// `None` for `fail`.
    env: Option<UsageEnv>,
}

fn undecided(span: Span) -> impl Fn(Undecided) -> Diagnostic {
    move |u| Diagnostic::new(Code::Undecided, u.to_string(), span)
}

/// Span of a process; parallel compositions join their children.
pub(crate) fn span_of(p: &Process) -> Span {
    match p {
        Process::Par(ps) => ps.iter().map(span_of).filter(|s| s.end > 0).reduce(Span::join).unwrap_or_default(),
        p => p.span(),
    }
}

impl<'a> Synth<'a> {
    pub fn new(prog: &'a Program, ctx: &'a TypeCtx, mixed: bool) -> Self {
        Synth { prog, ctx, mixed, sigs: HashMap::new(), fresh: 0 }
    }

    fn pat(&self, p: &Pattern) -> String {
        p.display(&self.ctx.table).to_string()
    }

    fn ty(&self, t: TyId) -> String {
        self.ctx.table.display(t).to_string()
    }

    fn config_witness(&self, inc: &Inclusion) -> Option<Witness> {
        inc.witness().map(|c| Witness::Config { config: c.display(&self.ctx.table).to_string() })
    }

    fn included(&self, e: &Pattern, f: &Pattern, span: Span) -> R<Inclusion> {
        self.ctx.subpattern(e, f).map_err(undecided(span))
    }

    // ---- signatures -----------------------------------------------------

    fn push_type_atoms(&self, t: TyId, out: &mut Vec<Atom>) {
        if let Some(Ty::Mailbox(_, p)) = self.ctx.table.view(t) {
            for a in p.atoms() {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
        }
    }

    /// Candidate message atoms for `x`: its declared type, then every
    /// atom its scope commits it to.
    pub(crate) fn candidates(&self, x: &Name, declared: Option<TyId>, scope: &Process) -> Vec<Atom> {
        let mut out = Vec::new();
        if let Some(t) = declared {
            self.push_type_atoms(t, &mut out);
        }
        self.scan(x, scope, &mut out);
        out
    }

    fn scan(&self, x: &Name, p: &Process, out: &mut Vec<Atom>) {
        match p {
            Process::Done => {}
            Process::Send { target, tag, args, .. } => {
                for (k, a) in args.iter().enumerate() {
                    if a.as_name() != Some(x) {
                        continue;
                    }
                    if let Some(cands) = self.sigs.get(target) {
                        for atom in cands.iter().filter(|m| m.tag == *tag && m.args.len() == args.len()) {
                            self.push_type_atoms(atom.args[k], out);
                        }
                    }
                }
            }
            Process::Invoke { def, args, .. } => {
                if let Some(d) = self.prog.def(def.as_str()) {
                    for (param, a) in d.params.iter().zip(args) {
                        if a.as_name() == Some(x) {
                            self.push_type_atoms(param.ty, out);
                        }
                    }
                }
            }
            Process::Par(ps) => ps.iter().for_each(|q| self.scan(x, q, out)),
            Process::New { name, body, .. } => {
                if name != x {
                    self.scan(x, body, out)
                }
            }
            Process::If { then, els, .. } => {
                self.scan(x, then, out);
                self.scan(x, els, out);
            }
            Process::Guard { branches, .. } => {
                for b in branches {
                    match b {
                        Branch::Fail { .. } => {}
                        Branch::Free { body, .. } => self.scan(x, body, out),
                        Branch::Receive { mailbox, tag, binders, body, .. } => {
                            if mailbox == x {
                                let atom = Atom::new(tag.clone(), binders.iter().map(|b| b.ty).collect());
                                if !out.contains(&atom) {
                                    out.push(atom);
                                }
                            }
                            if !binders.iter().any(|b| b.name == *x) {
                                self.scan(x, body, out);
                            }
                        }
                    }
                }
            }
        }
    }

    pub(crate) fn with_scope<T>(&mut self, names: Vec<(Name, Vec<Atom>)>, f: impl FnOnce(&mut Self) -> T) -> T {
        let saved: Vec<(Name, Option<Vec<Atom>>)> =
            names.into_iter().map(|(n, c)| (n.clone(), self.sigs.insert(n, c))).collect();
        let r = f(self);
        for (n, old) in saved.into_iter().rev() {
            match old {
                Some(c) => self.sigs.insert(n, c),
                None => self.sigs.remove(&n),
            };
        }
        r
    }

    pub(crate) fn sigs_get(&self, n: &Name) -> Option<Vec<Atom>> {
        self.sigs.get(n).cloned()
    }

    pub(crate) fn sigs_set(&mut self, n: Name, c: Option<Vec<Atom>>) {
        match c {
            Some(c) => self.sigs.insert(n, c),
            None => self.sigs.remove(&n),
        };
    }

    pub(crate) fn signature(&self, target: &Name, tag: &Name, arity: usize, span: Span) -> R<Atom> {
        let cands = self.sigs.get(target).map(Vec::as_slice).unwrap_or(&[]);
        let same_tag: Vec<&Atom> = cands.iter().filter(|m| m.tag == *tag).collect();
        if let Some(m) = same_tag.iter().find(|m| m.args.len() == arity) {
            return Ok((*m).clone());
        }
        if let Some(m) = same_tag.first() {
            return Err(Diagnostic::new(
                Code::Arity,
                format!("message `{tag}` on `{target}` carries {arity} argument(s) but its type expects {}", m.args.len()),
                span,
            ));
        }
        Err(Diagnostic::new(
            Code::UntypedMessage,
            format!("no type for message `{tag}` stored in `{target}`: no declaration or receive mentions it"),
            span,
        ))
    }

    // ---- environments ---------------------------------------------------

    fn add(&self, env: &mut UsageEnv, x: &Name, u: Usage, span: Span) -> R<()> {
        let merged = match env.remove(x) {
            None => u,
            Some(old) => self.combine(x, old, u, span)?,
        };
        env.insert(x.clone(), merged);
        Ok(())
    }

    fn combine(&self, x: &Name, a: Usage, b: Usage, span: Span) -> R<Usage> {
        a.combine(b).map_err(|c| match c {
            Conflict::BothInputs(s1, s2) => Diagnostic::new(
                Code::CombinationUndefined,
                format!("`{x}` is used for input by two parallel processes"),
                span,
            )
            .with_related([s1, s2]),
            Conflict::Kind => {
                Diagnostic::new(Code::KindMismatch, format!("`{x}` is used both as an integer and as a mailbox"), span)
            }
        })
    }

    fn combine_envs(&self, mut a: UsageEnv, b: UsageEnv, span: Span) -> R<UsageEnv> {
        for (x, u) in b {
            self.add(&mut a, &x, u, span)?;
        }
        Ok(a)
    }

    /// Largest F with `O · F ⊑ I`: the input pattern left to the owner
    /// of `!O ∥ ?I`.
    fn residual_input(&self, x: &Name, out: &Pattern, input: &Pattern, span: Span) -> R<Pattern> {
        if *out == Pattern::One {
            return Ok(input.clone());
        }
        self.ctx.largest_quotient(input, out).map_err(undecided(span))?.ok_or_else(|| {
            Diagnostic::new(
                Code::CombinationUnresolved,
                format!(
                    "cannot resolve the usage of `{x}`: no pattern F found with {} · F ⊑ {}",
                    self.pat(out),
                    self.pat(input)
                ),
                span,
            )
        })
    }

    /// `T ≤ usage`: a holder of type `t` may behave as the usage says.
    /// `None` means the name is unused, which needs `t` irrelevant.
    fn accept(&self, x: &Name, t: TyId, usage: Option<Usage>, span: Span) -> R<()> {
        let view = self.ctx.table.view(t).ok_or_else(|| {
            Diagnostic::new(Code::UnboundName, format!("type of `{x}` is declared but never defined"), span)
        })?;
        let mismatch = |what: &str| {
            Diagnostic::new(Code::KindMismatch, format!("`{x}` has type {} but is {what}", self.ty(t)), span)
        };
        match (view, usage) {
            (Ty::Int, Some(Usage::Int)) | (Ty::Int, None) => Ok(()),
            (Ty::Int, Some(_)) => Err(mismatch("used as a mailbox")),
            (Ty::Mailbox(..), Some(Usage::Int)) => Err(mismatch("used as an integer")),
            (Ty::Mailbox(..), None) => {
                let c = self.ctx.classify(t).map_err(undecided(span))?;
                if c.relevant {
                    Err(Diagnostic::new(
                        Code::IrrelevantDropFailed,
                        format!("`{x}` has relevant type {} but is never used", self.ty(t)),
                        span,
                    ))
                } else {
                    Ok(())
                }
            }
            (Ty::Mailbox(crate::types::Capability::Output, g), Some(Usage::Mailbox { out, input: None, out_span, .. })) => {
                let inc = self.included(&out, g, span)?;
                if inc.holds() {
                    return Ok(());
                }
                let d = Diagnostic::new(
                    Code::SubtypeFailed,
                    format!("`{x}` is used as !{} which exceeds its type {}", self.pat(&out), self.ty(t)),
                    out_span.unwrap_or(span),
                );
                Err(match self.config_witness(&inc) {
                    Some(w) => d.with_witness(w),
                    None => d,
                })
            }
            (Ty::Mailbox(crate::types::Capability::Output, _), Some(Usage::Mailbox { in_span, .. })) => {
                Err(Diagnostic::new(
                    Code::KindMismatch,
                    format!("`{x}` has output type {} but is read from", self.ty(t)),
                    in_span.unwrap_or(span),
                ))
            }
            (Ty::Mailbox(crate::types::Capability::Input, _), Some(Usage::Mailbox { input: None, .. })) => {
                Err(Diagnostic::new(
                    Code::IrrelevantDropFailed,
                    format!("`{x}` has input type {} but is never read", self.ty(t)),
                    span,
                ))
            }
            (Ty::Mailbox(crate::types::Capability::Input, g), Some(Usage::Mailbox { out, input: Some(i), .. })) => {
                let f = self.residual_input(x, &out, &i, span)?;
                let inc = self.included(g, &f, span)?;
                if inc.holds() {
                    return Ok(());
                }
                let d = Diagnostic::new(
                    Code::SubtypeFailed,
                    format!(
                        "`{x}` has type {} but its usage only accepts ?{}",
                        self.ty(t),
                        f.display_prec(&self.ctx.table, 3)
                    ),
                    span,
                );
                Err(match self.config_witness(&inc) {
                    Some(w) => d.with_witness(w),
                    None => d,
                })
            }
        }
    }

    fn arg_usage(&self, env: &mut UsageEnv, graph: &mut DepGraph, owner: &Name, a: &Arg, t: TyId, span: Span) -> R<()> {
        match a {
            Arg::Name(v) => {
                let u = Usage::of_type(&self.ctx.table, t, span).ok_or_else(|| {
                    Diagnostic::new(Code::UnboundName, format!("argument type {} is undefined", self.ty(t)), span)
                })?;
                let mailbox = !u.is_int();
                self.add(env, v, u, span)?;
                if mailbox {
                    *graph = DepGraph::union(std::mem::take(graph), DepGraph::Edge(owner.clone(), v.clone(), span));
                }
                Ok(())
            }
            Arg::Int(_) => {
                if !self.ctx.table.is_int(t) {
                    return Err(Diagnostic::new(
                        Code::KindMismatch,
                        format!("integer passed where {} is expected", self.ty(t)),
                        span,
                    ));
                }
                for x in arg_names(a) {
                    self.add(env, &x, Usage::Int, span)?;
                }
                Ok(())
            }
        }
    }

    fn cycle_error(&self, graph: &DepGraph, span: Span, what: &str) -> Diagnostic {
        let cycle = graph.find_cycle().unwrap_or_default();
        let names: Vec<String> = cycle.iter().map(|(a, b, _)| format!("{a} - {b}")).collect();
        Diagnostic::new(Code::Cycle, format!("dependency cycle {} at {what}", names.join(", ")), span)
            .with_related(cycle.iter().map(|e| e.2))
            .with_witness(Witness::Cycle { edges: cycle.iter().map(|(a, b, _)| [a.to_string(), b.to_string()]).collect() })
    }

    // ---- synthesis ------------------------------------------------------

    pub fn synth_top(&mut self, p: &Process) -> R<Judgment> {
        let free: Vec<(Name, Vec<Atom>)> =
            p.free_names().into_iter().map(|x| (x.clone(), self.candidates(&x, None, p))).collect();
        self.with_scope(free, |s| s.synth(p))
    }

    pub fn synth(&mut self, p: &Process) -> R<Judgment> {
        match p {
            Process::Done => Ok(Judgment::empty()),
            Process::Send { target, tag, args, span } => {
                let atom = self.signature(target, tag, args.len(), *span)?;
                let mut env = UsageEnv::new();
                let mut graph = DepGraph::Empty;
                env.insert(target.clone(), Usage::output(Pattern::Atom(atom.clone()), *span));
                for (a, &t) in args.iter().zip(&atom.args) {
                    self.arg_usage(&mut env, &mut graph, target, a, t, *span)?;
                }
                if !graph.acyclic() {
                    return Err(self.cycle_error(&graph, *span, "message send"));
                }
                Ok(Judgment { env, graph })
            }
            Process::Invoke { def, args, span } => {
                let d = self.prog.def(def.as_str()).ok_or_else(|| {
                    Diagnostic::new(Code::UnknownProcess, format!("unknown process `{def}`"), *span)
                })?;
                if d.params.len() != args.len() {
                    return Err(Diagnostic::new(
                        Code::Arity,
                        format!("`{def}` expects {} argument(s), got {}", d.params.len(), args.len()),
                        *span,
                    ));
                }
                let mut env = UsageEnv::new();
                let mut mapping = HashMap::new();
                for (param, a) in d.params.iter().zip(args) {
                    let mut ignored = DepGraph::Empty;
                    self.arg_usage(&mut env, &mut ignored, &param.name, a, param.ty, *span)?;
                    if let Arg::Name(v) = a {
                        mapping.insert(param.name.clone(), v.clone());
                    }
                }
                let graph = with_span(&d.graph.substitute(&mapping), *span);
                if !graph.acyclic() {
                    return Err(self.cycle_error(&graph, *span, &format!("invocation of `{def}`")));
                }
                Ok(Judgment { env, graph })
            }
            Process::Par(ps) => {
                let span = span_of(p);
                let mut acc = Judgment::empty();
                for q in ps {
                    let j = self.synth(q)?;
                    acc.env = self.combine_envs(acc.env, j.env, span)?;
                    acc.graph = DepGraph::union(acc.graph, j.graph);
                    if !acc.graph.acyclic() {
                        return Err(self.cycle_error(&acc.graph, span, "parallel composition"));
                    }
                }
                Ok(acc)
            }
            Process::New { name, body, span } => {
                let cands = self.candidates(name, None, body);
                let mut j = self.with_scope(vec![(name.clone(), cands)], |s| s.synth(body))?;
                self.close_mailbox(name, j.env.remove(name), *span)?;
                j.graph = DepGraph::restrict(name.clone(), j.graph);
                Ok(j)
            }
            Process::If { cond, then, els, span } => {
                let j1 = self.synth(then)?;
                let j2 = self.synth(els)?;
                let mut env = self.reconcile(vec![(j1.env, then.span()), (j2.env, els.span())], *span)?;
                let mut vars = Vec::new();
                cond.lhs.vars(&mut vars);
                cond.rhs.vars(&mut vars);
                for x in vars {
                    self.add(&mut env, &x, Usage::Int, *span)?;
                }
                self.fresh += 1;
                let hub = Name::from(format!("%if{}", self.fresh));
                let edges = env
                    .iter()
                    .filter(|(_, u)| !u.is_int())
                    .map(|(x, _)| DepGraph::Edge(hub.clone(), x.clone(), *span));
                let graph = DepGraph::restrict(hub.clone(), DepGraph::union_all(edges));
                Ok(Judgment { env, graph })
            }
            Process::Guard { branches, span } => self.guard(branches, *span),
        }
    }

    /// `new a`: every message stored in `a` must be consumed, i.e. the
    /// usage must accept `?1`.
    fn close_mailbox(&self, a: &Name, usage: Option<Usage>, span: Span) -> R<()> {
        match usage {
            None => Err(Diagnostic::new(
                Code::UnbalancedMailbox,
                format!("mailbox `{a}` is created but never read or freed"),
                span,
            )),
            Some(Usage::Int) => Err(Diagnostic::new(Code::KindMismatch, format!("`{a}` is used as an integer"), span)),
            Some(Usage::Mailbox { out, input: None, out_span, .. }) => Err(Diagnostic::new(
                Code::UnbalancedMailbox,
                format!("messages {} stored in `{a}` are never consumed", self.pat(&out)),
                out_span.unwrap_or(span),
            )),
            Some(Usage::Mailbox { out, input: Some(i), .. }) => {
                let f = self.residual_input(a, &out, &i, span)?;
                let inc = self.included(&Pattern::One, &f, span)?;
                if inc.holds() {
                    return Ok(());
                }
                // find a stored configuration the reader cannot consume
                let witness = self
                    .included(&out, &i, span)
                    .ok()
                    .and_then(|w| self.config_witness(&w))
                    .unwrap_or(Witness::Text { text: format!("stored {}", self.pat(&out)) });
                Err(Diagnostic::new(
                    Code::UnbalancedMailbox,
                    format!(
                        "mailbox `{a}` receives {} but its reader expects {}",
                        self.pat(&out),
                        self.pat(&i)
                    ),
                    span,
                )
                .with_witness(witness))
            }
        }
    }

    fn guard(&mut self, branches: &[Branch], span: Span) -> R<Judgment> {
        let mut actions: Vec<Name> = Vec::new();
        for b in branches {
            if !actions.contains(b.mailbox()) {
                actions.push(b.mailbox().clone());
            }
        }
        if actions.len() > 1 && !self.mixed {
            return Err(Diagnostic::new(
                Code::MixedGuard,
                format!("guard actions refer to different mailboxes {}", name_list(&actions)),
                span,
            )
            .with_related(branches.iter().map(Branch::span)));
        }
        let mut outs = Vec::with_capacity(branches.len());
        for b in branches {
            outs.push(self.branch(b)?);
        }

        // pattern of each action mailbox
        let mut lit: BTreeMap<Name, Vec<Pattern>> = BTreeMap::new();
        for o in &outs {
            lit.entry(o.mailbox.clone()).or_default().push(o.term.clone());
        }
        let sum = |terms: &[Pattern]| -> Pattern {
            match terms {
                [t] => t.clone(),
                ts => Pattern::Sum(ts.to_vec()),
            }
        };
        let mut patterns: BTreeMap<Name, Pattern> = lit.iter().map(|(u, ts)| (u.clone(), sum(ts))).collect();
        let mut passive: BTreeSet<Name> = BTreeSet::new();

        // continuations of the other actions see each action mailbox whole
        let mut envs: Vec<(UsageEnv, Span)> = Vec::new();
        let mut seen_by_others: BTreeMap<Name, Vec<(Pattern, Span)>> = BTreeMap::new();
        for o in &mut outs {
            let Some(env) = o.env.as_mut() else { continue };
            for v in &actions {
                if *v == o.mailbox {
                    continue;
                }
                let f = match env.remove(v) {
                    Some(Usage::Mailbox { out, input: Some(i), .. }) => self.residual_input(v, &out, &i, o.span)?,
                    _ => {
                        return Err(Diagnostic::new(
                            Code::IrrelevantDropFailed,
                            format!("`{v}` is an action mailbox of this guard but the continuation does not read it"),
                            o.span,
                        ))
                    }
                };
                seen_by_others.entry(v.clone()).or_default().push((f, o.span));
            }
            envs.push((std::mem::take(env), o.span));
        }
        if actions.len() > 1 {
            let has_unit: Vec<bool> = actions
                .iter()
                .map(|u| self.ctx.included(&Pattern::One, &patterns[u]).map_err(undecided(span)))
                .collect::<R<_>>()?;
            if has_unit.iter().any(|b| *b) {
                for (u, b) in actions.iter().zip(has_unit) {
                    if !b && seen_by_others.contains_key(u) {
                        passive.insert(u.clone());
                    }
                }
            }
            for u in &passive {
                let rest: Vec<Pattern> = seen_by_others[u].iter().map(|x| x.0.clone()).collect();
                let r = self.least_of(u, &rest, span)?;
                let p = patterns.remove(u).unwrap();
                let mut terms = match p {
                    Pattern::Sum(ts) => ts,
                    t => vec![t],
                };
                terms.push(r);
                patterns.insert(u.clone(), Pattern::Sum(terms));
            }
            for (v, fs) in &seen_by_others {
                for (f, s) in fs {
                    let inc = self.included(&patterns[v], f, *s)?;
                    if !inc.holds() {
                        let d = Diagnostic::new(
                            Code::BranchMismatch,
                            format!(
                                "a branch continuation reads `{v}` as ?{} but the guard gives it ?{}",
                                f.display_prec(&self.ctx.table, 3),
                                patterns[v].display_prec(&self.ctx.table, 3)
                            ),
                            *s,
                        );
                        return Err(match self.config_witness(&inc) {
                            Some(w) => d.with_witness(w),
                            None => d,
                        });
                    }
                }
            }
        }

        for u in &actions {
            let e = &patterns[u];
            if passive.contains(u) {
                for o in outs.iter().filter(|o| o.mailbox == *u) {
                    let Some((m, cont)) = &o.recv else { continue };
                    let r = self.ctx.residual(e, m).map_err(undecided(o.span))?;
                    let ok = match &r {
                        Some(r) => self.included(r, cont, o.span)?.holds(),
                        None => false,
                    };
                    if !ok {
                        return Err(Diagnostic::new(
                            Code::NfViolation,
                            format!(
                                "after receiving {} from `{u}` the mailbox may hold more than the continuation accepts ({})",
                                Pattern::Atom(m.clone()).display(&self.ctx.table),
                                self.pat(cont)
                            ),
                            o.span,
                        ));
                    }
                }
            } else if let Some(v) = self.ctx.normal_form_violation(e).map_err(undecided(span))? {
                return Err(self.nf_error(u, e, v, span));
            }
        }

        let mut env = if envs.is_empty() { UsageEnv::new() } else { self.reconcile(envs, span)? };
        let edges: Vec<DepGraph> = actions
            .iter()
            .flat_map(|u| {
                env.iter().filter(|(_, x)| !x.is_int()).map(move |(v, _)| DepGraph::Edge(u.clone(), v.clone(), span))
            })
            .collect();
        let graph = DepGraph::union_all(edges);
        for u in &actions {
            if env.contains_key(u) {
                return Err(Diagnostic::new(
                    Code::CombinationUndefined,
                    format!("`{u}` is read by the guard and still used by a continuation"),
                    span,
                ));
            }
            env.insert(u.clone(), Usage::input(patterns[u].clone(), span));
        }
        if !graph.acyclic() {
            return Err(self.cycle_error(&graph, span, "guard"));
        }
        Ok(Judgment { env, graph })
    }

    fn nf_error(&self, u: &Name, e: &Pattern, v: NormalFormViolation, span: Span) -> Diagnostic {
        let t = &self.ctx.table;
        match v {
            NormalFormViolation::Shape(s) => Diagnostic::new(
                Code::NfViolation,
                format!("guard pattern {} for `{u}` has a summand {} not headed by a message", self.pat(e), self.pat(&s)),
                span,
            ),
            NormalFormViolation::ResidualUndefined(m) => Diagnostic::new(
                Code::NfViolation,
                format!(
                    "guard pattern {} for `{u}` has no residual for {}",
                    self.pat(e),
                    Pattern::Atom(m).display(t)
                ),
                span,
            ),
            NormalFormViolation::Mismatch { atom, continuation, residual, witness } => {
                let d = Diagnostic::new(
                    Code::NfViolation,
                    format!(
                        "guard pattern {} for `{u}` is not in normal form: after {} the continuation expects {} but the mailbox may hold {}",
                        self.pat(e),
                        Pattern::Atom(atom).display(t),
                        self.pat(&continuation),
                        self.pat(&residual)
                    ),
                    span,
                );
                match witness {
                    Some(c) => d.with_witness(Witness::Config { config: c.display(t).to_string() }),
                    None => d,
                }
            }
        }
    }

    fn branch(&mut self, b: &Branch) -> R<BranchOut> {
        match b {
            Branch::Fail { mailbox, span } => {
                Ok(BranchOut { mailbox: mailbox.clone(), span: *span, term: Pattern::Zero, recv: None, env: None })
            }
            Branch::Free { mailbox, body, span } => {
                let j = self.synth(body)?;
                if j.env.contains_key(mailbox) {
                    return Err(Diagnostic::new(
                        Code::UseAfterFree,
                        format!("`{mailbox}` is used after being freed"),
                        j.env[mailbox].span(),
                    )
                    .with_related([*span]));
                }
                Ok(BranchOut { mailbox: mailbox.clone(), span: *span, term: Pattern::One, recv: None, env: Some(j.env) })
            }
            Branch::Receive { mailbox, tag, binders, body, span } if fails_on(body, mailbox) => {
                // `fail` is typed in any environment, binders included
                let atom = Atom::new(tag.clone(), binders.iter().map(|x| x.ty).collect());
                let term = Pattern::Prod(vec![Pattern::Atom(atom.clone()), Pattern::Zero]);
                Ok(BranchOut { mailbox: mailbox.clone(), span: *span, term, recv: Some((atom, Pattern::Zero)), env: None })
            }
            Branch::Receive { mailbox, tag, binders, body, span } => {
                let scope: Vec<(Name, Vec<Atom>)> =
                    binders.iter().map(|x| (x.name.clone(), self.candidates(&x.name, Some(x.ty), body))).collect();
                let mut j = self.with_scope(scope, |s| s.synth(body))?;
                for x in binders {
                    let u = j.env.remove(&x.name);
                    self.accept(&x.name, x.ty, u, *span)?;
                }
                let cont = match j.env.remove(mailbox) {
                    Some(Usage::Mailbox { out, input: Some(i), .. }) => self.residual_input(mailbox, &out, &i, *span)?,
                    Some(Usage::Int) => {
                        return Err(Diagnostic::new(
                            Code::KindMismatch,
                            format!("`{mailbox}` is used as an integer"),
                            *span,
                        ))
                    }
                    _ => {
                        return Err(Diagnostic::new(
                            Code::IrrelevantDropFailed,
                            format!("`{mailbox}` must be read or freed after receiving `{tag}`"),
                            *span,
                        ))
                    }
                };
                let atom = Atom::new(tag.clone(), binders.iter().map(|x| x.ty).collect());
                let term = if cont == Pattern::One {
                    Pattern::Atom(atom.clone())
                } else {
                    Pattern::Prod(vec![Pattern::Atom(atom.clone()), cont.clone()])
                };
                Ok(BranchOut {
                    mailbox: mailbox.clone(),
                    span: *span,
                    term,
                    recv: Some((atom, cont)),
                    env: Some(j.env),
                })
            }
        }
    }

    /// A pattern included in all of `ps`, chosen among them.
    fn least_of(&self, x: &Name, ps: &[Pattern], span: Span) -> R<Pattern> {
        'outer: for p in ps {
            for q in ps {
                if !self.ctx.included(p, q).map_err(undecided(span))? {
                    continue 'outer;
                }
            }
            return Ok(p.clone());
        }
        let shown: Vec<String> = ps.iter().map(|p| format!("?{}", p.display_prec(&self.ctx.table, 3))).collect();
        Err(Diagnostic::new(
            Code::BranchMismatch,
            format!("branches disagree on the type of `{x}`: {}", shown.join(" vs ")),
            span,
        ))
    }

    /// A residual environment usable by every branch.
    fn reconcile(&self, envs: Vec<(UsageEnv, Span)>, span: Span) -> R<UsageEnv> {
        if envs.len() == 1 {
            return Ok(envs.into_iter().next().unwrap().0);
        }
        let names: BTreeSet<Name> = envs.iter().flat_map(|(e, _)| e.keys().cloned()).collect();
        let mut out = UsageEnv::new();
        for x in names {
            let present: Vec<(&Usage, Span)> = envs.iter().filter_map(|(e, s)| e.get(&x).map(|u| (u, *s))).collect();
            let absent = present.len() < envs.len();
            if present.iter().all(|(u, _)| u.is_int()) {
                out.insert(x, Usage::Int);
                continue;
            }
            if present.iter().any(|(u, _)| u.is_int()) {
                return Err(Diagnostic::new(
                    Code::KindMismatch,
                    format!("`{x}` is an integer in one branch and a mailbox in another"),
                    span,
                ));
            }
            let inputs = present.iter().filter(|(u, _)| matches!(u, Usage::Mailbox { input: Some(_), .. })).count();
            if inputs == 0 {
                let mut outs: Vec<Pattern> = Vec::new();
                for (u, _) in &present {
                    if let Usage::Mailbox { out, .. } = u {
                        if !outs.contains(out) {
                            outs.push(out.clone());
                        }
                    }
                }
                if absent && !outs.contains(&Pattern::One) {
                    outs.push(Pattern::One);
                }
                let first = present[0].0.span();
                out.insert(x, Usage::output(Pattern::sum_all(outs), first));
                continue;
            }
            if absent || inputs < present.len() {
                let where_ = present
                    .iter()
                    .find(|(u, _)| matches!(u, Usage::Mailbox { input: None, .. }))
                    .map(|p| p.1)
                    .unwrap_or(span);
                return Err(Diagnostic::new(
                    Code::BranchMismatch,
                    format!("`{x}` is read in one branch but not in another"),
                    where_,
                ));
            }
            let mut resolved = Vec::new();
            for (u, s) in &present {
                if let Usage::Mailbox { out, input: Some(i), .. } = u {
                    resolved.push(self.residual_input(&x, out, i, *s)?);
                }
            }
            let g = self.least_of(&x, &resolved, span)?;
            out.insert(x, Usage::input(g, span));
        }
        Ok(out)
    }

    // ---- declarations ---------------------------------------------------

    pub fn check_definition(&mut self, d: &Definition) -> R<Judgment> {
        let scope: Vec<(Name, Vec<Atom>)> =
            d.params.iter().map(|p| (p.name.clone(), self.candidates(&p.name, Some(p.ty), &d.body))).collect();
        let mut j = self.with_scope(scope, |s| s.synth(&d.body))?;
        let synthesized = j.clone();
        for p in &d.params {
            let u = j.env.remove(&p.name);
            self.accept(&p.name, p.ty, u, d.span)?;
        }
        if let Some((x, u)) = j.env.iter().next() {
            return Err(Diagnostic::new(
                Code::UnboundName,
                format!("`{x}` is used by `{}` but is not a parameter", d.name),
                u.span(),
            ));
        }
        if !d.graph.acyclic() {
            return Err(self.cycle_error(&d.graph, d.span, &format!("declaration of `{}`", d.name)));
        }
        if !d.graph.entails(&synthesized.graph) {
            let missing: Vec<String> = synthesized
                .graph
                .grel()
                .difference(&d.graph.grel())
                .map(|(a, b)| format!("{a} - {b}"))
                .collect();
            return Err(Diagnostic::new(
                Code::GraphNotEntailed,
                format!("`{}` creates dependencies {} not allowed by its declaration", d.name, missing.join(", ")),
                d.span,
            ));
        }
        Ok(synthesized)
    }

    /// Check a process against a goal environment.
    pub fn check_against(&mut self, p: &Process, goal: &TypeEnv, span: Span, main: bool) -> R<Judgment> {
        let free: Vec<(Name, Vec<Atom>)> = p
            .free_names()
            .into_iter()
            .map(|x| {
                let c = self.candidates(&x, goal.get(&x).copied(), p);
                (x, c)
            })
            .collect();
        let j = self.with_scope(free, |s| s.synth(p))?;
        let mut env = j.env.clone();
        for (x, &t) in goal {
            let u = env.remove(x);
            self.accept(x, t, u, span)?;
        }
        if !env.is_empty() {
            let names: Vec<Name> = env.keys().cloned().collect();
            let code = if main { Code::OpenMain } else { Code::UnboundName };
            return Err(Diagnostic::new(code, format!("free names {} are not bound", name_list(&names)), span));
        }
        let reliable = self.ctx.env_reliable(goal).map_err(undecided(span))?;
        if !reliable {
            return Err(Diagnostic::new(
                Code::UnreliableEnv,
                "the environment contains an input type admitting no configuration".to_string(),
                span,
            ));
        }
        Ok(j)
    }
}

/// Give declared edges the span of the invocation that instantiates them.
fn with_span(g: &DepGraph, span: Span) -> DepGraph {
    match g {
        DepGraph::Empty => DepGraph::Empty,
        DepGraph::Edge(a, b, _) => DepGraph::Edge(a.clone(), b.clone(), span),
        DepGraph::Union(a, b) => DepGraph::Union(Box::new(with_span(a, span)), Box::new(with_span(b, span))),
        DepGraph::Restrict(n, g) => DepGraph::Restrict(n.clone(), Box::new(with_span(g, span))),
    }
}

fn fails_on(p: &Process, u: &Name) -> bool {
    match p {
        Process::Guard { branches, .. } => {
            branches.iter().all(|b| matches!(b, Branch::Fail { mailbox, .. } if mailbox == u))
        }
        _ => false,
    }
}
