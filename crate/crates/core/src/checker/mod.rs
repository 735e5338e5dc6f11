//! Algorithmic typing: synthesis of usage environments and dependency
//! graphs, definition consistency and whole-program checking.

mod constraints;
mod synth;
mod usage;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

pub use constraints::{
    check_solution, generate_constraints, solve_forward, ArgTy, Constraint, ConstraintSet, Located, PExpr, PVar,
    SolutionError, VarInfo,
};
pub use synth::Judgment;
pub use usage::{Usage, UsageEnv};

use crate::syntax::{Definition, Name, Process, Program, Span};
use crate::types::{TyId, TypeCtx, TypeEnv, TypeTable};
use synth::Synth;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Code {
    Cycle,
    NfViolation,
    UnreliableEnv,
    CombinationUndefined,
    CombinationUnresolved,
    Arity,
    IrrelevantDropFailed,
    UnbalancedMailbox,
    UseAfterFree,
    MixedGuard,
    OpenMain,
    UntypedMessage,
    KindMismatch,
    UnknownProcess,
    BranchMismatch,
    SubtypeFailed,
    GraphNotEntailed,
    UnboundName,
    GlobalAssumption,
    Undecided,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Cycle => "cycle",
            Code::NfViolation => "nf-violation",
            Code::UnreliableEnv => "unreliable-env",
            Code::CombinationUndefined => "combination-undefined",
            Code::CombinationUnresolved => "combination-unresolved",
            Code::Arity => "arity",
            Code::IrrelevantDropFailed => "irrelevant-drop-failed",
            Code::UnbalancedMailbox => "unbalanced-mailbox",
            Code::UseAfterFree => "use-after-free",
            Code::MixedGuard => "mixed-guard",
            Code::OpenMain => "open-main",
            Code::UntypedMessage => "untyped-message",
            Code::KindMismatch => "kind-mismatch",
            Code::UnknownProcess => "unknown-process",
            Code::BranchMismatch => "branch-mismatch",
            Code::SubtypeFailed => "subtype-failed",
            Code::GraphNotEntailed => "graph-not-entailed",
            Code::UnboundName => "unbound-name",
            Code::GlobalAssumption => "global-assumption",
            Code::Undecided => "undecided",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// A configuration separating two patterns.
    Config { config: String },
    /// Edges of a dependency cycle.
    Cycle { edges: Vec<[String; 2]> },
    Text { text: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: Code,
    pub message: String,
    pub span: Span,
    /// Further source locations contributing to the error.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub related: Vec<Span>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Diagnostic {
    pub fn new(code: Code, message: impl Into<String>, span: Span) -> Self {
        Diagnostic { code, message: message.into(), span, related: Vec::new(), witness: None }
    }

    pub fn with_witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn with_related(mut self, spans: impl IntoIterator<Item = Span>) -> Self {
        self.related.extend(spans);
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)?;
        match &self.witness {
            Some(Witness::Config { config }) => write!(f, " (witness {config})"),
            Some(Witness::Cycle { edges }) => {
                let es: Vec<String> = edges.iter().map(|[a, b]| format!("{a} - {b}")).collect();
                write!(f, " (cycle {})", es.join(", "))
            }
            Some(Witness::Text { text }) => write!(f, " ({text})"),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckOptions {
    /// Accept guards whose actions refer to several mailboxes.
    pub mixed_guards: bool,
    /// Work budget for pattern inclusion; `None` keeps the default.
    pub budget: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
}

#[derive(Clone, Debug, Serialize)]
pub struct DefReport {
    pub name: String,
    pub verdict: Verdict,
    /// Synthesized usage of each name, rendered.
    pub env: BTreeMap<String, String>,
    pub graph: String,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    /// Violations of the global assumptions on types.
    pub global: Vec<Diagnostic>,
    pub definitions: Vec<DefReport>,
    pub main: DefReport,
}

impl Report {
    pub fn accepted(&self) -> bool {
        self.global.is_empty()
            && self.main.verdict == Verdict::Accepted
            && self.definitions.iter().all(|d| d.verdict == Verdict::Accepted)
    }

    pub fn diagnostics(&self) -> impl Iterator<Item = &Diagnostic> {
        self.global
            .iter()
            .chain(self.definitions.iter().flat_map(|d| d.diagnostics.iter()))
            .chain(self.main.diagnostics.iter())
    }

    pub fn definition(&self, name: &str) -> Option<&DefReport> {
        self.definitions.iter().find(|d| d.name == name)
    }
}

fn new_ctx(prog: &Program, opts: CheckOptions) -> TypeCtx {
    match opts.budget {
        Some(b) => TypeCtx::with_budget(prog.types.clone(), b),
        None => TypeCtx::new(prog.types.clone()),
    }
}

/// Types mentioned by declarations and binders.
fn program_types(prog: &Program) -> Vec<TyId> {
    let mut out: Vec<TyId> = prog.types.definitions().map(|(_, t)| t).collect();
    let mut collect = |p: &Process| {
        p.visit(&mut |q| {
            if let Process::Guard { branches, .. } = q {
                for b in branches {
                    if let crate::syntax::Branch::Receive { binders, .. } = b {
                        out.extend(binders.iter().map(|x| x.ty));
                    }
                }
            }
        })
    };
    for d in &prog.defs {
        collect(&d.body);
    }
    collect(&prog.main);
    for d in &prog.defs {
        out.extend(d.params.iter().map(|p| p.ty));
    }
    out.sort();
    out.dedup();
    out
}

/// Check every definition against its declaration, then `main` against
/// the empty environment.
pub fn check_program(prog: &Program, opts: CheckOptions) -> Report {
    let ctx = new_ctx(prog, opts);
    let global = match ctx.check_global_assumptions(&program_types(prog)) {
        Ok(vs) => vs
            .iter()
            .map(|v| Diagnostic::new(Code::GlobalAssumption, v.message(&ctx.table), Span::default()))
            .collect(),
        Err(u) => vec![Diagnostic::new(Code::Undecided, u.to_string(), Span::default())],
    };
    let definitions: Vec<DefReport> = prog.defs.par_iter().map(|d| check_definition_with(prog, &ctx, d, opts)).collect();
    let main = check_main_with(prog, &ctx, opts);
    Report { global, definitions, main }
}

pub fn check_definition(prog: &Program, def: &Definition, opts: CheckOptions) -> DefReport {
    check_definition_with(prog, &new_ctx(prog, opts), def, opts)
}

fn check_definition_with(prog: &Program, ctx: &TypeCtx, def: &Definition, opts: CheckOptions) -> DefReport {
    let mut s = Synth::new(prog, ctx, opts.mixed_guards);
    let result = s.check_definition(def);
    report(def.name.as_str(), &ctx.table, result)
}

fn check_main_with(prog: &Program, ctx: &TypeCtx, opts: CheckOptions) -> DefReport {
    let mut s = Synth::new(prog, ctx, opts.mixed_guards);
    let result = s.check_against(&prog.main, &TypeEnv::new(), prog.main_span, true);
    report("main", &ctx.table, result)
}

fn report(name: &str, table: &TypeTable, result: Result<Judgment, Diagnostic>) -> DefReport {
    match result {
        Ok(j) => DefReport {
            name: name.to_string(),
            verdict: Verdict::Accepted,
            env: render_env(&j.env, table),
            graph: j.graph.to_string(),
            diagnostics: vec![],
        },
        Err(d) => DefReport {
            name: name.to_string(),
            verdict: Verdict::Rejected,
            env: BTreeMap::new(),
            graph: String::new(),
            diagnostics: vec![d],
        },
    }
}

pub fn render_usage(u: &Usage, table: &TypeTable) -> String {
    match u {
        Usage::Int => "int".to_string(),
        Usage::Mailbox { out, input: None, .. } => format!("!{}", out.display_prec(table, 3)),
        Usage::Mailbox { out, input: Some(i), .. } if *out == crate::patterns::Pattern::One => {
            format!("?{}", i.display_prec(table, 3))
        }
        Usage::Mailbox { out, input: Some(i), .. } => {
            format!("!{} ∥ ?{}", out.display_prec(table, 3), i.display_prec(table, 3))
        }
    }
}

pub fn render_env(env: &UsageEnv, table: &TypeTable) -> BTreeMap<String, String> {
    env.iter().map(|(k, u)| (k.to_string(), render_usage(u, table))).collect()
}

/// Synthesize the usage environment and graph of a process in isolation.
pub fn synthesize(prog: &Program, p: &Process, opts: CheckOptions) -> Result<Judgment, Diagnostic> {
    let ctx = new_ctx(prog, opts);
    Synth::new(prog, &ctx, opts.mixed_guards).synth_top(p)
}

/// Check a process against a goal environment: every goal entry must
/// be a subtype of the synthesized usage and every other name must be
/// absent. Used to re-check runtime states.
pub fn check_process(prog: &Program, p: &Process, goal: &TypeEnv, opts: CheckOptions) -> Result<Judgment, Diagnostic> {
    let ctx = new_ctx(prog, opts);
    Synth::new(prog, &ctx, opts.mixed_guards).check_against(p, goal, p.span(), false)
}

/// Check a process with a shared context.
pub fn check_process_in(
    prog: &Program,
    ctx: &TypeCtx,
    p: &Process,
    goal: &TypeEnv,
    opts: CheckOptions,
) -> Result<Judgment, Diagnostic> {
    Synth::new(prog, ctx, opts.mixed_guards).check_against(p, goal, p.span(), false)
}

pub(crate) fn name_list(names: &[Name]) -> String {
    names.iter().map(|n| format!("`{n}`")).collect::<Vec<_>>().join(", ")
}
