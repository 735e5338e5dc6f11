//! Reduction semantics, bounded state-space exploration and monitors for
//! mailbox conformance, deadlock freedom and fair termination.

mod analysis;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::syntax::{normal_form_pinned, split_normal, Arg, Branch, IntExpr, Name, Process, Program, Tag};

pub use analysis::{find_unguarded_fail, mailbox_bounds, mailbox_bounds_filtered, print_outcomes, Bounds, PrintEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rule {
    #[serde(rename = "r-read")]
    Read,
    #[serde(rename = "r-free")]
    Free,
    #[serde(rename = "r-def")]
    Def,
    #[serde(rename = "r-if")]
    If,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Read => "r-read",
            Rule::Free => "r-free",
            Rule::Def => "r-def",
            Rule::If => "r-if",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("unbound process variable `{0}`")]
    UnboundProcess(Name),
}

/// One reduction out of a state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduct {
    pub rule: Rule,
    pub redex: String,
    /// Tag and integer payload of a consumed `print*` message.
    pub print: Option<PrintEvent>,
    pub target: Process,
}

/// Interpreter for a program: definitions with their bound mailboxes
/// renamed apart from the names of `main`.
#[derive(Clone, Debug)]
pub struct Runtime<'p> {
    prog: &'p Program,
    defs: HashMap<Name, (Vec<Name>, Process)>,
    pinned: BTreeSet<Name>,
}

fn new_bound(p: &Process) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    p.visit(&mut |q| {
        if let Process::New { name, .. } = q {
            out.insert(name.clone());
        }
    });
    out
}

/// Prefix the names restricted in a definition body with `%` so they
/// can never collide with the pinned names of `main`.
fn mark_local(p: &Process) -> Process {
    match p {
        Process::New { name, body, span } => {
            let fresh = Name::from(format!("%{name}"));
            let body = body.substitute_names(&HashMap::from([(name.clone(), fresh.clone())]));
            Process::New { name: fresh, body: Box::new(mark_local(&body)), span: *span }
        }
        Process::Par(ps) => Process::Par(ps.iter().map(mark_local).collect()),
        Process::If { cond, then, els, span } => Process::If {
            cond: cond.clone(),
            then: Box::new(mark_local(then)),
            els: Box::new(mark_local(els)),
            span: *span,
        },
        Process::Guard { branches, span } => Process::Guard {
            branches: branches
                .iter()
                .map(|b| match b {
                    Branch::Fail { .. } => b.clone(),
                    Branch::Free { mailbox, body, span } => {
                        Branch::Free { mailbox: mailbox.clone(), body: Box::new(mark_local(body)), span: *span }
                    }
                    Branch::Receive { mailbox, tag, binders, body, span } => Branch::Receive {
                        mailbox: mailbox.clone(),
                        tag: tag.clone(),
                        binders: binders.clone(),
                        body: Box::new(mark_local(body)),
                        span: *span,
                    },
                })
                .collect(),
            span: *span,
        },
        q => q.clone(),
    }
}

fn show(p: &Process, prog: &Program) -> String {
    p.display(&prog.types).to_string()
}

fn int_args(args: &[Arg]) -> Vec<i64> {
    args.iter()
        .filter_map(|a| match a {
            Arg::Int(e) => e.eval(),
            Arg::Name(_) => None,
        })
        .collect()
}

impl<'p> Runtime<'p> {
    pub fn new(prog: &'p Program) -> Self {
        let defs = prog
            .defs
            .iter()
            .map(|d| (d.name.clone(), (d.params.iter().map(|x| x.name.clone()).collect(), mark_local(&d.body))))
            .collect();
        Runtime { prog, defs, pinned: new_bound(&prog.main) }
    }

    pub fn program(&self) -> &'p Program {
        self.prog
    }

    /// Canonical form of a state.
    pub fn normalize(&self, p: &Process) -> Process {
        normal_form_pinned(p, &self.pinned)
    }

    pub fn initial(&self) -> Process {
        self.normalize(&self.prog.main)
    }

    fn rebuild(&self, names: &[Name], threads: Vec<Process>) -> Process {
        let mut body = Process::par(threads);
        for a in names.iter().rev() {
            body = Process::new_scope(a.clone(), body);
        }
        self.normalize(&body)
    }

    /// All one-step reducts of a canonical state, deduplicated, in a
    /// deterministic order.
    pub fn step(&self, state: &Process) -> Result<Vec<Reduct>, RuntimeError> {
        let (names, threads) = split_normal(state);
        let mut out: Vec<Reduct> = Vec::new();
        let mut push = |r: Reduct| {
            if !out.iter().any(|o| o.target == r.target && o.rule == r.rule && o.print == r.print) {
                out.push(r);
            }
        };
        let others = |skip: &[usize]| -> Vec<Process> {
            threads.iter().enumerate().filter(|(k, _)| !skip.contains(k)).map(|(_, t)| (*t).clone()).collect()
        };
        for (i, t) in threads.iter().enumerate() {
            match t {
                Process::Invoke { def, args, .. } => {
                    let (params, body) = self.defs.get(def).ok_or_else(|| RuntimeError::UnboundProcess(def.clone()))?;
                    let m: HashMap<Name, Arg> = params.iter().cloned().zip(args.iter().cloned()).collect();
                    let mut ts = others(&[i]);
                    ts.push(body.substitute(&m));
                    push(Reduct {
                        rule: Rule::Def,
                        redex: show(t, self.prog),
                        print: None,
                        target: self.rebuild(&names, ts),
                    });
                }
                Process::If { cond, then, els, .. } => {
                    if let Some(b) = cond.eval() {
                        let mut ts = others(&[i]);
                        ts.push(if b { (**then).clone() } else { (**els).clone() });
                        push(Reduct {
                            rule: Rule::If,
                            redex: format!("if {}", if b { "true" } else { "false" }),
                            print: None,
                            target: self.rebuild(&names, ts),
                        });
                    }
                }
                Process::Guard { branches, .. } => {
                    for b in branches {
                        match b {
                            Branch::Fail { .. } => {}
                            Branch::Free { mailbox, body, .. } => {
                                if !names.contains(mailbox) {
                                    continue;
                                }
                                let shared = threads.iter().enumerate().any(|(j, u)| j != i && u.free_names().contains(mailbox));
                                if shared {
                                    continue;
                                }
                                let rest: Vec<Name> = names.iter().filter(|a| *a != mailbox).cloned().collect();
                                let mut cont = (**body).clone();
                                if cont.free_names().contains(mailbox) {
                                    // the freed name escapes its scope; keep it distinct
                                    let fresh = self.escape_name(state);
                                    cont = cont.substitute_names(&HashMap::from([(mailbox.clone(), fresh)]));
                                }
                                let mut ts = others(&[i]);
                                ts.push(cont);
                                push(Reduct {
                                    rule: Rule::Free,
                                    redex: format!("free {mailbox}"),
                                    print: None,
                                    target: self.rebuild(&rest, ts),
                                });
                            }
                            Branch::Receive { mailbox, tag, binders, body, .. } => {
                                for (j, m) in threads.iter().enumerate() {
                                    let Process::Send { target, tag: mt, args, .. } = m else { continue };
                                    if target != mailbox || mt != tag || args.len() != binders.len() {
                                        continue;
                                    }
                                    let map: HashMap<Name, Arg> =
                                        binders.iter().map(|x| x.name.clone()).zip(args.iter().cloned()).collect();
                                    let mut ts = others(&[i, j]);
                                    ts.push(body.substitute(&map));
                                    let print = tag
                                        .as_str()
                                        .starts_with("print")
                                        .then(|| PrintEvent { tag: tag.clone(), values: int_args(args) });
                                    push(Reduct {
                                        rule: Rule::Read,
                                        redex: show(m, self.prog),
                                        print,
                                        target: self.rebuild(&names, ts),
                                    });
                                }
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(out)
    }

    fn escape_name(&self, state: &Process) -> Name {
        let used = state.free_names();
        (0..)
            .map(|k| Name::from(format!("freed_{k}")))
            .find(|n| !used.contains(n))
            .unwrap()
    }
}

/// One-step reducts of `p` (normalized first) under the definitions of `prog`.
pub fn step(prog: &Program, p: &Process) -> Result<Vec<Reduct>, RuntimeError> {
    let rt = Runtime::new(prog);
    rt.step(&rt.normalize(p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateClass {
    /// Structurally equal to `done`.
    Done,
    /// Irreducible but not terminated.
    Deadlock,
    Live,
    /// Discovered but not expanded because a bound was hit.
    Unexplored,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub rule: Rule,
    pub redex: String,
    pub print: Option<PrintEvent>,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailWitness {
    pub state: usize,
    pub mailbox: Name,
    /// State indices from the initial state to the failing one.
    pub path: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 50_000, max_depth: 10_000 }
    }
}

/// The reachable states of a program, state 0 being the initial one.
#[derive(Clone, Debug)]
pub struct StateGraph {
    pub states: Vec<Process>,
    pub edges: Vec<Vec<Edge>>,
    pub classes: Vec<StateClass>,
    pub depth: Vec<usize>,
    parent: Vec<Option<usize>>,
    pub complete: bool,
    pub fail_witness: Option<FailWitness>,
}

impl StateGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn count(&self, class: StateClass) -> usize {
        self.classes.iter().filter(|c| **c == class).count()
    }

    pub fn deadlocks(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.classes[i] == StateClass::Deadlock).collect()
    }

    /// Shortest path of state indices from the initial state to `s`.
    pub fn path_to(&self, mut s: usize) -> Vec<usize> {
        let mut path = vec![s];
        while let Some(p) = self.parent[s] {
            path.push(p);
            s = p;
        }
        path.reverse();
        path
    }

    /// States from which a terminated state is reachable.
    pub fn can_terminate(&self) -> Vec<bool> {
        let n = self.len();
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, es) in self.edges.iter().enumerate() {
            for e in es {
                rev[e.target].push(s);
            }
        }
        let mut ok = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&i| self.classes[i] == StateClass::Done).collect();
        for &s in &stack {
            ok[s] = true;
        }
        while let Some(s) = stack.pop() {
            for &p in &rev[s] {
                if !ok[p] {
                    ok[p] = true;
                    stack.push(p);
                }
            }
        }
        ok
    }

    pub fn mailbox_conformant(&self) -> Verdict {
        match (&self.fail_witness, self.complete) {
            (Some(_), _) => Verdict::No,
            (None, true) => Verdict::Yes,
            (None, false) => Verdict::Unknown,
        }
    }

    pub fn deadlock_free(&self) -> Verdict {
        if self.count(StateClass::Deadlock) > 0 {
            Verdict::No
        } else if self.complete {
            Verdict::Yes
        } else {
            Verdict::Unknown
        }
    }

    /// Every reachable state can reach `done`. A stuck non-terminated
    /// state refutes this even on a truncated graph.
    pub fn fairly_terminating(&self) -> Verdict {
        if self.count(StateClass::Deadlock) > 0 {
            return Verdict::No;
        }
        if !self.complete {
            return Verdict::Unknown;
        }
        if self.can_terminate().iter().all(|b| *b) {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    /// No maximal path unfolds definitions infinitely often: on a finite
    /// graph, no `r-def` edge lies on a cycle.
    pub fn finitely_unfolding(&self) -> Verdict {
        if !self.complete {
            return Verdict::Unknown;
        }
        let comp = self.scc();
        let looping = self
            .edges
            .iter()
            .enumerate()
            .any(|(s, es)| es.iter().any(|e| e.rule == Rule::Def && comp[s] == comp[e.target]));
        if looping {
            Verdict::No
        } else {
            Verdict::Yes
        }
    }

    /// Strongly connected component index per state (iterative Tarjan).
    pub fn scc(&self) -> Vec<usize> {
        let n = self.len();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut ncomp = 0;
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut work: Vec<(usize, usize)> = vec![(root, 0)];
            while let Some(&mut (v, ref mut k)) = work.last_mut() {
                if *k == 0 && index[v] == usize::MAX {
                    index[v] = next;
                    low[v] = next;
                    next += 1;
                    stack.push(v);
                    on_stack[v] = true;
                }
                if let Some(e) = self.edges[v].get(*k) {
                    *k += 1;
                    let w = e.target;
                    if index[w] == usize::MAX {
                        work.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                work.pop();
                if let Some(&(u, _)) = work.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
        comp
    }

    pub fn summary(&self) -> Summary {
        Summary {
            states: self.len(),
            edges: self.edge_count(),
            complete: self.complete,
            done_states: self.count(StateClass::Done),
            deadlock_states: self.count(StateClass::Deadlock),
            unexplored_states: self.count(StateClass::Unexplored),
            max_depth: self.depth.iter().copied().max().unwrap_or(0),
            mailbox_conformant: self.mailbox_conformant(),
            deadlock_free: self.deadlock_free(),
            fairly_terminating: self.fairly_terminating(),
            finitely_unfolding: self.finitely_unfolding(),
            fail_mailbox: self.fail_witness.as_ref().map(|w| w.mailbox.to_string()),
        }
    }
}

/// Classification summary of an exploration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub states: usize,
    pub edges: usize,
    pub complete: bool,
    pub done_states: usize,
    pub deadlock_states: usize,
    pub unexplored_states: usize,
    pub max_depth: usize,
    pub mailbox_conformant: Verdict,
    pub deadlock_free: Verdict,
    pub fairly_terminating: Verdict,
    pub finitely_unfolding: Verdict,
    pub fail_mailbox: Option<String>,
}

/// Breadth-first exploration of the states reachable from `main`.
pub fn explore(prog: &Program, limits: Limits) -> Result<StateGraph, RuntimeError> {
    let rt = Runtime::new(prog);
    explore_from(&rt, rt.initial(), limits)
}

pub fn explore_from(rt: &Runtime<'_>, initial: Process, limits: Limits) -> Result<StateGraph, RuntimeError> {
    let max_states = limits.max_states.max(1);
    let mut g = StateGraph {
        states: vec![initial.clone()],
        edges: vec![Vec::new()],
        classes: vec![StateClass::Unexplored],
        depth: vec![0],
        parent: vec![None],
        complete: true,
        fail_witness: None,
    };
    let mut index: HashMap<Process, usize> = HashMap::from([(initial, 0)]);
    let mut frontier = vec![0usize];
    let mut depth = 0;
    while !frontier.is_empty() {
        if depth >= limits.max_depth {
            g.complete = false;
            break;
        }
        let results: Vec<Result<Vec<Reduct>, RuntimeError>> =
            frontier.par_iter().map(|&s| rt.step(&g.states[s])).collect();
        let mut next = Vec::new();
        for (&s, r) in frontier.iter().zip(results) {
            let reducts = r?;
            let mut edges = Vec::with_capacity(reducts.len());
            let mut truncated_here = false;
            for red in reducts {
                let target = match index.get(&red.target) {
                    Some(&t) => t,
                    None => {
                        if g.states.len() >= max_states {
                            truncated_here = true;
                            continue;
                        }
                        let t = g.states.len();
                        index.insert(red.target.clone(), t);
                        g.states.push(red.target);
                        g.edges.push(Vec::new());
                        g.classes.push(StateClass::Unexplored);
                        g.depth.push(depth + 1);
                        g.parent.push(Some(s));
                        next.push(t);
                        t
                    }
                };
                edges.push(Edge { rule: red.rule, redex: red.redex, print: red.print, target });
            }
            if truncated_here {
                g.complete = false;
                g.classes[s] = StateClass::Unexplored;
            } else {
                g.classes[s] = if !edges.is_empty() {
                    StateClass::Live
                } else if g.states[s] == Process::Done {
                    StateClass::Done
                } else {
                    StateClass::Deadlock
                };
            }
            g.edges[s] = edges;
        }
        frontier = next;
        depth += 1;
    }
    if !frontier.is_empty() {
        g.complete = false;
    }
    for s in 0..g.len() {
        if let Some(a) = find_unguarded_fail(&g.states[s]) {
            g.fail_witness = Some(FailWitness { state: s, mailbox: a, path: g.path_to(s) });
            break;
        }
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: Rule,
    pub redex: String,
    pub print: Option<PrintEvent>,
    pub state: Process,
}

/// A pseudo-random reduction sequence.
#[derive(Clone, Debug)]
pub struct Trace {
    pub seed: u64,
    pub initial: Process,
    pub steps: Vec<TraceStep>,
    /// The step bound was reached before an irreducible state.
    pub truncated: bool,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_state(&self) -> &Process {
        self.steps.last().map(|s| &s.state).unwrap_or(&self.initial)
    }

    pub fn prints(&self) -> Vec<&PrintEvent> {
        self.steps.iter().filter_map(|s| s.print.as_ref()).collect()
    }
}

/// Run `main` choosing uniformly among the enabled reductions.
pub fn run(prog: &Program, seed: u64, max_steps: usize) -> Result<Trace, RuntimeError> {
    let rt = Runtime::new(prog);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = rt.initial();
    let mut cur = initial.clone();
    let mut steps = Vec::new();
    let mut truncated = false;
    loop {
        let mut reducts = rt.step(&cur)?;
        if reducts.is_empty() {
            break;
        }
        if steps.len() >= max_steps {
            truncated = true;
            break;
        }
        let k = rng.random_range(0..reducts.len());
        let r = reducts.swap_remove(k);
        cur = r.target.clone();
        steps.push(TraceStep { rule: r.rule, redex: r.redex, print: r.print, state: r.target });
    }
    Ok(Trace { seed, initial, steps, truncated })
}

/// Integer literal of an argument, if closed.
pub fn literal(a: &Arg) -> Option<i64> {
    match a {
        Arg::Int(IntExpr::Lit(n)) => Some(*n),
        Arg::Int(e) => e.eval(),
        Arg::Name(_) => None,
    }
}

/// Messages stored in `mailbox` at the top level of a canonical state.
pub fn stored_messages<'a>(state: &'a Process, mailbox: &str) -> Vec<(&'a Tag, &'a [Arg])> {
    split_normal(state)
        .1
        .into_iter()
        .filter_map(|t| match t {
            Process::Send { target, tag, args, .. } if target.as_str() == mailbox => Some((tag, args.as_slice())),
            _ => None,
        })
        .collect()
}

/// The parallel threads of a canonical state.
pub fn threads(state: &Process) -> Vec<&Process> {
    split_normal(state).1
}
