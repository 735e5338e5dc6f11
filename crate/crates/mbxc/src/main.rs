//! `mbxc`: command-line front end for the mailbox calculus toolkit.
//!
//! Exit codes: 0 success, 1 negative analysis result (type error,
//! deadlock or failure found, inclusion false), 2 usage or input error.

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mbx_core::checker::{check_solution, generate_constraints, solve_forward, CheckOptions, Diagnostic, Report, Verdict};
use mbx_core::encodings::{encode_named, parse_sessions};
use mbx_core::patterns::{Atom, Pattern};
use mbx_core::runtime::{self, Limits};
use mbx_core::syntax::{line_col, parse, parse_pattern, parse_type, SyntaxErrors};
use mbx_core::types::{TypeCtx, TypeTable};
use mbx_core::Program;

#[derive(Parser)]
#[command(name = "mbxc", version, about = "Type checker, interpreter and analysis toolkit for the mailbox calculus")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, value_enum, default_value_t = Color::Auto)]
    color: Color,
}

#[derive(Clone, Copy, ValueEnum)]
enum Color {
    Auto,
    Always,
    Never,
}

#[derive(Subcommand)]
enum Command {
    /// Type check a program.
    Check {
        file: PathBuf,
        /// Accept guards whose actions refer to several mailboxes.
        #[arg(long)]
        mixed_guards: bool,
    },
    /// Run one pseudo-random reduction sequence.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
    /// Explore the reachable states and classify them.
    Explore {
        file: PathBuf,
        #[arg(long, default_value_t = 50_000, value_parser = clap::value_parser!(u64).range(1..))]
        max_states: u64,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        max_depth: u64,
        /// Report per-tag message bounds of this mailbox.
        #[arg(long, value_name = "MAILBOX")]
        bound: Vec<String>,
    },
    /// Pattern queries.
    Pat {
        #[command(subcommand)]
        query: PatQuery,
    },
    /// Mailbox type queries.
    Ty {
        #[command(subcommand)]
        query: TyQuery,
    },
    /// Generate the medium of a binary session from a `.st` file.
    EncodeSession {
        file: PathBuf,
        /// Session to encode; defaults to the first one in the file.
        #[arg(long)]
        session: Option<String>,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Print the pattern constraints of a program.
    Constraints {
        file: PathBuf,
        /// Check that the patterns written in the program satisfy them.
        #[arg(long)]
        check: bool,
    },
    /// Pretty-print a program.
    Fmt { file: PathBuf },
}

#[derive(Args)]
struct TypesArg {
    /// Program whose type definitions are in scope.
    #[arg(long, value_name = "FILE")]
    types: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PatQuery {
    /// Is every configuration of E one of F?
    Include {
        e: String,
        f: String,
        #[command(flatten)]
        types: TypesArg,
    },
    /// Are E and F equivalent?
    Equiv {
        e: String,
        f: String,
        #[command(flatten)]
        types: TypesArg,
    },
    /// Residual of E with respect to an atom.
    Residual {
        e: String,
        atom: String,
        #[command(flatten)]
        types: TypesArg,
    },
    /// Is E in normal form?
    Nf {
        e: String,
        #[command(flatten)]
        types: TypesArg,
    },
}

#[derive(Subcommand)]
enum TyQuery {
    /// Is T a subtype of S?
    Sub {
        t: String,
        s: String,
        #[command(flatten)]
        types: TypesArg,
    },
    /// Relevant, reliable and usable flags of T.
    Classify {
        t: String,
        #[command(flatten)]
        types: TypesArg,
    },
}

/// Failure carrying its exit code.
struct Fail(u8, String);

type Out = Result<u8, Fail>;

fn usage(msg: impl Into<String>) -> Fail {
    Fail(2, msg.into())
}

struct Ctx {
    json: bool,
    color: bool,
}

impl Ctx {
    fn emit_json(&self, v: Value) {
        println!("{}", serde_json::to_string_pretty(&v).expect("json values serialize"));
    }

    fn paint(&self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }
}

fn budget() -> Result<Option<usize>, Fail> {
    match std::env::var("MBXC_WORK_BUDGET") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("MBXC_WORK_BUDGET must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn type_ctx(table: TypeTable) -> Result<TypeCtx, Fail> {
    Ok(match budget()? {
        Some(b) => TypeCtx::with_budget(table, b),
        None => TypeCtx::new(table),
    })
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn syntax(path: &Path, e: SyntaxErrors) -> Fail {
    let lines: Vec<String> = e.0.iter().map(|x| format!("{}:{x}", path.display())).collect();
    usage(lines.join("\n"))
}

fn load(path: &Path) -> Result<(String, Program), Fail> {
    let src = read(path)?;
    let prog = parse(&src).map_err(|e| syntax(path, e))?;
    Ok((src, prog))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let color = match cli.global.color {
        Color::Always => true,
        Color::Never => false,
        Color::Auto => std::io::stderr().is_terminal(),
    };
    let ctx = Ctx { json: cli.global.json, color };
    let r = match cli.command {
        Command::Check { file, mixed_guards } => check(&ctx, &file, mixed_guards),
        Command::Run { file, seed, max_steps } => run(&ctx, &file, seed, max_steps),
        Command::Explore { file, max_states, max_depth, bound } => explore(&ctx, &file, max_states, max_depth, &bound),
        Command::Pat { query } => pat(&ctx, query),
        Command::Ty { query } => ty(&ctx, query),
        Command::EncodeSession { file, session, output } => encode(&ctx, &file, session, output),
        Command::Constraints { file, check } => constraints(&ctx, &file, check),
        Command::Fmt { file } => fmt(&file),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("{}: {msg}", ctx.paint("31", "error"));
            ExitCode::from(code)
        }
    }
}

fn check(ctx: &Ctx, file: &Path, mixed: bool) -> Out {
    let (src, prog) = load(file)?;
    let opts = CheckOptions { mixed_guards: mixed, budget: budget()? };
    let report = mbx_core::check_program(&prog, opts);
    let ok = report.accepted();
    if ctx.json {
        let mut v = serde_json::to_value(&report).expect("report serializes");
        v["accepted"] = json!(ok);
        for d in v["definitions"].as_array_mut().into_iter().flatten() {
            for diag in d["diagnostics"].as_array_mut().into_iter().flatten() {
                add_position(&src, diag);
            }
        }
        for diag in v["main"]["diagnostics"].as_array_mut().into_iter().flatten() {
            add_position(&src, diag);
        }
        for diag in v["global"].as_array_mut().into_iter().flatten() {
            add_position(&src, diag);
        }
        ctx.emit_json(v);
    } else {
        print_report(ctx, file, &src, &report);
    }
    Ok(if ok { 0 } else { 1 })
}

fn add_position(src: &str, diag: &mut Value) {
    if let Some(start) = diag["span"]["start"].as_u64() {
        let (line, col) = line_col(src, start as usize);
        diag["line"] = json!(line);
        diag["col"] = json!(col);
    }
}

fn print_report(ctx: &Ctx, file: &Path, src: &str, report: &Report) {
    let mut rows: Vec<_> = report.definitions.iter().collect();
    rows.push(&report.main);
    for d in rows {
        let verdict = match d.verdict {
            Verdict::Accepted => ctx.paint("32", "ok"),
            Verdict::Rejected => ctx.paint("31", "rejected"),
        };
        println!("{} {verdict}", d.name);
        for (x, u) in &d.env {
            println!("    {x} : {u}");
        }
        if !d.graph.is_empty() && d.graph != "∅" {
            println!("    graph {}", d.graph);
        }
    }
    for d in report.diagnostics() {
        print_diag(ctx, file, src, d);
    }
    let summary = if report.accepted() { "well typed" } else { "ill typed" };
    println!("{summary}");
}

fn print_diag(ctx: &Ctx, file: &Path, src: &str, d: &Diagnostic) {
    let (line, col) = line_col(src, d.span.start);
    eprintln!("{}:{line}:{col}: {} {d}", file.display(), ctx.paint("31", "error:"));
    for r in &d.related {
        let (l, c) = line_col(src, r.start);
        eprintln!("    related: {}:{l}:{c}", file.display());
    }
}

fn run(ctx: &Ctx, file: &Path, seed: u64, max_steps: usize) -> Out {
    let (_, prog) = load(file)?;
    let trace = runtime::run(&prog, seed, max_steps).map_err(|e| Fail(1, e.to_string()))?;
    let last = trace.last_state();
    let fail = runtime::find_unguarded_fail(last);
    let done = *last == mbx_core::Process::Done;
    let outcome = if trace.truncated {
        "truncated"
    } else if done {
        "done"
    } else if fail.is_some() {
        "fail"
    } else {
        "stuck"
    };
    if ctx.json {
        let steps: Vec<Value> = trace
            .steps
            .iter()
            .map(|s| {
                json!({
                    "rule": s.rule.name(),
                    "redex": s.redex,
                    "print": s.print,
                    "state": s.state.display(&prog.types).to_string(),
                })
            })
            .collect();
        ctx.emit_json(json!({
            "seed": seed,
            "initial": trace.initial.display(&prog.types).to_string(),
            "steps": steps,
            "truncated": trace.truncated,
            "outcome": outcome,
            "prints": trace.prints(),
        }));
    } else {
        println!("   {}", trace.initial.display(&prog.types));
        for (i, s) in trace.steps.iter().enumerate() {
            println!("{:>3} {} {}", i + 1, s.rule, s.redex);
            if let Some(p) = &s.print {
                let vs: Vec<String> = p.values.iter().map(i64::to_string).collect();
                println!("    {} {}", p.tag, vs.join(" "));
            }
            println!("    {}", s.state.display(&prog.types));
        }
        println!("{outcome} after {} steps", trace.len());
    }
    Ok(if outcome == "done" || outcome == "truncated" { 0 } else { 1 })
}

fn explore(ctx: &Ctx, file: &Path, max_states: u64, max_depth: u64, bound: &[String]) -> Out {
    let (_, prog) = load(file)?;
    let limits = Limits { max_states: max_states as usize, max_depth: max_depth as usize };
    let graph = runtime::explore(&prog, limits).map_err(|e| Fail(1, e.to_string()))?;
    let summary = graph.summary();
    let bounds: Vec<(String, runtime::Bounds)> =
        bound.iter().map(|m| (m.clone(), runtime::mailbox_bounds(&graph, m))).collect();
    let negative = summary.deadlock_states > 0 || graph.fail_witness.is_some();
    if ctx.json {
        let mut v = serde_json::to_value(&summary).expect("summary serializes");
        if let Some(w) = &graph.fail_witness {
            let path: Vec<String> = w.path.iter().map(|&s| graph.states[s].display(&prog.types).to_string()).collect();
            v["fail_witness"] = json!({ "mailbox": w.mailbox.to_string(), "path": path });
        }
        let deadlocks: Vec<String> =
            graph.deadlocks().iter().map(|&s| graph.states[s].display(&prog.types).to_string()).collect();
        v["deadlocks"] = json!(deadlocks);
        if !bounds.is_empty() {
            v["bounds"] = bounds.iter().map(|(m, b)| (m.clone(), serde_json::to_value(b).unwrap())).collect();
        }
        ctx.emit_json(v);
    } else {
        let s = &summary;
        let rows = [
            ("states", format!("{}{}", s.states, if s.complete { "" } else { " (truncated)" })),
            ("edges", s.edges.to_string()),
            ("max depth", s.max_depth.to_string()),
            ("done", s.done_states.to_string()),
            ("deadlocks", s.deadlock_states.to_string()),
            ("conformant", format!("{:?}", s.mailbox_conformant).to_lowercase()),
            ("deadlock-free", format!("{:?}", s.deadlock_free).to_lowercase()),
            ("fairly terminating", format!("{:?}", s.fairly_terminating).to_lowercase()),
            ("finitely unfolding", format!("{:?}", s.finitely_unfolding).to_lowercase()),
        ];
        for (k, v) in rows {
            println!("{k:<20}{v}");
        }
        if let Some(w) = &graph.fail_witness {
            println!("unguarded fail on `{}` after {} steps:", w.mailbox, w.path.len().saturating_sub(1));
            for &st in &w.path {
                println!("    {}", graph.states[st].display(&prog.types));
            }
        }
        for d in graph.deadlocks().into_iter().take(3) {
            println!("deadlock: {}", graph.states[d].display(&prog.types));
        }
        for (m, b) in &bounds {
            let note = if b.lower_estimate { " (truncated graph)" } else { "" };
            println!("bounds of `{m}`{note}:");
            if b.per_tag.is_empty() {
                println!("    always empty");
            }
            for (t, (lo, hi)) in &b.per_tag {
                println!("    {t}: {lo}..{hi}");
            }
        }
    }
    Ok(if negative { 1 } else { 0 })
}

fn table_for(types: &TypesArg) -> Result<TypeTable, Fail> {
    match &types.types {
        Some(p) => Ok(load(p)?.1.types),
        None => Ok(TypeTable::new()),
    }
}

fn pattern(src: &str, table: &mut TypeTable) -> Result<Pattern, Fail> {
    parse_pattern(src, table).map_err(|e| usage(format!("in pattern {src:?}: {e}")))
}

fn undecided(e: mbx_core::patterns::Undecided) -> Fail {
    Fail(1, e.to_string())
}

fn pat(ctx: &Ctx, q: PatQuery) -> Out {
    match q {
        PatQuery::Include { e, f, types } => {
            let mut table = table_for(&types)?;
            let (pe, pf) = (pattern(&e, &mut table)?, pattern(&f, &mut table)?);
            let tc = type_ctx(table)?;
            let inc = tc.subpattern(&pe, &pf).map_err(undecided)?;
            let witness = inc.witness().map(|c| c.display(&tc.table).to_string());
            if ctx.json {
                ctx.emit_json(json!({ "holds": inc.holds(), "witness": witness }));
            } else if inc.holds() {
                println!("true");
            } else {
                println!("false");
                if let Some(w) = &witness {
                    println!("witness {w}");
                }
            }
            Ok(if inc.holds() { 0 } else { 1 })
        }
        PatQuery::Equiv { e, f, types } => {
            let mut table = table_for(&types)?;
            let (pe, pf) = (pattern(&e, &mut table)?, pattern(&f, &mut table)?);
            let tc = type_ctx(table)?;
            let a = tc.subpattern(&pe, &pf).map_err(undecided)?;
            let b = tc.subpattern(&pf, &pe).map_err(undecided)?;
            let holds = a.holds() && b.holds();
            let witness = a.witness().or(b.witness()).map(|c| c.display(&tc.table).to_string());
            if ctx.json {
                ctx.emit_json(json!({ "holds": holds, "witness": witness }));
            } else {
                println!("{holds}");
                if let Some(w) = &witness {
                    println!("witness {w}");
                }
            }
            Ok(if holds { 0 } else { 1 })
        }
        PatQuery::Residual { e, atom, types } => {
            let mut table = table_for(&types)?;
            let pe = pattern(&e, &mut table)?;
            let a = match pattern(&atom, &mut table)? {
                Pattern::Atom(a) => a,
                _ => return Err(usage(format!("{atom:?} is not an atom"))),
            };
            let tc = type_ctx(table)?;
            let r = tc.residual(&pe, &a).map_err(undecided)?;
            let shown = r.as_ref().map(|p| p.display(&tc.table).to_string());
            if ctx.json {
                ctx.emit_json(json!({ "defined": r.is_some(), "residual": shown }));
            } else {
                match &shown {
                    Some(s) => println!("{s}"),
                    None => println!("undefined: {e} has a `{}` atom whose arguments are not below those of {}", a.tag, atom_text(&a, &tc.table)),
                }
            }
            Ok(if r.is_some() { 0 } else { 1 })
        }
        PatQuery::Nf { e, types } => {
            let mut table = table_for(&types)?;
            let pe = pattern(&e, &mut table)?;
            let tc = type_ctx(table)?;
            let v = tc.normal_form_violation(&pe).map_err(undecided)?;
            let why = v.as_ref().map(|v| format!("{v:?}"));
            if ctx.json {
                ctx.emit_json(json!({ "normal_form": v.is_none(), "violation": why }));
            } else {
                match &why {
                    None => println!("true"),
                    Some(w) => println!("false: {w}"),
                }
            }
            Ok(if v.is_none() { 0 } else { 1 })
        }
    }
}

fn atom_text(a: &Atom, table: &TypeTable) -> String {
    Pattern::Atom(a.clone()).display(table).to_string()
}

fn ty(ctx: &Ctx, q: TyQuery) -> Out {
    match q {
        TyQuery::Sub { t, s, types } => {
            let mut table = table_for(&types)?;
            let tt = parse_type(&t, &mut table).map_err(|e| usage(format!("in type {t:?}: {e}")))?;
            let ts = parse_type(&s, &mut table).map_err(|e| usage(format!("in type {s:?}: {e}")))?;
            let tc = type_ctx(table)?;
            let holds = tc.subtype(tt, ts).map_err(undecided)?;
            if ctx.json {
                ctx.emit_json(json!({ "holds": holds }));
            } else {
                println!("{holds}");
            }
            Ok(if holds { 0 } else { 1 })
        }
        TyQuery::Classify { t, types } => {
            let mut table = table_for(&types)?;
            let tt = parse_type(&t, &mut table).map_err(|e| usage(format!("in type {t:?}: {e}")))?;
            let tc = type_ctx(table)?;
            let c = tc.classify(tt).map_err(undecided)?;
            if ctx.json {
                ctx.emit_json(json!({ "relevant": c.relevant, "reliable": c.reliable, "usable": c.usable }));
            } else {
                println!("relevant {}", c.relevant);
                println!("reliable {}", c.reliable);
                println!("usable   {}", c.usable);
            }
            Ok(0)
        }
    }
}

fn encode(ctx: &Ctx, file: &Path, session: Option<String>, output: Option<PathBuf>) -> Out {
    let src = read(file)?;
    let sf = parse_sessions(&src).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let name = match session {
        Some(n) => n,
        None => sf.order.first().cloned().ok_or_else(|| usage("no session declared"))?,
    };
    let enc = encode_named(&sf, &name).map_err(|e| usage(e.to_string()))?;
    if let Some(out) = &output {
        std::fs::write(out, &enc.source).map_err(|e| usage(format!("cannot write {}: {e}", out.display())))?;
    }
    if ctx.json {
        ctx.emit_json(json!({
            "session": name,
            "entry": enc.entry,
            "pattern": enc.pattern,
            "medium": enc.medium,
            "source": enc.source,
        }));
    } else if output.is_none() {
        print!("{}", enc.source);
    }
    Ok(0)
}

fn constraints(ctx: &Ctx, file: &Path, check: bool) -> Out {
    let (_, prog) = load(file)?;
    let set = generate_constraints(&prog);
    let mut tc = type_ctx(prog.types.clone())?;
    let mut unsolved = Vec::new();
    let failures = if check {
        let (assignment, failed) = solve_forward(&set, &mut tc, &set.declared_solution());
        unsolved = failed.into_iter().map(|(v, why)| format!("α{}: {why}", v.0)).collect();
        check_solution(&set, &mut tc, &assignment)
    } else {
        Vec::new()
    };
    if ctx.json {
        let cs: Vec<Value> = set
            .constraints
            .iter()
            .map(|l| json!({ "scope": l.scope, "constraint": l.constraint.to_string() }))
            .collect();
        let vars: Vec<Value> = set
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| {
                json!({
                    "var": format!("α{i}"),
                    "origin": v.origin,
                    "declared": v.declared.as_ref().map(|p| p.display(&prog.types).to_string()),
                })
            })
            .collect();
        let fs: Vec<Value> = failures
            .iter()
            .map(|f| json!({ "index": f.index, "constraint": f.constraint, "reason": f.reason }))
            .collect();
        let mut v = json!({ "vars": vars, "constraints": cs });
        if check {
            v["failures"] = json!(fs);
            v["unsolved"] = json!(unsolved);
        }
        ctx.emit_json(v);
    } else {
        for (i, v) in set.vars.iter().enumerate() {
            match &v.declared {
                Some(p) => println!("α{i} = {}    ({})", p.display(&prog.types), v.origin),
                None => println!("α{i}    ({})", v.origin),
            }
        }
        println!();
        let mut scope = "";
        for (i, l) in set.constraints.iter().enumerate() {
            if l.scope != scope {
                scope = &l.scope;
                println!("{scope}:");
            }
            println!("  #{i} {}", l.constraint);
        }
        if check {
            for u in &unsolved {
                eprintln!("unsolved {u}");
            }
            if failures.is_empty() && unsolved.is_empty() {
                println!("all {} constraints hold for the declared patterns", set.len());
            } else {
                for f in &failures {
                    eprintln!("{}", f);
                }
            }
        }
    }
    Ok(if failures.is_empty() && unsolved.is_empty() { 0 } else { 1 })
}

fn fmt(file: &Path) -> Out {
    let (_, prog) = load(file)?;
    print!("{}", prog.display());
    Ok(0)
}
