//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use common::*;
use mbx_core::checker::{check_process_in, check_solution, generate_constraints, solve_forward, Code, Witness};
use mbx_core::corpus::{self, ENTRIES};
use mbx_core::encodings::{encode_named, encode_pattern, parse_sessions};
use mbx_core::patterns::{configurations_up_to, Atom, Pattern};
use mbx_core::runtime::{explore, mailbox_bounds_filtered, print_outcomes, threads, Limits, Verdict};
use mbx_core::syntax::{parse_pattern, parse_type, Arg, Branch, Process};
use mbx_core::types::{TypeCtx, TypeEnv, TypeTable};
use mbx_core::{check_program, CheckOptions, DepGraph, Program, Ty};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn prog(name: &str) -> Result<Program, String> {
    corpus::get(name).ok_or(format!("no corpus entry {name}"))?.program().map_err(|e| e.to_string())
}

fn plain() -> CheckOptions {
    CheckOptions::default()
}

fn mixed() -> CheckOptions {
    CheckOptions { mixed_guards: true, ..CheckOptions::default() }
}

fn first_code(p: &Program) -> Option<Code> {
    check_program(p, plain()).diagnostics().next().map(|d| d.code)
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let r = f()?;
    let took = t.elapsed();
    ensure(took <= limit, format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(format!("{r} in {took:.2?}"))
}

fn c1() -> Outcome {
    timed(Duration::from_secs(5), || {
        let p = prog("lock")?;
        let mut table = p.types.clone();
        let tau = parse_type("?acquire(!reply(!release))*", &mut table).map_err(|e| e.to_string())?;
        let rho = parse_type("!reply(!release)", &mut table).map_err(|e| e.to_string())?;
        let tc = TypeCtx::new(table);
        let def = |n: &str| p.defs.iter().find(|d| d.name.as_str() == n).ok_or(format!("missing {n}"));
        let (free, busy) = (def("FreeLock")?, def("BusyLock")?);
        let eq = |a, b| tc.equiv(a, b).unwrap_or(false);
        ensure(free.params.len() == 1 && eq(free.params[0].ty, tau) && free.graph.grel().is_empty(), "FreeLock declaration")?;
        ensure(
            busy.params.len() == 2
                && eq(busy.params[0].ty, tau)
                && eq(busy.params[1].ty, rho)
                && busy.graph.grel() == DepGraph::edge("self", "owner").grel(),
            "BusyLock declaration",
        )?;
        let report = check_program(&p, plain());
        for n in ["FreeLock", "BusyLock"] {
            ensure(report.definition(n).is_some_and(|d| d.diagnostics.is_empty()), format!("{n} rejected"))?;
        }
        ensure(report.accepted(), "lock system rejected")?;
        for n in ["choice", "session"] {
            ensure(check_program(&prog(n)?, plain()).accepted(), format!("{n} rejected"))?;
        }
        Ok("lock declarations, choice and session accepted".into())
    })
}

fn c2() -> Outcome {
    let fd = prog("future_deadlock")?;
    let report = check_program(&fd, plain());
    let d = report.diagnostics().next().ok_or("future_deadlock accepted")?;
    ensure(d.code == Code::Cycle, format!("future_deadlock: {d}"))?;
    let Some(Witness::Cycle { edges }) = &d.witness else { return Err("no cycle witness".into()) };
    let names: BTreeSet<&str> = edges.iter().flatten().map(String::as_str).collect();
    ensure(names == BTreeSet::from(["c", "f"]), format!("cycle over {names:?}"))?;
    let text = &corpus::get("future_deadlock").unwrap().source[d.span.start..d.span.end];
    ensure(text.contains('|'), format!("cycle reported at `{text}`, not a parallel composition"))?;

    let m = check_program(&prog("multiplicity")?, plain());
    let d = m.diagnostics().next().ok_or("multiplicity accepted")?;
    ensure(d.code == Code::Cycle, format!("multiplicity: {d}"))?;
    if let Some(Witness::Cycle { edges }) = &d.witness {
        let ab = edges.iter().filter(|[x, y]| (x == "a" && y == "b") || (x == "b" && y == "a")).count();
        ensure(ab == 2, format!("multiplicity cycle {edges:?}"))?;
    }
    ensure(first_code(&prog("linear_input")?) == Some(Code::CombinationUndefined), "linear_input code")?;
    Ok("cycle c-f, duplicated a-b, combination-undefined".into())
}

fn erase(p: &Pattern) -> Pattern {
    match p {
        Pattern::Zero => Pattern::Zero,
        Pattern::One => Pattern::One,
        Pattern::Atom(a) => Pattern::Atom(Atom::new(a.tag.as_str(), vec![])),
        Pattern::Sum(ps) => Pattern::Sum(ps.iter().map(erase).collect()),
        Pattern::Prod(ps) => Pattern::Prod(ps.iter().map(erase).collect()),
        Pattern::Star(q) => Pattern::Star(Box::new(erase(q))),
    }
}

/// Named patterns plus every mailbox pattern of the corpus with the atom
/// arguments erased.
fn corpus_patterns() -> Vec<Pattern> {
    let mut seen: BTreeMap<String, Pattern> = BTreeMap::new();
    for src in NAMED_PATTERNS {
        let p = pat(src);
        seen.insert(show(&p), p);
    }
    for e in ENTRIES {
        let p = e.program().unwrap();
        for id in p.types.ids() {
            if let Some(Ty::Mailbox(_, q)) = p.types.view(id) {
                let q = erase(q);
                seen.insert(show(&q), q);
            }
        }
    }
    seen.into_values().collect()
}

fn c3() -> Outcome {
    let tc = ctx();
    let pats = corpus_patterns();
    let mut pairs = 0;
    for e in &pats {
        for n in 0..=5 {
            let lib: BTreeSet<Bag> = configurations_up_to(e, n).iter().map(bag_of).collect();
            ensure(lib == bags(e, n), format!("configurations of {} at {n}", show(e)))?;
        }
        for f in &pats {
            let inc = tc.subpattern(e, f).map_err(|x| x.to_string())?;
            let oracle = included_up_to(e, f, 5);
            match inc.witness() {
                None => ensure(oracle.is_ok(), format!("{} ⊑ {} claimed", show(e), show(f)))?,
                Some(w) => {
                    let b = bag_of(w);
                    ensure(member(&b, e) && !member(&b, f), format!("bad witness for {} ⊑ {}", show(e), show(f)))?;
                }
            }
            let eq = tc.pattern_equiv(e, f).map_err(|x| x.to_string())?;
            let oracle_eq = included_up_to(e, f, 5).is_ok() && included_up_to(f, e, 5).is_ok();
            ensure(!eq || oracle_eq, format!("{} ≂ {} claimed", show(e), show(f)))?;
            pairs += 1;
        }
    }
    // the KA law suite runs as a 1000-case property in the patterns tests;
    // here a fixed sample of the laws is re-checked
    let eqv = |a: &str, b: &str| tc.pattern_equiv(&pat(a), &pat(b)).unwrap_or(false);
    for (a, b) in [
        ("A + B", "B + A"),
        ("A.(B + C)", "A.B + A.C"),
        ("A*", "1 + A.A*"),
        ("A.0", "0"),
        ("(A + B)*", "A*.B*"),
    ] {
        ensure(eqv(a, b), format!("{a} ≂ {b}"))?;
    }
    let r = tc.residual(&pat("A.C + B.A"), &Atom::new("A", vec![])).map_err(|x| x.to_string())?.ok_or("residual undefined")?;
    ensure(tc.pattern_equiv(&r, &pat("B + C")).unwrap_or(false), format!("residual {}", show(&r)))?;
    Ok(format!("{} patterns, {pairs} pairs agree with the oracle", pats.len()))
}

fn c4() -> Outcome {
    let mut t = TypeTable::new();
    let mut ty = |s: &str| parse_type(s, &mut t).map_err(|e| e.to_string());
    let (oab, oa, ia, iab, oprod, oswap, irr) =
        (ty("!(A + B)")?, ty("!A")?, ty("?A")?, ty("?(A + B)")?, ty("!(A.B)")?, ty("!(B.A)")?, ty("!(1 + A)")?);
    let tc = TypeCtx::new(t);
    let sub = |a, b| tc.subtype(a, b).unwrap_or(false);
    ensure(sub(oab, oa) && !sub(oa, oab), "!(A+B) ≤ !A")?;
    ensure(sub(ia, iab) && !sub(iab, ia), "?A ≤ ?(A+B)")?;
    ensure(tc.equiv(oprod, oswap).unwrap_or(false), "!(A.B) ≂ !(B.A)")?;
    let c = tc.classify(irr).map_err(|e| e.to_string())?;
    ensure(!c.relevant, "!(1+A) relevant")?;
    Ok("subtyping and classification examples".into())
}

fn c5() -> Outcome {
    timed(Duration::from_secs(60), || {
        let mut checked = 0;
        for e in ENTRIES.iter().filter(|e| e.well_typed()) {
            let p = e.program().map_err(|x| x.to_string())?;
            let o = if e.accepted { plain() } else { mixed() };
            let g = explore(&p, Limits::default()).map_err(|x| x.to_string())?;
            ensure(g.complete, format!("{}: exploration truncated", e.name))?;
            ensure(g.fail_witness.is_none(), format!("{}: unguarded fail", e.name))?;
            ensure(g.deadlocks().is_empty(), format!("{}: deadlock", e.name))?;
            let tc = TypeCtx::new(p.types.clone());
            for (i, s) in g.states.iter().enumerate() {
                check_process_in(&p, &tc, s, &TypeEnv::new(), o).map_err(|d| format!("{} state {i}: {d}", e.name))?;
            }
            checked += g.len();
        }
        for n in ["lock", "session", "choice"] {
            let g = explore(&prog(n)?, Limits::default()).map_err(|x| x.to_string())?;
            ensure(g.finitely_unfolding() == Verdict::Yes, format!("{n} not finitely unfolding"))?;
            ensure(g.fairly_terminating() == Verdict::Yes, format!("{n} does not always reach done"))?;
        }
        Ok(format!("{checked} states re-checked"))
    })
}

fn c6() -> Outcome {
    let g = explore(&prog("account_pair")?, Limits::default()).map_err(|x| x.to_string())?;
    ensure(!g.deadlocks().is_empty(), "account_pair: no deadlock")?;
    let g = explore(&prog("stray_release")?, Limits::default()).map_err(|x| x.to_string())?;
    let w = g.fail_witness.as_ref().ok_or("stray_release: no fail")?;
    Ok(format!("deadlock found; fail on `{}` after {} steps", w.mailbox, w.path.len() - 1))
}

fn lock_is_free(state: &Process) -> bool {
    threads(state).iter().any(|t| match t {
        Process::Invoke { def, args, .. } => {
            def.as_str() == "FreeLock" && matches!(args.first(), Some(Arg::Name(n)) if n.as_str() == "lock")
        }
        Process::Guard { branches, .. } => {
            branches.iter().any(|b| matches!(b, Branch::Free { mailbox, .. } if mailbox.as_str() == "lock"))
        }
        _ => false,
    })
}

fn c7() -> Outcome {
    let g = explore(&prog("lock")?, Limits::default()).map_err(|x| x.to_string())?;
    ensure(g.complete, "lock exploration truncated")?;
    let free = mailbox_bounds_filtered(&g, "lock", lock_is_free);
    let busy = mailbox_bounds_filtered(&g, "lock", |s| !lock_is_free(s));
    ensure(free.states > 0 && free.get("release").1 == 0, format!("free: {:?}", free.get("release")))?;
    ensure(busy.get("release").1 <= 1, format!("busy: {:?}", busy.get("release")))?;
    Ok(format!("release free {:?}, busy {:?} over {} states", free.get("release"), busy.get("release"), g.len()))
}

fn c8() -> Outcome {
    let p = prog("readers_writer")?;
    ensure(!check_program(&p, plain()).accepted(), "accepted without mixed guards")?;
    ensure(first_code(&p) == Some(Code::MixedGuard), "wrong code")?;
    let r = check_program(&p, mixed());
    ensure(r.accepted(), format!("{:?}", r.diagnostics().map(|d| d.to_string()).collect::<Vec<_>>()))?;
    Ok("rejected by default, accepted with mixed guards".into())
}

fn c9() -> Outcome {
    let p = prog("lock")?;
    let set = generate_constraints(&p);
    let mut tc = TypeCtx::new(p.types.clone());
    let (assignment, unsolved) = solve_forward(&set, &mut tc, &set.declared_solution());
    ensure(unsolved.is_empty(), format!("unsolved {unsolved:?}"))?;
    let errors = check_solution(&set, &mut tc, &assignment);
    ensure(errors.is_empty(), format!("{errors:?}"))?;
    Ok(format!("{} constraints over {} variables satisfied", set.len(), set.vars.len()))
}

fn c10() -> Outcome {
    for (src, want) in [
        ("session T = end;", "1"),
        ("session T = ?int.end;", "receive(!reply(int, !1))"),
        ("session T = !int.end;", "send(int, !reply(!1))"),
        ("session T = ?int.end & !int.end;", "receive(!(left(!receive(!reply(int, !1))) + right(!send(int, !reply(!1)))))"),
        ("session T = ?int.end (+) end;", "left(!reply(!receive(!reply(int, !1)))) + right(!reply(!1))"),
    ] {
        let f = parse_sessions(src).map_err(|e| e.to_string())?;
        let t = f.get(&f.order[0]).unwrap().clone();
        let (mut prog, got) = encode_pattern(&f, &t).map_err(|e| e.to_string())?;
        let want = parse_pattern(want, &mut prog.types).map_err(|e| e.to_string())?;
        let tc = TypeCtx::new(prog.types.clone());
        ensure(tc.pattern_equiv(&got, &want).unwrap_or(false), format!("{src}: got {}", got.display(&tc.table)))?;
    }
    let f = parse_sessions(corpus::SESSION_ST).map_err(|e| e.to_string())?;
    let enc = encode_named(&f, "T").map_err(|e| e.to_string())?;
    let shipped = corpus::get("session").unwrap();
    ensure(shipped.source.contains(enc.source.trim_end()), "shipped medium differs from the encoder output")?;
    let g = explore(&prog("session")?, Limits::default()).map_err(|x| x.to_string())?;
    let outs = print_outcomes(&g).ok_or("session graph cyclic or truncated")?;
    ensure(!outs.is_empty(), "no traces")?;
    ensure(outs.iter().all(|t| t.len() == 1 && t[0].values == [6]), format!("{outs:?}"))?;
    Ok(format!("encodings reproduced; {} maximal print sequences, all [6]", outs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("worked derivations type check", c1),
        ("rejections carry the expected diagnostics", c2),
        ("pattern algebra agrees with the oracle", c3),
        ("subtyping examples", c4),
        ("soundness on the corpus", c5),
        ("runtime counterexamples", c6),
        ("lock message bounds", c7),
        ("mixed guards", c8),
        ("constraint generation", c9),
        ("session encoder", c10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
