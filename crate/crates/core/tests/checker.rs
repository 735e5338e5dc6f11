use std::collections::BTreeSet;

use mbx_core::checker::{
    check_process_in, check_solution, generate_constraints, solve_forward, synthesize, Code, Usage, Witness,
};
use mbx_core::corpus::{self, ENTRIES};
use mbx_core::runtime::{explore, Limits};
use mbx_core::syntax::{congruence_normal_form, parse, parse_type, Name};
use mbx_core::types::{TypeCtx, TypeEnv};
use mbx_core::{check_program, CheckOptions, DepGraph, Program};

fn prog(name: &str) -> Program {
    corpus::get(name).unwrap().program().unwrap()
}

fn opts(mixed: bool) -> CheckOptions {
    CheckOptions { mixed_guards: mixed, ..CheckOptions::default() }
}

#[test]
fn corpus_verdicts_and_codes() {
    for e in ENTRIES {
        let p = e.program().unwrap();
        let plain = check_program(&p, opts(false));
        assert_eq!(plain.accepted(), e.accepted, "{}: {:?}", e.name, plain.diagnostics().collect::<Vec<_>>());
        let mixed = check_program(&p, opts(true));
        assert_eq!(mixed.accepted(), e.accepted_mixed, "{} (mixed)", e.name);
        assert_eq!(plain.diagnostics().next().map(|d| d.code), e.code, "{}", e.name);
    }
}

#[test]
fn rejections_point_into_the_source() {
    for e in ENTRIES.iter().filter(|e| !e.accepted) {
        let report = check_program(&e.program().unwrap(), opts(false));
        let d = report.diagnostics().next().expect("a diagnostic");
        assert!(d.span.end > d.span.start, "{}: {d}", e.name);
        assert!(d.span.end <= e.source.len());
    }
}

#[test]
fn lock_definitions_match_their_declarations() {
    let p = prog("lock");
    let mut table = p.types.clone();
    let tau = parse_type("?acquire(!reply(!release))*", &mut table).unwrap();
    let rho = parse_type("!reply(!release)", &mut table).unwrap();
    let tc = TypeCtx::new(table);
    let def = |n: &str| p.defs.iter().find(|d| d.name.as_str() == n).unwrap();
    let free = def("FreeLock");
    assert_eq!(free.params.len(), 1);
    assert!(tc.equiv(free.params[0].ty, tau).unwrap());
    assert!(free.graph.grel().is_empty());
    let busy = def("BusyLock");
    assert!(tc.equiv(busy.params[0].ty, tau).unwrap());
    assert!(tc.equiv(busy.params[1].ty, rho).unwrap());
    assert_eq!(busy.graph.grel(), DepGraph::edge("self", "owner").grel());
    let report = check_program(&p, opts(false));
    for n in ["FreeLock", "BusyLock", "User", "main"] {
        let r = if n == "main" { &report.main } else { report.definition(n).unwrap() };
        assert!(r.diagnostics.is_empty(), "{n}: {:?}", r.diagnostics);
    }
}

#[test]
fn future_deadlock_cycle_is_between_c_and_f() {
    let report = check_program(&prog("future_deadlock"), opts(false));
    let d = report.diagnostics().next().unwrap();
    assert_eq!(d.code, Code::Cycle);
    let Some(Witness::Cycle { edges }) = &d.witness else { panic!("{d}") };
    let names: BTreeSet<&str> = edges.iter().flatten().map(String::as_str).collect();
    assert_eq!(names, BTreeSet::from(["c", "f"]));
}

#[test]
fn linear_input_sharing_is_undefined() {
    let report = check_program(&prog("linear_input"), opts(false));
    assert_eq!(report.diagnostics().next().unwrap().code, Code::CombinationUndefined);
}

#[test]
fn readers_writer_needs_mixed_guards() {
    let p = prog("readers_writer");
    let plain = check_program(&p, opts(false));
    assert!(!plain.accepted());
    assert!(plain.diagnostics().all(|d| d.code == Code::MixedGuard));
    assert!(plain.definition("Read").unwrap().diagnostics.len() == 1);
    let mixed = check_program(&p, opts(true));
    assert!(mixed.accepted(), "{:?}", mixed.diagnostics().collect::<Vec<_>>());
}

/// Every reachable state of a well-typed closed program checks against
/// the empty goal.
#[test]
fn reachable_states_stay_well_typed() {
    for e in ENTRIES.iter().filter(|e| e.well_typed()) {
        let p = e.program().unwrap();
        let o = opts(!e.accepted);
        let tc = TypeCtx::new(p.types.clone());
        let g = explore(&p, Limits::default()).unwrap();
        assert!(g.complete, "{}", e.name);
        for (i, s) in g.states.iter().enumerate() {
            if let Err(d) = check_process_in(&p, &tc, s, &TypeEnv::new(), o) {
                panic!("{} state {i}: {d}\n{}", e.name, s.display(&p.types));
            }
        }
    }
}

#[test]
fn synthesis_is_invariant_under_congruence() {
    for e in ENTRIES {
        let p = e.program().unwrap();
        let o = opts(e.accepted_mixed && !e.accepted);
        let mut bodies: Vec<_> = p.defs.iter().map(|d| d.body.clone()).collect();
        bodies.push(p.main.clone());
        let g = explore(&p, Limits { max_states: 200, max_depth: 30 }).unwrap();
        bodies.extend(g.states.iter().cloned());
        for b in &bodies {
            let x = synthesize(&p, b, o).is_ok();
            let y = synthesize(&p, &congruence_normal_form(b), o).is_ok();
            assert_eq!(x, y, "{}: {}", e.name, b.display(&p.types));
        }
    }
}

#[test]
fn accepted_judgments_are_well_formed() {
    for e in ENTRIES {
        let p = e.program().unwrap();
        let o = opts(e.accepted_mixed);
        for d in &p.defs {
            if let Ok(j) = synthesize(&p, &d.body, o) {
                let dom: BTreeSet<Name> = j.env.keys().cloned().collect();
                assert!(j.graph.free_names().is_subset(&dom), "{}::{}", e.name, d.name);
                assert!(j.graph.acyclic(), "{}::{}", e.name, d.name);
            }
        }
    }
}

#[test]
fn fail_only_guards_are_unreliable() {
    let p = parse("main = new a in fail a;").unwrap();
    let j = synthesize(&p, &mbx_core::syntax::parse("main = fail a;").unwrap().main, CheckOptions::default()).unwrap();
    match &j.env[&Name::new("a")] {
        Usage::Mailbox { input: Some(i), .. } => assert_eq!(*i, mbx_core::Pattern::Zero),
        other => panic!("{other:?}"),
    }
    let report = check_program(&p, CheckOptions::default());
    assert!(!report.accepted());
}

#[test]
fn lock_constraints_are_satisfied_by_the_declared_types() {
    let p = prog("lock");
    let set = generate_constraints(&p);
    assert!(!set.is_empty());
    let mut tc = TypeCtx::new(p.types.clone());
    let (assignment, unsolved) = solve_forward(&set, &mut tc, &set.declared_solution());
    assert!(unsolved.is_empty(), "{unsolved:?}");
    let errors = check_solution(&set, &mut tc, &assignment);
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn constraint_verdicts_follow_the_checker() {
    for e in ENTRIES.iter().filter(|e| e.accepted) {
        let p = e.program().unwrap();
        let set = generate_constraints(&p);
        let mut tc = TypeCtx::new(p.types.clone());
        let (assignment, unsolved) = solve_forward(&set, &mut tc, &set.declared_solution());
        assert!(unsolved.is_empty(), "{}", e.name);
        assert!(check_solution(&set, &mut tc, &assignment).is_empty(), "{}", e.name);
    }
}

#[test]
fn tiny_programs() {
    let accept = |src: &str| check_program(&parse(src).unwrap(), CheckOptions::default()).accepted();
    assert!(accept("main = done;"));
    assert!(accept("main = new a in (a!m() | a?m().free a.done);"));
    assert!(!accept("main = new a in a!m();"));
    assert!(!accept("main = new a in free a.a!m();"));
    assert!(!accept("main = new a in (a!m() | a!m() | a?m().free a.done);"));
    let open = check_program(&parse("main = a!m();").unwrap(), CheckOptions::default());
    assert!(!open.accepted());
}
