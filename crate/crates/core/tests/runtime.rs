use mbx_core::corpus::{self, ENTRIES};
use mbx_core::runtime::{explore, mailbox_bounds, mailbox_bounds_filtered, run, step, threads, Limits, Rule, StateClass, Verdict};
use mbx_core::syntax::{congruence_normal_form, parse, Arg, Branch, Process};
use mbx_core::Program;

fn prog(name: &str) -> Program {
    corpus::get(name).unwrap().program().unwrap()
}

fn small() -> Limits {
    Limits { max_states: 20_000, max_depth: 5_000 }
}

/// The lock mailbox is served by a free lock: either the pending
/// `FreeLock(lock)` call or its unfolded guard.
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

/// Equal up to reordering, using the span-insensitive equality.
fn same_multiset(a: Vec<Process>, mut b: Vec<Process>) -> bool {
    for x in a {
        match b.iter().position(|y| *y == x) {
            Some(i) => {
                b.swap_remove(i);
            }
            None => return false,
        }
    }
    b.is_empty()
}

fn same_set(a: &[Process], b: &[Process]) -> bool {
    a.iter().all(|x| b.contains(x)) && b.iter().all(|y| a.contains(y))
}

#[test]
fn done_does_not_reduce() {
    let p = parse("main = done;").unwrap();
    assert!(step(&p, &Process::Done).unwrap().is_empty());
    let g = explore(&p, small()).unwrap();
    assert_eq!(g.classes, vec![StateClass::Done]);
}

#[test]
fn read_consumes_one_message() {
    let p = parse("main = new a in (a!m(1) | a?m(x: int).free a.done);").unwrap();
    let reds = step(&p, &p.main).unwrap();
    assert_eq!(reds.len(), 1);
    assert_eq!(reds[0].rule, Rule::Read);
    assert_eq!(reds[0].rule.name(), "r-read");
    let g = explore(&p, small()).unwrap();
    assert!(g.complete);
    assert_eq!(g.deadlock_free(), Verdict::Yes);
    assert_eq!(g.fairly_terminating(), Verdict::Yes);
}

#[test]
fn stepping_is_invariant_under_congruence() {
    for e in ENTRIES {
        let p = e.program().unwrap();
        let g = explore(&p, Limits { max_states: 300, max_depth: 50 }).unwrap();
        for s in &g.states {
            let reducts = |q: &Process| -> Vec<Process> {
                step(&p, q).unwrap().into_iter().map(|r| congruence_normal_form(&r.target)).collect()
            };
            assert!(same_set(&reducts(s), &reducts(&congruence_normal_form(s))), "{}", e.name);
        }
    }
}

#[test]
fn graph_edges_are_the_one_step_reducts() {
    for e in ENTRIES {
        let p = e.program().unwrap();
        let g = explore(&p, Limits { max_states: 500, max_depth: 100 }).unwrap();
        for (s, es) in g.edges.iter().enumerate() {
            if g.classes[s] == StateClass::Unexplored {
                continue;
            }
            let want: Vec<Process> = step(&p, &g.states[s]).unwrap().into_iter().map(|r| r.target).collect();
            let got: Vec<Process> = es.iter().map(|e| g.states[e.target].clone()).collect();
            assert!(same_multiset(got, want), "{} state {s}", e.name);
            let done = g.states[s] == Process::Done;
            assert_eq!(g.classes[s] == StateClass::Done, done && es.is_empty());
        }
    }
}

#[test]
fn runs_follow_edges_and_are_reproducible() {
    let p = prog("lock");
    for seed in 0..10 {
        let t = run(&p, seed, 1000).unwrap();
        let again = run(&p, seed, 1000).unwrap();
        assert_eq!(t.steps, again.steps);
        let mut cur = t.initial.clone();
        for s in &t.steps {
            let targets: Vec<Process> = step(&p, &cur).unwrap().into_iter().map(|r| r.target).collect();
            assert!(targets.contains(&s.state));
            cur = s.state.clone();
        }
        assert!(!t.truncated);
        assert_eq!(t.last_state(), &Process::Done);
    }
}

#[test]
fn lock_release_bounds() {
    let g = explore(&prog("lock"), Limits::default()).unwrap();
    assert!(g.complete);
    let all = mailbox_bounds(&g, "lock");
    assert!(all.get("release").1 <= 1);
    assert!(!all.lower_estimate);
    let free = mailbox_bounds_filtered(&g, "lock", lock_is_free);
    assert!(free.states > 0);
    assert_eq!(free.get("release"), (0, 0));
    let busy = mailbox_bounds_filtered(&g, "lock", |s| !lock_is_free(s));
    assert_eq!(busy.get("release").1, 1);
    // a mailbox nobody writes to stays empty
    assert!(mailbox_bounds(&g, "nobody").per_tag.is_empty());
}

#[test]
fn pool_results_do_not_exceed_workers() {
    let g = explore(&prog("master_workers"), Limits::default()).unwrap();
    assert!(g.complete);
    // the master spawns two workers per task; the pool has a fresh name
    let pooled = |s: &Process| {
        threads(s)
            .iter()
            .filter(|t| matches!(t, Process::Send { target, tag, .. } if tag.as_str() == "result" && target.as_str() != "client"))
            .count()
    };
    assert_eq!(g.states.iter().map(pooled).max(), Some(2));
    assert!(mailbox_bounds(&g, "client").get("result").1 <= 1);
    assert_eq!(g.deadlock_free(), Verdict::Yes);
}

#[test]
fn mutual_credit_deadlocks() {
    let g = explore(&prog("account_pair"), Limits::default()).unwrap();
    assert!(!g.deadlocks().is_empty());
    assert_eq!(g.deadlock_free(), Verdict::No);
    assert_eq!(g.fairly_terminating(), Verdict::No);
}

#[test]
fn stray_release_fails() {
    let g = explore(&prog("stray_release"), Limits::default()).unwrap();
    let w = g.fail_witness.as_ref().expect("unguarded fail");
    assert_eq!(w.mailbox.as_str(), "l");
    assert_eq!(w.path.first(), Some(&0));
    assert_eq!(w.path.last(), Some(&w.state));
    for pair in w.path.windows(2) {
        assert!(g.edges[pair[0]].iter().any(|e| e.target == pair[1]));
    }
    assert_eq!(g.mailbox_conformant(), Verdict::No);
}

#[test]
fn truncation_is_reported_as_unknown() {
    let g = explore(&prog("lock"), Limits { max_states: 3, max_depth: 10_000 }).unwrap();
    assert!(!g.complete);
    assert_eq!(g.deadlock_free(), Verdict::Unknown);
    assert_eq!(g.mailbox_conformant(), Verdict::Unknown);
    assert!(g.count(StateClass::Unexplored) > 0);
    let g = explore(&prog("lock"), Limits { max_states: 50_000, max_depth: 2 }).unwrap();
    assert!(!g.complete);
}

#[test]
fn corpus_runtime_expectations() {
    for e in ENTRIES {
        let g = explore(&e.program().unwrap(), Limits::default()).unwrap();
        assert!(g.complete, "{}", e.name);
        let (fail, deadlock) = (g.fail_witness.is_some(), !g.deadlocks().is_empty());
        match e.runtime {
            corpus::Runtime::Clean => assert!(!fail && !deadlock, "{}", e.name),
            corpus::Runtime::Deadlock => assert!(deadlock, "{}", e.name),
            corpus::Runtime::Fail => assert!(fail, "{}", e.name),
        }
    }
}

#[test]
fn finitely_unfolding_programs_terminate_fairly() {
    for e in ENTRIES.iter().filter(|e| e.well_typed()) {
        let g = explore(&e.program().unwrap(), Limits::default()).unwrap();
        if g.finitely_unfolding() == Verdict::Yes {
            assert_eq!(g.fairly_terminating(), Verdict::Yes, "{}", e.name);
        }
    }
    for name in ["lock", "session", "choice"] {
        let g = explore(&prog(name), Limits::default()).unwrap();
        assert_eq!(g.finitely_unfolding(), Verdict::Yes, "{name}");
    }
}
