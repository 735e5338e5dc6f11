use mbx_core::corpus::ENTRIES;
use mbx_core::syntax::{congruence_normal_form, parse, Arg, Branch, Name, Process, Span};
use proptest::prelude::*;

fn sp() -> Span {
    Span::new(0, 0)
}

fn main_of(src: &str) -> Process {
    parse(src).unwrap_or_else(|e| panic!("{e}")).main
}

fn nf(p: &Process) -> Process {
    congruence_normal_form(p)
}

#[test]
fn corpus_round_trips_through_the_printer() {
    for e in ENTRIES {
        let prog = e.program().unwrap();
        let printed = prog.display().to_string();
        let again = parse(&printed).unwrap_or_else(|err| panic!("{}: {err}\n{printed}", e.name));
        assert_eq!(again.display().to_string(), printed, "{}", e.name);
        assert_eq!(again.defs.len(), prog.defs.len());
        assert_eq!(nf(&again.main), nf(&prog.main), "{}", e.name);
        for (d, d2) in prog.defs.iter().zip(&again.defs) {
            assert_eq!(nf(&d.body), nf(&d2.body), "{}::{}", e.name, d.name);
        }
    }
}

#[test]
fn congruence_examples() {
    let p = main_of("main = a!m();");
    assert_eq!(nf(&Process::Par(vec![Process::Done, p.clone()])), nf(&p));
    let g = main_of("main = fail a + b?k().done;");
    assert_eq!(nf(&g), nf(&main_of("main = b?k().done;")));
    let x = main_of("main = new a in new b in (a!m(b) | b!n(a));");
    let y = main_of("main = new b in new a in (a!m(b) | b!n(a));");
    assert_eq!(nf(&x), nf(&y));
    let z = main_of("main = new c in new d in (d!m(c) | c!n(d));");
    assert_eq!(nf(&x), nf(&z), "alpha-equivalent terms share a normal form");
}

#[test]
fn syntax_errors_carry_positions() {
    let err = parse("def X(self: ?1) =\n  self?m(.done;\nmain = done;").unwrap_err();
    let text = err.to_string();
    assert!(text.starts_with("2:"), "{text}");
}

// Random processes over mailboxes a, b, c with argument-free receives.

fn name() -> impl Strategy<Value = Name> {
    prop_oneof![Just("a"), Just("b"), Just("c")].prop_map(Name::new)
}

fn tag() -> impl Strategy<Value = Name> {
    prop_oneof![Just("m"), Just("n")].prop_map(Name::new)
}

fn process() -> impl Strategy<Value = Process> {
    let leaf = prop_oneof![
        Just(Process::Done),
        (name(), tag(), proptest::option::of(name())).prop_map(|(t, g, arg)| Process::Send {
            target: t,
            tag: g,
            args: arg.map(Arg::Name).into_iter().collect(),
            span: sp(),
        }),
    ];
    leaf.prop_recursive(4, 16, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Process::Par),
            (name(), inner.clone()).prop_map(|(n, b)| Process::New { name: n, body: Box::new(b), span: sp() }),
            (name(), tag(), inner.clone(), proptest::option::of(inner), any::<bool>()).prop_map(|(u, t, p, q, fail)| {
                let mut branches = vec![Branch::Receive { mailbox: u.clone(), tag: t, binders: vec![], body: Box::new(p), span: sp() }];
                if let Some(q) = q {
                    branches.push(Branch::Free { mailbox: u.clone(), body: Box::new(q), span: sp() });
                }
                if fail {
                    branches.push(Branch::Fail { mailbox: u, span: sp() });
                }
                Process::Guard { branches, span: sp() }
            }),
        ]
    })
}

#[derive(Clone, Copy, Debug)]
enum Axiom {
    ParComm,
    ParAssoc,
    ParUnit,
    NewSwap,
    NewExtrude,
    BranchComm,
    FailUnit,
}

fn axiom() -> impl Strategy<Value = Axiom> {
    prop_oneof![
        Just(Axiom::ParComm),
        Just(Axiom::ParAssoc),
        Just(Axiom::ParUnit),
        Just(Axiom::NewSwap),
        Just(Axiom::NewExtrude),
        Just(Axiom::BranchComm),
        Just(Axiom::FailUnit),
    ]
}

/// Rewrite with `ax` at the root if it applies.
fn at_root(p: &Process, ax: Axiom) -> Option<Process> {
    match (ax, p) {
        (Axiom::ParComm, Process::Par(ps)) => Some(Process::Par(ps.iter().rev().cloned().collect())),
        (Axiom::ParAssoc, Process::Par(ps)) if ps.len() >= 3 => {
            Some(Process::Par(vec![Process::Par(ps[..2].to_vec()), Process::Par(ps[2..].to_vec())]))
        }
        (Axiom::ParUnit, q) => Some(Process::Par(vec![q.clone(), Process::Done])),
        (Axiom::NewSwap, Process::New { name: a, body, .. }) => match &**body {
            Process::New { name: b, body: inner, .. } if a != b => Some(Process::New {
                name: b.clone(),
                body: Box::new(Process::New { name: a.clone(), body: inner.clone(), span: sp() }),
                span: sp(),
            }),
            _ => None,
        },
        (Axiom::NewExtrude, Process::Par(ps)) if ps.len() >= 2 => match &ps[0] {
            Process::New { name, body, .. } if ps[1..].iter().all(|q| !q.free_names().contains(name)) => {
                let mut inner = vec![(**body).clone()];
                inner.extend(ps[1..].iter().cloned());
                Some(Process::New { name: name.clone(), body: Box::new(Process::Par(inner)), span: sp() })
            }
            _ => None,
        },
        (Axiom::BranchComm, Process::Guard { branches, .. }) if branches.len() >= 2 => {
            Some(Process::Guard { branches: branches.iter().rev().cloned().collect(), span: sp() })
        }
        (Axiom::FailUnit, Process::Guard { branches, .. }) => {
            let u = branches[0].mailbox().clone();
            let mut bs = branches.clone();
            bs.push(Branch::Fail { mailbox: u, span: sp() });
            Some(Process::Guard { branches: bs, span: sp() })
        }
        _ => None,
    }
}

/// Apply `ax` at the `k`-th applicable position, counting in preorder.
fn rewrite(p: &Process, ax: Axiom, k: &mut usize) -> Option<Process> {
    if let Some(q) = at_root(p, ax) {
        if *k == 0 {
            return Some(q);
        }
        *k -= 1;
    }
    match p {
        Process::Par(ps) => {
            for (i, q) in ps.iter().enumerate() {
                if let Some(r) = rewrite(q, ax, k) {
                    let mut out = ps.clone();
                    out[i] = r;
                    return Some(Process::Par(out));
                }
            }
            None
        }
        Process::New { name, body, .. } => {
            rewrite(body, ax, k).map(|b| Process::New { name: name.clone(), body: Box::new(b), span: sp() })
        }
        Process::Guard { branches, .. } => {
            for (i, b) in branches.iter().enumerate() {
                let new_body = match b {
                    Branch::Receive { body, .. } | Branch::Free { body, .. } => rewrite(body, ax, k),
                    Branch::Fail { .. } => None,
                };
                if let Some(nb) = new_body {
                    let mut bs = branches.clone();
                    bs[i] = match b {
                        Branch::Receive { mailbox, tag, binders, span, .. } => Branch::Receive {
                            mailbox: mailbox.clone(),
                            tag: tag.clone(),
                            binders: binders.clone(),
                            body: Box::new(nb),
                            span: *span,
                        },
                        Branch::Free { mailbox, span, .. } => Branch::Free { mailbox: mailbox.clone(), body: Box::new(nb), span: *span },
                        Branch::Fail { .. } => unreachable!(),
                    };
                    return Some(Process::Guard { branches: bs, span: sp() });
                }
            }
            None
        }
        _ => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn normal_form_is_idempotent(p in process()) {
        let once = nf(&p);
        prop_assert_eq!(nf(&once), once);
    }

    #[test]
    fn normal_form_preserves_free_names(p in process()) {
        prop_assert_eq!(nf(&p).free_names(), p.free_names());
    }

    #[test]
    fn normal_form_absorbs_axioms(p in process(), ax in axiom(), k in 0usize..6) {
        let mut k = k;
        if let Some(q) = rewrite(&p, ax, &mut k) {
            prop_assert_eq!(nf(&q), nf(&p), "{:?}", ax);
        }
    }

    #[test]
    fn printed_processes_reparse(p in process()) {
        let src = format!("main = {};", p.display(&mbx_core::TypeTable::new()));
        let back = parse(&src).map_err(|e| TestCaseError::fail(format!("{e}: {src}")))?;
        prop_assert_eq!(nf(&back.main), nf(&p));
    }
}
