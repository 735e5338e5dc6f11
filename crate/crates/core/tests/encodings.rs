mod common;

use mbx_core::corpus;
use mbx_core::encodings::{dual, encode_named, encode_pattern, encode_session, parse_sessions, session_subtype, SessionType};
use mbx_core::patterns::Pattern;
use mbx_core::runtime::{explore, print_outcomes, Limits};
use mbx_core::syntax::parse_pattern;
use mbx_core::types::{Capability, TyId, TypeCtx};
use mbx_core::{check_program, CheckOptions, Ty};
use proptest::prelude::*;

fn file(src: &str) -> mbx_core::encodings::SessionFile {
    parse_sessions(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

/// E(T) for the first session of `src`, compared against `want` parsed
/// in the table of the generated program.
fn assert_encodes(src: &str, want: &str) {
    let f = file(src);
    let t = f.get(&f.order[0]).unwrap().clone();
    let (mut prog, got) = encode_pattern(&f, &t).unwrap();
    let want = parse_pattern(want, &mut prog.types).unwrap_or_else(|e| panic!("{want}: {e}"));
    let tc = TypeCtx::new(prog.types.clone());
    assert!(
        tc.pattern_equiv(&got, &want).unwrap(),
        "{src}: got {} want {}",
        got.display(&tc.table),
        want.display(&tc.table)
    );
}

#[test]
fn dual_examples() {
    let f = file("session T = !int.!int.?int.end; session D = ?int.?int.!int.end;");
    let t = f.get("T").unwrap();
    assert_eq!(&dual(t), f.get("D").unwrap());
    assert_eq!(dual(&SessionType::End), SessionType::End);
    let g = file("session J = join{a(int), b(int)};end; session F = fork{a(int), b(int)};end;");
    assert_eq!(&dual(g.get("J").unwrap()), g.get("F").unwrap());
}

#[test]
fn encoding_equations() {
    assert_encodes("session T = end;", "1");
    assert_encodes("session T = ?int.end;", "receive(!reply(int, !1))");
    assert_encodes("session T = !int.end;", "send(int, !reply(!1))");
    assert_encodes("session T = ?int.end & !int.end;", "receive(!(left(!receive(!reply(int, !1))) + right(!send(int, !reply(!1)))))");
    assert_encodes("session T = ?int.end (+) end;", "left(!reply(!receive(!reply(int, !1)))) + right(!reply(!1))");
    assert_encodes("session T = fork{a(int), b(int)};end;", "send(!reply(!1)) . a(int) . b(int)");
    assert_encodes("session T = join{a(int), b(int)};end;", "receive(!(a(int) . b(int) . reply(!1)))");
    assert_encodes("session T = !int.?int.end;", "send(int, !reply(!receive(!reply(int, !1))))");
}

#[test]
fn recursive_sessions_are_finite() {
    let f = file("session Loop = ?int.Loop & end;");
    let enc = encode_named(&f, "Loop").unwrap();
    let prog = mbx_core::parse(&enc.source).unwrap();
    assert!(check_program(&prog, CheckOptions::default()).accepted(), "{}", enc.source);
    assert!(prog.defs.len() < 10);
}

#[test]
fn contractiveness_and_tag_clashes_are_rejected() {
    assert!(parse_sessions("session L = L;").is_err());
    assert!(parse_sessions("session J = join{a(int), a(!A)};end;").is_err());
    assert!(parse_sessions("session J = join{a(int), a(int)};end;").is_ok());
    assert!(parse_sessions("session T = ?int.Nope;").is_err());
}

#[test]
fn end_session_frees_its_mailbox() {
    let f = file("session T = end;");
    let enc = encode_session(&f, &SessionType::End, None).unwrap();
    assert!(enc.source.contains("def Session_end(self: ?1) =\n    free self.done;"), "{}", enc.source);
}

#[test]
fn empty_fork_replies_to_both_sides() {
    let f = file("session Z = fork{};end;");
    let enc = encode_named(&f, "Z").unwrap();
    assert!(enc.source.contains("s!reply(self) | r!reply(self)"), "{}", enc.source);
    let prog = mbx_core::parse(&enc.source).unwrap();
    assert!(check_program(&prog, CheckOptions::default()).accepted());
}

#[test]
fn generated_media_type_check() {
    for src in [
        "session T = !int.!int.?int.end;",
        "session T = ?int.end & !int.end;",
        "session T = fork{a(int), b(int)};?int.end;",
        "session T = join{a(int)};!int.end;",
        "session Loop = ?int.Loop & end;",
        "session Ping = !int.?int.Ping (+) end;",
    ] {
        let f = file(src);
        let enc = encode_named(&f, &f.order[0]).unwrap();
        let prog = mbx_core::parse(&enc.source).unwrap();
        let report = check_program(&prog, CheckOptions::default());
        assert!(report.accepted(), "{src}\n{}\n{:?}", enc.source, report.diagnostics().collect::<Vec<_>>());
    }
}

#[test]
fn shipped_session_example_is_current_and_prints_six() {
    let f = file(corpus::SESSION_ST);
    let enc = encode_named(&f, "T").unwrap();
    let shipped = corpus::get("session").unwrap();
    assert!(shipped.source.contains(enc.source.trim_end()));
    let prog = shipped.program().unwrap();
    let g = explore(&prog, Limits::default()).unwrap();
    assert!(g.complete);
    let outs = print_outcomes(&g).expect("acyclic graph");
    assert!(!outs.is_empty());
    for trace in &outs {
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].values, vec![6]);
    }
}

// Sampled correspondence between session subtyping and the subtyping
// of encoded endpoint types.

#[derive(Clone, Debug)]
enum S {
    End,
    In(u8, Box<S>),
    Out(u8, Box<S>),
    Ext(Box<S>, Box<S>),
    Int(Box<S>, Box<S>),
}

const PAYLOADS: [&str; 3] = ["int", "(!(A + B))", "(!A)"];

fn text(s: &S) -> String {
    match s {
        S::End => "end".into(),
        S::In(p, k) => format!("?{}.{}", PAYLOADS[*p as usize], text(k)),
        S::Out(p, k) => format!("!{}.{}", PAYLOADS[*p as usize], text(k)),
        S::Ext(a, b) => format!("({}) & ({})", text(a), text(b)),
        S::Int(a, b) => format!("({}) (+) ({})", text(a), text(b)),
    }
}

fn session() -> impl Strategy<Value = S> {
    Just(S::End).prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            (0u8..3, inner.clone()).prop_map(|(p, k)| S::In(p, Box::new(k))),
            (0u8..3, inner.clone()).prop_map(|(p, k)| S::Out(p, Box::new(k))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| S::Ext(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| S::Int(Box::new(a), Box::new(b))),
        ]
    })
}

/// Mirror `s` with payloads replaced, to produce related pairs often.
fn perturb(s: &S, seed: &mut u32) -> S {
    *seed = seed.wrapping_mul(1103515245).wrapping_add(12345);
    let p = |x: u8, seed: u32| if seed % 3 == 0 { ((x as u32 + seed / 3) % 3) as u8 } else { x };
    match s {
        S::End => S::End,
        S::In(x, k) => S::In(p(*x, *seed), Box::new(perturb(k, seed))),
        S::Out(x, k) => S::Out(p(*x, *seed), Box::new(perturb(k, seed))),
        S::Ext(a, b) => S::Ext(Box::new(perturb(a, seed)), Box::new(perturb(b, seed))),
        S::Int(a, b) => S::Int(Box::new(perturb(a, seed)), Box::new(perturb(b, seed))),
    }
}

/// Encoded endpoint types `!E(T)` and `!E(S)` in a shared table, read
/// off the encoding of `T & S`.
fn endpoint_types(t: &S, s: &S) -> (mbx_core::encodings::SessionFile, SessionType, SessionType, TypeCtx, TyId, TyId) {
    let f = file(&format!("session P = ({}) & ({});", text(t), text(s)));
    let (a, b) = match f.get("P").unwrap() {
        SessionType::Ext(a, b) => ((**a).clone(), (**b).clone()),
        other => panic!("{other:?}"),
    };
    let (prog, pat) = encode_pattern(&f, f.get("P").unwrap()).unwrap();
    let tc = TypeCtx::new(prog.types.clone());
    let Pattern::Atom(recv) = pat else { panic!("receive atom expected") };
    let Some(Ty::Mailbox(Capability::Output, Pattern::Sum(arms))) = tc.table.view(recv.args[0]) else {
        panic!("choice payload expected")
    };
    let arg = |p: &Pattern| match p {
        Pattern::Atom(a) => a.args[0],
        other => panic!("{other:?}"),
    };
    let (left, right) = (arg(&arms[0]), arg(&arms[1]));
    (f, a, b, tc, left, right)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn dual_is_an_involution(s in session()) {
        let f = file(&format!("session X = {};", text(&s)));
        let t = f.get("X").unwrap();
        prop_assert_eq!(&dual(&dual(t)), t);
    }

    #[test]
    fn session_subtyping_matches_encoded_subtyping(t in session(), seed in any::<u32>()) {
        let mut seed = seed;
        let s = perturb(&t, &mut seed);
        let (f, a, b, tc, et, es) = endpoint_types(&t, &s);
        let sess = session_subtype(&f, &TypeCtx::new(f.types.clone()), &a, &b).unwrap();
        let enc = tc.subtype(et, es).unwrap();
        if sess {
            prop_assert!(enc, "{} ≤ {} but encodings unrelated", text(&t), text(&s));
        }
        prop_assert_eq!(sess, enc, "{} vs {}", text(&t), text(&s));
    }
}
