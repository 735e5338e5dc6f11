#![allow(dead_code)]

//! Test-side oracles. These are written from the definitions directly
//! and share no code with the library's decision procedures.

use std::collections::{BTreeMap, BTreeSet};

use mbx_core::patterns::{Atom, Config, Pattern};
use mbx_core::syntax::parse_pattern;
use mbx_core::types::{TypeCtx, TypeTable};
use proptest::prelude::*;

/// A multiset of atoms, keyed by tag for argument-free atoms.
pub type Bag = BTreeMap<String, usize>;

fn key(a: &Atom) -> String {
    assert!(a.args.is_empty(), "oracle handles argument-free atoms only");
    a.tag.to_string()
}

fn add(x: &Bag, y: &Bag) -> Bag {
    let mut out = x.clone();
    for (k, n) in y {
        *out.entry(k.clone()).or_insert(0) += n;
    }
    out
}

fn size(b: &Bag) -> usize {
    b.values().sum()
}

/// Every configuration of `p` with at most `n` atoms, by unfolding the
/// inductive definition of the semantics.
pub fn bags(p: &Pattern, n: usize) -> BTreeSet<Bag> {
    match p {
        Pattern::Zero => BTreeSet::new(),
        Pattern::One => BTreeSet::from([Bag::new()]),
        Pattern::Atom(a) => {
            if n == 0 {
                BTreeSet::new()
            } else {
                BTreeSet::from([Bag::from([(key(a), 1)])])
            }
        }
        Pattern::Sum(ps) => ps.iter().flat_map(|q| bags(q, n)).collect(),
        Pattern::Prod(ps) => {
            let mut acc = BTreeSet::from([Bag::new()]);
            for q in ps {
                let right = bags(q, n);
                let mut next = BTreeSet::new();
                for x in &acc {
                    for y in &right {
                        let z = add(x, y);
                        if size(&z) <= n {
                            next.insert(z);
                        }
                    }
                }
                acc = next;
            }
            acc
        }
        Pattern::Star(q) => {
            // least fixpoint of S = {[]} ∪ q·S, bounded by size
            let base = bags(q, n);
            let mut acc = BTreeSet::from([Bag::new()]);
            loop {
                let mut grew = false;
                let snapshot: Vec<Bag> = acc.iter().cloned().collect();
                for x in &snapshot {
                    for y in &base {
                        let z = add(x, y);
                        if size(&z) <= n && acc.insert(z) {
                            grew = true;
                        }
                    }
                }
                if !grew {
                    break acc;
                }
            }
        }
    }
}

pub fn member(b: &Bag, p: &Pattern) -> bool {
    bags(p, size(b)).contains(b)
}

pub fn bag_of(c: &Config) -> Bag {
    c.iter().map(|(a, n)| (key(a), n)).collect()
}

/// Oracle inclusion up to configurations of size `n`.
pub fn included_up_to(e: &Pattern, f: &Pattern, n: usize) -> Result<(), Bag> {
    for b in bags(e, n) {
        if !member(&b, f) {
            return Err(b);
        }
    }
    Ok(())
}

pub fn ctx() -> TypeCtx {
    TypeCtx::new(TypeTable::new())
}

pub fn pat(src: &str) -> Pattern {
    let mut t = TypeTable::new();
    parse_pattern(src, &mut t).unwrap_or_else(|e| panic!("{src}: {e}"))
}

pub fn show(p: &Pattern) -> String {
    p.display(&TypeTable::new()).to_string()
}

/// Small random patterns over three argument-free atoms, built from
/// raw constructors so that no smart-constructor simplification hides
/// cases.
pub fn small_pattern() -> impl Strategy<Value = Pattern> {
    let leaf = prop_oneof![
        1 => Just(Pattern::Zero),
        2 => Just(Pattern::One),
        3 => Just(Pattern::Atom(Atom::new("A", vec![]))),
        3 => Just(Pattern::Atom(Atom::new("B", vec![]))),
        2 => Just(Pattern::Atom(Atom::new("C", vec![]))),
    ];
    leaf.prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Pattern::Sum(vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Pattern::Prod(vec![a, b])),
            inner.prop_map(|a| Pattern::Star(Box::new(a))),
        ]
    })
}

pub fn small_atom() -> impl Strategy<Value = Atom> {
    prop_oneof![Just("A"), Just("B"), Just("C")].prop_map(|t| Atom::new(t, vec![]))
}

/// Argument-free patterns from the worked examples and the docs.
pub const NAMED_PATTERNS: &[&str] = &[
    "0",
    "1",
    "A",
    "A + B",
    "A.B",
    "B.A",
    "A*",
    "A.A*",
    "1 + A.A*",
    "A.C + B.A",
    "A.(B + C) + B.A",
    "B + C",
    "release.acquire*",
    "acquire*",
    "1 + acquire.acquire* + release.0",
    "(A + B)*",
    "A*.B*",
    "(A.B)*",
    "A.A + B",
    "A.0",
    "put.get*",
    "debit*.credit*",
    "debit*.credit* + stop",
];

/// Literal reading of the labelled transitions on dependency graphs:
/// a free vertex depends on itself when a trail (each edge of the
/// multiset used at most once) leads from it back to it.
pub fn brute_cyclic(edges: &[(String, String)], free: &BTreeSet<String>) -> bool {
    fn trail(edges: &[(String, String)], used: &mut [bool], at: &str, start: &str) -> bool {
        for i in 0..edges.len() {
            if used[i] {
                continue;
            }
            let (a, b) = &edges[i];
            let next = if a == at {
                b
            } else if b == at {
                a
            } else {
                continue;
            };
            if next == start {
                return true;
            }
            used[i] = true;
            let found = trail(edges, used, next, start);
            used[i] = false;
            if found {
                return true;
            }
        }
        false
    }
    free.iter().any(|v| trail(edges, &mut vec![false; edges.len()], v, v))
}
