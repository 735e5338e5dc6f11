mod common;

use std::collections::{BTreeSet, HashMap};

use common::brute_cyclic;
use mbx_core::syntax::Name;
use mbx_core::DepGraph;
use proptest::prelude::*;

fn e(a: &str, b: &str) -> DepGraph {
    DepGraph::edge(a, b)
}

fn u(a: DepGraph, b: DepGraph) -> DepGraph {
    DepGraph::union(a, b)
}

fn r(a: &str, g: DepGraph) -> DepGraph {
    DepGraph::restrict(Name::new(a), g)
}

fn pairs(g: &DepGraph) -> Vec<(String, String)> {
    g.grel().into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

#[test]
fn examples() {
    assert!(pairs(&DepGraph::Empty).is_empty());
    assert_eq!(pairs(&e("a", "b")), vec![("a".into(), "b".into())]);
    assert_eq!(pairs(&r("b", u(e("a", "b"), e("b", "c")))), vec![("a".into(), "c".into())]);
    assert!(e("u", "v").acyclic());
    assert!(!u(e("u", "v"), e("u", "v")).acyclic());
    assert!(!u(e("f", "c"), e("c", "f")).acyclic());
    assert!(u(r("a", e("a", "b")), e("b", "d")).acyclic());
    assert!(!e("u", "u").acyclic());
}

#[test]
fn entailment() {
    let g = u(e("a", "b"), e("b", "c"));
    assert!(g.entails(&DepGraph::Empty));
    assert!(g.entails(&e("a", "c")));
    assert!(!DepGraph::Empty.entails(&e("a", "b")));
}

#[test]
fn substitution_can_merge_edges() {
    let m: HashMap<Name, Name> = [(Name::new("x"), Name::new("a")), (Name::new("y"), Name::new("b"))].into();
    assert_eq!(pairs(&e("x", "y").substitute(&m)), vec![("a".into(), "b".into())]);
    // both message edges of the multiplicity example land on a - b
    let m: HashMap<Name, Name> = [(Name::new("x"), Name::new("a")), (Name::new("y"), Name::new("a"))].into();
    let g = u(e("x", "b"), e("y", "b"));
    assert!(g.acyclic());
    assert!(!g.substitute(&m).acyclic());
}

#[test]
fn cycle_is_reported() {
    let g = u(e("f", "c"), u(e("c", "f"), e("a", "b")));
    let c = g.find_cycle().unwrap();
    assert_eq!(c.len(), 2);
    assert!(c.iter().all(|(x, y, _)| [x.as_str(), y.as_str()].iter().all(|n| *n == "f" || *n == "c")));
}

#[derive(Clone, Debug)]
enum G {
    E(u8, u8),
    U(Box<G>, Box<G>),
    R(u8, Box<G>),
}

const NAMES: [&str; 5] = ["a", "b", "c", "d", "e"];

fn graph() -> impl Strategy<Value = G> {
    let leaf = (0u8..5, 0u8..5).prop_map(|(a, b)| G::E(a, b));
    leaf.prop_recursive(4, 12, 2, |inner| {
        prop_oneof![
            3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| G::U(Box::new(a), Box::new(b))),
            1 => (0u8..5, inner).prop_map(|(n, g)| G::R(n, Box::new(g))),
        ]
    })
}

fn to_dep(g: &G) -> DepGraph {
    match g {
        G::E(a, b) => e(NAMES[*a as usize], NAMES[*b as usize]),
        G::U(a, b) => u(to_dep(a), to_dep(b)),
        G::R(n, g) => r(NAMES[*n as usize], to_dep(g)),
    }
}

/// Edge multiset with restricted names made unique, and the free names.
fn flatten(g: &G) -> (Vec<(String, String)>, BTreeSet<String>) {
    fn go(g: &G, scope: &mut Vec<(u8, String)>, fresh: &mut usize, out: &mut Vec<(String, String)>) {
        let name = |k: u8, scope: &Vec<(u8, String)>| {
            scope.iter().rev().find(|(n, _)| *n == k).map(|(_, s)| s.clone()).unwrap_or_else(|| NAMES[k as usize].to_string())
        };
        match g {
            G::E(a, b) => out.push((name(*a, scope), name(*b, scope))),
            G::U(a, b) => {
                go(a, scope, fresh, out);
                go(b, scope, fresh, out);
            }
            G::R(n, body) => {
                *fresh += 1;
                scope.push((*n, format!("#{fresh}")));
                go(body, scope, fresh, out);
                scope.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(g, &mut Vec::new(), &mut 0, &mut out);
    let free = out.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).filter(|n| !n.starts_with('#')).collect();
    (out, free)
}

fn connected(edges: &[(String, String)], x: &str, y: &str) -> bool {
    let mut seen = BTreeSet::from([x.to_string()]);
    let mut todo = vec![x.to_string()];
    while let Some(v) = todo.pop() {
        for (a, b) in edges {
            for (p, q) in [(a, b), (b, a)] {
                if *p == v && seen.insert(q.clone()) {
                    todo.push(q.clone());
                }
            }
        }
    }
    seen.contains(y)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn acyclicity_matches_trail_search(g in graph()) {
        let (edges, free) = flatten(&g);
        prop_assume!(edges.len() <= 8);
        prop_assert_eq!(to_dep(&g).acyclic(), !brute_cyclic(&edges, &free));
    }

    #[test]
    fn relation_matches_connectivity(g in graph()) {
        let (edges, free) = flatten(&g);
        let rel = to_dep(&g).grel();
        for x in &free {
            for y in &free {
                if x < y {
                    let want = connected(&edges, x, y);
                    prop_assert_eq!(rel.contains(&(Name::new(x), Name::new(y))), want, "{} {}", x, y);
                }
            }
        }
    }

    #[test]
    fn union_laws(a in graph(), b in graph(), c in graph()) {
        let (a, b, c) = (to_dep(&a), to_dep(&b), to_dep(&c));
        prop_assert_eq!(u(a.clone(), b.clone()).grel(), u(b.clone(), a.clone()).grel());
        prop_assert_eq!(u(u(a.clone(), b.clone()), c.clone()).grel(), u(a.clone(), u(b.clone(), c.clone())).grel());
        prop_assert_eq!(u(DepGraph::Empty, a.clone()).grel(), a.grel());
    }

    #[test]
    fn scope_extrusion(n in 0u8..5, a in graph(), b in graph()) {
        let name = NAMES[n as usize];
        let (phi, psi) = (to_dep(&a), to_dep(&b));
        prop_assume!(!psi.free_names().contains(&Name::new(name)));
        prop_assert_eq!(
            u(r(name, phi.clone()), psi.clone()).grel(),
            r(name, u(phi, psi)).grel()
        );
    }

    #[test]
    fn renaming_bound_names_is_invisible(a in graph()) {
        // alpha-renaming every restricted name to a fresh one leaves the flattened view unchanged
        fn rename(g: &G) -> DepGraph {
            match g {
                G::E(a, b) => e(NAMES[*a as usize], NAMES[*b as usize]),
                G::U(a, b) => u(rename(a), rename(b)),
                G::R(n, body) => {
                    let fresh = format!("z{n}");
                    let m: HashMap<Name, Name> = [(Name::new(NAMES[*n as usize]), Name::new(&fresh))].into();
                    r(&fresh, rename(body).substitute(&m))
                }
            }
        }
        let g = to_dep(&a);
        let h = rename(&a);
        prop_assert_eq!(g.grel(), h.grel());
        prop_assert_eq!(g.acyclic(), h.acyclic());
    }
}
