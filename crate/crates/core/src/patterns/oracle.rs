//! Direct enumeration of pattern semantics, bounded by configuration size.

use std::collections::BTreeSet;

use super::{Config, Pattern};

/// All configurations of `e` with at most `n` atoms. Atoms are compared
/// syntactically.
pub fn configurations_up_to(e: &Pattern, n: usize) -> BTreeSet<Config> {
    match e {
        Pattern::Zero => BTreeSet::new(),
        Pattern::One => BTreeSet::from([Config::new()]),
        Pattern::Atom(a) => {
            if n == 0 {
                BTreeSet::new()
            } else {
                BTreeSet::from([Config::from_atoms([a.clone()])])
            }
        }
        Pattern::Sum(ps) => ps.iter().flat_map(|p| configurations_up_to(p, n)).collect(),
        Pattern::Prod(ps) => {
            let mut acc = BTreeSet::from([Config::new()]);
            for p in ps {
                let rhs = configurations_up_to(p, n);
                acc = combine(&acc, &rhs, n);
            }
            acc
        }
        Pattern::Star(p) => {
            let base = configurations_up_to(p, n);
            let mut acc = BTreeSet::from([Config::new()]);
            loop {
                let next: BTreeSet<Config> = acc.union(&combine(&acc, &base, n)).cloned().collect();
                if next.len() == acc.len() {
                    return acc;
                }
                acc = next;
            }
        }
    }
}

fn combine(a: &BTreeSet<Config>, b: &BTreeSet<Config>, n: usize) -> BTreeSet<Config> {
    let mut out = BTreeSet::new();
    for x in a {
        for y in b {
            if x.len() + y.len() <= n {
                out.insert(x.union(y));
            }
        }
    }
    out
}
