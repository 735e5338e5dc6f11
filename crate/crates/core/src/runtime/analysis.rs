use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{StateGraph, StateClass};
use crate::syntax::{split_normal, Branch, Name, Process, Tag};

/// A consumed `print*` message.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PrintEvent {
    pub tag: Tag,
    pub values: Vec<i64>,
}

/// A mailbox whose only pending action in the canonical form is `fail`.
pub fn find_unguarded_fail(p: &Process) -> Option<Name> {
    split_normal(p).1.into_iter().find_map(|t| match t {
        Process::Guard { branches, .. } => match branches.as_slice() {
            [Branch::Fail { mailbox, .. }] => Some(mailbox.clone()),
            _ => None,
        },
        _ => None,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Bounds {
    /// Per tag, least and greatest number of stored messages.
    pub per_tag: BTreeMap<String, (usize, usize)>,
    /// Computed on a truncated graph: only valid for the explored part.
    pub lower_estimate: bool,
    pub states: usize,
}

impl Bounds {
    pub fn get(&self, tag: &str) -> (usize, usize) {
        self.per_tag.get(tag).copied().unwrap_or((0, 0))
    }
}

pub fn mailbox_bounds(graph: &StateGraph, mailbox: &str) -> Bounds {
    mailbox_bounds_filtered(graph, mailbox, |_| true)
}

/// Bounds over the states satisfying `keep`.
pub fn mailbox_bounds_filtered(graph: &StateGraph, mailbox: &str, keep: impl Fn(&Process) -> bool) -> Bounds {
    let counts: Vec<BTreeMap<String, usize>> = graph
        .states
        .iter()
        .filter(|s| keep(s))
        .map(|s| {
            let mut m = BTreeMap::new();
            for (tag, _) in super::stored_messages(s, mailbox) {
                *m.entry(tag.to_string()).or_insert(0) += 1;
            }
            m
        })
        .collect();
    let tags: BTreeSet<&String> = counts.iter().flat_map(|m| m.keys()).collect();
    let per_tag = tags
        .into_iter()
        .map(|t| {
            let ns = counts.iter().map(|m| m.get(t).copied().unwrap_or(0));
            let lo = ns.clone().min().unwrap_or(0);
            let hi = ns.max().unwrap_or(0);
            (t.clone(), (lo, hi))
        })
        .collect();
    Bounds { per_tag, lower_estimate: !graph.complete, states: counts.len() }
}

/// The sequences of print events along the maximal paths from the
/// initial state. `None` on cyclic or truncated graphs.
pub fn print_outcomes(graph: &StateGraph) -> Option<BTreeSet<Vec<PrintEvent>>> {
    if !graph.complete || graph.is_empty() {
        return None;
    }
    let comp = graph.scc();
    for (s, es) in graph.edges.iter().enumerate() {
        if es.iter().any(|e| comp[e.target] == comp[s]) {
            return None;
        }
    }
    let mut memo: Vec<Option<BTreeSet<Vec<PrintEvent>>>> = vec![None; graph.len()];
    // reverse topological order by repeated post-order DFS
    let mut order = Vec::new();
    let mut seen = vec![false; graph.len()];
    let mut stack = vec![(0usize, 0usize)];
    seen[0] = true;
    while let Some(&mut (v, ref mut k)) = stack.last_mut() {
        if let Some(e) = graph.edges[v].get(*k) {
            *k += 1;
            if !seen[e.target] {
                seen[e.target] = true;
                stack.push((e.target, 0));
            }
        } else {
            order.push(v);
            stack.pop();
        }
    }
    for v in order {
        let mut out = BTreeSet::new();
        if graph.edges[v].is_empty() {
            debug_assert_ne!(graph.classes[v], StateClass::Unexplored);
            out.insert(Vec::new());
        }
        for e in &graph.edges[v] {
            for tail in memo[e.target].as_ref().unwrap() {
                let mut seq = Vec::with_capacity(tail.len() + 1);
                seq.extend(e.print.iter().cloned());
                seq.extend(tail.iter().cloned());
                out.insert(seq);
            }
        }
        memo[v] = Some(out);
    }
    memo[0].take()
}
