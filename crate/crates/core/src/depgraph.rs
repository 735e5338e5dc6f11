//! Dependency graphs: multigraphs over names with restriction.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::syntax::{Name, Span};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DepGraph {
    Empty,
    Edge(Name, Name, Span),
    /// Multiset union: `φ ⊔ φ` doubles every edge.
    Union(Box<DepGraph>, Box<DepGraph>),
    Restrict(Name, Box<DepGraph>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub name: Name,
    pub free: bool,
}

/// Flattened form: restricted names become distinct vertices.
#[derive(Clone, Debug, Default)]
pub struct FlatGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(usize, usize, Span)>,
}

impl Default for DepGraph {
    fn default() -> Self {
        DepGraph::Empty
    }
}

impl DepGraph {
    pub fn edge(u: impl Into<Name>, v: impl Into<Name>) -> DepGraph {
        DepGraph::Edge(u.into(), v.into(), Span::default())
    }

    pub fn union(a: DepGraph, b: DepGraph) -> DepGraph {
        match (a, b) {
            (DepGraph::Empty, x) | (x, DepGraph::Empty) => x,
            (x, y) => DepGraph::Union(Box::new(x), Box::new(y)),
        }
    }

    pub fn union_all(items: impl IntoIterator<Item = DepGraph>) -> DepGraph {
        items.into_iter().fold(DepGraph::Empty, DepGraph::union)
    }

    pub fn restrict(a: Name, g: DepGraph) -> DepGraph {
        if g.free_names().contains(&a) {
            DepGraph::Restrict(a, Box::new(g))
        } else {
            g
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            DepGraph::Empty => {}
            DepGraph::Edge(u, v, _) => {
                for x in [u, v] {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
            }
            DepGraph::Union(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            DepGraph::Restrict(a, g) => {
                bound.push(a.clone());
                g.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Rename free vertices. Restricted names clashing with the range of
    /// the mapping are renamed apart first.
    pub fn substitute(&self, mapping: &HashMap<Name, Name>) -> DepGraph {
        match self {
            DepGraph::Empty => DepGraph::Empty,
            DepGraph::Edge(u, v, s) => {
                let f = |x: &Name| mapping.get(x).cloned().unwrap_or_else(|| x.clone());
                DepGraph::Edge(f(u), f(v), *s)
            }
            DepGraph::Union(a, b) => {
                DepGraph::Union(Box::new(a.substitute(mapping)), Box::new(b.substitute(mapping)))
            }
            DepGraph::Restrict(a, g) => {
                let mut inner = mapping.clone();
                inner.remove(a);
                let clash = inner.values().any(|v| v == a);
                if clash {
                    let avoid: HashSet<&Name> = inner.values().chain(inner.keys()).collect();
                    let fv = g.free_names();
                    let mut fresh = Name::from(format!("{a}'"));
                    while avoid.contains(&fresh) || fv.contains(&fresh) {
                        fresh = Name::from(format!("{fresh}'"));
                    }
                    inner.insert(a.clone(), fresh.clone());
                    DepGraph::Restrict(fresh, Box::new(g.substitute(&inner)))
                } else {
                    DepGraph::Restrict(a.clone(), Box::new(g.substitute(&inner)))
                }
            }
        }
    }

    pub fn flatten(&self) -> FlatGraph {
        let mut flat = FlatGraph::default();
        let mut free: HashMap<Name, usize> = HashMap::new();
        let mut scope: Vec<(Name, usize)> = Vec::new();
        self.flatten_into(&mut flat, &mut free, &mut scope);
        flat
    }

    fn flatten_into(&self, flat: &mut FlatGraph, free: &mut HashMap<Name, usize>, scope: &mut Vec<(Name, usize)>) {
        match self {
            DepGraph::Empty => {}
            DepGraph::Edge(u, v, s) => {
                let mut vertex = |x: &Name| {
                    if let Some((_, i)) = scope.iter().rev().find(|(n, _)| n == x) {
                        return *i;
                    }
                    *free.entry(x.clone()).or_insert_with(|| {
                        flat.vertices.push(Vertex { name: x.clone(), free: true });
                        flat.vertices.len() - 1
                    })
                };
                let (i, j) = (vertex(u), vertex(v));
                flat.edges.push((i, j, *s));
            }
            DepGraph::Union(a, b) => {
                a.flatten_into(flat, free, scope);
                b.flatten_into(flat, free, scope);
            }
            DepGraph::Restrict(a, g) => {
                flat.vertices.push(Vertex { name: a.clone(), free: false });
                scope.push((a.clone(), flat.vertices.len() - 1));
                g.flatten_into(flat, free, scope);
                scope.pop();
            }
        }
    }

    /// Pairs of free names related by the graph, each as `(min, max)`.
    /// A pair `(u, u)` means u lies on a cycle.
    pub fn grel(&self) -> BTreeSet<(Name, Name)> {
        let flat = self.flatten();
        let comp = flat.components();
        let on_cycle = flat.cyclic_vertices();
        let free: Vec<usize> = (0..flat.vertices.len()).filter(|&i| flat.vertices[i].free).collect();
        let mut out = BTreeSet::new();
        for (k, &i) in free.iter().enumerate() {
            if on_cycle[i] {
                let n = flat.vertices[i].name.clone();
                out.insert((n.clone(), n));
            }
            for &j in &free[k + 1..] {
                if comp[i] == comp[j] {
                    let (a, b) = (flat.vertices[i].name.clone(), flat.vertices[j].name.clone());
                    out.insert(if a <= b { (a, b) } else { (b, a) });
                }
            }
        }
        out
    }

    /// The generated relation is irreflexive.
    pub fn acyclic(&self) -> bool {
        let flat = self.flatten();
        let on_cycle = flat.cyclic_vertices();
        !(0..flat.vertices.len()).any(|i| flat.vertices[i].free && on_cycle[i])
    }

    /// `self ⇒ other`: every dependency of `other` is one of `self`.
    pub fn entails(&self, other: &DepGraph) -> bool {
        other.grel().is_subset(&self.grel())
    }

    /// A shortest cycle through a free vertex, as a list of edges.
    pub fn find_cycle(&self) -> Option<Vec<(Name, Name, Span)>> {
        let flat = self.flatten();
        let mut best: Option<Vec<usize>> = None;
        for e in 0..flat.edges.len() {
            let (x, y, _) = flat.edges[e];
            let Some(path) = flat.path_avoiding(y, x, e) else { continue };
            let mut cycle = vec![e];
            cycle.extend(path);
            let touches_free = cycle.iter().any(|&k| {
                let (a, b, _) = flat.edges[k];
                flat.vertices[a].free || flat.vertices[b].free
            });
            if touches_free && best.as_ref().is_none_or(|b| cycle.len() < b.len()) {
                best = Some(cycle);
            }
        }
        best.map(|c| {
            c.into_iter()
                .map(|k| {
                    let (a, b, s) = flat.edges[k];
                    (flat.vertices[a].name.clone(), flat.vertices[b].name.clone(), s)
                })
                .collect()
        })
    }

    pub fn is_empty(&self) -> bool {
        match self {
            DepGraph::Empty => true,
            DepGraph::Edge(..) => false,
            DepGraph::Union(a, b) => a.is_empty() && b.is_empty(),
            DepGraph::Restrict(_, g) => g.is_empty(),
        }
    }

    fn items(&self) -> Vec<String> {
        match self {
            DepGraph::Empty => vec![],
            DepGraph::Edge(u, v, _) => vec![format!("{u}-{v}")],
            DepGraph::Union(a, b) => {
                let mut v = a.items();
                v.extend(b.items());
                v
            }
            DepGraph::Restrict(a, g) => vec![format!("new {a}.{g}")],
        }
    }
}

impl fmt::Display for DepGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.items().join(", "))
    }
}

impl FlatGraph {
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (k, &(a, b, _)) in self.edges.iter().enumerate() {
            adj[a].push((b, k));
            if a != b {
                adj[b].push((a, k));
            }
        }
        adj
    }

    pub fn components(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.vertices.len()];
        let mut next = 0;
        for s in 0..self.vertices.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &(y, _) in &adj[x] {
                    if comp[y] == usize::MAX {
                        comp[y] = next;
                        stack.push(y);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Vertices incident to an edge that is not a bridge.
    pub fn cyclic_vertices(&self) -> Vec<bool> {
        let mut out = vec![false; self.vertices.len()];
        for (k, &(a, b, _)) in self.edges.iter().enumerate() {
            if a == b || self.path_avoiding(a, b, k).is_some() {
                out[a] = true;
                out[b] = true;
            }
        }
        out
    }

    /// Shortest path from `from` to `to` (as edge indices) not using `skip`.
    fn path_avoiding(&self, from: usize, to: usize, skip: usize) -> Option<Vec<usize>> {
        if self.edges[skip].0 == self.edges[skip].1 {
            return Some(vec![]).filter(|_| from == to);
        }
        let adj = self.adjacency();
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.vertices.len()];
        let mut seen = vec![false; self.vertices.len()];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            if x == to {
                let mut path = Vec::new();
                let mut cur = to;
                while let Some((p, k)) = prev[cur] {
                    path.push(k);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for &(y, k) in &adj[x] {
                if k != skip && !seen[y] {
                    seen[y] = true;
                    prev[y] = Some((x, k));
                    queue.push_back(y);
                }
            }
        }
        None
    }
}
