//! Semilinear (Parikh) representation of pattern semantics.
//!
//! A pattern denotes a set of multisets. Over a finite alphabet of
//! letters each multiset is a vector of counts, and the denotation of a
//! pattern is a finite union of linear sets `base + N*periods`.

use std::collections::HashSet;

use super::{args_equiv, Atom, Config, Pattern, TypeRel, Undecided};

/// Representative atoms, one per equivalence class.
#[derive(Clone, Debug, Default)]
pub struct Alphabet {
    letters: Vec<Atom>,
}

impl Alphabet {
    /// Collect the atoms of the given patterns, merging atoms with the
    /// same tag and pairwise equivalent arguments.
    pub fn build(patterns: &[&Pattern], rel: &mut dyn TypeRel) -> Result<Alphabet, Undecided> {
        let mut alpha = Alphabet::default();
        for p in patterns {
            for a in p.atoms() {
                if alpha.letter_of(a, rel)?.is_none() {
                    alpha.letters.push(a.clone());
                }
            }
        }
        Ok(alpha)
    }

    pub fn letter_of(&self, a: &Atom, rel: &mut dyn TypeRel) -> Result<Option<usize>, Undecided> {
        for (i, l) in self.letters.iter().enumerate() {
            if l == a {
                return Ok(Some(i));
            }
        }
        for (i, l) in self.letters.iter().enumerate() {
            if l.tag == a.tag && args_equiv(rel, &l.args, &a.args)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Atom] {
        &self.letters
    }

    pub fn config(&self, v: &[u32]) -> Config {
        let mut c = Config::new();
        for (i, n) in v.iter().enumerate() {
            c.insert(self.letters[i].clone(), *n as usize);
        }
        c
    }
}

/// Work counter shared by the decision procedures of one query.
#[derive(Debug)]
pub(crate) struct Work {
    pub used: usize,
    pub budget: usize,
    pub depth: usize,
}

impl Work {
    pub fn new(budget: usize) -> Self {
        Work { used: 0, budget, depth: 0 }
    }

    pub fn tick(&mut self, n: usize) -> Result<(), Undecided> {
        self.used += n;
        if self.used > self.budget {
            Err(Undecided { work: self.used, budget: self.budget, depth: self.depth })
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearTerm {
    pub base: Vec<u32>,
    pub periods: Vec<Vec<u32>>,
}

impl LinearTerm {
    fn normalized(mut self) -> Self {
        self.periods.retain(|p| p.iter().any(|&x| x > 0));
        self.periods.sort();
        self.periods.dedup();
        self
    }

    pub fn contains(&self, x: &[u32]) -> bool {
        let mut work = Work::new(usize::MAX);
        member_linear(x, self, &mut work).unwrap_or(false)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemilinearForm {
    pub dim: usize,
    pub terms: Vec<LinearTerm>,
}

const MAX_TERMS: usize = 20_000;

impl SemilinearForm {
    pub fn empty(dim: usize) -> Self {
        SemilinearForm { dim, terms: Vec::new() }
    }

    pub fn unit(dim: usize) -> Self {
        SemilinearForm { dim, terms: vec![LinearTerm { base: vec![0; dim], periods: vec![] }] }
    }

    fn letters(dim: usize, ls: &[usize]) -> Self {
        let terms = ls
            .iter()
            .map(|&l| {
                let mut base = vec![0; dim];
                base[l] += 1;
                LinearTerm { base, periods: vec![] }
            })
            .collect();
        SemilinearForm { dim, terms }.dedup()
    }

    fn dedup(mut self) -> Self {
        self.terms.sort();
        self.terms.dedup();
        self
    }

    fn union(mut self, other: SemilinearForm) -> Self {
        self.terms.extend(other.terms);
        self.dedup()
    }

    fn product(&self, other: &SemilinearForm, work: &mut Work) -> Result<Self, Undecided> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                work.tick(1)?;
                let base = a.base.iter().zip(&b.base).map(|(x, y)| x + y).collect();
                let mut periods = a.periods.clone();
                periods.extend(b.periods.iter().cloned());
                terms.push(LinearTerm { base, periods }.normalized());
            }
        }
        let form = SemilinearForm { dim: self.dim, terms }.dedup().pruned(work)?;
        if form.terms.len() > MAX_TERMS {
            return Err(Undecided { work: work.used, budget: work.budget, depth: work.depth });
        }
        Ok(form)
    }

    /// Drops periods generated by the other periods of their term, then
    /// terms contained in another term. The denoted set is unchanged.
    fn pruned(mut self, work: &mut Work) -> Result<Self, Undecided> {
        for t in &mut self.terms {
            let mut i = 0;
            while i < t.periods.len() {
                let p = t.periods.remove(i);
                if !in_monoid(&p, &t.periods, work)? {
                    t.periods.insert(i, p);
                    i += 1;
                }
            }
        }
        self.terms.sort_by(|a, b| b.periods.len().cmp(&a.periods.len()).then_with(|| a.cmp(b)));
        self.terms.dedup();
        let mut removed = vec![false; self.terms.len()];
        for i in 0..self.terms.len() {
            for j in 0..self.terms.len() {
                if i != j && !removed[j] && term_within(&self.terms[i], &self.terms[j], work)? {
                    removed[i] = true;
                    break;
                }
            }
        }
        let mut keep = removed.iter().map(|r| !r);
        self.terms.retain(|_| keep.next().unwrap());
        Ok(self.dedup())
    }

    fn star(&self, work: &mut Work) -> Result<Self, Undecided> {
        // period-free summands starred together form one linear set
        let plain = self.terms.iter().filter(|t| t.periods.is_empty()).map(|t| t.base.clone()).collect();
        let mut acc = SemilinearForm {
            dim: self.dim,
            terms: vec![LinearTerm { base: vec![0; self.dim], periods: plain }.normalized()],
        };
        for t in self.terms.iter().filter(|t| !t.periods.is_empty()) {
            let s = if t.base.iter().all(|&x| x == 0) {
                SemilinearForm { dim: self.dim, terms: vec![t.clone()] }
            } else {
                let mut periods = t.periods.clone();
                periods.push(t.base.clone());
                SemilinearForm {
                    dim: self.dim,
                    terms: vec![
                        LinearTerm { base: vec![0; self.dim], periods: vec![] },
                        LinearTerm { base: t.base.clone(), periods }.normalized(),
                    ],
                }
            };
            acc = acc.product(&s, work)?;
        }
        Ok(acc)
    }

    /// Semilinear form of `p` where each atom denotes the sum of the
    /// letters returned by `letters`.
    pub(crate) fn of_pattern(
        p: &Pattern,
        dim: usize,
        letters: &mut dyn FnMut(&Atom) -> Result<Vec<usize>, Undecided>,
        work: &mut Work,
    ) -> Result<Self, Undecided> {
        work.tick(1)?;
        Ok(match p {
            Pattern::Zero => SemilinearForm::empty(dim),
            Pattern::One => SemilinearForm::unit(dim),
            Pattern::Atom(a) => SemilinearForm::letters(dim, &letters(a)?),
            Pattern::Sum(ps) => {
                let mut acc = SemilinearForm::empty(dim);
                for q in ps {
                    acc = acc.union(Self::of_pattern(q, dim, letters, work)?);
                }
                acc
            }
            Pattern::Prod(ps) => {
                let mut acc = SemilinearForm::unit(dim);
                for q in ps {
                    let f = Self::of_pattern(q, dim, letters, work)?;
                    acc = acc.product(&f, work)?;
                }
                acc
            }
            Pattern::Star(q) => Self::of_pattern(q, dim, letters, work)?.star(work)?,
        })
    }

    /// Semilinear form of `p` over `alpha`; every atom of `p` must have a
    /// letter in `alpha`.
    pub fn normalize(p: &Pattern, alpha: &Alphabet, rel: &mut dyn TypeRel) -> Result<Self, Undecided> {
        let mut work = Work::new(rel.budget());
        let dim = alpha.len();
        let mut letters = |a: &Atom| -> Result<Vec<usize>, Undecided> {
            Ok(alpha.letter_of(a, rel)?.into_iter().collect())
        };
        Self::of_pattern(p, dim, &mut letters, &mut work)
    }

    pub fn contains(&self, x: &[u32]) -> bool {
        self.terms.iter().any(|t| t.contains(x))
    }

    pub fn to_pattern(&self, alpha: &Alphabet) -> Pattern {
        let monomial = |v: &[u32]| {
            Pattern::prod_all(v.iter().enumerate().flat_map(|(i, n)| {
                std::iter::repeat_n(Pattern::Atom(alpha.letters[i].clone()), *n as usize)
            }))
        };
        Pattern::sum_all(self.terms.iter().map(|t| {
            let mut p = monomial(&t.base);
            for per in &t.periods {
                p = Pattern::prod(p, Pattern::star(monomial(per)));
            }
            p
        }))
    }
}

pub(crate) fn is_zero(v: &[u32]) -> bool {
    v.iter().all(|&x| x == 0)
}

/// Sufficient test for `s` being a subset of `t`.
fn term_within(s: &LinearTerm, t: &LinearTerm, work: &mut Work) -> Result<bool, Undecided> {
    let covers = |k: usize| t.periods.iter().any(|p| p[k] > 0);
    if s.periods.iter().any(|p| p.iter().enumerate().any(|(k, &x)| x > 0 && !covers(k))) {
        return Ok(false);
    }
    if !member_linear(&s.base, t, work)? {
        return Ok(false);
    }
    for p in &s.periods {
        if !in_monoid(p, &t.periods, work)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub(crate) fn member_linear(x: &[u32], t: &LinearTerm, work: &mut Work) -> Result<bool, Undecided> {
    if x.iter().zip(&t.base).any(|(a, b)| a < b) {
        return Ok(false);
    }
    let rest: Vec<u32> = x.iter().zip(&t.base).map(|(a, b)| a - b).collect();
    in_monoid(&rest, &t.periods, work)
}

pub(crate) fn member_form(x: &[u32], terms: &[LinearTerm], work: &mut Work) -> Result<bool, Undecided> {
    for t in terms {
        if member_linear(x, t, work)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Is `target` a nonnegative integer combination of `gens`?
pub(crate) fn in_monoid(target: &[u32], gens: &[Vec<u32>], work: &mut Work) -> Result<bool, Undecided> {
    if is_zero(target) {
        return Ok(true);
    }
    // support of gens[i..] for pruning
    let dim = target.len();
    let mut suffix = vec![vec![false; dim]; gens.len() + 1];
    for i in (0..gens.len()).rev() {
        for k in 0..dim {
            suffix[i][k] = suffix[i + 1][k] || gens[i][k] > 0;
        }
    }
    let mut failed = HashSet::new();
    search(target, 0, gens, &suffix, &mut failed, work)
}

fn search(
    t: &[u32],
    i: usize,
    gens: &[Vec<u32>],
    suffix: &[Vec<bool>],
    failed: &mut HashSet<(usize, Vec<u32>)>,
    work: &mut Work,
) -> Result<bool, Undecided> {
    if is_zero(t) {
        return Ok(true);
    }
    if i == gens.len() {
        return Ok(false);
    }
    if t.iter().zip(&suffix[i]).any(|(&x, &s)| x > 0 && !s) {
        return Ok(false);
    }
    if failed.contains(&(i, t.to_vec())) {
        return Ok(false);
    }
    work.tick(1)?;
    let g = &gens[i];
    let cmax = g
        .iter()
        .zip(t)
        .filter(|(gk, _)| **gk > 0)
        .map(|(gk, tk)| tk / gk)
        .min()
        .unwrap_or(0);
    for c in (0..=cmax).rev() {
        let t2: Vec<u32> = t.iter().zip(g).map(|(x, y)| x - c * y).collect();
        if search(&t2, i + 1, gens, suffix, failed, work)? {
            return Ok(true);
        }
    }
    failed.insert((i, t.to_vec()));
    Ok(false)
}
