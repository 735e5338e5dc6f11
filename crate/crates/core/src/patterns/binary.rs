//! Inclusion of one linear set in a finite union of linear sets, decided on
//! automata reading vectors in binary, least significant bit first.
//!
//! The term `x = a + Q·y` is read as the system `x - Q·y = a`. After reading
//! the low bits `v` of `x` and `w` of `y`, the remaining system is
//! `x' - Q·y' = (r - v + Q·w) / 2`, so the right-hand side `r` is the state.
//! It never goes negative and never exceeds `max(a_k, sum_i Q_ik)`.
//! The bits of `y` are guessed, which makes the automaton nondeterministic.

use std::collections::{HashMap, VecDeque};

use super::semilinear::Work;
use super::{LinearTerm, Undecided};

/// Wider letters than this are not attempted.
const MAX_BITS: usize = 16;

struct Automaton<'a> {
    periods: &'a [Vec<u32>],
    steps: HashMap<(Vec<u32>, u32), Vec<Vec<u32>>>,
    accepting: HashMap<Vec<u32>, bool>,
}

impl<'a> Automaton<'a> {
    fn new(periods: &'a [Vec<u32>]) -> Self {
        Automaton { periods, steps: HashMap::new(), accepting: HashMap::new() }
    }

    fn step(&mut self, r: &[u32], letter: u32, work: &mut Work) -> Result<Vec<Vec<u32>>, Undecided> {
        let key = (r.to_vec(), letter);
        if let Some(s) = self.steps.get(&key) {
            return Ok(s.clone());
        }
        let m = self.periods.len();
        work.tick(1 << m)?;
        let mut out = Vec::new();
        for w in 0u32..(1 << m) {
            let mut next = Vec::with_capacity(r.len());
            for (k, &rk) in r.iter().enumerate() {
                let mut s = rk as i64 - ((letter >> k) & 1) as i64;
                for (i, p) in self.periods.iter().enumerate() {
                    if (w >> i) & 1 == 1 {
                        s += p[k] as i64;
                    }
                }
                if s < 0 || s % 2 != 0 {
                    break;
                }
                next.push((s / 2) as u32);
            }
            if next.len() == r.len() {
                out.push(next);
            }
        }
        out.sort();
        out.dedup();
        self.steps.insert(key, out.clone());
        Ok(out)
    }

    /// Can the guessed bits of `y` run on alone (`x` padded with zeros) and
    /// close the system?
    fn accepts(&mut self, r: &[u32], work: &mut Work) -> Result<bool, Undecided> {
        if let Some(&b) = self.accepting.get(r) {
            return Ok(b);
        }
        let mut seen = vec![r.to_vec()];
        let mut queue = VecDeque::from([r.to_vec()]);
        let mut found = false;
        while let Some(s) = queue.pop_front() {
            if s.iter().all(|&x| x == 0) {
                found = true;
                break;
            }
            for n in self.step(&s, 0, work)? {
                if !seen.contains(&n) {
                    seen.push(n.clone());
                    queue.push_back(n);
                }
            }
        }
        self.accepting.insert(r.to_vec(), found);
        Ok(found)
    }
}

/// Subset of union states: `(term index, state)`, sorted.
type Subset = Vec<(usize, Vec<u32>)>;

/// Returns a point of `base + N*periods` outside every term of `u`, or
/// `None` when the linear set is included in the union.
pub(crate) fn linear_in_union(
    base: &[u32],
    periods: &[Vec<u32>],
    u: &[LinearTerm],
    work: &mut Work,
) -> Result<Option<Vec<u32>>, Undecided> {
    let dim = base.len();
    if dim > MAX_BITS || periods.len() > MAX_BITS || u.iter().any(|t| t.periods.len() > MAX_BITS) {
        return Err(Undecided { work: work.used, budget: work.budget, depth: work.depth });
    }
    let mut left = Automaton::new(periods);
    let mut right: Vec<Automaton> = u.iter().map(|t| Automaton::new(&t.periods)).collect();

    let start: Subset = u.iter().enumerate().map(|(j, t)| (j, t.base.clone())).collect();
    let mut index: HashMap<(Vec<u32>, Subset), usize> = HashMap::new();
    // parent index and letter read to get here
    let mut trail: Vec<(usize, u32)> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert((base.to_vec(), start.clone()), 0);
    trail.push((0, 0));
    queue.push_back((base.to_vec(), start, 0usize));

    while let Some((l, s, at)) = queue.pop_front() {
        work.tick(1)?;
        if left.accepts(&l, work)? {
            let mut covered = false;
            for (j, r) in &s {
                if right[*j].accepts(r, work)? {
                    covered = true;
                    break;
                }
            }
            if !covered {
                return Ok(Some(decode(&trail, at, dim)));
            }
        }
        for letter in 0u32..(1 << dim) {
            let ls = left.step(&l, letter, work)?;
            if ls.is_empty() {
                continue;
            }
            let mut next: Subset = Vec::new();
            for (j, r) in &s {
                for n in right[*j].step(r, letter, work)? {
                    next.push((*j, n));
                }
            }
            next.sort();
            next.dedup();
            for nl in ls {
                let key = (nl, next.clone());
                if !index.contains_key(&key) {
                    let id = trail.len();
                    trail.push((at, letter));
                    index.insert(key.clone(), id);
                    queue.push_back((key.0, key.1, id));
                }
            }
        }
    }
    Ok(None)
}

fn decode(trail: &[(usize, u32)], mut at: usize, dim: usize) -> Vec<u32> {
    let mut letters = Vec::new();
    while at != 0 {
        let (parent, letter) = trail[at];
        letters.push(letter);
        at = parent;
    }
    letters.reverse();
    let mut x = vec![0u32; dim];
    for (bit, letter) in letters.iter().enumerate() {
        for (k, xk) in x.iter_mut().enumerate() {
            if (letter >> k) & 1 == 1 {
                *xk |= 1 << bit;
            }
        }
    }
    x
}
