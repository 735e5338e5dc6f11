//! Deciding `E ⊑ F`.
//!
//! Atoms of F are replaced by the sum of the E-letters they can match,
//! which turns the question into inclusion of semilinear sets over the
//! E-alphabet. Each linear term of E is then covered by terms of F,
//! splitting on periods (by threshold and residue class) until every
//! piece is covered by a single term or a non-member point turns up.

use std::collections::HashMap;

use super::semilinear::{in_monoid, member_form, member_linear, Work};
use super::{args_le, Alphabet, Atom, Config, LinearTerm, Pattern, SemilinearForm, TypeRel, Undecided};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Inclusion {
    Holds,
    /// A configuration of E with no matching configuration of F.
    Refuted(Config),
}

impl Inclusion {
    pub fn holds(&self) -> bool {
        matches!(self, Inclusion::Holds)
    }

    pub fn witness(&self) -> Option<&Config> {
        match self {
            Inclusion::Holds => None,
            Inclusion::Refuted(c) => Some(c),
        }
    }
}

const MAX_MODULUS_PROBE: u32 = 12;
/// Rounds of re-splitting with larger thresholds before falling back to
/// the automaton procedure.
const MAX_RESPLITS: u32 = 1;

pub fn subpattern_with(e: &Pattern, f: &Pattern, rel: &mut dyn TypeRel) -> Result<Inclusion, Undecided> {
    let alpha = Alphabet::build(&[e], rel)?;
    let dim = alpha.len();
    let mut work = Work::new(rel.budget());
    let ex = SemilinearForm::of_pattern(
        e,
        dim,
        &mut |a: &Atom| Ok(alpha.letter_of(a, rel)?.into_iter().collect()),
        &mut work,
    )?;
    if ex.terms.is_empty() {
        return Ok(Inclusion::Holds);
    }
    let mut compat: HashMap<Atom, Vec<usize>> = HashMap::new();
    let fx = SemilinearForm::of_pattern(
        f,
        dim,
        &mut |b: &Atom| {
            if let Some(ls) = compat.get(b) {
                return Ok(ls.clone());
            }
            let mut ls = Vec::new();
            for (i, a) in alpha.letters().iter().enumerate() {
                if a.tag == b.tag && args_le(rel, &a.args, &b.args)? {
                    ls.push(i);
                }
            }
            compat.insert(b.clone(), ls.clone());
            Ok(ls)
        },
        &mut work,
    )?;
    for t in &ex.terms {
        let periods = t.periods.iter().map(|p| (p.clone(), false)).collect();
        if let Some(w) = cover(t.base.clone(), periods, &fx.terms, &mut work, 0)? {
            return Ok(Inclusion::Refuted(alpha.config(&w)));
        }
    }
    Ok(Inclusion::Holds)
}

fn add_scaled(v: &[u32], p: &[u32], k: u32) -> Vec<u32> {
    v.iter().zip(p).map(|(a, b)| a + k * b).collect()
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Returns a point of `base + N*periods` outside `u`, or `None` when the
/// whole linear set is covered. `round` counts re-splits: each one adds
/// `2^(round-1)` to every threshold.
fn cover(
    base: Vec<u32>,
    periods: Vec<(Vec<u32>, bool)>,
    u: &[LinearTerm],
    work: &mut Work,
    round: u32,
) -> Result<Option<Vec<u32>>, Undecided> {
    work.tick(1)?;
    if !member_form(&base, u, work)? {
        return Ok(Some(base));
    }
    if periods.is_empty() {
        return Ok(None);
    }
    for t in u {
        if member_linear(&base, t, work)? {
            let mut all = true;
            for (p, _) in &periods {
                if !in_monoid(p, &t.periods, work)? {
                    all = false;
                    break;
                }
            }
            if all {
                return Ok(None);
            }
        }
    }
    let Some(i) = periods.iter().position(|(_, done)| !done) else {
        if round < MAX_RESPLITS {
            let fresh = periods.into_iter().map(|(p, _)| (p, false)).collect();
            return cover(base, fresh, u, work, round + 1);
        }
        let plain: Vec<Vec<u32>> = periods.into_iter().map(|(p, _)| p).collect();
        return super::binary::linear_in_union(&base, &plain, u, work);
    };
    let extra = if round == 0 { 0 } else { 1 << (round - 1) };
    let p = periods[i].0.clone();
    let mut rest = periods;
    rest.remove(i);

    let mut modulus = 1u32;
    for t in u {
        for k in 1..=MAX_MODULUS_PROBE {
            if in_monoid(&add_scaled(&vec![0; p.len()], &p, k), &t.periods, work)? {
                modulus = modulus / gcd(modulus, k) * k;
                break;
            }
        }
    }
    let mut threshold = extra;
    for t in u {
        for (k, &pk) in p.iter().enumerate() {
            if pk > 0 && t.base[k] > base[k] {
                threshold = threshold.max((t.base[k] - base[k]).div_ceil(pk) + extra);
            }
        }
    }

    work.depth += 1;
    for r in 0..threshold {
        if let Some(w) = cover(add_scaled(&base, &p, r), rest.clone(), u, work, round)? {
            return Ok(Some(w));
        }
    }
    let step = add_scaled(&vec![0; p.len()], &p, modulus);
    for r in 0..modulus {
        let mut ps = rest.clone();
        ps.push((step.clone(), true));
        if let Some(w) = cover(add_scaled(&base, &p, threshold + r), ps, u, work, round)? {
            return Ok(Some(w));
        }
    }
    work.depth -= 1;
    Ok(None)
}
