//! Pattern residuals, normal forms and quotients.

use super::semilinear::Work;
use super::{args_le, subpattern_with, Alphabet, Atom, Config, Inclusion, LinearTerm, Pattern, SemilinearForm, TypeRel, Undecided};

/// `E / M`, or `None` when some atom of E with the tag of M has an
/// argument that is not below the corresponding argument of M.
pub fn residual_with(e: &Pattern, m: &Atom, rel: &mut dyn TypeRel) -> Result<Option<Pattern>, Undecided> {
    Ok(match e {
        Pattern::Zero | Pattern::One => Some(Pattern::Zero),
        Pattern::Atom(a) => {
            if a.tag != m.tag {
                Some(Pattern::Zero)
            } else if args_le(rel, &a.args, &m.args)? {
                Some(Pattern::One)
            } else {
                None
            }
        }
        Pattern::Sum(ps) => {
            let mut acc = Pattern::Zero;
            for p in ps {
                match residual_with(p, m, rel)? {
                    Some(r) => acc = Pattern::sum(acc, r),
                    None => return Ok(None),
                }
            }
            Some(acc)
        }
        Pattern::Prod(ps) => {
            let mut acc = Pattern::Zero;
            for (i, p) in ps.iter().enumerate() {
                let Some(r) = residual_with(p, m, rel)? else {
                    return Ok(None);
                };
                let term = ps
                    .iter()
                    .enumerate()
                    .map(|(j, q)| if i == j { r.clone() } else { q.clone() })
                    .fold(Pattern::One, Pattern::prod);
                acc = Pattern::sum(acc, term);
            }
            Some(acc)
        }
        Pattern::Star(p) => residual_with(p, m, rel)?.map(|r| Pattern::prod(r, Pattern::star((**p).clone()))),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormalFormViolation {
    /// A summand that is neither 0, 1 nor an atom followed by a pattern.
    Shape(Pattern),
    /// The residual with respect to the leading atom is undefined.
    ResidualUndefined(Atom),
    /// The continuation of a summand is not equivalent to the residual;
    /// the configuration is in one and not in the other.
    Mismatch { atom: Atom, continuation: Pattern, residual: Pattern, witness: Option<Config> },
}

pub(crate) fn summands(e: &Pattern) -> Vec<&Pattern> {
    match e {
        Pattern::Sum(ps) => ps.iter().flat_map(summands).collect(),
        p => vec![p],
    }
}

/// Splits a summand into `M . F` when it has that shape.
pub(crate) fn split_summand(p: &Pattern) -> Option<(&Atom, Pattern)> {
    match p {
        Pattern::Atom(m) => Some((m, Pattern::One)),
        Pattern::Prod(fs) => match fs.first() {
            Some(Pattern::Atom(m)) => {
                let rest = match fs.len() {
                    1 => Pattern::One,
                    2 => fs[1].clone(),
                    _ => Pattern::Prod(fs[1..].to_vec()),
                };
                Some((m, rest))
            }
            _ => None,
        },
        _ => None,
    }
}

/// Derivability of `⊨ E` for the given presentation.
pub fn is_normal_form_with(e: &Pattern, rel: &mut dyn TypeRel) -> Result<Option<NormalFormViolation>, Undecided> {
    for s in summands(e) {
        match s {
            Pattern::Zero | Pattern::One => continue,
            _ => {}
        }
        let Some((m, f)) = split_summand(s) else {
            return Ok(Some(NormalFormViolation::Shape(s.clone())));
        };
        let Some(r) = residual_with(e, m, rel)? else {
            return Ok(Some(NormalFormViolation::ResidualUndefined(m.clone())));
        };
        let fwd = subpattern_with(&f, &r, rel)?;
        let bwd = if fwd.holds() { subpattern_with(&r, &f, rel)? } else { Inclusion::Holds };
        if let Some(w) = fwd.witness().or(bwd.witness()) {
            return Ok(Some(NormalFormViolation::Mismatch {
                atom: m.clone(),
                continuation: f,
                residual: r,
                witness: Some(w.clone()),
            }));
        }
    }
    Ok(None)
}

/// How a candidate quotient is validated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuotientCheck {
    /// `e . F ≂ g`
    Equivalent,
    /// `e . F ⊑ g`; the candidate is then the largest such F.
    Below,
}

/// Find F with `e . F ≂ g` (or `⊑ g`), verified before being returned.
pub fn quotient_with(
    g: &Pattern,
    e: &Pattern,
    check: QuotientCheck,
    rel: &mut dyn TypeRel,
) -> Result<Option<Pattern>, Undecided> {
    if *e == Pattern::One {
        return Ok(Some(g.clone()));
    }
    let alpha = Alphabet::build(&[g, e], rel)?;
    let sg = SemilinearForm::normalize(g, &alpha, rel)?;
    let se = SemilinearForm::normalize(e, &alpha, rel)?;
    let mut work = Work::new(rel.budget());
    let mut terms: Vec<LinearTerm> = Vec::new();
    for v in &se.terms {
        for t in &sg.terms {
            for q in minus(t, &v.base, &mut work)? {
                if !terms.contains(&q) {
                    terms.push(q);
                }
            }
        }
    }
    terms.sort();
    let candidate = SemilinearForm { dim: alpha.len(), terms }.to_pattern(&alpha);
    let product = Pattern::prod(e.clone(), candidate.clone());
    let ok = subpattern_with(&product, g, rel)?.holds()
        && (check == QuotientCheck::Below || subpattern_with(g, &product, rel)?.holds());
    Ok(ok.then_some(candidate))
}

/// `{x : x + v ∈ t}` as a union of linear terms.
fn minus(t: &LinearTerm, v: &[u32], work: &mut Work) -> Result<Vec<LinearTerm>, Undecided> {
    let m = t.periods.len();
    let bounds: Vec<u32> = t
        .periods
        .iter()
        .map(|p| {
            p.iter()
                .zip(v)
                .filter(|(pk, _)| **pk > 0)
                .map(|(pk, vk)| vk.div_ceil(*pk))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut found: Vec<Vec<u32>> = Vec::new();
    let mut k = vec![0u32; m];
    loop {
        work.tick(1)?;
        let mut point = t.base.clone();
        for (c, p) in k.iter().zip(&t.periods) {
            for (x, y) in point.iter_mut().zip(p) {
                *x += c * y;
            }
        }
        if point.iter().zip(v).all(|(a, b)| a >= b) && !found.iter().any(|f| f.iter().zip(&k).all(|(a, b)| a <= b)) {
            found.retain(|f| !k.iter().zip(f).all(|(a, b)| a <= b));
            found.push(k.clone());
        }
        let mut i = 0;
        loop {
            if i == m {
                return Ok(found
                    .into_iter()
                    .map(|k| {
                        let mut base = t.base.clone();
                        for (c, p) in k.iter().zip(&t.periods) {
                            for (x, y) in base.iter_mut().zip(p) {
                                *x += c * y;
                            }
                        }
                        for (x, y) in base.iter_mut().zip(v) {
                            *x -= y;
                        }
                        LinearTerm { base, periods: t.periods.clone() }
                    })
                    .collect());
            }
            if k[i] < bounds[i] {
                k[i] += 1;
                break;
            }
            k[i] = 0;
            i += 1;
        }
    }
}
