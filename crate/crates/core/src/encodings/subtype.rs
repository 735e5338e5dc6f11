use std::collections::BTreeSet;

use super::{SessionFile, SessionType};
use crate::patterns::Undecided;
use crate::types::TypeCtx;

/// Conventional (Gay and Hole) subtyping on session types: inputs are
/// covariant and outputs contravariant in their payloads. Choices carry
/// the two fixed labels `left` and `right`, so no width subtyping.
pub fn session_subtype(file: &SessionFile, ctx: &TypeCtx, t: &SessionType, s: &SessionType) -> Result<bool, Undecided> {
    let mut seen = BTreeSet::new();
    sub(file, ctx, t, s, &mut seen)
}

fn sub(
    file: &SessionFile,
    ctx: &TypeCtx,
    t: &SessionType,
    s: &SessionType,
    seen: &mut BTreeSet<(SessionType, SessionType)>,
) -> Result<bool, Undecided> {
    use SessionType::*;
    if !seen.insert((t.clone(), s.clone())) {
        return Ok(true);
    }
    Ok(match (file.unfold(t), file.unfold(s)) {
        (End, End) => true,
        (In(p, k), In(q, l)) => ctx.subtype(p, q)? && sub(file, ctx, &k, &l, seen)?,
        (Out(p, k), Out(q, l)) => ctx.subtype(q, p)? && sub(file, ctx, &k, &l, seen)?,
        (Ext(a, b), Ext(c, d)) | (Int(a, b), Int(c, d)) => {
            sub(file, ctx, &a, &c, seen)? && sub(file, ctx, &b, &d, seen)?
        }
        (Join(xs, k), Join(ys, l)) | (Fork(xs, k), Fork(ys, l)) => {
            let mut a = xs.clone();
            let mut b = ys.clone();
            a.sort();
            b.sort();
            a == b && sub(file, ctx, &k, &l, seen)?
        }
        _ => false,
    })
}
