//! Commutative regular expressions over message atoms.

mod binary;
mod inclusion;
mod oracle;
mod residual;
mod semilinear;

use std::collections::BTreeMap;
use std::fmt;

use crate::syntax::Tag;
use crate::types::{TyId, TypeTable};

pub use inclusion::{subpattern_with, Inclusion};
pub use oracle::configurations_up_to;
pub use residual::{is_normal_form_with, quotient_with, residual_with, NormalFormViolation, QuotientCheck};
pub use semilinear::{Alphabet, LinearTerm, SemilinearForm};

/// A message descriptor `tag(T1, ..., Tn)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub tag: Tag,
    pub args: Vec<TyId>,
}

impl Atom {
    pub fn new(tag: impl Into<Tag>, args: Vec<TyId>) -> Self {
        Atom { tag: tag.into(), args }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pattern {
    Zero,
    One,
    Atom(Atom),
    Sum(Vec<Pattern>),
    Prod(Vec<Pattern>),
    Star(Box<Pattern>),
}

impl Pattern {
    pub fn atom(tag: impl Into<Tag>, args: Vec<TyId>) -> Self {
        Pattern::Atom(Atom::new(tag, args))
    }

    /// `a + b`, dropping zero summands and flattening nested sums.
    pub fn sum(a: Pattern, b: Pattern) -> Pattern {
        match (a, b) {
            (Pattern::Zero, x) | (x, Pattern::Zero) => x,
            (Pattern::Sum(mut xs), Pattern::Sum(ys)) => {
                xs.extend(ys);
                Pattern::Sum(xs)
            }
            (Pattern::Sum(mut xs), y) => {
                xs.push(y);
                Pattern::Sum(xs)
            }
            (x, Pattern::Sum(ys)) => {
                let mut v = vec![x];
                v.extend(ys);
                Pattern::Sum(v)
            }
            (x, y) => Pattern::Sum(vec![x, y]),
        }
    }

    /// `a . b` with the unit and absorbing laws applied.
    pub fn prod(a: Pattern, b: Pattern) -> Pattern {
        match (a, b) {
            (Pattern::Zero, _) | (_, Pattern::Zero) => Pattern::Zero,
            (Pattern::One, x) | (x, Pattern::One) => x,
            (Pattern::Prod(mut xs), Pattern::Prod(ys)) => {
                xs.extend(ys);
                Pattern::Prod(xs)
            }
            (Pattern::Prod(mut xs), y) => {
                xs.push(y);
                Pattern::Prod(xs)
            }
            (x, Pattern::Prod(ys)) => {
                let mut v = vec![x];
                v.extend(ys);
                Pattern::Prod(v)
            }
            (x, y) => Pattern::Prod(vec![x, y]),
        }
    }

    pub fn star(p: Pattern) -> Pattern {
        match p {
            Pattern::Zero | Pattern::One => Pattern::One,
            s @ Pattern::Star(_) => s,
            p => Pattern::Star(Box::new(p)),
        }
    }

    pub fn sum_all(items: impl IntoIterator<Item = Pattern>) -> Pattern {
        items.into_iter().fold(Pattern::Zero, Pattern::sum)
    }

    pub fn prod_all(items: impl IntoIterator<Item = Pattern>) -> Pattern {
        items.into_iter().fold(Pattern::One, Pattern::prod)
    }

    /// Distinct atoms in order of first occurrence.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out: Vec<&Atom> = Vec::new();
        self.visit_atoms(&mut |a| {
            if !out.contains(&a) {
                out.push(a);
            }
        });
        out
    }

    fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self {
            Pattern::Zero | Pattern::One => {}
            Pattern::Atom(a) => f(a),
            Pattern::Sum(ps) | Pattern::Prod(ps) => ps.iter().for_each(|p| p.visit_atoms(f)),
            Pattern::Star(p) => p.visit_atoms(f),
        }
    }

    /// Replace every atom by the pattern returned by `f`.
    pub fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Pattern) -> Pattern {
        match self {
            Pattern::Zero => Pattern::Zero,
            Pattern::One => Pattern::One,
            Pattern::Atom(a) => f(a),
            Pattern::Sum(ps) => Pattern::Sum(ps.iter().map(|p| p.map_atoms(f)).collect()),
            Pattern::Prod(ps) => Pattern::Prod(ps.iter().map(|p| p.map_atoms(f)).collect()),
            Pattern::Star(p) => Pattern::Star(Box::new(p.map_atoms(f))),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Pattern::Zero | Pattern::One | Pattern::Atom(_) => 1,
            Pattern::Sum(ps) | Pattern::Prod(ps) => 1 + ps.iter().map(Pattern::size).sum::<usize>(),
            Pattern::Star(p) => 1 + p.size(),
        }
    }

    pub fn display<'a>(&'a self, table: &'a TypeTable) -> PatternDisplay<'a> {
        PatternDisplay { pattern: self, table, prec: 0 }
    }

    /// Display in a context of the given binding strength: 0 top level,
    /// 1 inside a sum, 2 inside a product, 3 under a star or capability.
    pub fn display_prec<'a>(&'a self, table: &'a TypeTable, prec: u8) -> PatternDisplay<'a> {
        PatternDisplay { pattern: self, table, prec }
    }
}

/// A mailbox configuration: a multiset of atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config(BTreeMap<Atom, usize>);

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut c = Config::new();
        for a in atoms {
            c.insert(a, 1);
        }
        c
    }

    pub fn insert(&mut self, atom: Atom, n: usize) {
        if n > 0 {
            *self.0.entry(atom).or_insert(0) += n;
        }
    }

    pub fn len(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union(&self, other: &Config) -> Config {
        let mut c = self.clone();
        for (a, n) in &other.0 {
            c.insert(a.clone(), *n);
        }
        c
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, usize)> {
        self.0.iter().map(|(a, n)| (a, *n))
    }

    /// Atoms with repetition, in canonical order.
    pub fn atoms(&self) -> Vec<Atom> {
        self.0
            .iter()
            .flat_map(|(a, n)| std::iter::repeat_n(a.clone(), *n))
            .collect()
    }

    pub fn display<'a>(&'a self, table: &'a TypeTable) -> ConfigDisplay<'a> {
        ConfigDisplay { config: self, table }
    }
}

pub struct PatternDisplay<'a> {
    pattern: &'a Pattern,
    table: &'a TypeTable,
    prec: u8,
}

impl PatternDisplay<'_> {
    fn write(&self, p: &Pattern, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match p {
            Pattern::Zero => write!(f, "0"),
            Pattern::One => write!(f, "1"),
            Pattern::Atom(a) => write_atom(a, self.table, f),
            Pattern::Sum(ps) => {
                if ps.is_empty() {
                    return write!(f, "0");
                }
                if prec > 0 {
                    write!(f, "(")?;
                }
                for (i, q) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    self.write(q, 1, f)?;
                }
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Pattern::Prod(ps) => {
                if ps.is_empty() {
                    return write!(f, "1");
                }
                if prec > 1 {
                    write!(f, "(")?;
                }
                for (i, q) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, ".")?;
                    }
                    self.write(q, 2, f)?;
                }
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Pattern::Star(q) => {
                self.write(q, 3, f)?;
                write!(f, "*")
            }
        }
    }
}

pub(crate) fn write_atom(a: &Atom, table: &TypeTable, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{}", a.tag)?;
    if !a.args.is_empty() {
        write!(f, "(")?;
        for (i, t) in a.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", table.display(*t))?;
        }
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for PatternDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.pattern, self.prec, f)
    }
}

pub struct ConfigDisplay<'a> {
    config: &'a Config,
    table: &'a TypeTable,
}

impl fmt::Display for ConfigDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, a) in self.config.atoms().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write_atom(a, self.table, f)?;
        }
        write!(f, "]")
    }
}

/// Raised when a query exceeds the work budget of the inclusion search.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("undecided: pattern inclusion search exceeded its work budget ({work} of {budget} steps, split depth {depth})")]
pub struct Undecided {
    pub work: usize,
    pub budget: usize,
    pub depth: usize,
}

/// A preorder on type references, supplied by the subtyping engine.
pub trait TypeRel {
    fn le(&mut self, a: TyId, b: TyId) -> Result<bool, Undecided>;

    fn budget(&self) -> usize {
        DEFAULT_BUDGET
    }
}

pub const DEFAULT_BUDGET: usize = 2_000_000;

/// Syntactic equality on type references; useful for type-free patterns.
pub struct SyntacticRel;

impl TypeRel for SyntacticRel {
    fn le(&mut self, a: TyId, b: TyId) -> Result<bool, Undecided> {
        Ok(a == b)
    }
}

pub(crate) fn args_le(rel: &mut dyn TypeRel, xs: &[TyId], ys: &[TyId]) -> Result<bool, Undecided> {
    if xs.len() != ys.len() {
        return Ok(false);
    }
    for (x, y) in xs.iter().zip(ys) {
        if !rel.le(*x, *y)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub(crate) fn args_equiv(rel: &mut dyn TypeRel, xs: &[TyId], ys: &[TyId]) -> Result<bool, Undecided> {
    Ok(args_le(rel, xs, ys)? && args_le(rel, ys, xs)?)
}
