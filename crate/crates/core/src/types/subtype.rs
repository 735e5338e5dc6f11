//! Coinductive subtyping and the type-level operations built on it.

use std::collections::HashSet;
use std::sync::Mutex;

use super::{Capability, Ty, TyId, TyNode, TypeTable};
use crate::patterns::{
    is_normal_form_with, quotient_with, residual_with, subpattern_with, Atom, Inclusion, NormalFormViolation, Pattern,
    QuotientCheck, TypeRel, Undecided, DEFAULT_BUDGET,
};

/// Owns a type table and answers subtyping and pattern queries over it.
#[derive(Debug)]
pub struct TypeCtx {
    pub table: TypeTable,
    budget: usize,
    proven: Mutex<HashSet<(TyId, TyId)>>,
    refuted: Mutex<HashSet<(TyId, TyId)>>,
}

impl Clone for TypeCtx {
    fn clone(&self) -> Self {
        TypeCtx::with_budget(self.table.clone(), self.budget)
    }
}

struct Rel<'a> {
    ctx: &'a TypeCtx,
    assumed: HashSet<(TyId, TyId)>,
}

impl TypeRel for Rel<'_> {
    fn le(&mut self, a: TyId, b: TyId) -> Result<bool, Undecided> {
        let ctx = self.ctx;
        let table = &ctx.table;
        let (a, b) = (table.resolve(a), table.resolve(b));
        if a == b || self.assumed.contains(&(a, b)) || self.ctx.proven.lock().unwrap().contains(&(a, b)) {
            return Ok(true);
        }
        if self.ctx.refuted.lock().unwrap().contains(&(a, b)) {
            return Ok(false);
        }
        let top = self.assumed.is_empty();
        let result = match (table.node(a), table.node(b)) {
            (TyNode::Int, TyNode::Int) => true,
            (TyNode::Mailbox(c1, e), TyNode::Mailbox(c2, f)) if c1 == c2 => {
                let snapshot = self.assumed.clone();
                self.assumed.insert((a, b));
                let r = match c1 {
                    Capability::Input => subpattern_with(e, f, self),
                    Capability::Output => subpattern_with(f, e, self),
                };
                let holds = matches!(r, Ok(ref i) if i.holds());
                if top || !holds {
                    // assumptions made while refuting are not evidence
                    self.assumed = snapshot;
                }
                r?.holds()
            }
            _ => false,
        };
        if !result {
            self.ctx.refuted.lock().unwrap().insert((a, b));
        } else if top {
            self.ctx.proven.lock().unwrap().insert((a, b));
        }
        Ok(result)
    }

    fn budget(&self) -> usize {
        self.ctx.budget
    }
}

/// The three classification predicates of a type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub relevant: bool,
    pub reliable: bool,
    pub usable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// `!E` with E empty: nothing can ever consume it.
    UnusableType,
    /// A message argument that is unusable.
    UnusableArgument,
    /// A message argument `?E` with E empty.
    UnreliableArgument,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssumptionViolation {
    pub ty: TyId,
    pub kind: ViolationKind,
}

impl AssumptionViolation {
    pub fn message(&self, table: &TypeTable) -> String {
        let t = table.display_expanded(self.ty);
        match self.kind {
            ViolationKind::UnusableType => format!("unusable type {t}: a mailbox with this type can never be emptied"),
            ViolationKind::UnusableArgument => {
                format!("unusable argument type {t}: a mailbox received with this type can never be emptied")
            }
            ViolationKind::UnreliableArgument => {
                format!("unreliable argument type {t}: a mailbox received with this type admits no configuration")
            }
        }
    }
}

impl TypeCtx {
    pub fn new(table: TypeTable) -> Self {
        Self::with_budget(table, DEFAULT_BUDGET)
    }

    pub fn with_budget(table: TypeTable, budget: usize) -> Self {
        TypeCtx { table, budget, proven: Mutex::default(), refuted: Mutex::default() }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    fn rel(&self) -> Rel<'_> {
        Rel { ctx: self, assumed: HashSet::new() }
    }

    pub fn subtype(&self, t: TyId, s: TyId) -> Result<bool, Undecided> {
        self.rel().le(t, s)
    }

    pub fn equiv(&self, t: TyId, s: TyId) -> Result<bool, Undecided> {
        Ok(self.subtype(t, s)? && self.subtype(s, t)?)
    }

    pub fn subpattern(&self, e: &Pattern, f: &Pattern) -> Result<Inclusion, Undecided> {
        subpattern_with(e, f, &mut self.rel())
    }

    pub fn included(&self, e: &Pattern, f: &Pattern) -> Result<bool, Undecided> {
        Ok(self.subpattern(e, f)?.holds())
    }

    pub fn pattern_equiv(&self, e: &Pattern, f: &Pattern) -> Result<bool, Undecided> {
        Ok(self.included(e, f)? && self.included(f, e)?)
    }

    pub fn residual(&self, e: &Pattern, m: &Atom) -> Result<Option<Pattern>, Undecided> {
        residual_with(e, m, &mut self.rel())
    }

    pub fn normal_form_violation(&self, e: &Pattern) -> Result<Option<NormalFormViolation>, Undecided> {
        is_normal_form_with(e, &mut self.rel())
    }

    pub fn is_normal_form(&self, e: &Pattern) -> Result<bool, Undecided> {
        Ok(self.normal_form_violation(e)?.is_none())
    }

    /// F with `e . F ≂ g`, when one is found.
    pub fn quotient(&self, g: &Pattern, e: &Pattern) -> Result<Option<Pattern>, Undecided> {
        quotient_with(g, e, QuotientCheck::Equivalent, &mut self.rel())
    }

    /// The largest F with `e . F ⊑ g`, when one is found.
    pub fn largest_quotient(&self, g: &Pattern, e: &Pattern) -> Result<Option<Pattern>, Undecided> {
        quotient_with(g, e, QuotientCheck::Below, &mut self.rel())
    }

    pub fn classify(&self, t: TyId) -> Result<Classification, Undecided> {
        Ok(match self.table.view(t) {
            Some(Ty::Mailbox(Capability::Input, e)) => {
                Classification { relevant: true, reliable: !self.included(e, &Pattern::Zero)?, usable: true }
            }
            Some(Ty::Mailbox(Capability::Output, e)) => Classification {
                relevant: !self.included(&Pattern::One, e)?,
                reliable: true,
                usable: !self.included(e, &Pattern::Zero)?,
            },
            Some(Ty::Int) | None => Classification { relevant: false, reliable: true, usable: true },
        })
    }

    /// Types violating the requirement that every type is usable and
    /// every message argument type is usable and reliable.
    pub fn check_global_assumptions(&self, roots: &[TyId]) -> Result<Vec<AssumptionViolation>, Undecided> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let mut args = HashSet::new();
        let mut stack: Vec<TyId> = roots.to_vec();
        while let Some(t) = stack.pop() {
            let r = self.table.resolve(t);
            if !seen.insert(r) {
                continue;
            }
            if let Some(Ty::Mailbox(_, p)) = self.table.view(r) {
                for a in p.atoms() {
                    for &arg in &a.args {
                        args.insert(self.table.resolve(arg));
                        stack.push(arg);
                    }
                }
            }
        }
        let mut seen: Vec<TyId> = seen.into_iter().collect();
        seen.sort();
        for t in seen {
            let c = self.classify(t)?;
            if !c.usable {
                let kind = if args.contains(&t) { ViolationKind::UnusableArgument } else { ViolationKind::UnusableType };
                out.push(AssumptionViolation { ty: t, kind });
            } else if !c.reliable && args.contains(&t) {
                out.push(AssumptionViolation { ty: t, kind: ViolationKind::UnreliableArgument });
            }
        }
        Ok(out)
    }

    /// `t ∥ s`, interning the result.
    pub fn combine_types(&mut self, t: TyId, s: TyId) -> Result<Option<TyId>, Undecided> {
        let (tv, sv) = match (self.table.view(t), self.table.view(s)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Ok(None),
        };
        let out = match (tv, sv) {
            (Ty::Int, Ty::Int) => Some(Ty::Int),
            (Ty::Mailbox(Capability::Output, e), Ty::Mailbox(Capability::Output, f)) => {
                let p = Pattern::prod(e.clone(), f.clone());
                return Ok(Some(self.table.output(p)));
            }
            (Ty::Mailbox(Capability::Output, e), Ty::Mailbox(Capability::Input, g))
            | (Ty::Mailbox(Capability::Input, g), Ty::Mailbox(Capability::Output, e)) => {
                let (g, e) = (g.clone(), e.clone());
                return Ok(self.quotient(&g, &e)?.map(|f| self.table.input(f)));
            }
            _ => None,
        };
        Ok(out.map(|_| self.table.int()))
    }
}
