//! Type environments and their combination.

use std::collections::BTreeMap;

use super::{TyId, TypeCtx};
use crate::patterns::Undecided;
use crate::syntax::Name;

pub type TypeEnv = BTreeMap<Name, TyId>;

impl TypeCtx {
    /// `g ∥ d`: pointwise combination on shared names, union elsewhere.
    pub fn combine_envs(&mut self, g: &TypeEnv, d: &TypeEnv) -> Result<Option<TypeEnv>, Undecided> {
        let mut out = g.clone();
        for (u, t) in d {
            match g.get(u) {
                None => {
                    out.insert(u.clone(), *t);
                }
                Some(s) => match self.combine_types(*s, *t)? {
                    Some(c) => {
                        out.insert(u.clone(), c);
                    }
                    None => return Ok(None),
                },
            }
        }
        Ok(Some(out))
    }

    /// `g ≤ d`: every name of d is in g with a smaller type, and the
    /// names of g missing from d have irrelevant types.
    pub fn env_subtype(&self, g: &TypeEnv, d: &TypeEnv) -> Result<bool, Undecided> {
        for (u, t) in d {
            match g.get(u) {
                Some(s) if self.subtype(*s, *t)? => {}
                _ => return Ok(false),
            }
        }
        for (u, t) in g {
            if !d.contains_key(u) && self.classify(*t)?.relevant {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn env_reliable(&self, g: &TypeEnv) -> Result<bool, Undecided> {
        for t in g.values() {
            if !self.classify(*t)?.reliable {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn env_usable(&self, g: &TypeEnv) -> Result<bool, Undecided> {
        for t in g.values() {
            if !self.classify(*t)?.usable {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
