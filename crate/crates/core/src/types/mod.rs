//! Mailbox types as regular trees over a table of named definitions.

mod env;
mod subtype;

use std::collections::HashMap;
use std::fmt;

use crate::patterns::{Pattern, PatternDisplay};
use crate::syntax::Name;

pub use env::TypeEnv;
pub use subtype::{AssumptionViolation, Classification, TypeCtx, ViolationKind};

/// Index of a type node in a [`TypeTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TyId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Capability {
    Input,
    Output,
}

impl Capability {
    pub fn symbol(self) -> char {
        match self {
            Capability::Input => '?',
            Capability::Output => '!',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TyNode {
    Mailbox(Capability, Pattern),
    Int,
    /// A named type; `None` until its definition is supplied.
    Alias(Name, Option<TyId>),
}

/// A resolved view of a type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty<'a> {
    Mailbox(Capability, &'a Pattern),
    Int,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("type `{0}` is used but never defined")]
    Undefined(Name),
    #[error("type `{0}` is defined more than once")]
    Redefined(Name),
    #[error("type `{0}` is not contractive: it refers to itself without going through a message argument")]
    NotContractive(Name),
}

#[derive(Clone, Debug, Default)]
pub struct TypeTable {
    nodes: Vec<TyNode>,
    interned: HashMap<TyNode, TyId>,
    names: HashMap<Name, TyId>,
    order: Vec<Name>,
}

impl TypeTable {
    pub fn new() -> Self {
        TypeTable::default()
    }

    pub fn intern(&mut self, node: TyNode) -> TyId {
        if let Some(id) = self.interned.get(&node) {
            return *id;
        }
        let id = TyId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.interned.insert(node, id);
        id
    }

    pub fn mailbox(&mut self, cap: Capability, p: Pattern) -> TyId {
        self.intern(TyNode::Mailbox(cap, p))
    }

    pub fn input(&mut self, p: Pattern) -> TyId {
        self.mailbox(Capability::Input, p)
    }

    pub fn output(&mut self, p: Pattern) -> TyId {
        self.mailbox(Capability::Output, p)
    }

    pub fn int(&mut self) -> TyId {
        self.intern(TyNode::Int)
    }

    /// The alias node for `name`, created undefined on first use.
    pub fn declare(&mut self, name: &Name) -> TyId {
        if let Some(id) = self.names.get(name) {
            return *id;
        }
        let id = TyId(self.nodes.len() as u32);
        self.nodes.push(TyNode::Alias(name.clone(), None));
        self.names.insert(name.clone(), id);
        id
    }

    pub fn define(&mut self, name: &Name, target: TyId) -> Result<TyId, TableError> {
        let id = self.declare(name);
        match &mut self.nodes[id.0 as usize] {
            TyNode::Alias(_, slot @ None) => {
                *slot = Some(target);
                self.order.push(name.clone());
                Ok(id)
            }
            _ => Err(TableError::Redefined(name.clone())),
        }
    }

    pub fn lookup(&self, name: &str) -> Option<TyId> {
        self.names.get(name).copied()
    }

    /// Named types in definition order.
    pub fn definitions(&self) -> impl Iterator<Item = (&Name, TyId)> {
        self.order.iter().map(|n| (n, self.names[n]))
    }

    pub fn node(&self, id: TyId) -> &TyNode {
        &self.nodes[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = TyId> {
        (0..self.nodes.len() as u32).map(TyId)
    }

    /// Follow aliases to a structural node.
    pub fn resolve(&self, mut id: TyId) -> TyId {
        for _ in 0..=self.nodes.len() {
            match self.node(id) {
                TyNode::Alias(_, Some(t)) => id = *t,
                _ => return id,
            }
        }
        id
    }

    pub fn view(&self, id: TyId) -> Option<Ty<'_>> {
        match self.node(self.resolve(id)) {
            TyNode::Mailbox(c, p) => Some(Ty::Mailbox(*c, p)),
            TyNode::Int => Some(Ty::Int),
            TyNode::Alias(..) => None,
        }
    }

    pub fn is_int(&self, id: TyId) -> bool {
        matches!(self.view(id), Some(Ty::Int))
    }

    /// Every alias is defined and no alias chain loops back on itself.
    pub fn validate(&self) -> Result<(), TableError> {
        for node in &self.nodes {
            if let TyNode::Alias(name, target) = node {
                let Some(mut t) = *target else {
                    return Err(TableError::Undefined(name.clone()));
                };
                let mut steps = 0;
                while let TyNode::Alias(_, next) = self.node(t) {
                    steps += 1;
                    match next {
                        Some(n) if steps <= self.nodes.len() => t = *n,
                        Some(_) => return Err(TableError::NotContractive(name.clone())),
                        None => break,
                    }
                }
            }
        }
        Ok(())
    }

    pub fn display(&self, id: TyId) -> TyDisplay<'_> {
        TyDisplay { table: self, id, expand: false }
    }

    /// Like `display` but shows the definition of a top-level alias.
    pub fn display_expanded(&self, id: TyId) -> TyDisplay<'_> {
        TyDisplay { table: self, id, expand: true }
    }

    pub fn display_pattern<'a>(&'a self, p: &'a Pattern) -> PatternDisplay<'a> {
        p.display(self)
    }
}

pub struct TyDisplay<'a> {
    table: &'a TypeTable,
    id: TyId,
    expand: bool,
}

impl fmt::Display for TyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut id = self.id;
        if self.expand {
            id = self.table.resolve(id);
        }
        match self.table.node(id) {
            TyNode::Alias(name, _) => write!(f, "{name}"),
            TyNode::Int => write!(f, "int"),
            TyNode::Mailbox(c, p) => write!(f, "{}{}", c.symbol(), p.display_prec(self.table, 3)),
        }
    }
}
