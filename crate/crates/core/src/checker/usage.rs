use std::collections::BTreeMap;

use crate::patterns::Pattern;
use crate::syntax::{Name, Span};
use crate::types::{Capability, Ty, TyId, TypeTable};

/// How a process uses one name: the messages it stores into it and, if
/// it reads from it, the pattern its guards expect. `(O, Some I)` stands
/// for the combination `!O ∥ ?I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Usage {
    Int,
    Mailbox { out: Pattern, input: Option<Pattern>, out_span: Option<Span>, in_span: Option<Span> },
}

pub type UsageEnv = BTreeMap<Name, Usage>;

pub(crate) enum Conflict {
    BothInputs(Span, Span),
    Kind,
}

impl Usage {
    pub fn output(p: Pattern, span: Span) -> Usage {
        Usage::Mailbox { out: p, input: None, out_span: Some(span), in_span: None }
    }

    pub fn input(p: Pattern, span: Span) -> Usage {
        Usage::Mailbox { out: Pattern::One, input: Some(p), out_span: None, in_span: Some(span) }
    }

    /// The usage granted by holding a reference of type `t`.
    pub fn of_type(table: &TypeTable, t: TyId, span: Span) -> Option<Usage> {
        Some(match table.view(t)? {
            Ty::Int => Usage::Int,
            Ty::Mailbox(Capability::Output, p) => Usage::output(p.clone(), span),
            Ty::Mailbox(Capability::Input, p) => Usage::input(p.clone(), span),
        })
    }

    pub fn is_int(&self) -> bool {
        matches!(self, Usage::Int)
    }

    pub(crate) fn combine(self, other: Usage) -> Result<Usage, Conflict> {
        match (self, other) {
            (Usage::Int, Usage::Int) => Ok(Usage::Int),
            (
                Usage::Mailbox { out: o1, input: i1, out_span: s1, in_span: t1 },
                Usage::Mailbox { out: o2, input: i2, out_span: s2, in_span: t2 },
            ) => {
                if let (Some(_), Some(_)) = (&i1, &i2) {
                    return Err(Conflict::BothInputs(t1.unwrap_or_default(), t2.unwrap_or_default()));
                }
                Ok(Usage::Mailbox {
                    out: Pattern::prod(o1, o2),
                    input: i1.or(i2),
                    out_span: s1.or(s2),
                    in_span: t1.or(t2),
                })
            }
            _ => Err(Conflict::Kind),
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Usage::Int => Span::default(),
            Usage::Mailbox { out_span, in_span, .. } => in_span.or(*out_span).unwrap_or_default(),
        }
    }
}
