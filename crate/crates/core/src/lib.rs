//! Mailbox calculus toolkit.
//!
//! Parses annotated mailbox-calculus programs, decides the mailbox type
//! judgments (pattern inclusion, subtyping, residuals, normal forms,
//! dependency graph acyclicity) and explores the reduction semantics.

pub mod checker;
pub mod corpus;
pub mod depgraph;
pub mod encodings;
pub mod patterns;
pub mod runtime;
pub mod syntax;
pub mod types;

pub use checker::{check_program, CheckOptions, Diagnostic, Report};
pub use depgraph::DepGraph;
pub use patterns::{Atom, Config, Pattern};
pub use runtime::{explore, run, step, StateGraph, Trace};
pub use syntax::{parse, Name, Process, Program, Tag};
pub use types::{Ty, TyId, TypeCtx, TypeTable};
