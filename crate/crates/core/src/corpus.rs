//! Example programs shipped with the crate, with their expected verdicts.

use crate::checker::Code;
use crate::syntax::{parse, Program, SyntaxErrors};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Runtime {
    /// Complete exploration finds neither failures nor deadlocks and
    /// every state can reach `done`.
    Clean,
    /// Some reachable state is irreducible but not `done`.
    Deadlock,
    /// Some reachable state has an unguarded `fail`.
    Fail,
}

#[derive(Clone, Copy, Debug)]
pub struct Entry {
    pub name: &'static str,
    pub source: &'static str,
    /// Verdict with the default guard rules.
    pub accepted: bool,
    /// Verdict with mixed guards enabled.
    pub accepted_mixed: bool,
    /// Code of the first diagnostic of a rejection.
    pub code: Option<Code>,
    pub runtime: Runtime,
}

impl Entry {
    pub fn program(&self) -> Result<Program, SyntaxErrors> {
        parse(self.source)
    }

    /// Well typed under some guard discipline.
    pub fn well_typed(&self) -> bool {
        self.accepted || self.accepted_mixed
    }
}

macro_rules! entry {
    ($name:literal, $acc:expr, $mixed:expr, $code:expr, $rt:expr) => {
        Entry {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".mbx")),
            accepted: $acc,
            accepted_mixed: $mixed,
            code: $code,
            runtime: $rt,
        }
    };
}

pub const ENTRIES: &[Entry] = &[
    entry!("lock", true, true, None, Runtime::Clean),
    entry!("stray_release", false, false, Some(Code::UntypedMessage), Runtime::Fail),
    entry!("future", true, true, None, Runtime::Clean),
    entry!("future_deadlock", false, false, Some(Code::Cycle), Runtime::Deadlock),
    entry!("multiplicity", false, false, Some(Code::Cycle), Runtime::Deadlock),
    entry!("linear_input", false, false, Some(Code::CombinationUndefined), Runtime::Deadlock),
    entry!("account", true, true, None, Runtime::Clean),
    entry!("account_stop", false, false, Some(Code::NfViolation), Runtime::Clean),
    entry!("account_pair", false, false, Some(Code::Cycle), Runtime::Deadlock),
    entry!("account_future", true, true, None, Runtime::Clean),
    entry!("choice", true, true, None, Runtime::Clean),
    entry!("master_workers", true, true, None, Runtime::Clean),
    entry!("readers_writer", false, true, Some(Code::MixedGuard), Runtime::Clean),
    entry!("session", true, true, None, Runtime::Clean),
];

/// Session type source used to generate the medium in `session.mbx`.
pub const SESSION_ST: &str = include_str!("../corpus/session.st");

pub fn get(name: &str) -> Option<&'static Entry> {
    ENTRIES.iter().find(|e| e.name == name)
}
