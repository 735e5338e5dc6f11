use std::fmt::{self, Write};

use super::{Arg, Branch, Cond, IntExpr, Process, Program};
use crate::types::TypeTable;

pub struct ProcessDisplay<'a> {
    process: &'a Process,
    table: &'a TypeTable,
}

impl<'a> ProcessDisplay<'a> {
    pub fn new(process: &'a Process, table: &'a TypeTable) -> Self {
        ProcessDisplay { process, table }
    }
}

impl fmt::Display for ProcessDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_process(f, self.process, self.table, 0)
    }
}

fn write_int(f: &mut impl Write, e: &IntExpr, nested: bool) -> fmt::Result {
    match e {
        IntExpr::Lit(n) => write!(f, "{n}"),
        IntExpr::Var(x) => write!(f, "{x}"),
        IntExpr::Add(a, b) | IntExpr::Sub(a, b) => {
            if nested {
                write!(f, "(")?;
            }
            write_int(f, a, false)?;
            write!(f, " {} ", if matches!(e, IntExpr::Add(..)) { "+" } else { "-" })?;
            write_int(f, b, true)?;
            if nested {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

fn write_args(f: &mut impl Write, args: &[Arg]) -> fmt::Result {
    write!(f, "(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        match a {
            Arg::Name(n) => write!(f, "{n}")?,
            Arg::Int(e) => write_int(f, e, false)?,
        }
    }
    write!(f, ")")
}

fn write_cond(f: &mut impl Write, c: &Cond) -> fmt::Result {
    write_int(f, &c.lhs, false)?;
    write!(f, " {} ", c.op.symbol())?;
    write_int(f, &c.rhs, false)
}

pub(crate) fn write_branch(f: &mut impl Write, b: &Branch, table: &TypeTable) -> fmt::Result {
    match b {
        Branch::Fail { mailbox, .. } => write!(f, "fail {mailbox}"),
        Branch::Free { mailbox, body, .. } => {
            write!(f, "free {mailbox}.")?;
            write_process(f, body, table, 2)
        }
        Branch::Receive { mailbox, tag, binders, body, .. } => {
            write!(f, "{mailbox}?{tag}(")?;
            for (i, x) in binders.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}: {}", x.name, table.display(x.ty))?;
            }
            write!(f, ").")?;
            write_process(f, body, table, 2)
        }
    }
}

/// Levels: 0 parallel context, 1 guard sum, 2 prefix.
pub(crate) fn write_process(f: &mut impl Write, p: &Process, table: &TypeTable, level: u8) -> fmt::Result {
    match p {
        Process::Done => write!(f, "done"),
        Process::Invoke { def, args, .. } => {
            write!(f, "{def}")?;
            write_args(f, args)
        }
        Process::Send { target, tag, args, .. } => {
            write!(f, "{target}!{tag}")?;
            write_args(f, args)
        }
        Process::Par(ps) => {
            if ps.is_empty() {
                return write!(f, "done");
            }
            if level > 0 {
                write!(f, "(")?;
            }
            for (i, q) in ps.iter().enumerate() {
                if i > 0 {
                    write!(f, " | ")?;
                }
                write_process(f, q, table, 1)?;
            }
            if level > 0 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Process::Guard { branches, .. } => {
            let paren = branches.len() > 1 && level > 1;
            if paren {
                write!(f, "(")?;
            }
            for (i, b) in branches.iter().enumerate() {
                if i > 0 {
                    write!(f, " + ")?;
                }
                write_branch(f, b, table)?;
            }
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        Process::New { name, body, .. } => {
            write!(f, "new {name} in ")?;
            write_process(f, body, table, 2)
        }
        Process::If { cond, then, els, .. } => {
            write!(f, "if ")?;
            write_cond(f, cond)?;
            write!(f, " then ")?;
            write_process(f, then, table, 2)?;
            write!(f, " else ")?;
            write_process(f, els, table, 2)
        }
    }
}

pub struct ProgramDisplay<'a> {
    program: &'a Program,
}

impl<'a> ProgramDisplay<'a> {
    pub fn new(program: &'a Program) -> Self {
        ProgramDisplay { program }
    }
}

impl fmt::Display for ProgramDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prog = self.program;
        let table = &prog.types;
        for (name, id) in table.definitions() {
            writeln!(f, "type {name} = {};", table.display_expanded(id))?;
        }
        if table.definitions().next().is_some() {
            writeln!(f)?;
        }
        for d in &prog.defs {
            write!(f, "def {}(", d.name)?;
            for (i, x) in d.params.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}: {}", x.name, table.display(x.ty))?;
            }
            write!(f, ")")?;
            if !d.graph.is_empty() {
                write!(f, " : {}", d.graph)?;
            }
            write!(f, " =\n    ")?;
            write_process(f, &d.body, table, 0)?;
            writeln!(f, ";")?;
            writeln!(f)?;
        }
        write!(f, "main = ")?;
        write_process(f, &prog.main, table, 0)?;
        writeln!(f, ";")
    }
}
