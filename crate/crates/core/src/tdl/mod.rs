//! Thread definition programs: syntax tree, reader, printer and
//! well-formedness checks.

mod parse;
mod print;
mod validate;

use std::fmt;

pub use parse::parse_program;
pub use validate::{validate, Diagnostic, DiagnosticKind};

/// Source position. Ignored by equality so that printed and re-read programs
/// compare equal.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Var(String),
    Const(String),
    Bottom,
}

impl Expr {
    pub fn var(&self) -> Option<&str> {
        match self {
            Expr::Var(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuardAtom {
    True,
    Eq(String, Expr),
    Neq(String, Expr),
}

/// A conjunction of [`GuardAtom`]s; empty means `true`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Guard(pub Vec<GuardAtom>);

/// Simultaneous assignment `x1 := e1, ..., xk := ek`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment(pub Vec<(String, Expr)>);

impl Assignment {
    pub fn get(&self, target: &str) -> Option<&Expr> {
        self.0.iter().find(|(t, _)| t == target).map(|(_, e)| e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Internal {
        label: String,
        guard: Guard,
        assign: Assignment,
    },
    NewName {
        label: String,
        var: String,
    },
    /// Creates a thread. Bindings may target the child's locals (all of which
    /// must be bound) and also the parent's own locals.
    Spawn {
        label: String,
        thread: String,
        assign: Assignment,
    },
    Send {
        channel: Expr,
        template: Vec<String>,
        guard: Guard,
        assign: Assignment,
    },
    Receive {
        channel: Expr,
        template: Vec<String>,
        guard: Guard,
        assign: Assignment,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub source: String,
    pub target: String,
    pub action: Action,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreadDef {
    pub name: String,
    pub locals: Vec<String>,
    pub start: String,
    pub rules: Vec<Rule>,
    pub pos: Pos,
}

impl ThreadDef {
    /// Control locations in order of first appearance, starting location first.
    pub fn locations(&self) -> Vec<&str> {
        let mut out: Vec<&str> = vec![&self.start];
        for r in &self.rules {
            for l in [&r.source, &r.target] {
                if !out.contains(&l.as_str()) {
                    out.push(l);
                }
            }
        }
        out
    }

    pub fn local_index(&self, name: &str) -> Option<usize> {
        self.locals.iter().position(|l| l == name)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub constants: Vec<String>,
    pub threads: Vec<ThreadDef>,
    pub pool: Vec<String>,
}

impl Program {
    pub fn thread(&self, name: &str) -> Option<&ThreadDef> {
        self.threads.iter().find(|t| t.name == name)
    }

    pub fn thread_index(&self, name: &str) -> Option<usize> {
        self.threads.iter().position(|t| t.name == name)
    }

    /// Image of a constant as a name value: the i-th declared constant is `i`.
    pub fn constant_image(&self, name: &str) -> Option<i64> {
        self.constants
            .iter()
            .position(|c| c == name)
            .map(|i| i as i64 + 1)
    }
}

/// Location used when a thread has neither rules nor an explicit `start`.
pub(crate) fn default_start(thread: &str) -> String {
    format!("{thread}_init")
}

#[cfg(test)]
mod tests;
