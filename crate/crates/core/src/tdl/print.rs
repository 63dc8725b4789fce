use std::fmt;

use super::{Action, Assignment, Expr, Guard, GuardAtom, Program, Rule, ThreadDef};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) | Expr::Const(v) => write!(f, "{v}"),
            Expr::Bottom => write!(f, "bot"),
        }
    }
}

impl fmt::Display for GuardAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardAtom::True => write!(f, "true"),
            GuardAtom::Eq(x, e) => write!(f, "{x} = {e}"),
            GuardAtom::Neq(x, e) => write!(f, "{x} != {e}"),
        }
    }
}

fn items(guard: &Guard, assign: &Assignment) -> Vec<String> {
    let mut out: Vec<String> = guard.0.iter().map(|a| a.to_string()).collect();
    out.extend(assign.0.iter().map(|(x, e)| format!("{x} := {e}")));
    out
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (src, dst) = (&self.source, &self.target);
        match &self.action {
            Action::Internal {
                label,
                guard,
                assign,
            } => write!(f, "{src} -{label}-> {dst} [{}]", items(guard, assign).join(", ")),
            Action::NewName { label, var } => write!(f, "{src} -{label}-> {dst} [{var} := new]"),
            Action::Spawn {
                label,
                thread,
                assign,
            } => {
                write!(f, "{src} -{label}-> {dst} [run {thread}")?;
                if !assign.0.is_empty() {
                    write!(f, " with {}", items(&Guard::default(), assign).join(", "))?;
                }
                write!(f, "]")
            }
            Action::Send {
                channel,
                template,
                guard,
                assign,
            } => write!(
                f,
                "{src} -{channel}!({})-> {dst} [{}]",
                template.join(", "),
                items(guard, assign).join(", ")
            ),
            Action::Receive {
                channel,
                template,
                guard,
                assign,
            } => write!(
                f,
                "{src} -{channel}?({})-> {dst} [{}]",
                template.join(", "),
                items(guard, assign).join(", ")
            ),
        }
    }
}

impl fmt::Display for ThreadDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.locals.is_empty() {
            writeln!(f, "thread {}() start {};", self.name, self.start)?;
        } else {
            writeln!(
                f,
                "thread {}(local {}) start {};",
                self.name,
                self.locals.join(", "),
                self.start
            )?;
        }
        for r in &self.rules {
            writeln!(f, "  {r}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.constants.is_empty() {
            writeln!(f, "const {};", self.constants.join(", "))?;
            writeln!(f)?;
        }
        for t in &self.threads {
            writeln!(f, "{t}")?;
        }
        writeln!(f, "init pool: {}", self.pool.join(", "))
    }
}
