use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{Action, Assignment, Expr, Guard, GuardAtom, Pos, Program, ThreadDef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    DuplicateThread,
    DuplicateLocal,
    SharedLocal,
    SharedLocation,
    ConstantClash,
    DuplicateTarget,
    OutOfScope,
    TemplateNotFresh,
    BottomChannel,
    UnknownThread,
    SpawnBinding,
    UnknownPoolThread,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

struct Checker<'a> {
    prog: &'a Program,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn report(&mut self, kind: DiagnosticKind, pos: Pos, message: String) {
        self.out.push(Diagnostic {
            kind,
            line: pos.line,
            col: pos.col,
            message,
        });
    }

    fn expr(&mut self, e: &Expr, scope: &[&str], pos: Pos, ctx: &str) {
        if let Expr::Var(v) = e {
            if !scope.contains(&v.as_str()) {
                self.report(
                    DiagnosticKind::OutOfScope,
                    pos,
                    format!("`{v}` in {ctx} is neither a variable in scope nor a constant"),
                );
            }
        }
    }

    fn guard(&mut self, g: &Guard, scope: &[&str], pos: Pos) {
        for a in &g.0 {
            if let GuardAtom::Eq(x, e) | GuardAtom::Neq(x, e) = a {
                self.expr(&Expr::Var(x.clone()), scope, pos, "guard");
                self.expr(e, scope, pos, "guard");
            }
        }
    }

    fn targets_distinct(&mut self, a: &Assignment, pos: Pos) {
        let mut seen = BTreeSet::new();
        for (t, _) in &a.0 {
            if !seen.insert(t) {
                self.report(
                    DiagnosticKind::DuplicateTarget,
                    pos,
                    format!("`{t}` is assigned more than once"),
                );
            }
        }
    }

    fn assignment(&mut self, a: &Assignment, targets: &[&str], sources: &[&str], pos: Pos) {
        self.targets_distinct(a, pos);
        for (t, e) in &a.0 {
            if !targets.contains(&t.as_str()) {
                self.report(
                    DiagnosticKind::OutOfScope,
                    pos,
                    format!("assignment target `{t}` is not a local variable"),
                );
            }
            self.expr(e, sources, pos, "assignment");
        }
    }

    fn channel(&mut self, e: &Expr, scope: &[&str], pos: Pos) {
        if *e == Expr::Bottom {
            self.report(
                DiagnosticKind::BottomChannel,
                pos,
                "channel expression must be a variable or a constant".into(),
            );
        }
        self.expr(e, scope, pos, "channel");
    }

    fn thread(&mut self, t: &ThreadDef) {
        let locals: Vec<&str> = t.locals.iter().map(String::as_str).collect();
        for r in &t.rules {
            let pos = r.pos;
            match &r.action {
                Action::Internal { guard, assign, .. } => {
                    self.guard(guard, &locals, pos);
                    self.assignment(assign, &locals, &locals, pos);
                }
                Action::NewName { var, .. } => {
                    if !locals.contains(&var.as_str()) {
                        self.report(
                            DiagnosticKind::OutOfScope,
                            pos,
                            format!("`{var} := new` targets a name that is not a local variable"),
                        );
                    }
                }
                Action::Spawn { thread, assign, .. } => self.spawn(t, thread, assign, pos),
                Action::Send {
                    channel,
                    template,
                    guard,
                    assign,
                } => {
                    self.channel(channel, &locals, pos);
                    for v in template {
                        self.expr(&Expr::Var(v.clone()), &locals, pos, "message template");
                    }
                    self.guard(guard, &locals, pos);
                    self.assignment(assign, &locals, &locals, pos);
                }
                Action::Receive {
                    channel,
                    template,
                    guard,
                    assign,
                } => {
                    self.channel(channel, &locals, pos);
                    let mut seen = BTreeSet::new();
                    for v in template {
                        if locals.contains(&v.as_str()) || !seen.insert(v) {
                            self.report(
                                DiagnosticKind::TemplateNotFresh,
                                pos,
                                format!("received variable `{v}` must be new and distinct"),
                            );
                        }
                        if self.prog.constants.contains(v) {
                            self.report(
                                DiagnosticKind::ConstantClash,
                                pos,
                                format!("received variable `{v}` has the name of a constant"),
                            );
                        }
                    }
                    let mut scope = locals.clone();
                    scope.extend(template.iter().map(String::as_str));
                    self.guard(guard, &scope, pos);
                    self.assignment(assign, &locals, &scope, pos);
                }
            }
        }
    }

    fn spawn(&mut self, parent: &ThreadDef, child: &str, assign: &Assignment, pos: Pos) {
        let locals: Vec<&str> = parent.locals.iter().map(String::as_str).collect();
        let Some(child_def) = self.prog.thread(child) else {
            self.report(
                DiagnosticKind::UnknownThread,
                pos,
                format!("unknown thread `{child}`"),
            );
            return;
        };
        self.targets_distinct(assign, pos);
        for (tgt, e) in &assign.0 {
            let ok = child_def.locals.contains(tgt) || locals.contains(&tgt.as_str());
            if !ok {
                self.report(
                    DiagnosticKind::SpawnBinding,
                    pos,
                    format!("`{tgt}` is a local of neither `{child}` nor `{}`", parent.name),
                );
            }
            self.expr(e, &locals, pos, "spawn assignment");
        }
        for w in &child_def.locals {
            if assign.get(w).is_none() {
                self.report(
                    DiagnosticKind::SpawnBinding,
                    pos,
                    format!("spawn of `{child}` leaves local `{w}` unbound"),
                );
            }
        }
    }
}

/// Static well-formedness. Diagnostics come out in a fixed order: program
/// level checks first, then threads and rules in source order.
pub fn validate(prog: &Program) -> Vec<Diagnostic> {
    let mut ck = Checker {
        prog,
        out: Vec::new(),
    };

    let mut thread_names: BTreeSet<&str> = BTreeSet::new();
    let mut local_owner: BTreeMap<&str, &str> = BTreeMap::new();
    let mut loc_owner: BTreeMap<&str, &str> = BTreeMap::new();
    for t in &prog.threads {
        if !thread_names.insert(&t.name) {
            ck.report(
                DiagnosticKind::DuplicateThread,
                t.pos,
                format!("thread `{}` is defined twice", t.name),
            );
        }
        let mut own = BTreeSet::new();
        for l in &t.locals {
            if !own.insert(l.as_str()) {
                ck.report(
                    DiagnosticKind::DuplicateLocal,
                    t.pos,
                    format!("local `{l}` is declared twice in `{}`", t.name),
                );
                continue;
            }
            if let Some(other) = local_owner.insert(l, &t.name) {
                ck.report(
                    DiagnosticKind::SharedLocal,
                    t.pos,
                    format!("local `{l}` of `{}` is also a local of `{other}`", t.name),
                );
            }
            if prog.constants.contains(l) {
                ck.report(
                    DiagnosticKind::ConstantClash,
                    t.pos,
                    format!("local `{l}` of `{}` has the name of a constant", t.name),
                );
            }
        }
        for loc in t.locations() {
            if let Some(other) = loc_owner.insert(loc, &t.name) {
                ck.report(
                    DiagnosticKind::SharedLocation,
                    t.pos,
                    format!("location `{loc}` of `{}` is also used by `{other}`", t.name),
                );
            }
        }
    }
    let mut consts = BTreeSet::new();
    for c in &prog.constants {
        if !consts.insert(c) {
            ck.report(
                DiagnosticKind::ConstantClash,
                Pos::default(),
                format!("constant `{c}` is declared twice"),
            );
        }
    }

    for t in &prog.threads {
        ck.thread(t);
    }
    for name in &prog.pool {
        if prog.thread(name).is_none() {
            ck.report(
                DiagnosticKind::UnknownPoolThread,
                Pos::default(),
                format!("initial pool names unknown thread `{name}`"),
            );
        }
    }
    ck.out
}
