//! Compilation of thread definition programs into multiset rewriting rules.
//!
//! A thread at location `s` with locals `x1..xk` becomes the atom
//! `s(x1, ..., xk)`; the unary atom `fresh(u)` holds a value above every name
//! in use.

mod harness;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

pub use harness::{check_msr_to_tdl, check_tdl_to_msr, random_msr_walk};

use crate::interp::{GlobalConfig, LocalConfig};
use crate::msr::{Atom, GroundAtom, GroundConfig, MsrRule, MsrSpec, PredId, Signature};
use crate::nc::{NcAtom, NcConstraint, VarId, VarSupply};
use crate::tdl::{validate, Action, Assignment, Diagnostic, Expr, Guard, GuardAtom, Program, Rule};
use crate::value::{int, Value};

/// Predicate names the encoding uses for itself; locations with these
/// names are renamed.
pub const RESERVED_PREDICATES: [&str; 3] = ["init", "fresh", "zero"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TranslateOptions {
    /// Also pair a sender and a receiver from the same thread definition.
    pub intra_thread_rendezvous: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocationEntry {
    pub thread: String,
    pub location: String,
    pub predicate: String,
    pub arity: usize,
}

/// How program symbols map to the multiset rewriting side.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SymbolTable {
    /// `bot` is 0; constants are numbered from 1 in declaration order.
    pub constants: Vec<(String, i64)>,
    /// Largest constant occurring in an emitted constraint; fresh names start
    /// above it.
    pub c_max: i64,
    pub locations: Vec<LocationEntry>,
    /// Locals of each thread in declaration order, the argument order of its
    /// location predicates.
    pub locals: Vec<(String, Vec<String>)>,
    /// A location's post-state variables carry this suffix in rule text.
    pub prime: String,
    /// Same-definition send/receive pairs left out of the rule set.
    pub skipped_intra_pairs: usize,
}

impl SymbolTable {
    pub fn constant_image(&self, name: &str) -> Option<i64> {
        self.constants.iter().find(|(c, _)| c == name).map(|(_, i)| *i)
    }
}

/// The encoded specification with the symbol table needed to read its
/// configurations back as program configurations.
#[derive(Clone, Debug)]
pub struct Translation {
    pub spec: MsrSpec,
    pub table: SymbolTable,
    /// Predicate of each (thread, location index).
    loc_preds: Vec<Vec<PredId>>,
    fresh: PredId,
    init: PredId,
}

/// A guard as a disjunction of constraints, one per choice of `<` or `>` for
/// each disequality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardImage {
    pub disjuncts: Vec<NcConstraint>,
}

#[derive(Clone, Copy)]
enum Term {
    Var(VarId),
    Const(i64),
}

enum Lit {
    Atom(NcAtom),
    True,
    False,
}

fn eq_lit(l: Term, r: Term) -> Lit {
    match (l, r) {
        (Term::Var(x), Term::Var(y)) => Lit::Atom(NcAtom::Eq(x, y)),
        (Term::Var(x), Term::Const(c)) | (Term::Const(c), Term::Var(x)) => {
            Lit::Atom(NcAtom::EqConst(x, c))
        }
        (Term::Const(a), Term::Const(b)) => {
            if a == b {
                Lit::True
            } else {
                Lit::False
            }
        }
    }
}

/// `l > r`.
fn gt_lit(l: Term, r: Term) -> Lit {
    match (l, r) {
        (Term::Var(x), Term::Var(y)) => Lit::Atom(NcAtom::Gt(x, y)),
        (Term::Var(x), Term::Const(c)) => Lit::Atom(NcAtom::GtConst(x, c)),
        (Term::Const(c), Term::Var(x)) => Lit::Atom(NcAtom::LtConst(x, c)),
        (Term::Const(a), Term::Const(b)) => {
            if a > b {
                Lit::True
            } else {
                Lit::False
            }
        }
    }
}

fn term(e: &Expr, table: &SymbolTable, var: &dyn Fn(&str) -> VarId) -> Term {
    match e {
        Expr::Bottom => Term::Const(0),
        Expr::Const(c) => Term::Const(table.constant_image(c).expect("declared constant")),
        Expr::Var(v) => Term::Var(var(v)),
    }
}

/// Names never go below `bot`, so a disjunct forcing a variable under 0
/// has no solution among names.
fn below_zero(c: &NcConstraint) -> bool {
    c.vars().into_iter().any(|v| c.entails(&NcConstraint::new([NcAtom::LtConst(v, 0)])))
}

pub fn encode_guard(g: &Guard, table: &SymbolTable, var: &dyn Fn(&str) -> VarId) -> GuardImage {
    let mut branches: Vec<Vec<NcAtom>> = vec![Vec::new()];
    for a in &g.0 {
        let (x, e, equal) = match a {
            GuardAtom::True => continue,
            GuardAtom::Eq(x, e) => (x, e, true),
            GuardAtom::Neq(x, e) => (x, e, false),
        };
        let (l, r) = (Term::Var(var(x)), term(e, table, var));
        let options = if equal {
            vec![eq_lit(l, r)]
        } else {
            vec![gt_lit(l, r), gt_lit(r, l)]
        };
        let mut next = Vec::new();
        for b in &branches {
            for o in &options {
                match o {
                    Lit::False => {}
                    Lit::True => next.push(b.clone()),
                    Lit::Atom(at) => {
                        let mut b = b.clone();
                        b.push(*at);
                        next.push(b);
                    }
                }
            }
        }
        branches = next;
    }
    let disjuncts = branches
        .into_iter()
        .map(NcConstraint::new)
        .filter(|c| c.satisfiable() && !below_zero(c))
        .collect();
    GuardImage { disjuncts }
}

/// `x'_i = e_i` for every local, with `x'_i = x_i` for locals the
/// assignment leaves alone.
pub fn encode_assignment(
    a: &Assignment,
    table: &SymbolTable,
    locals: &[String],
    pre: &dyn Fn(&str) -> VarId,
    post: &dyn Fn(&str) -> VarId,
) -> NcConstraint {
    let atoms = locals.iter().map(|x| {
        let rhs = match a.get(x) {
            Some(e) => term(e, table, pre),
            None => Term::Var(pre(x)),
        };
        match eq_lit(Term::Var(post(x)), rhs) {
            Lit::Atom(at) => at,
            Lit::True | Lit::False => unreachable!("left side is a variable"),
        }
    });
    NcConstraint::new(atoms)
}

/// Variables of one thread instance inside a rule: pre-state and post-state
/// copies of every local, plus received names.
struct Instance {
    pre: BTreeMap<String, VarId>,
    post: BTreeMap<String, VarId>,
}

struct RuleVars {
    supply: VarSupply,
    names: BTreeMap<VarId, String>,
}

impl RuleVars {
    fn new() -> Self {
        RuleVars {
            supply: VarSupply::new(),
            names: BTreeMap::new(),
        }
    }

    fn var(&mut self, name: String) -> VarId {
        let v = self.supply.fresh();
        self.names.insert(v, name);
        v
    }

    fn instance(&mut self, locals: &[String], suffix: &str, prime: &str) -> Instance {
        let pre = locals
            .iter()
            .map(|x| (x.clone(), self.var(format!("{x}{suffix}"))))
            .collect();
        let post = locals
            .iter()
            .map(|x| (x.clone(), self.var(format!("{x}{suffix}{prime}"))))
            .collect();
        Instance { pre, post }
    }
}

impl Instance {
    fn pre_atom(&self, pred: PredId, locals: &[String]) -> Atom {
        Atom {
            pred,
            args: locals.iter().map(|x| self.pre[x]).collect(),
        }
    }

    fn post_atom(&self, pred: PredId, locals: &[String]) -> Atom {
        Atom {
            pred,
            args: locals.iter().map(|x| self.post[x]).collect(),
        }
    }
}

struct Compiler<'a> {
    prog: &'a Program,
    table: SymbolTable,
    sig: Signature,
    loc_preds: Vec<Vec<PredId>>,
    fresh: PredId,
    rules: Vec<MsrRule>,
    opts: TranslateOptions,
}

fn lookup<'m>(m: &'m BTreeMap<String, VarId>) -> impl Fn(&str) -> VarId + 'm {
    move |x| m[x]
}

impl Compiler<'_> {
    fn loc(&self, t: usize, name: &str) -> PredId {
        let idx = self.prog.threads[t]
            .locations()
            .iter()
            .position(|l| *l == name)
            .unwrap();
        self.loc_preds[t][idx]
    }

    fn emit(&mut self, head: Vec<Atom>, body: Vec<Atom>, c: NcConstraint, vars: &RuleVars, origin: String) {
        if !c.satisfiable() {
            return;
        }
        let mut r = MsrRule::new(head, body, c);
        r.names = vars.names.clone();
        r.origin = origin;
        self.rules.push(r);
    }

    fn origin(&self, t: usize, r: &Rule) -> String {
        format!("{}: {}", self.prog.threads[t].name, r)
    }

    fn local_rule(&mut self, t: usize, r: &Rule) {
        let locals = self.prog.threads[t].locals.clone();
        let prime = self.table.prime.clone();
        let src = self.loc(t, &r.source);
        let dst = self.loc(t, &r.target);
        let origin = self.origin(t, r);
        match &r.action {
            Action::Internal { guard, assign, .. } => {
                let mut vars = RuleVars::new();
                let me = vars.instance(&locals, "", &prime);
                let alpha = encode_assignment(assign, &self.table, &locals, &lookup(&me.pre), &lookup(&me.post));
                let image = encode_guard(guard, &self.table, &lookup(&me.pre));
                let n = image.disjuncts.len();
                for (k, d) in image.disjuncts.into_iter().enumerate() {
                    let origin = if n > 1 {
                        format!("{origin} (case {} of {n})", k + 1)
                    } else {
                        origin.clone()
                    };
                    self.emit(
                        vec![me.pre_atom(src, &locals)],
                        vec![me.post_atom(dst, &locals)],
                        d.conjoin(&alpha),
                        &vars,
                        origin,
                    );
                }
            }
            Action::NewName { var, .. } => {
                let mut vars = RuleVars::new();
                let me = vars.instance(&locals, "", &prime);
                let u = vars.var("u".into());
                let u2 = vars.var(format!("u{prime}"));
                let x2 = me.post[var];
                let mut atoms = vec![NcAtom::Gt(u2, x2), NcAtom::Gt(x2, u)];
                atoms.extend(
                    locals
                        .iter()
                        .filter(|x| *x != var)
                        .map(|x| NcAtom::Eq(me.post[x], me.pre[x])),
                );
                let fresh = self.fresh;
                self.emit(
                    vec![me.pre_atom(src, &locals), Atom { pred: fresh, args: vec![u] }],
                    vec![me.post_atom(dst, &locals), Atom { pred: fresh, args: vec![u2] }],
                    NcConstraint::new(atoms),
                    &vars,
                    origin,
                );
            }
            Action::Spawn { thread, assign, .. } => {
                let ct = self.prog.thread_index(thread).unwrap();
                let child_locals = self.prog.threads[ct].locals.clone();
                let mut vars = RuleVars::new();
                let me = vars.instance(&locals, "", &prime);
                let child: Vec<VarId> = child_locals
                    .iter()
                    .map(|w| vars.var(format!("{w}_new{prime}")))
                    .collect();
                let own = Assignment(
                    assign
                        .0
                        .iter()
                        .filter(|(x, _)| !child_locals.contains(x))
                        .cloned()
                        .collect(),
                );
                let mut c = encode_assignment(&own, &self.table, &locals, &lookup(&me.pre), &lookup(&me.post));
                let pre = lookup(&me.pre);
                for (w, &v) in child_locals.iter().zip(&child) {
                    let e = assign.get(w).expect("validated spawn binds every child local");
                    match eq_lit(Term::Var(v), term(e, &self.table, &pre)) {
                        Lit::Atom(a) => c = c.with([a]),
                        Lit::True | Lit::False => unreachable!("left side is a variable"),
                    }
                }
                let start = self.loc(ct, &self.prog.threads[ct].start.clone());
                self.emit(
                    vec![me.pre_atom(src, &locals)],
                    vec![me.post_atom(dst, &locals), Atom { pred: start, args: child }],
                    c,
                    &vars,
                    origin,
                );
            }
            Action::Send { .. } => self.rendezvous_from(t, r),
            Action::Receive { .. } => {}
        }
    }

    fn rendezvous_from(&mut self, st: usize, sr: &Rule) {
        let Action::Send {
            channel: s_chan,
            template: s_tpl,
            guard: s_guard,
            assign: s_assign,
        } = &sr.action
        else {
            return;
        };
        let prime = self.table.prime.clone();
        for rt in 0..self.prog.threads.len() {
            for rr in &self.prog.threads[rt].rules {
                let Action::Receive {
                    channel: r_chan,
                    template: r_tpl,
                    guard: r_guard,
                    assign: r_assign,
                } = &rr.action
                else {
                    continue;
                };
                if r_tpl.len() != s_tpl.len() {
                    continue;
                }
                if rt == st && !self.opts.intra_thread_rendezvous {
                    self.table.skipped_intra_pairs += 1;
                    continue;
                }
                let s_locals = self.prog.threads[st].locals.clone();
                let r_locals = self.prog.threads[rt].locals.clone();
                let mut vars = RuleVars::new();
                let (s_suffix, r_suffix) = if rt == st { ("_1", "_2") } else { ("", "") };
                let snd = vars.instance(&s_locals, s_suffix, &prime);
                let mut rcv = vars.instance(&r_locals, r_suffix, &prime);
                let received: Vec<VarId> = r_tpl.iter().map(|w| vars.var(format!("{w}{r_suffix}"))).collect();
                for (w, &v) in r_tpl.iter().zip(&received) {
                    rcv.pre.insert(w.clone(), v);
                }

                let s_pre = lookup(&snd.pre);
                let r_pre = lookup(&rcv.pre);
                let mut base = Vec::new();
                match eq_lit(term(s_chan, &self.table, &s_pre), term(r_chan, &self.table, &r_pre)) {
                    Lit::False => continue,
                    Lit::True => {}
                    Lit::Atom(a) => base.push(a),
                }
                for (x, &w) in s_tpl.iter().zip(&received) {
                    base.push(NcAtom::Eq(w, snd.pre[x]));
                }
                let s_alpha = encode_assignment(s_assign, &self.table, &s_locals, &s_pre, &lookup(&snd.post));
                let r_alpha = encode_assignment(r_assign, &self.table, &r_locals, &r_pre, &lookup(&rcv.post));
                let base = NcConstraint::new(base).conjoin(&s_alpha).conjoin(&r_alpha);
                let gs = encode_guard(s_guard, &self.table, &s_pre);
                let gr = encode_guard(r_guard, &self.table, &r_pre);
                let eliminated: BTreeSet<VarId> = received.iter().copied().collect();
                let origin = format!("{} || {}", self.origin(st, sr), self.origin(rt, rr));
                let n = gs.disjuncts.len() * gr.disjuncts.len();
                let mut k = 0;
                for ds in &gs.disjuncts {
                    for dr in &gr.disjuncts {
                        k += 1;
                        let c = base.conjoin(ds).conjoin(dr);
                        if !c.satisfiable() {
                            continue;
                        }
                        let c = c.eliminate(&eliminated);
                        let origin = if n > 1 {
                            format!("{origin} (case {k} of {n})")
                        } else {
                            origin.clone()
                        };
                        let (s_src, s_dst) = (self.loc(st, &sr.source), self.loc(st, &sr.target));
                        let (r_src, r_dst) = (self.loc(rt, &rr.source), self.loc(rt, &rr.target));
                        self.emit(
                            vec![snd.pre_atom(s_src, &s_locals), rcv.pre_atom(r_src, &r_locals)],
                            vec![snd.post_atom(s_dst, &s_locals), rcv.post_atom(r_dst, &r_locals)],
                            c,
                            &vars,
                            origin,
                        );
                    }
                }
            }
        }
    }

    fn init_rule(&mut self, init: PredId) {
        let mut vars = RuleVars::new();
        let x = vars.var("x".into());
        let mut body = vec![Atom {
            pred: self.fresh,
            args: vec![x],
        }];
        let mut atoms = vec![NcAtom::GtConst(x, self.table.c_max)];
        for (k, name) in self.prog.pool.iter().enumerate() {
            let t = self.prog.thread_index(name).unwrap();
            let def = &self.prog.threads[t];
            let args: Vec<VarId> = def
                .locals
                .iter()
                .map(|l| vars.var(format!("{l}_{}", k + 1)))
                .collect();
            atoms.extend(args.iter().map(|&v| NcAtom::EqConst(v, 0)));
            let pred = self.loc(t, &def.start);
            body.push(Atom { pred, args });
        }
        let mut r = MsrRule::new(vec![Atom { pred: init, args: vec![] }], body, NcConstraint::new(atoms));
        r.names = vars.names;
        r.origin = format!("initial pool: {}", self.prog.pool.join(", "));
        self.rules.insert(0, r);
    }
}

pub fn translate(p: &Program) -> Result<Translation, Vec<Diagnostic>> {
    translate_with(p, TranslateOptions::default())
}

pub fn translate_with(p: &Program, opts: TranslateOptions) -> Result<Translation, Vec<Diagnostic>> {
    let diags = validate(p);
    if !diags.is_empty() {
        return Err(diags);
    }
    let mut sig = Signature::new();
    let init = sig.intern("init", 0).unwrap();
    let fresh = sig.intern("fresh", 1).unwrap();
    let mut table = SymbolTable {
        constants: p
            .constants
            .iter()
            .map(|c| (c.clone(), p.constant_image(c).unwrap()))
            .collect(),
        prime: "'".into(),
        ..SymbolTable::default()
    };
    let mut taken: BTreeSet<String> = RESERVED_PREDICATES.iter().map(|s| s.to_string()).collect();
    let mut loc_preds = Vec::new();
    for t in &p.threads {
        let mut preds = Vec::new();
        for l in t.locations() {
            let mut name = l.to_string();
            if RESERVED_PREDICATES.contains(&l) {
                name.push_str("_loc");
            }
            while !taken.insert(name.clone()) {
                name.push('_');
            }
            preds.push(sig.intern(&name, t.locals.len()).unwrap());
            table.locations.push(LocationEntry {
                thread: t.name.clone(),
                location: l.to_string(),
                predicate: name,
                arity: t.locals.len(),
            });
        }
        loc_preds.push(preds);
        table.locals.push((t.name.clone(), t.locals.clone()));
    }

    let mut c = Compiler {
        prog: p,
        table,
        sig,
        loc_preds,
        fresh,
        rules: Vec::new(),
        opts,
    };
    for t in 0..p.threads.len() {
        for r in &p.threads[t].rules {
            c.local_rule(t, r);
        }
    }
    c.table.c_max = c
        .rules
        .iter()
        .flat_map(|r| r.constraint.constants())
        .max()
        .unwrap_or(0)
        .max(0);
    c.init_rule(init);

    let spec = MsrSpec {
        sig: c.sig,
        initials: vec![GroundConfig::new(vec![GroundAtom {
            pred: init,
            args: vec![],
        }])],
        rules: c.rules,
    };
    Ok(Translation {
        spec,
        table: c.table,
        loc_preds: c.loc_preds,
        fresh,
        init,
    })
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProjectError {
    #[error("expected exactly one `fresh` atom, found {0}")]
    FreshCount(usize),
    #[error("predicate `{0}` is not a thread location")]
    NotALocation(String),
    #[error("value {0} has no name")]
    Unmapped(Value),
}

impl Translation {
    pub fn fresh_pred(&self) -> PredId {
        self.fresh
    }

    pub fn init_pred(&self) -> PredId {
        self.init
    }

    pub fn location_pred(&self, thread: usize, loc: usize) -> PredId {
        self.loc_preds[thread][loc]
    }

    /// Thread and location index of a location predicate.
    pub fn location_of(&self, p: PredId) -> Option<(usize, usize)> {
        self.loc_preds.iter().enumerate().find_map(|(t, ps)| {
            ps.iter().position(|&q| q == p).map(|l| (t, l))
        })
    }

    /// `G•(h)`: one atom per thread plus `fresh(v)` with `v` one above the
    /// largest image of a used name.
    pub fn embed(&self, g: &GlobalConfig, h: &dyn Fn(Value) -> Value) -> GroundConfig {
        let top = g.used.iter().map(|&v| h(v)).max().unwrap_or_default();
        let mut atoms: Vec<GroundAtom> = g
            .pool
            .iter()
            .map(|p| GroundAtom {
                pred: self.loc_preds[p.thread][p.loc],
                args: p.vals.iter().map(|&v| h(v)).collect(),
            })
            .collect();
        atoms.push(GroundAtom {
            pred: self.fresh,
            args: vec![top + int(1)],
        });
        GroundConfig::new(atoms)
    }

    /// `M•(f)`: drops `fresh` and reads every other atom as a thread.
    /// Used names are the constants plus the images of `f`.
    pub fn project(
        &self,
        m: &GroundConfig,
        f: &dyn Fn(Value) -> Option<Value>,
    ) -> Result<GlobalConfig, ProjectError> {
        let fresh = m.atoms().iter().filter(|a| a.pred == self.fresh).count();
        if fresh != 1 {
            return Err(ProjectError::FreshCount(fresh));
        }
        let mut used: BTreeSet<Value> = (0..=self.table.constants.len() as i64).map(int).collect();
        let mut pool = Vec::new();
        for a in m.atoms().iter().filter(|a| a.pred != self.fresh) {
            let (thread, loc) = self
                .location_of(a.pred)
                .ok_or_else(|| ProjectError::NotALocation(self.spec.sig.name(a.pred).into()))?;
            let mut vals = Vec::new();
            for &v in &a.args {
                let n = f(v).ok_or(ProjectError::Unmapped(v))?;
                used.insert(n);
                vals.push(n);
            }
            pool.push(LocalConfig { thread, loc, vals });
        }
        Ok(GlobalConfig::new(used, pool))
    }

    /// Projection that keeps anchor values and numbers the other values
    /// upwards from the first name above the constants, in order.
    pub fn project_ranked(&self, m: &GroundConfig) -> Result<GlobalConfig, ProjectError> {
        let anchors = self.spec.anchors();
        let base = self.table.constants.len() as i64;
        let others: Vec<Value> = m
            .atoms()
            .iter()
            .filter(|a| a.pred != self.fresh)
            .flat_map(|a| a.args.iter().copied())
            .filter(|v| !anchors.contains(v))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        self.project(m, &|v| {
            if anchors.contains(&v) {
                Some(v)
            } else {
                others
                    .iter()
                    .position(|&o| o == v)
                    .map(|k| int(base + 1 + k as i64))
            }
        })
    }
}
