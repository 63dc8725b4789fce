//! Concrete semantics of thread definition programs.
//!
//! Names are rationals: `bot` is 0 and the i-th constant is `i`. Fresh names
//! are `max(used) + 1`, so every run is reproducible.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::tdl::{validate, Action, Diagnostic, Expr, GuardAtom, Program};
use crate::value::{int, Value};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalConfig {
    pub thread: usize,
    pub loc: usize,
    pub vals: Vec<Value>,
}

/// Used names plus a pool of local configurations kept sorted, so equal
/// multisets compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GlobalConfig {
    pub used: BTreeSet<Value>,
    pub pool: Vec<LocalConfig>,
}

impl GlobalConfig {
    pub fn new(used: BTreeSet<Value>, mut pool: Vec<LocalConfig>) -> Self {
        pool.sort();
        GlobalConfig { used, pool }
    }

    fn fresh_name(&self) -> Value {
        self.used.iter().next_back().copied().unwrap_or_default() + int(1)
    }
}

/// Which rule (or pair of rules, for a rendezvous) produced a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    Local { thread: usize, rule: usize },
    Rendezvous { sender: (usize, usize), receiver: (usize, usize) },
}

#[derive(Clone, Debug)]
enum CExpr {
    Local(usize),
    Received(usize),
    Val(Value),
}

#[derive(Clone, Debug)]
struct CGuard {
    left: CExpr,
    right: CExpr,
    equal: bool,
}

#[derive(Clone, Debug)]
enum CKind {
    Internal {
        guard: Vec<CGuard>,
        assign: Vec<(usize, CExpr)>,
    },
    NewName(usize),
    Spawn {
        child: usize,
        init: Vec<CExpr>,
        assign: Vec<(usize, CExpr)>,
    },
    Send {
        chan: CExpr,
        tpl: Vec<usize>,
        guard: Vec<CGuard>,
        assign: Vec<(usize, CExpr)>,
    },
    Receive {
        chan: CExpr,
        arity: usize,
        guard: Vec<CGuard>,
        assign: Vec<(usize, CExpr)>,
    },
}

#[derive(Clone, Debug)]
struct CRule {
    src: usize,
    dst: usize,
    kind: CKind,
}

#[derive(Clone, Debug)]
struct CThread {
    locations: Vec<String>,
    start: usize,
    rules: Vec<CRule>,
}

fn eval(e: &CExpr, locals: &[Value], received: &[Value]) -> Value {
    match *e {
        CExpr::Local(i) => locals[i],
        CExpr::Received(i) => received[i],
        CExpr::Val(v) => v,
    }
}

fn holds(g: &[CGuard], locals: &[Value], received: &[Value]) -> bool {
    g.iter()
        .all(|a| (eval(&a.left, locals, received) == eval(&a.right, locals, received)) == a.equal)
}

fn apply(assign: &[(usize, CExpr)], locals: &[Value], received: &[Value]) -> Vec<Value> {
    let mut out = locals.to_vec();
    for (t, e) in assign {
        out[*t] = eval(e, locals, received);
    }
    out
}

/// Exploration strategy for [`Interpreter::run_bounded`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Every configuration within the depth. `canonical` merges configurations
    /// that differ only by a renaming of generated names.
    Exhaustive { canonical: bool },
    /// One run, choosing uniformly among successors.
    Random { seed: u64 },
}

/// Configurations found by a bounded search, with the step that first reached
/// each one.
#[derive(Clone, Debug, Default)]
pub struct Exploration {
    pub configs: Vec<GlobalConfig>,
    pub parent: Vec<Option<(usize, Step)>>,
    pub depth: Vec<usize>,
}

impl Exploration {
    fn push(&mut self, g: GlobalConfig, parent: Option<(usize, Step)>, depth: usize) -> usize {
        self.configs.push(g);
        self.parent.push(parent);
        self.depth.push(depth);
        self.configs.len() - 1
    }

    /// Configurations from the root to `idx`, each with the step entering it.
    pub fn trace(&self, mut idx: usize) -> Vec<(Option<Step>, &GlobalConfig)> {
        let mut out = vec![];
        loop {
            match self.parent[idx] {
                Some((p, s)) => {
                    out.push((Some(s), &self.configs[idx]));
                    idx = p;
                }
                None => {
                    out.push((None, &self.configs[idx]));
                    break;
                }
            }
        }
        out.reverse();
        out
    }
}

#[derive(Clone, Debug)]
pub struct BoundExceeded {
    pub partial: Exploration,
    pub reason: String,
}

pub struct Interpreter<'p> {
    prog: &'p Program,
    threads: Vec<CThread>,
    pool: Vec<usize>,
}

impl<'p> Interpreter<'p> {
    /// Fails with the validation diagnostics when the program is ill-formed.
    pub fn new(prog: &'p Program) -> Result<Self, Vec<Diagnostic>> {
        let diags = validate(prog);
        if !diags.is_empty() {
            return Err(diags);
        }
        let threads = prog.threads.iter().map(|t| compile_thread(prog, t)).collect();
        let pool = prog
            .pool
            .iter()
            .map(|n| prog.thread_index(n).unwrap())
            .collect();
        Ok(Interpreter {
            prog,
            threads,
            pool,
        })
    }

    pub fn program(&self) -> &Program {
        self.prog
    }

    fn base_names(&self) -> BTreeSet<Value> {
        (0..=self.prog.constants.len() as i64).map(int).collect()
    }

    pub fn initial_config(&self) -> GlobalConfig {
        let pool = self
            .pool
            .iter()
            .map(|&t| LocalConfig {
                thread: t,
                loc: self.threads[t].start,
                vals: vec![Value::default(); self.prog.threads[t].locals.len()],
            })
            .collect();
        GlobalConfig::new(self.base_names(), pool)
    }

    /// All one-step successors, in a deterministic order.
    pub fn successors(&self, g: &GlobalConfig) -> Vec<(Step, GlobalConfig)> {
        let mut out = Vec::new();
        for (i, p) in g.pool.iter().enumerate() {
            if i > 0 && g.pool[i - 1] == *p {
                continue;
            }
            let th = &self.threads[p.thread];
            for (ri, r) in th.rules.iter().enumerate() {
                if r.src != p.loc {
                    continue;
                }
                let step = Step::Local {
                    thread: p.thread,
                    rule: ri,
                };
                let moved = |vals: Vec<Value>| LocalConfig {
                    thread: p.thread,
                    loc: r.dst,
                    vals,
                };
                match &r.kind {
                    CKind::Internal { guard, assign } => {
                        if holds(guard, &p.vals, &[]) {
                            let q = moved(apply(assign, &p.vals, &[]));
                            out.push((step, replace(g, &[i], vec![q], None)));
                        }
                    }
                    CKind::NewName(x) => {
                        let n = g.fresh_name();
                        let mut vals = p.vals.clone();
                        vals[*x] = n;
                        out.push((step, replace(g, &[i], vec![moved(vals)], Some(n))));
                    }
                    CKind::Spawn {
                        child,
                        init,
                        assign,
                    } => {
                        let q = LocalConfig {
                            thread: *child,
                            loc: self.threads[*child].start,
                            vals: init.iter().map(|e| eval(e, &p.vals, &[])).collect(),
                        };
                        let me = moved(apply(assign, &p.vals, &[]));
                        out.push((step, replace(g, &[i], vec![me, q], None)));
                    }
                    CKind::Send {
                        chan,
                        tpl,
                        guard,
                        assign,
                    } => {
                        if !holds(guard, &p.vals, &[]) {
                            continue;
                        }
                        let ch = eval(chan, &p.vals, &[]);
                        let msg: Vec<Value> = tpl.iter().map(|&k| p.vals[k]).collect();
                        let me = moved(apply(assign, &p.vals, &[]));
                        self.receivers(g, i, ch, &msg, |j, recv, qv| {
                            let s = Step::Rendezvous {
                                sender: (p.thread, ri),
                                receiver: recv,
                            };
                            out.push((s, replace(g, &[i, j], vec![me.clone(), qv], None)));
                        });
                    }
                    CKind::Receive { .. } => {}
                }
            }
        }
        out
    }

    fn receivers(
        &self,
        g: &GlobalConfig,
        sender: usize,
        ch: Value,
        msg: &[Value],
        mut emit: impl FnMut(usize, (usize, usize), LocalConfig),
    ) {
        for (j, q) in g.pool.iter().enumerate() {
            if j == sender || (j > 0 && g.pool[j - 1] == *q && j - 1 != sender) {
                continue;
            }
            for (ri, r) in self.threads[q.thread].rules.iter().enumerate() {
                let CKind::Receive {
                    chan,
                    arity,
                    guard,
                    assign,
                } = &r.kind
                else {
                    continue;
                };
                if r.src != q.loc || *arity != msg.len() || eval(chan, &q.vals, &[]) != ch {
                    continue;
                }
                if !holds(guard, &q.vals, msg) {
                    continue;
                }
                let qv = LocalConfig {
                    thread: q.thread,
                    loc: r.dst,
                    vals: apply(assign, &q.vals, msg),
                };
                emit(j, (q.thread, ri), qv);
            }
        }
    }

    /// Replaces generated names by their rank above the constants and drops
    /// used names no thread holds. Equal results mean the configurations
    /// behave identically up to renaming.
    pub fn canonical(&self, g: &GlobalConfig) -> GlobalConfig {
        let m = self.prog.constants.len() as i64;
        let fixed = |v: &Value| v.is_integer() && *v >= int(0) && *v <= int(m);
        let others: BTreeSet<Value> = g
            .pool
            .iter()
            .flat_map(|p| p.vals.iter().copied())
            .filter(|v| !fixed(v))
            .collect();
        let rank: HashMap<Value, Value> = others
            .iter()
            .enumerate()
            .map(|(k, &v)| (v, int(m + 1 + k as i64)))
            .collect();
        let pool = g
            .pool
            .iter()
            .map(|p| LocalConfig {
                thread: p.thread,
                loc: p.loc,
                vals: p.vals.iter().map(|v| rank.get(v).copied().unwrap_or(*v)).collect(),
            })
            .collect();
        let mut used = self.base_names();
        used.extend(rank.values().copied());
        GlobalConfig::new(used, pool)
    }

    pub fn run_bounded(
        &self,
        depth: usize,
        mode: Mode,
        max_configs: usize,
    ) -> Result<Exploration, BoundExceeded> {
        match mode {
            Mode::Random { seed } => Ok(self.random_run(depth, seed)),
            Mode::Exhaustive { canonical } => self.bfs(depth, canonical, max_configs),
        }
    }

    fn random_run(&self, depth: usize, seed: u64) -> Exploration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ex = Exploration::default();
        let mut cur = ex.push(self.initial_config(), None, 0);
        for d in 1..=depth {
            let succ = self.successors(&ex.configs[cur]);
            let Some((s, g)) = succ.choose(&mut rng) else {
                break;
            };
            cur = ex.push(g.clone(), Some((cur, *s)), d);
        }
        ex
    }

    fn bfs(
        &self,
        depth: usize,
        canonical: bool,
        max_configs: usize,
    ) -> Result<Exploration, BoundExceeded> {
        let norm = |g: GlobalConfig| if canonical { self.canonical(&g) } else { g };
        let mut ex = Exploration::default();
        let mut seen: HashMap<GlobalConfig, usize> = HashMap::new();
        let g0 = norm(self.initial_config());
        seen.insert(g0.clone(), 0);
        ex.push(g0, None, 0);
        let mut frontier = vec![0usize];
        for d in 1..=depth {
            let mut next = Vec::new();
            for &i in &frontier {
                for (s, g) in self.successors(&ex.configs[i]) {
                    let g = norm(g);
                    if seen.contains_key(&g) {
                        continue;
                    }
                    if ex.configs.len() >= max_configs {
                        return Err(BoundExceeded {
                            partial: ex,
                            reason: format!("more than {max_configs} configurations within depth {depth}"),
                        });
                    }
                    let k = ex.push(g.clone(), Some((i, s)), d);
                    seen.insert(g, k);
                    next.push(k);
                }
            }
            frontier = next;
        }
        Ok(ex)
    }

    /// One line: `N={0,1,4} | Main.init_M(0) | Init.gen_A(2,4,0)`.
    pub fn format_config(&self, g: &GlobalConfig) -> String {
        let names: Vec<String> = g.used.iter().map(|v| v.to_string()).collect();
        let mut s = format!("N={{{}}}", names.join(","));
        for p in &g.pool {
            let vals: Vec<String> = p.vals.iter().map(|v| v.to_string()).collect();
            let _ = write!(
                s,
                " | {}.{}({})",
                self.prog.threads[p.thread].name,
                self.threads[p.thread].locations[p.loc],
                vals.join(",")
            );
        }
        s
    }

    pub fn describe_step(&self, s: &Step) -> String {
        let rule = |(t, r): (usize, usize)| {
            format!("{}: {}", self.prog.threads[t].name, self.prog.threads[t].rules[r])
        };
        match *s {
            Step::Local { thread, rule: r } => rule((thread, r)),
            Step::Rendezvous { sender, receiver } => {
                format!("{} || {}", rule(sender), rule(receiver))
            }
        }
    }

    pub fn location_name(&self, thread: usize, loc: usize) -> &str {
        &self.threads[thread].locations[loc]
    }

    pub fn location_index(&self, thread: usize, name: &str) -> Option<usize> {
        self.threads[thread].locations.iter().position(|l| l == name)
    }
}

fn replace(g: &GlobalConfig, remove: &[usize], add: Vec<LocalConfig>, name: Option<Value>) -> GlobalConfig {
    let mut pool: Vec<LocalConfig> = g
        .pool
        .iter()
        .enumerate()
        .filter(|(k, _)| !remove.contains(k))
        .map(|(_, p)| p.clone())
        .collect();
    pool.extend(add);
    let mut used = g.used.clone();
    used.extend(name);
    GlobalConfig::new(used, pool)
}

fn compile_thread(prog: &Program, t: &crate::tdl::ThreadDef) -> CThread {
    let locations: Vec<String> = t.locations().into_iter().map(String::from).collect();
    let loc = |n: &str| locations.iter().position(|l| l == n).unwrap();
    let expr = |e: &Expr, tpl: &[String]| match e {
        Expr::Bottom => CExpr::Val(int(0)),
        Expr::Const(c) => CExpr::Val(int(prog.constant_image(c).unwrap())),
        Expr::Var(v) => match t.local_index(v) {
            Some(i) => CExpr::Local(i),
            None => CExpr::Received(tpl.iter().position(|w| w == v).unwrap()),
        },
    };
    let guard = |g: &crate::tdl::Guard, tpl: &[String]| -> Vec<CGuard> {
        g.0.iter()
            .filter_map(|a| match a {
                GuardAtom::True => None,
                GuardAtom::Eq(x, e) | GuardAtom::Neq(x, e) => Some(CGuard {
                    left: expr(&Expr::Var(x.clone()), tpl),
                    right: expr(e, tpl),
                    equal: matches!(a, GuardAtom::Eq(..)),
                }),
            })
            .collect()
    };
    let assign = |a: &crate::tdl::Assignment, tpl: &[String]| -> Vec<(usize, CExpr)> {
        a.0.iter()
            .filter_map(|(x, e)| t.local_index(x).map(|i| (i, expr(e, tpl))))
            .collect()
    };
    let rules = t
        .rules
        .iter()
        .map(|r| {
            let kind = match &r.action {
                Action::Internal { guard: g, assign: a, .. } => CKind::Internal {
                    guard: guard(g, &[]),
                    assign: assign(a, &[]),
                },
                Action::NewName { var, .. } => CKind::NewName(t.local_index(var).unwrap()),
                Action::Spawn { thread, assign: a, .. } => {
                    let child = prog.thread(thread).unwrap();
                    let init = child
                        .locals
                        .iter()
                        .map(|w| expr(a.get(w).unwrap(), &[]))
                        .collect();
                    let own = a
                        .0
                        .iter()
                        .filter(|(x, _)| !child.locals.contains(x))
                        .filter_map(|(x, e)| t.local_index(x).map(|i| (i, expr(e, &[]))))
                        .collect();
                    CKind::Spawn {
                        child: prog.thread_index(thread).unwrap(),
                        init,
                        assign: own,
                    }
                }
                Action::Send {
                    channel,
                    template,
                    guard: g,
                    assign: a,
                } => CKind::Send {
                    chan: expr(channel, &[]),
                    tpl: template.iter().map(|v| t.local_index(v).unwrap()).collect(),
                    guard: guard(g, &[]),
                    assign: assign(a, &[]),
                },
                Action::Receive {
                    channel,
                    template,
                    guard: g,
                    assign: a,
                } => CKind::Receive {
                    chan: expr(channel, &[]),
                    arity: template.len(),
                    guard: guard(g, template),
                    assign: assign(a, template),
                },
            };
            CRule {
                src: loc(&r.source),
                dst: loc(&r.target),
                kind,
            }
        })
        .collect();
    CThread {
        start: loc(&t.start),
        locations,
        rules,
    }
}
