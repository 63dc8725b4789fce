//! Oracles and generators shared by the integration tests. Nothing here
//! calls the decision procedures under test.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdlv::msr::{Atom, GroundAtom, GroundConfig, MsrRule, MsrSpec, PredId, Signature};
use tdlv::nc::{NcAtom, NcConstraint, VarId};
use tdlv::symbolic::ConstrainedConfig;
use tdlv::tdl::{parse_program, validate, Program};
use tdlv::value::int;
use tdlv::Value;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Total preorders

#[derive(Clone, Debug)]
enum Level {
    Const(i64, Vec<VarId>),
    Free(Vec<VarId>),
}

fn valuation(levels: &[Level]) -> BTreeMap<VarId, Value> {
    let mut out = BTreeMap::new();
    let consts: Vec<(usize, i64)> = levels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| match l {
            Level::Const(c, _) => Some((i, *c)),
            Level::Free(_) => None,
        })
        .collect();
    let mut i = 0;
    while i < levels.len() {
        match &levels[i] {
            Level::Const(c, vs) => {
                for v in vs {
                    out.insert(*v, int(*c));
                }
                i += 1;
            }
            Level::Free(_) => {
                let mut j = i;
                while j < levels.len() && matches!(levels[j], Level::Free(_)) {
                    j += 1;
                }
                let k = (j - i) as i64;
                let lo = consts.iter().rev().find(|(p, _)| *p < i).map(|(_, c)| *c);
                let hi = consts.iter().find(|(p, _)| *p >= j).map(|(_, c)| *c);
                for (n, l) in levels[i..j].iter().enumerate() {
                    let n = n as i64;
                    let val = match (lo, hi) {
                        (Some(a), Some(b)) => int(a) + (int(b) - int(a)) * Value::new(n + 1, k + 1),
                        (Some(a), None) => int(a + n + 1),
                        (None, Some(b)) => int(b - (k - n)),
                        (None, None) => int(n),
                    };
                    if let Level::Free(vs) = l {
                        for v in vs {
                            out.insert(*v, val);
                        }
                    }
                }
                i = j;
            }
        }
    }
    out
}

fn insert_all(levels: &mut Vec<Level>, vars: &[VarId], f: &mut dyn FnMut(&BTreeMap<VarId, Value>) -> bool) -> bool {
    let Some((&v, rest)) = vars.split_first() else {
        return f(&valuation(levels));
    };
    for i in 0..levels.len() {
        match &mut levels[i] {
            Level::Const(_, vs) | Level::Free(vs) => vs.push(v),
        }
        let go = insert_all(levels, rest, f);
        match &mut levels[i] {
            Level::Const(_, vs) | Level::Free(vs) => {
                vs.pop();
            }
        }
        if !go {
            return false;
        }
    }
    for gap in 0..=levels.len() {
        levels.insert(gap, Level::Free(vec![v]));
        let go = insert_all(levels, rest, f);
        levels.remove(gap);
        if !go {
            return false;
        }
    }
    true
}

/// Calls `f` with one valuation per total preorder of `vars` and `consts`
/// that respects the order of the constants. Stops when `f` returns false;
/// the result tells whether the enumeration ran to the end.
pub fn for_each_order_type(
    vars: &[VarId],
    consts: &BTreeSet<i64>,
    f: &mut dyn FnMut(&BTreeMap<VarId, Value>) -> bool,
) -> bool {
    let mut levels: Vec<Level> = consts.iter().map(|c| Level::Const(*c, Vec::new())).collect();
    insert_all(&mut levels, vars, f)
}

/// Like [`for_each_order_type`], keeping the order type of `base` on its
/// variables and placing `extra` around it.
pub fn for_each_extension(
    base: &BTreeMap<VarId, Value>,
    extra: &[VarId],
    consts: &BTreeSet<i64>,
    f: &mut dyn FnMut(&BTreeMap<VarId, Value>) -> bool,
) -> bool {
    let mut points: BTreeMap<Value, (Option<i64>, Vec<VarId>)> = BTreeMap::new();
    for c in consts {
        points.entry(int(*c)).or_default().0 = Some(*c);
    }
    for (v, x) in base {
        points.entry(*x).or_default().1.push(*v);
    }
    let mut levels: Vec<Level> = points
        .into_values()
        .map(|(c, vs)| match c {
            Some(c) => Level::Const(c, vs),
            None => Level::Free(vs),
        })
        .collect();
    insert_all(&mut levels, extra, f)
}

pub fn holds(c: &NcConstraint, val: &BTreeMap<VarId, Value>) -> bool {
    *c != NcConstraint::falsity() && c.atoms().iter().all(|a| a.eval(&|v| val.get(&v).copied()) == Some(true))
}

fn atom_constants(c: &NcConstraint) -> BTreeSet<i64> {
    c.atoms().iter().filter_map(|a| a.constant()).collect()
}

fn atom_vars(c: &NcConstraint) -> BTreeSet<VarId> {
    c.atoms().iter().flat_map(|a| a.vars()).collect()
}

pub fn oracle_sat(c: &NcConstraint) -> bool {
    let vars: Vec<VarId> = atom_vars(c).into_iter().collect();
    let mut found = false;
    for_each_order_type(&vars, &atom_constants(c), &mut |val| {
        found = holds(c, val);
        !found
    });
    found
}

pub fn oracle_entails(a: &NcConstraint, b: &NcConstraint) -> bool {
    let vars: Vec<VarId> = atom_vars(a).union(&atom_vars(b)).copied().collect();
    let consts: BTreeSet<i64> = atom_constants(a).union(&atom_constants(b)).copied().collect();
    for_each_order_type(&vars, &consts, &mut |val| !holds(a, val) || holds(b, val))
}

/// `projected` is equivalent to `∃ gone. c`.
pub fn oracle_eliminated(c: &NcConstraint, gone: &BTreeSet<VarId>, projected: &NcConstraint) -> Result<(), String> {
    if projected.atoms().iter().flat_map(|a| a.vars()).any(|v| gone.contains(&v)) {
        return Err("eliminated variable survives".into());
    }
    let all: BTreeSet<VarId> = atom_vars(c).union(&atom_vars(projected)).copied().collect();
    let kept: Vec<VarId> = all.iter().filter(|v| !gone.contains(v)).copied().collect();
    let dropped: Vec<VarId> = all.iter().filter(|v| gone.contains(v)).copied().collect();
    let consts: BTreeSet<i64> = atom_constants(c).union(&atom_constants(projected)).copied().collect();
    let all_v: Vec<VarId> = all.iter().copied().collect();
    let mut err = None;
    for_each_order_type(&all_v, &consts, &mut |val| {
        if holds(c, val) && !holds(projected, val) {
            err = Some(format!("solution {val:?} of the input is lost"));
        }
        err.is_none()
    });
    if let Some(e) = err {
        return Err(e);
    }
    for_each_order_type(&kept, &consts, &mut |val| {
        if holds(projected, val) {
            let mut extends = false;
            for_each_extension(val, &dropped, &consts, &mut |ext| {
                extends = holds(c, ext);
                !extends
            });
            if !extends {
                err = Some(format!("solution {val:?} of the projection does not extend"));
            }
        }
        err.is_none()
    });
    err.map_or(Ok(()), Err)
}

pub fn random_nc_atom(r: &mut impl Rng, nvars: u32, max_const: i64) -> NcAtom {
    let x = VarId(r.random_range(0..nvars));
    let mut y = VarId(r.random_range(0..nvars));
    if nvars > 1 {
        while y == x {
            y = VarId(r.random_range(0..nvars));
        }
    }
    let c = r.random_range(0..=max_const);
    match r.random_range(0..10) {
        0..=1 if nvars > 1 => NcAtom::Eq(x, y),
        0..=4 if nvars > 1 => NcAtom::Gt(x, y),
        0..=5 => NcAtom::EqConst(x, c),
        6..=8 => NcAtom::GtConst(x, c),
        _ => NcAtom::LtConst(x, c),
    }
}

pub fn random_nc(r: &mut impl Rng, nvars: u32, max_atoms: usize, max_const: i64) -> NcConstraint {
    let n = r.random_range(0..=max_atoms);
    NcConstraint::new((0..n).map(|_| random_nc_atom(r, nvars, max_const)))
}

// ---------------------------------------------------------------------------
// Ground semantics of rewriting

/// Injective placements of `atoms` into the atoms of `g`.
pub fn placements(atoms: &[Atom], g: &GroundConfig, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn go(i: usize, atoms: &[Atom], g: &GroundConfig, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if i == atoms.len() {
            return f(pick);
        }
        for (j, b) in g.atoms().iter().enumerate() {
            if pick.contains(&j) || b.pred != atoms[i].pred || b.args.len() != atoms[i].args.len() {
                continue;
            }
            pick.push(j);
            let go_on = go(i + 1, atoms, g, pick, f);
            pick.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    go(0, atoms, g, &mut Vec::new(), f)
}

/// Binds the variables of `atoms` placed at `pick`; `None` if a repeated
/// variable meets two values.
pub fn bind(atoms: &[Atom], g: &GroundConfig, pick: &[usize]) -> Option<BTreeMap<VarId, Value>> {
    let mut val = BTreeMap::new();
    for (a, &j) in atoms.iter().zip(pick) {
        for (v, x) in a.args.iter().zip(&g.atoms()[j].args) {
            if let Some(old) = val.insert(*v, *x) {
                if old != *x {
                    return None;
                }
            }
        }
    }
    Some(val)
}

pub fn oracle_member(g: &GroundConfig, c: &ConstrainedConfig) -> bool {
    let mut found = false;
    placements(c.atoms(), g, &mut |pick| {
        if let Some(val) = bind(c.atoms(), g, pick) {
            found = holds(c.constraint(), &val);
        }
        !found
    });
    found
}

/// Thirds from -1 to 7: enough distinct points around the integers 0..6 to
/// realise every order type of two extra variables.
pub fn value_grid() -> Vec<Value> {
    (-3..=21).map(|k| Value::new(k, 3)).collect()
}

fn assignments(vars: &[VarId], grid: &[Value], val: &mut BTreeMap<VarId, Value>, f: &mut dyn FnMut(&BTreeMap<VarId, Value>) -> bool) -> bool {
    let Some((&v, rest)) = vars.split_first() else {
        return f(val);
    };
    for x in grid {
        val.insert(v, *x);
        if !assignments(rest, grid, val, f) {
            val.remove(&v);
            return false;
        }
    }
    val.remove(&v);
    true
}

/// `g` has a one-step successor inside `⟦targets⟧`. Variables that only the
/// right-hand side or the constraint mention range over [`value_grid`].
pub fn oracle_in_pre(rules: &[MsrRule], g: &GroundConfig, targets: &[ConstrainedConfig]) -> bool {
    let grid = value_grid();
    for r in rules {
        let head_vars: BTreeSet<VarId> = r.head.iter().flat_map(|a| a.args.iter().copied()).collect();
        let free: Vec<VarId> = r
            .body
            .iter()
            .flat_map(|a| a.args.iter().copied())
            .chain(r.constraint.atoms().iter().flat_map(|a| a.vars()))
            .filter(|v| !head_vars.contains(v))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut found = false;
        placements(&r.head, g, &mut |pick| {
            let Some(mut val) = bind(&r.head, g, pick) else {
                return true;
            };
            let rest: Vec<GroundAtom> = g
                .atoms()
                .iter()
                .enumerate()
                .filter(|(j, _)| !pick.contains(j))
                .map(|(_, a)| a.clone())
                .collect();
            assignments(&free, &grid, &mut val, &mut |val| {
                if holds(&r.constraint, val) {
                    let mut next = rest.clone();
                    next.extend(r.body.iter().map(|a| GroundAtom {
                        pred: a.pred,
                        args: a.args.iter().map(|v| val[v]).collect(),
                    }));
                    let next = GroundConfig::new(next);
                    found = targets.iter().any(|t| oracle_member(&next, t));
                }
                !found
            });
            !found
        });
        if found {
            return true;
        }
    }
    false
}

pub struct SmallSpec {
    pub spec: MsrSpec,
    pub targets: Vec<ConstrainedConfig>,
}

fn random_atom(r: &mut impl Rng, sig: &Signature, vars: &mut Vec<VarId>, fresh_budget: &mut usize, next: &mut u32) -> Atom {
    let preds: Vec<PredId> = sig.preds().collect();
    let pred = preds[r.random_range(0..preds.len())];
    let args = (0..sig.arity(pred))
        .map(|_| {
            if !vars.is_empty() && (*fresh_budget == 0 || r.random_bool(0.5)) {
                vars[r.random_range(0..vars.len())]
            } else {
                *fresh_budget = fresh_budget.saturating_sub(1);
                let v = VarId(*next);
                *next += 1;
                vars.push(v);
                v
            }
        })
        .collect();
    Atom { pred, args }
}

/// At most four rules over predicates of arity at most two, each rule with
/// at most two variables that its left-hand side does not bind.
pub fn random_small_spec(seed: u64) -> SmallSpec {
    let mut r = rng(seed);
    let mut sig = Signature::new();
    let npreds = r.random_range(1..=3);
    for i in 0..npreds {
        sig.intern(&format!("p{i}"), r.random_range(0..=2)).unwrap();
    }
    let mut rules = Vec::new();
    for _ in 0..r.random_range(1..=4) {
        let mut next = 0;
        let mut vars = Vec::new();
        let mut unlimited = usize::MAX;
        let head: Vec<Atom> = (0..r.random_range(1..=2))
            .map(|_| random_atom(&mut r, &sig, &mut vars, &mut unlimited, &mut next))
            .collect();
        let mut budget = 2;
        let body: Vec<Atom> = (0..r.random_range(0..=2))
            .map(|_| random_atom(&mut r, &sig, &mut vars, &mut budget, &mut next))
            .collect();
        let n = vars.len() as u32;
        let constraint = if n == 0 {
            NcConstraint::truth()
        } else {
            let c = random_nc(&mut r, n, 3, 4);
            let map: Vec<VarId> = vars.clone();
            c.rename_unchecked(&mut |v| map[v.0 as usize])
        };
        rules.push(MsrRule::new(head, body, constraint));
    }
    let mut targets = Vec::new();
    for _ in 0..r.random_range(1..=2) {
        let mut next = 0;
        let mut vars = Vec::new();
        let mut unlimited = usize::MAX;
        let atoms: Vec<Atom> = (0..r.random_range(1..=2))
            .map(|_| random_atom(&mut r, &sig, &mut vars, &mut unlimited, &mut next))
            .collect();
        let n = vars.len() as u32;
        let c = if n == 0 {
            NcConstraint::truth()
        } else {
            let map = vars.clone();
            random_nc(&mut r, n, 2, 4).rename_unchecked(&mut |v| map[v.0 as usize])
        };
        if let Some(t) = ConstrainedConfig::new(atoms, c) {
            targets.push(t);
        }
    }
    SmallSpec {
        spec: MsrSpec {
            sig,
            initials: Vec::new(),
            rules,
        },
        targets,
    }
}

/// Ground configurations of at most three atoms with values in 0..6. Half
/// of them instantiate a left-hand side so that firing is possible.
pub fn random_ground_configs(spec: &MsrSpec, seed: u64, count: usize) -> Vec<GroundConfig> {
    let mut r = rng(seed);
    let preds: Vec<PredId> = spec.sig.preds().collect();
    let random_atom = |r: &mut ChaCha8Rng| {
        let p = preds[r.random_range(0..preds.len())];
        GroundAtom {
            pred: p,
            args: (0..spec.sig.arity(p)).map(|_| int(r.random_range(0..=6))).collect(),
        }
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut atoms = Vec::new();
        if r.random_bool(0.5) && !spec.rules.is_empty() {
            let rule = &spec.rules[r.random_range(0..spec.rules.len())];
            let mut val = BTreeMap::new();
            for a in &rule.head {
                atoms.push(GroundAtom {
                    pred: a.pred,
                    args: a
                        .args
                        .iter()
                        .map(|v| *val.entry(*v).or_insert_with(|| int(r.random_range(0..=6))))
                        .collect(),
                });
            }
        }
        let extra = r.random_range(0..=3usize.saturating_sub(atoms.len()));
        for _ in 0..extra {
            atoms.push(random_atom(&mut r));
        }
        out.push(GroundConfig::new(atoms));
    }
    out
}

/// Replaces every value by its rank among the distinct values, 0 kept as 0.
pub fn ranks(g: &GroundConfig) -> Vec<(PredId, Vec<usize>)> {
    let mut vals: Vec<Value> = g.atoms().iter().flat_map(|a| a.args.iter().copied()).collect();
    vals.push(int(0));
    vals.sort();
    vals.dedup();
    let base = vals.iter().position(|v| *v == int(0)).unwrap();
    let mut out: Vec<(PredId, Vec<usize>)> = g
        .atoms()
        .iter()
        .map(|a| {
            let r = a.args.iter().map(|x| vals.iter().position(|v| v == x).unwrap() + 1000 - base).collect();
            (a.pred, r)
        })
        .collect();
    out.sort();
    out
}

// ---------------------------------------------------------------------------
// Random programs

/// Source text of a random program. Not every output validates.
pub fn random_program_text(seed: u64) -> String {
    let mut r = rng(seed);
    let nconst = r.random_range(0..=2);
    let consts: Vec<String> = (0..nconst).map(|i| format!("k{i}")).collect();
    let nthreads = r.random_range(1..=3);
    let locals: Vec<Vec<String>> = (0..nthreads)
        .map(|t| (0..r.random_range(0..=2)).map(|i| format!("v{t}_{i}")).collect())
        .collect();
    let mut out = String::new();
    if nconst > 0 {
        out.push_str(&format!("const {};\n", consts.join(", ")));
    }
    for t in 0..nthreads {
        let ls = &locals[t];
        let nloc = r.random_range(2..=3);
        let loc = |r: &mut ChaCha8Rng| format!("s{t}_{}", r.random_range(0..nloc));
        let header = if ls.is_empty() { String::new() } else { format!("local {}", ls.join(", ")) };
        out.push_str(&format!("thread T{t}({header}) start s{t}_0;\n"));
        let expr = |r: &mut ChaCha8Rng, extra: &[String]| -> String {
            let mut pool: Vec<String> = ls.iter().chain(&consts).chain(extra).cloned().collect();
            pool.push("bot".into());
            pool[r.random_range(0..pool.len())].clone()
        };
        let channel = |r: &mut ChaCha8Rng| -> Option<String> {
            let pool: Vec<&String> = ls.iter().chain(&consts).collect();
            (!pool.is_empty()).then(|| pool[r.random_range(0..pool.len())].clone())
        };
        let guard_and_assign = |r: &mut ChaCha8Rng, extra: &[String]| -> Vec<String> {
            let mut items = Vec::new();
            if !ls.is_empty() || !extra.is_empty() {
                let subjects: Vec<&String> = ls.iter().chain(extra).collect();
                for _ in 0..r.random_range(0..=1) {
                    let x = subjects[r.random_range(0..subjects.len())];
                    let op = if r.random_bool(0.5) { "=" } else { "!=" };
                    items.push(format!("{x} {op} {}", expr(r, extra)));
                }
            }
            let mut targets: Vec<&String> = ls.iter().collect();
            for _ in 0..r.random_range(0..=targets.len().min(2)) {
                let i = r.random_range(0..targets.len());
                let x = targets.remove(i);
                items.push(format!("{x} := {}", expr(r, extra)));
            }
            items
        };
        let bracket = |items: Vec<String>| {
            if items.is_empty() {
                String::new()
            } else {
                format!(" [{}]", items.join(", "))
            }
        };
        for k in 0..r.random_range(nloc..=nloc + 3) {
            let from = if k < nloc { format!("s{t}_{k}") } else { loc(&mut r) };
            let to = loc(&mut r);
            let line = match r.random_range(0..7) {
                0 => {
                    let items = guard_and_assign(&mut r, &[]);
                    format!("{from} -tau-> {to}{}", bracket(items))
                }
                1 if !ls.is_empty() => {
                    let x = &ls[r.random_range(0..ls.len())];
                    format!("{from} -gen-> {to} [{x} := new]")
                }
                2 => {
                    let child = r.random_range(0..nthreads);
                    let mut binds: Vec<String> = locals[child].iter().map(|l| format!("{l} := {}", expr(&mut r, &[]))).collect();
                    if child != t && !ls.is_empty() && r.random_bool(0.3) {
                        binds.push(format!("{} := {}", ls[0], expr(&mut r, &[])));
                    }
                    if binds.is_empty() {
                        format!("{from} -spawn-> {to} [run T{child}]")
                    } else {
                        format!("{from} -spawn-> {to} [run T{child} with {}]", binds.join(", "))
                    }
                }
                3 | 4 => match channel(&mut r) {
                    Some(ch) => {
                        let n = r.random_range(0..=ls.len().min(2));
                        let tpl: Vec<String> = ls.iter().take(n).cloned().collect();
                        let items = guard_and_assign(&mut r, &[]);
                        format!("{from} -{ch}!({})-> {to}{}", tpl.join(", "), bracket(items))
                    }
                    None => format!("{from} -tau-> {to}"),
                },
                _ => match channel(&mut r) {
                    Some(ch) => {
                        let n = r.random_range(0..=2);
                        let tpl: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
                        let items = guard_and_assign(&mut r, &tpl);
                        format!("{from} -{ch}?({})-> {to}{}", tpl.join(", "), bracket(items))
                    }
                    None => format!("{from} -tau-> {to}"),
                },
            };
            out.push_str(&format!("  {line}\n"));
        }
    }
    let pool: Vec<String> = (0..r.random_range(1..=3)).map(|_| format!("T{}", r.random_range(0..nthreads))).collect();
    out.push_str(&format!("init pool: {}\n", pool.join(", ")));
    out
}

// ---------------------------------------------------------------------------
// Two counter machines

/// Validated random programs, skipping texts the validator rejects.
pub fn valid_programs(count: usize) -> Vec<(u64, Program)> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        let text = random_program_text(seed);
        if let Ok(p) = parse_program(&text) {
            if validate(&p).is_empty() {
                out.push((seed, p));
            }
        }
        seed += 1;
        assert!(seed < 100 * count as u64, "generator rarely validates");
    }
    out
}

/// `(location, instruction)` with instruction `Some((counter, is_inc, a, b))`
/// or `None` for halt; the first location is initial.
pub type Machine = Vec<(String, Option<(u8, bool, usize, usize)>)>;

pub fn random_machine(seed: u64) -> Machine {
    let mut r = rng(seed);
    let n = r.random_range(2..=6);
    (0..n)
        .map(|i| {
            let ins = if i == n - 1 {
                None
            } else {
                let c = r.random_range(1..=2);
                let inc = r.random_bool(0.55);
                Some((c, inc, r.random_range(0..n), r.random_range(0..n)))
            };
            (format!("q{i}"), ins)
        })
        .collect()
}

pub fn machine_text(m: &Machine) -> String {
    let mut out = String::new();
    for (loc, ins) in m {
        match ins {
            None => out.push_str(&format!("{loc}: halt\n")),
            Some((c, true, a, _)) => out.push_str(&format!("{loc}: inc c{c} goto {}\n", m[*a].0)),
            Some((c, false, a, b)) => out.push_str(&format!("{loc}: if c{c}>0 dec goto {} else goto {}\n", m[*a].0, m[*b].0)),
        }
    }
    out
}

/// Independent execution: `(location, c1, c2)` for at most `n` steps.
pub fn run_machine(m: &Machine, n: usize) -> Vec<(String, u64, u64)> {
    let mut at = 0usize;
    let mut c = [0u64; 3];
    let mut out = vec![(m[0].0.clone(), 0, 0)];
    for _ in 0..n {
        match m[at].1 {
            None => break,
            Some((k, true, a, _)) => {
                c[k as usize] += 1;
                at = a;
            }
            Some((k, false, a, b)) => {
                if c[k as usize] > 0 {
                    c[k as usize] -= 1;
                    at = a;
                } else {
                    at = b;
                }
            }
        }
        out.push((m[at].0.clone(), c[1], c[2]));
    }
    out
}

// ---------------------------------------------------------------------------
// Rule sets

/// Rules of `b` over the predicates of `sig`, matched by name.
pub fn align(sig: &Signature, b: &MsrSpec) -> Option<Vec<MsrRule>> {
    let map = |p: PredId| sig.lookup(b.sig.name(p));
    b.rules
        .iter()
        .map(|r| {
            let conv = |atoms: &[Atom]| -> Option<Vec<Atom>> {
                atoms
                    .iter()
                    .map(|x| {
                        Some(Atom {
                            pred: map(x.pred)?,
                            args: x.args.clone(),
                        })
                    })
                    .collect()
            };
            Some(MsrRule::new(conv(&r.head)?, conv(&r.body)?, r.constraint.clone()))
        })
        .collect()
}

/// A bijection between `a` and `b` pairing equivalent rules.
pub fn perfect_matching(a: &[MsrRule], b: &[MsrRule]) -> bool {
    fn go(i: usize, a: &[MsrRule], b: &[MsrRule], used: &mut [bool]) -> bool {
        if i == a.len() {
            return true;
        }
        for j in 0..b.len() {
            if !used[j] && a[i].equivalent_to(&b[j]) {
                used[j] = true;
                if go(i + 1, a, b, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    a.len() == b.len() && go(0, a, b, &mut vec![false; b.len()])
}

/// Observed machine states agree with the independent simulator on the
/// shared prefix; returns how many machine steps were observed.
pub fn check_machine(seed: u64, tdl_steps: usize) -> Result<usize, String> {
    let m = random_machine(seed);
    let cm = tdlv::twocm::parse_cm(&machine_text(&m)).map_err(|e| e.to_string())?;
    let report = tdlv::twocm::correspondence_check(&cm, tdl_steps);
    if let Some(e) = report.mismatch {
        return Err(format!("machine {seed}: {e}\n{}", machine_text(&m)));
    }
    let expected = run_machine(&m, report.observed.len());
    for (o, (loc, c1, c2)) in report.observed.iter().zip(&expected) {
        if o.location != *loc || o.live != [*c1, *c2] {
            return Err(format!("machine {seed}: observed {o:?}, simulated ({loc}, {c1}, {c2})"));
        }
    }
    Ok(report.observed.len().saturating_sub(1))
}

