//! Multiset rewriting with order constraints: rules `head -> body : φ`
//! rewriting multisets of ground atoms over rational values.

mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

pub use text::{parse_spec, write_rule, write_spec};
pub(crate) use text::{parse_atom_list, parse_tail_constraint};
#[cfg(test)]
pub(crate) use text::parse_ground_list;

use crate::nc::{NcAtom, NcConstraint, OrderDigest, Rel, VarId, VarSupply};
use crate::value::{canonical_relabel, int, midpoint, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PredId(pub u32);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MsrError {
    #[error("predicate `{name}` used with arity {got}, declared with {expected}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("rule is not enabled: {0}")]
    NotEnabled(String),
}

/// Predicate names and arities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    names: Vec<String>,
    arities: Vec<usize>,
    index: HashMap<String, PredId>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the predicate, declaring it on first use.
    pub fn intern(&mut self, name: &str, arity: usize) -> Result<PredId, MsrError> {
        if let Some(&p) = self.index.get(name) {
            let expected = self.arity(p);
            if expected != arity {
                return Err(MsrError::Arity {
                    name: name.into(),
                    expected,
                    got: arity,
                });
            }
            return Ok(p);
        }
        let p = PredId(self.names.len() as u32);
        self.names.push(name.into());
        self.arities.push(arity);
        self.index.insert(name.into(), p);
        Ok(p)
    }

    pub fn lookup(&self, name: &str) -> Option<PredId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, p: PredId) -> &str {
        &self.names[p.0 as usize]
    }

    pub fn arity(&self, p: PredId) -> usize {
        self.arities[p.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn preds(&self) -> impl Iterator<Item = PredId> {
        (0..self.names.len() as u32).map(PredId)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: PredId,
    pub args: Vec<VarId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub pred: PredId,
    pub args: Vec<Value>,
}

/// A multiset of ground atoms, stored sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundConfig {
    atoms: Vec<GroundAtom>,
}

impl GroundConfig {
    pub fn new(mut atoms: Vec<GroundAtom>) -> Self {
        atoms.sort();
        GroundConfig { atoms }
    }

    pub fn atoms(&self) -> &[GroundAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn values(&self) -> BTreeSet<Value> {
        self.atoms.iter().flat_map(|a| a.args.iter().copied()).collect()
    }

    /// Multiset inclusion `other ⪯ self`.
    pub fn includes(&self, other: &GroundConfig) -> bool {
        let mut i = 0;
        for a in &other.atoms {
            while i < self.atoms.len() && self.atoms[i] < *a {
                i += 1;
            }
            if i == self.atoms.len() || self.atoms[i] != *a {
                return false;
            }
            i += 1;
        }
        true
    }

    /// Multiset difference; `None` unless `other ⪯ self`.
    pub fn minus(&self, other: &GroundConfig) -> Option<GroundConfig> {
        let mut rest = self.atoms.clone();
        for a in &other.atoms {
            let k = rest.iter().position(|b| b == a)?;
            rest.remove(k);
        }
        Some(GroundConfig { atoms: rest })
    }

    pub fn plus(&self, other: &GroundConfig) -> GroundConfig {
        GroundConfig::new(self.atoms.iter().chain(&other.atoms).cloned().collect())
    }

    pub fn map_values(&self, f: impl Fn(Value) -> Value) -> GroundConfig {
        GroundConfig::new(
            self.atoms
                .iter()
                .map(|a| GroundAtom {
                    pred: a.pred,
                    args: a.args.iter().map(|&v| f(v)).collect(),
                })
                .collect(),
        )
    }

    /// Representative of the configurations that are order-isomorphic to
    /// this one by a map fixing every anchor.
    pub fn canonical(&self, anchors: &[Value]) -> GroundConfig {
        let vals: Vec<Value> = self.values().into_iter().collect();
        let map: HashMap<Value, Value> = canonical_relabel(&vals, anchors).into_iter().collect();
        self.map_values(|v| map[&v])
    }

    /// Displays with predicate names.
    pub fn show<'a>(&'a self, sig: &'a Signature) -> ShowConfig<'a> {
        ShowConfig { cfg: self, sig }
    }
}

pub struct ShowConfig<'a> {
    cfg: &'a GroundConfig,
    sig: &'a Signature,
}

impl fmt::Display for ShowConfig<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cfg.atoms.is_empty() {
            return write!(f, "eps");
        }
        for (i, a) in self.cfg.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{}", self.sig.name(a.pred))?;
            if !a.args.is_empty() {
                let args: Vec<String> = a.args.iter().map(|v| v.to_string()).collect();
                write!(f, "({})", args.join(","))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MsrRule {
    pub head: Vec<Atom>,
    pub body: Vec<Atom>,
    pub constraint: NcConstraint,
    /// Preferred display names; variables without one print as `x<n>`.
    pub names: BTreeMap<VarId, String>,
    /// Free text describing where the rule comes from (printed as a comment).
    pub origin: String,
}

impl MsrRule {
    pub fn new(head: Vec<Atom>, body: Vec<Atom>, constraint: NcConstraint) -> Self {
        MsrRule {
            head,
            body,
            constraint,
            names: BTreeMap::new(),
            origin: String::new(),
        }
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut v: BTreeSet<VarId> = self
            .head
            .iter()
            .chain(&self.body)
            .flat_map(|a| a.args.iter().copied())
            .collect();
        v.extend(self.constraint.vars());
        v
    }

    /// The same rule with a distinct variable at every argument position,
    /// tied to the original variables through equalities that are then
    /// projected away.
    pub fn separated(&self) -> MsrRule {
        let mut supply = VarSupply::above(&self.vars());
        let mut eqs = Vec::new();
        let mut keep = BTreeSet::new();
        let mut sep = |atoms: &[Atom]| -> Vec<Atom> {
            atoms
                .iter()
                .map(|a| Atom {
                    pred: a.pred,
                    args: a
                        .args
                        .iter()
                        .map(|&v| {
                            let w = supply.fresh();
                            eqs.push(NcAtom::Eq(w, v));
                            keep.insert(w);
                            w
                        })
                        .collect(),
                })
                .collect()
        };
        let head = sep(&self.head);
        let body = sep(&self.body);
        let constraint = self.constraint.with(eqs).project_onto(&keep);
        MsrRule::new(head, body, constraint)
    }

    /// Same rule up to a renaming of variables, with mutually entailing
    /// constraints. Repeated variables count as equalities.
    pub fn equivalent_to(&self, other: &MsrRule) -> bool {
        if self.head.len() != other.head.len() || self.body.len() != other.body.len() {
            return false;
        }
        let (a, b) = (self.separated(), other.separated());
        let mine: Vec<&Atom> = a.head.iter().chain(&a.body).collect();
        let theirs: Vec<&Atom> = b.head.iter().chain(&b.body).collect();
        let mut used = vec![false; theirs.len()];
        let mut map = BTreeMap::new();
        match_atoms(&mine, &theirs, a.head.len(), 0, &mut used, &mut map, &mut |map| {
            let renamed = a.constraint.rename_unchecked(&mut |v| map[&v]);
            renamed.equivalent(&b.constraint)
        })
    }
}

fn match_atoms(
    mine: &[&Atom],
    theirs: &[&Atom],
    split: usize,
    i: usize,
    used: &mut [bool],
    map: &mut BTreeMap<VarId, VarId>,
    done: &mut dyn FnMut(&BTreeMap<VarId, VarId>) -> bool,
) -> bool {
    if i == mine.len() {
        return done(map);
    }
    let range = if i < split { 0..split } else { split..theirs.len() };
    for j in range {
        if used[j] || theirs[j].pred != mine[i].pred || theirs[j].args.len() != mine[i].args.len() {
            continue;
        }
        let mut added = Vec::new();
        let mut ok = true;
        for (&a, &b) in mine[i].args.iter().zip(&theirs[j].args) {
            match map.get(&a) {
                Some(&c) if c != b => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    if map.values().any(|&c| c == b) {
                        ok = false;
                        break;
                    }
                    map.insert(a, b);
                    added.push(a);
                }
            }
        }
        if ok {
            used[j] = true;
            if match_atoms(mine, theirs, split, i + 1, used, map, done) {
                return true;
            }
            used[j] = false;
        }
        for a in added {
            map.remove(&a);
        }
    }
    false
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MsrSpec {
    pub sig: Signature,
    pub initials: Vec<GroundConfig>,
    pub rules: Vec<MsrRule>,
}

impl MsrSpec {
    /// Constants of rule constraints and values of initial configurations,
    /// ascending. Canonical forms keep these values fixed.
    pub fn anchors(&self) -> Vec<Value> {
        let mut set: BTreeSet<Value> = self
            .rules
            .iter()
            .flat_map(|r| r.constraint.constants())
            .map(int)
            .collect();
        set.extend(self.initials.iter().flat_map(|g| g.values()));
        set.into_iter().collect()
    }
}

/// `σ(body) ⊕ (cfg ⊖ σ(head))`, checking that σ solves the constraint and
/// that `σ(head) ⪯ cfg`.
pub fn fire(
    rule: &MsrRule,
    cfg: &GroundConfig,
    sigma: &BTreeMap<VarId, Value>,
) -> Result<GroundConfig, MsrError> {
    let val = |v: VarId| sigma.get(&v).copied();
    let pins: Vec<(VarId, Value)> = sigma.iter().map(|(&v, &c)| (v, c)).collect();
    if !rule.constraint.satisfiable_with(&pins) {
        return Err(MsrError::NotEnabled("valuation violates the constraint".into()));
    }
    let inst = |atoms: &[Atom]| -> Result<GroundConfig, MsrError> {
        let mut out = Vec::new();
        for a in atoms {
            let mut args = Vec::new();
            for v in &a.args {
                args.push(val(*v).ok_or_else(|| MsrError::NotEnabled(format!("{v} is unbound")))?);
            }
            out.push(GroundAtom { pred: a.pred, args });
        }
        Ok(GroundConfig::new(out))
    };
    let head = inst(&rule.head)?;
    let body = inst(&rule.body)?;
    let rest = cfg
        .minus(&head)
        .ok_or_else(|| MsrError::NotEnabled("head is not contained in the configuration".into()))?;
    Ok(rest.plus(&body))
}

/// Calls `f` with the configuration index matched by each head atom, for
/// every injective, predicate-respecting match. Equal configuration atoms are
/// interchangeable, so only one of them is tried per position.
pub(crate) fn head_matches(head: &[Atom], cfg: &GroundConfig, f: &mut dyn FnMut(&[usize])) {
    fn go(
        head: &[Atom],
        atoms: &[GroundAtom],
        used: &mut Vec<bool>,
        pick: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        let i = pick.len();
        if i == head.len() {
            f(pick);
            return;
        }
        for j in 0..atoms.len() {
            if used[j] || atoms[j].pred != head[i].pred || atoms[j].args.len() != head[i].args.len() {
                continue;
            }
            if j > 0 && atoms[j] == atoms[j - 1] && !used[j - 1] {
                continue;
            }
            used[j] = true;
            pick.push(j);
            go(head, atoms, used, pick, f);
            pick.pop();
            used[j] = false;
        }
    }
    let mut used = vec![false; cfg.atoms.len()];
    go(head, &cfg.atoms, &mut used, &mut Vec::new(), f);
}

/// Candidate values for a new variable relative to the sorted `points`:
/// each point itself, one value in each gap, one below and one above.
fn placements(points: &[Value]) -> Vec<Value> {
    let Some((&lo, &hi)) = points.first().zip(points.last()) else {
        return vec![int(0)];
    };
    let mut out = Vec::with_capacity(2 * points.len() + 1);
    out.push(lo - int(1));
    for (k, &p) in points.iter().enumerate() {
        out.push(p);
        if k + 1 < points.len() {
            out.push(midpoint(p, points[k + 1]));
        }
    }
    out.push(hi + int(1));
    out
}

/// Extends `pins` to every variable in `free`, once per order type of the
/// free variables relative to `points` and to each other.
fn place_free(
    constraint: &NcConstraint,
    free: &[VarId],
    points: &mut Vec<Value>,
    pins: &mut Vec<(VarId, Value)>,
    f: &mut dyn FnMut(&[(VarId, Value)]),
) {
    let Some((&v, rest)) = free.split_first() else {
        f(pins);
        return;
    };
    let forced = {
        let mut rels: Vec<Rel> = constraint.atoms().iter().filter_map(Option::<Rel>::from).collect();
        rels.extend(pins.iter().map(|&(x, c)| Rel::EqV(x, c)));
        let d = OrderDigest::build(&rels);
        d.class_of(v).and_then(|c| d.class_value(c))
    };
    let options = match forced {
        Some(c) => vec![c],
        None => placements(points),
    };
    for c in options {
        pins.push((v, c));
        if constraint.satisfiable_with(pins) {
            let fresh_point = points.binary_search(&c).err();
            if let Some(k) = fresh_point {
                points.insert(k, c);
            }
            place_free(constraint, rest, points, pins, f);
            if let Some(k) = fresh_point {
                points.remove(k);
            }
        }
        pins.pop();
    }
}

/// Successors reached by firing `rule` once, canonicalized relative to
/// `anchors`. Covers every successor up to order isomorphism.
pub fn rule_successors(rule: &MsrRule, cfg: &GroundConfig, anchors: &[Value]) -> Vec<GroundConfig> {
    let head_vars: BTreeSet<VarId> = rule.head.iter().flat_map(|a| a.args.iter().copied()).collect();
    let free: Vec<VarId> = {
        let mut seen = BTreeSet::new();
        rule.body
            .iter()
            .flat_map(|a| a.args.iter().copied())
            .filter(|v| !head_vars.contains(v) && seen.insert(*v))
            .collect()
    };
    let base_points: BTreeSet<Value> = cfg.values().into_iter().chain(anchors.iter().copied()).collect();
    let mut out = HashSet::new();
    head_matches(&rule.head, cfg, &mut |pick| {
        let mut pins: Vec<(VarId, Value)> = Vec::new();
        for (a, &j) in rule.head.iter().zip(pick) {
            for (&v, &c) in a.args.iter().zip(&cfg.atoms[j].args) {
                pins.push((v, c));
            }
        }
        if !rule.constraint.satisfiable_with(&pins) {
            return;
        }
        let rest: Vec<GroundAtom> = cfg
            .atoms
            .iter()
            .enumerate()
            .filter(|(k, _)| !pick.contains(k))
            .map(|(_, a)| a.clone())
            .collect();
        let mut points: Vec<Value> = base_points.iter().copied().collect();
        place_free(&rule.constraint, &free, &mut points, &mut pins, &mut |sol| {
            let val = |v: VarId| sol.iter().find(|p| p.0 == v).unwrap().1;
            let mut atoms = rest.clone();
            atoms.extend(rule.body.iter().map(|a| GroundAtom {
                pred: a.pred,
                args: a.args.iter().map(|&v| val(v)).collect(),
            }));
            out.insert(GroundConfig::new(atoms).canonical(anchors));
        });
    });
    let mut out: Vec<GroundConfig> = out.into_iter().collect();
    out.sort();
    out
}

/// One-step successors of `cfg` up to order isomorphism, tagged with the
/// index of the generating rule.
pub fn post_successors(spec: &MsrSpec, cfg: &GroundConfig) -> Vec<(usize, GroundConfig)> {
    post_successors_with(spec, cfg, &spec.anchors())
}

pub fn post_successors_with(
    spec: &MsrSpec,
    cfg: &GroundConfig,
    anchors: &[Value],
) -> Vec<(usize, GroundConfig)> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, r) in spec.rules.iter().enumerate() {
        for g in rule_successors(r, cfg, anchors) {
            if seen.insert(g.clone()) {
                out.push((i, g));
            }
        }
    }
    out
}

/// Configurations found by [`reach_bounded`], with the rule that first
/// reached each one.
#[derive(Clone, Debug, Default)]
pub struct Reach {
    pub configs: Vec<GroundConfig>,
    pub parent: Vec<Option<(usize, usize)>>,
    pub depth: Vec<usize>,
}

impl Reach {
    pub fn trace(&self, mut idx: usize) -> Vec<(Option<usize>, &GroundConfig)> {
        let mut out = Vec::new();
        loop {
            match self.parent[idx] {
                Some((p, rule)) => {
                    out.push((Some(rule), &self.configs[idx]));
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

    pub fn find(&self, cfg: &GroundConfig) -> Option<usize> {
        self.configs.iter().position(|c| c == cfg)
    }
}

#[derive(Clone, Debug)]
pub struct ReachExceeded {
    pub partial: Reach,
    pub reason: String,
}

/// Breadth-first closure up to `depth` steps, merging order-isomorphic
/// configurations.
pub fn reach_bounded(
    spec: &MsrSpec,
    depth: usize,
    max_configs: usize,
) -> Result<Reach, ReachExceeded> {
    reach_bounded_with(spec, depth, max_configs, &spec.anchors(), &mut |_, _| false)
}

/// As [`reach_bounded`] with explicit anchors; stops early as soon as `stop`
/// accepts a newly reached configuration.
pub fn reach_bounded_with(
    spec: &MsrSpec,
    depth: usize,
    max_configs: usize,
    anchors: &[Value],
    stop: &mut dyn FnMut(usize, &GroundConfig) -> bool,
) -> Result<Reach, ReachExceeded> {
    let mut r = Reach::default();
    let mut seen: HashMap<GroundConfig, usize> = HashMap::new();
    let mut frontier = Vec::new();
    for g in &spec.initials {
        let g = g.canonical(anchors);
        if seen.contains_key(&g) {
            continue;
        }
        let k = r.configs.len();
        seen.insert(g.clone(), k);
        r.configs.push(g);
        r.parent.push(None);
        r.depth.push(0);
        frontier.push(k);
        if stop(k, &r.configs[k]) {
            return Ok(r);
        }
    }
    for d in 1..=depth {
        let mut next = Vec::new();
        for &i in &frontier {
            let cur = r.configs[i].clone();
            for (rule, g) in post_successors_with(spec, &cur, anchors) {
                if seen.contains_key(&g) {
                    continue;
                }
                if r.configs.len() >= max_configs {
                    return Err(ReachExceeded {
                        partial: r,
                        reason: format!("more than {max_configs} configurations within depth {depth}"),
                    });
                }
                let k = r.configs.len();
                seen.insert(g.clone(), k);
                r.configs.push(g);
                r.parent.push(Some((i, rule)));
                r.depth.push(d);
                next.push(k);
                if stop(k, &r.configs[k]) {
                    return Ok(r);
                }
            }
        }
        frontier = next;
    }
    Ok(r)
}

#[cfg(test)]
mod tests;
