//! Constrained configurations and the symbolic predecessor operator.
//!
//! A constrained configuration `p(x0, x1) | q(x2) : φ` denotes every ground
//! configuration containing an instance of its atoms that satisfies `φ`.
//! Configurations are stored separated: argument position `k` carries
//! variable `x<k>`, and equalities between positions live in `φ`.

mod sbr;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::ParseError;
use crate::lex::{lex, Cursor};
use crate::msr::{head_matches, parse_atom_list, parse_tail_constraint, Atom, GroundConfig, MsrRule, PredId, Signature};
use crate::nc::{NameScope, NcAtom, NcConstraint, OrderDigest, Rel, VarId};
use crate::value::Value;

pub use sbr::{
    concretize, sbr, AbstractStep, IterationStats, Limits, SbrOptions, SbrResult, Verdict,
};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstrainedConfig {
    atoms: Vec<Atom>,
    constraint: NcConstraint,
}

impl ConstrainedConfig {
    /// Separates and normalizes; `None` when the constraint is unsatisfiable.
    pub fn new(atoms: Vec<Atom>, constraint: NcConstraint) -> Option<Self> {
        let rule = MsrRule::new(atoms, Vec::new(), constraint).separated();
        let rels: Vec<Rel> = rule.constraint.atoms().iter().filter_map(Option::<Rel>::from).collect();
        if !rule.constraint.satisfiable() {
            return None;
        }
        Some(Self::from_positional(rule.head, &OrderDigest::build(&rels)))
    }

    /// Builds from atoms whose argument variables are pairwise distinct,
    /// projecting `digest` onto them and renumbering by position.
    fn from_positional(mut atoms: Vec<Atom>, digest: &OrderDigest) -> Self {
        atoms.sort_by_key(|a| a.pred);
        let top = atoms.iter().flat_map(|a| a.args.iter()).map(|v| v.0 + 1).max().unwrap_or(0);
        let mut map = vec![u32::MAX; top as usize];
        let mut next = 0;
        for a in &mut atoms {
            for v in &mut a.args {
                map[v.0 as usize] = next;
                *v = VarId(next);
                next += 1;
            }
        }
        let kept = digest.project(&|v| (v.0 as usize) < map.len() && map[v.0 as usize] != u32::MAX);
        let constraint = NcConstraint::new(kept.into_iter().map(|a| a.map_vars(&mut |v| VarId(map[v.0 as usize]))));
        ConstrainedConfig { atoms, constraint }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn constraint(&self) -> &NcConstraint {
        &self.constraint
    }

    pub fn var_count(&self) -> u32 {
        self.atoms.iter().map(|a| a.args.len() as u32).sum()
    }

    pub fn show<'a>(&'a self, sig: &'a Signature) -> ShowConstrained<'a> {
        ShowConstrained { cfg: self, sig }
    }
}

pub struct ShowConstrained<'a> {
    cfg: &'a ConstrainedConfig,
    sig: &'a Signature,
}

impl fmt::Display for ShowConstrained<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = MsrRule::new(self.cfg.atoms.clone(), Vec::new(), self.cfg.constraint.clone());
        let text = crate::msr::write_rule(&r, self.sig);
        // `head -> eps : φ` printed as `head : φ`
        let text = text.replacen(" -> eps", "", 1);
        write!(f, "{text}")
    }
}

/// `g ∈ ⟦c⟧`.
pub fn member(g: &GroundConfig, c: &ConstrainedConfig) -> bool {
    let mut found = false;
    head_matches(&c.atoms, g, &mut |pick| {
        if found {
            return;
        }
        let pins: Vec<(VarId, Value)> = c
            .atoms
            .iter()
            .zip(pick)
            .flat_map(|(a, &j)| a.args.iter().copied().zip(g.atoms()[j].args.iter().copied()))
            .collect();
        found = c.constraint.satisfiable_with(&pins);
    });
    found
}

/// A rule with one variable per argument position: head positions first,
/// then body positions.
#[derive(Clone, Debug)]
pub(crate) struct PreparedRule {
    head: Vec<Atom>,
    body: Vec<Atom>,
    rels: Vec<Rel>,
    unsatisfiable: bool,
}

impl PreparedRule {
    pub(crate) fn new(rule: &MsrRule) -> Self {
        let sep = rule.separated();
        let mut map = std::collections::BTreeMap::new();
        let mut next = 0u32;
        let mut renum = |atoms: &[Atom]| -> Vec<Atom> {
            atoms
                .iter()
                .map(|a| Atom {
                    pred: a.pred,
                    args: a
                        .args
                        .iter()
                        .map(|v| {
                            let w = VarId(next);
                            next += 1;
                            map.insert(*v, w);
                            w
                        })
                        .collect(),
                })
                .collect()
        };
        let head = renum(&sep.head);
        let body = renum(&sep.body);
        let rels = sep
            .constraint
            .atoms()
            .iter()
            .map(|a| a.map_vars(&mut |v| map[&v]))
            .filter_map(|a| Option::<Rel>::from(&a))
            .collect();
        PreparedRule {
            head,
            body,
            rels,
            unsatisfiable: !sep.constraint.satisfiable(),
        }
    }
}

fn shift_rel(r: &Rel, k: u32) -> Rel {
    let s = |v: VarId| VarId(v.0 + k);
    match *r {
        Rel::Eq(x, y) => Rel::Eq(s(x), s(y)),
        Rel::Gt(x, y) => Rel::Gt(s(x), s(y)),
        Rel::EqV(x, c) => Rel::EqV(s(x), c),
        Rel::GtV(x, c) => Rel::GtV(s(x), c),
        Rel::LtV(x, c) => Rel::LtV(s(x), c),
    }
}

/// Predecessors of `target` through one rule. With `include_empty`, the
/// match sharing no atom with the target is also produced; its result is
/// always subsumed by the target itself.
pub(crate) fn spre_rule(
    rule: &PreparedRule,
    target: &ConstrainedConfig,
    include_empty: bool,
    out: &mut Vec<ConstrainedConfig>,
) {
    if rule.unsatisfiable {
        return;
    }
    let k = target.var_count();
    let target_rels: Vec<Rel> = target.constraint.atoms().iter().filter_map(Option::<Rel>::from).collect();
    let base: Vec<Rel> = target_rels
        .iter()
        .copied()
        .chain(rule.rels.iter().map(|r| shift_rel(r, k)))
        .collect();
    let body: Vec<Atom> = rule
        .body
        .iter()
        .map(|a| Atom {
            pred: a.pred,
            args: a.args.iter().map(|v| VarId(v.0 + k)).collect(),
        })
        .collect();
    let head: Vec<Atom> = rule
        .head
        .iter()
        .map(|a| Atom {
            pred: a.pred,
            args: a.args.iter().map(|v| VarId(v.0 + k)).collect(),
        })
        .collect();

    let mut used = vec![false; target.atoms.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    fn go(
        i: usize,
        body: &[Atom],
        target: &ConstrainedConfig,
        used: &mut Vec<bool>,
        pairs: &mut Vec<(usize, usize)>,
        emit: &mut dyn FnMut(&[(usize, usize)], &[bool]),
    ) {
        if i == body.len() {
            emit(pairs, used);
            return;
        }
        go(i + 1, body, target, used, pairs, emit);
        for j in 0..target.atoms.len() {
            if used[j] || target.atoms[j].pred != body[i].pred {
                continue;
            }
            used[j] = true;
            pairs.push((i, j));
            go(i + 1, body, target, used, pairs, emit);
            pairs.pop();
            used[j] = false;
        }
    }
    go(0, &body, target, &mut used, &mut pairs, &mut |pairs, used| {
        if pairs.is_empty() && !include_empty {
            return;
        }
        let mut rels = base.clone();
        for &(i, j) in pairs {
            for (&x, &y) in body[i].args.iter().zip(&target.atoms[j].args) {
                rels.push(Rel::Eq(x, y));
            }
        }
        let d = OrderDigest::build(&rels);
        if !d.is_consistent() {
            return;
        }
        let mut atoms = head.clone();
        atoms.extend(
            target
                .atoms
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(_, a)| a.clone()),
        );
        out.push(ConstrainedConfig::from_positional(atoms, &d));
    });
}

/// `SPre(R, S)`: every predecessor of every target, including those whose
/// rule shares no atom with the target. Mutually subsumed results are
/// reported once.
pub fn spre(rules: &[MsrRule], s: &[ConstrainedConfig]) -> Vec<ConstrainedConfig> {
    let prepared: Vec<PreparedRule> = rules.iter().map(PreparedRule::new).collect();
    let mut raw = Vec::new();
    for t in s {
        for r in &prepared {
            spre_rule(r, t, true, &mut raw);
        }
    }
    let mut out: Vec<ConstrainedConfig> = Vec::new();
    for c in raw {
        if !out.iter().any(|o| subsumed(&c, o) && subsumed(o, &c)) {
            out.push(c);
        }
    }
    out
}

/// Precomputed data for subsumption tests against one configuration.
#[derive(Clone, Debug)]
pub(crate) struct Indexed {
    pub(crate) cfg: ConstrainedConfig,
    digest: OrderDigest,
    mask: u128,
    /// Start variable of each atom.
    starts: Vec<u32>,
    /// Constraint atoms grouped by the last atom whose variables they use.
    checks: Vec<Vec<NcAtom>>,
}

impl Indexed {
    pub(crate) fn new(cfg: ConstrainedConfig) -> Self {
        let digest = cfg.constraint.digest();
        let mask = cfg.atoms.iter().fold(0u128, |m, a| m | pred_bit(a.pred));
        let mut starts = Vec::with_capacity(cfg.atoms.len());
        let mut owner = Vec::new();
        let mut s = 0;
        for (i, a) in cfg.atoms.iter().enumerate() {
            starts.push(s);
            s += a.args.len() as u32;
            owner.extend(std::iter::repeat_n(i, a.args.len()));
        }
        let mut checks = vec![Vec::new(); cfg.atoms.len()];
        for at in cfg.constraint.atoms() {
            if let Some(last) = at.vars().map(|v| owner[v.0 as usize]).max() {
                checks[last].push(*at);
            }
        }
        Indexed {
            cfg,
            digest,
            mask,
            starts,
            checks,
        }
    }
}

fn pred_bit(p: PredId) -> u128 {
    1u128 << (p.0 % 128)
}

/// `⟦n⟧ ⊆ ⟦m⟧`, established by mapping the atoms of `m` injectively onto
/// atoms of `n` such that the constraint of `n` entails the image of the
/// constraint of `m`. Sound, not complete.
pub fn subsumed(n: &ConstrainedConfig, m: &ConstrainedConfig) -> bool {
    subsumed_indexed(&Indexed::new(n.clone()), &Indexed::new(m.clone()))
}

pub(crate) fn subsumed_indexed(n: &Indexed, m: &Indexed) -> bool {
    if m.cfg.atoms.len() > n.cfg.atoms.len() || m.mask & !n.mask != 0 {
        return false;
    }
    let mut image = vec![0u32; m.cfg.var_count() as usize];
    let mut used = vec![false; n.cfg.atoms.len()];
    fn go(i: usize, n: &Indexed, m: &Indexed, image: &mut [u32], used: &mut [bool]) -> bool {
        if i == m.cfg.atoms.len() {
            return true;
        }
        let a = &m.cfg.atoms[i];
        for j in 0..n.cfg.atoms.len() {
            if used[j] || n.cfg.atoms[j].pred != a.pred {
                continue;
            }
            for k in 0..a.args.len() as u32 {
                image[(m.starts[i] + k) as usize] = n.starts[j] + k;
            }
            let ok = m.checks[i]
                .iter()
                .all(|at| n.digest.entails_atom(&at.map_vars(&mut |v| VarId(image[v.0 as usize]))));
            if ok {
                used[j] = true;
                if go(i + 1, n, m, image, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    go(0, n, m, &mut image, &mut used)
}

/// Reads one constrained configuration per line:
/// `stop_A(i1, n1, m1) | stop_B(i2, n2, m2) : n1 = n2, m1 > m2`.
/// Predicates must already be declared in `sig`.
pub fn parse_unsafe(text: &str, sig: &Signature) -> Result<Vec<ConstrainedConfig>, ParseError> {
    let mut sig = sig.clone();
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let toks = lex(raw).map_err(|e| e.offset(line_no, 0))?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(&toks, 1);
        let mut scope = NameScope::new();
        let atoms = parse_atom_list(&mut cur, &mut sig, &mut scope, false).map_err(|e| e.offset(line_no, 0))?;
        let c = parse_tail_constraint(&mut cur, &mut scope).map_err(|e| e.offset(line_no, 0))?;
        if !cur.at_end() {
            return Err(cur.unexpected("`:` or end of line").offset(line_no, 0));
        }
        let in_atoms: BTreeSet<VarId> = atoms.iter().flat_map(|a| a.args.iter().copied()).collect();
        if let Some(v) = c.vars().into_iter().find(|v| !in_atoms.contains(v)) {
            let name = scope.names().find(|(_, w)| *w == v).map_or("?", |(n, _)| n);
            return Err(ParseError::new(line_no, 1, format!("`{name}` occurs in the constraint but in no atom")));
        }
        if let Some(cc) = ConstrainedConfig::new(atoms, c) {
            out.push(cc);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
