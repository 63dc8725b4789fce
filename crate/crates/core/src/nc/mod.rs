//! Name constraints: conjunctions of `=` and `>` between rational-valued
//! variables and integer constants.
//!
//! Every constraint is decided through its [`OrderDigest`]. Projection is
//! exact over the rationals because the order is dense, so eliminating a
//! variable never needs more than the transitive closure.

mod digest;
mod text;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

pub use digest::OrderDigest;
pub(crate) use digest::Rel;
pub use text::{parse_constraint, NameScope, Named};
pub(crate) use text::parse_atoms;

use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Mints identifiers that do not collide with anything handed out before.
#[derive(Clone, Debug, Default)]
pub struct VarSupply {
    next: u32,
}

impl VarSupply {
    pub fn new() -> Self {
        Self::default()
    }

    /// A supply whose identifiers are all above `used`.
    pub fn above<'a>(used: impl IntoIterator<Item = &'a VarId>) -> Self {
        let next = used.into_iter().map(|v| v.0 + 1).max().unwrap_or(0);
        VarSupply { next }
    }

    pub fn fresh(&mut self) -> VarId {
        let v = VarId(self.next);
        self.next += 1;
        v
    }
}

/// One conjunct. `LtConst` is needed to keep projection exact: eliminating
/// `x` from `x = 1, x > y` leaves `y < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NcAtom {
    True,
    Eq(VarId, VarId),
    Gt(VarId, VarId),
    EqConst(VarId, i64),
    GtConst(VarId, i64),
    LtConst(VarId, i64),
}

impl NcAtom {
    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        let (a, b) = match *self {
            NcAtom::True => (None, None),
            NcAtom::Eq(x, y) | NcAtom::Gt(x, y) => (Some(x), Some(y)),
            NcAtom::EqConst(x, _) | NcAtom::GtConst(x, _) | NcAtom::LtConst(x, _) => {
                (Some(x), None)
            }
        };
        a.into_iter().chain(b)
    }

    pub fn constant(&self) -> Option<i64> {
        match *self {
            NcAtom::EqConst(_, c) | NcAtom::GtConst(_, c) | NcAtom::LtConst(_, c) => Some(c),
            _ => None,
        }
    }

    pub fn map_vars(&self, f: &mut impl FnMut(VarId) -> VarId) -> NcAtom {
        match *self {
            NcAtom::True => NcAtom::True,
            NcAtom::Eq(x, y) => NcAtom::Eq(f(x), f(y)),
            NcAtom::Gt(x, y) => NcAtom::Gt(f(x), f(y)),
            NcAtom::EqConst(x, c) => NcAtom::EqConst(f(x), c),
            NcAtom::GtConst(x, c) => NcAtom::GtConst(f(x), c),
            NcAtom::LtConst(x, c) => NcAtom::LtConst(f(x), c),
        }
    }

    fn normalized(self) -> Option<NcAtom> {
        match self {
            NcAtom::True => None,
            NcAtom::Eq(x, y) if x == y => None,
            NcAtom::Eq(x, y) if x > y => Some(NcAtom::Eq(y, x)),
            a => Some(a),
        }
    }

    /// Truth value under a total valuation; `None` if a variable is unbound.
    pub fn eval(&self, val: &impl Fn(VarId) -> Option<Value>) -> Option<bool> {
        let c = |k: i64| Value::from_integer(k);
        Some(match *self {
            NcAtom::True => true,
            NcAtom::Eq(x, y) => val(x)? == val(y)?,
            NcAtom::Gt(x, y) => val(x)? > val(y)?,
            NcAtom::EqConst(x, k) => val(x)? == c(k),
            NcAtom::GtConst(x, k) => val(x)? > c(k),
            NcAtom::LtConst(x, k) => val(x)? < c(k),
        })
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum NcError {
    #[error("renaming maps {0} and {1} to the same variable {2}")]
    NonInjective(VarId, VarId, VarId),
}

/// A conjunction of [`NcAtom`]s. Atoms are kept sorted and deduplicated.
///
/// The `contradiction` flag marks a constraint known to be unsatisfiable
/// that no longer carries the atoms witnessing it (after elimination).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NcConstraint {
    atoms: Vec<NcAtom>,
    contradiction: bool,
}

impl NcConstraint {
    pub fn truth() -> Self {
        Self::default()
    }

    pub fn falsity() -> Self {
        NcConstraint {
            atoms: Vec::new(),
            contradiction: true,
        }
    }

    pub fn new(atoms: impl IntoIterator<Item = NcAtom>) -> Self {
        let mut atoms: Vec<NcAtom> = atoms.into_iter().filter_map(NcAtom::normalized).collect();
        atoms.sort_unstable();
        atoms.dedup();
        NcConstraint {
            atoms,
            contradiction: false,
        }
    }

    pub fn atoms(&self) -> &[NcAtom] {
        &self.atoms
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty() && !self.contradiction
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.atoms.iter().flat_map(|a| a.vars()).collect()
    }

    pub fn constants(&self) -> BTreeSet<i64> {
        self.atoms.iter().filter_map(|a| a.constant()).collect()
    }

    pub fn digest(&self) -> OrderDigest {
        if self.contradiction {
            // x0 > x0 is a compact witness for an empty solution set
            return OrderDigest::build(&[Rel::Gt(VarId(0), VarId(0))]);
        }
        OrderDigest::of_atoms(&self.atoms)
    }

    pub fn satisfiable(&self) -> bool {
        !self.contradiction && self.digest().is_consistent()
    }

    /// `Sol(self) ⊆ Sol(other)`.
    pub fn entails(&self, other: &NcConstraint) -> bool {
        let d = self.digest();
        if !d.is_consistent() {
            return true;
        }
        if other.contradiction {
            return false;
        }
        other.atoms.iter().all(|a| d.entails_atom(a))
    }

    pub fn equivalent(&self, other: &NcConstraint) -> bool {
        self.entails(other) && other.entails(self)
    }

    pub fn conjoin(&self, other: &NcConstraint) -> NcConstraint {
        let mut c = NcConstraint::new(self.atoms.iter().chain(&other.atoms).copied());
        c.contradiction = self.contradiction || other.contradiction;
        c
    }

    pub fn with(&self, atoms: impl IntoIterator<Item = NcAtom>) -> NcConstraint {
        let mut c = NcConstraint::new(self.atoms.iter().copied().chain(atoms));
        c.contradiction = self.contradiction;
        c
    }

    /// Existentially quantifies `vars` away. The result is in canonical form.
    pub fn eliminate(&self, vars: &BTreeSet<VarId>) -> NcConstraint {
        self.project_by(&|v| !vars.contains(&v))
    }

    /// Keeps only the variables in `keep`.
    pub fn project_onto(&self, keep: &BTreeSet<VarId>) -> NcConstraint {
        self.project_by(&|v| keep.contains(&v))
    }

    pub fn project_by(&self, keep: &dyn Fn(VarId) -> bool) -> NcConstraint {
        let d = self.digest();
        if !d.is_consistent() {
            return NcConstraint::falsity();
        }
        NcConstraint::new(d.project(keep))
    }

    /// Canonical form: equivalent constraints over the same variables and
    /// constants have equal canonical forms.
    pub fn canonical(&self) -> NcConstraint {
        self.project_by(&|_| true)
    }

    /// Renames variables; unmapped variables are kept. The mapping must not
    /// identify two distinct variables of this constraint.
    pub fn rename(&self, mapping: &BTreeMap<VarId, VarId>) -> Result<NcConstraint, NcError> {
        let vars = self.vars();
        let mut seen: BTreeMap<VarId, VarId> = BTreeMap::new();
        for &v in &vars {
            let t = mapping.get(&v).copied().unwrap_or(v);
            if let Some(prev) = seen.insert(t, v) {
                return Err(NcError::NonInjective(prev, v, t));
            }
        }
        Ok(self.rename_unchecked(&mut |v| mapping.get(&v).copied().unwrap_or(v)))
    }

    pub fn rename_unchecked(&self, f: &mut impl FnMut(VarId) -> VarId) -> NcConstraint {
        let mut c = NcConstraint::new(self.atoms.iter().map(|a| a.map_vars(f)));
        c.contradiction = self.contradiction;
        c
    }

    /// Satisfiable once the given variables are pinned to ground values.
    pub fn satisfiable_with(&self, pins: &[(VarId, Value)]) -> bool {
        if self.contradiction {
            return false;
        }
        for (i, &(v, c)) in pins.iter().enumerate() {
            if pins[..i].iter().any(|&(w, d)| w == v && d != c) {
                return false;
            }
        }
        let bound: HashSet<VarId> = pins.iter().map(|p| p.0).collect();
        let all_bound = self.atoms.iter().all(|a| a.vars().all(|v| bound.contains(&v)));
        if all_bound {
            let val = |v: VarId| pins.iter().find(|p| p.0 == v).map(|p| p.1);
            return self.atoms.iter().all(|a| a.eval(&val) == Some(true));
        }
        let mut rels: Vec<Rel> = self.atoms.iter().filter_map(Option::<Rel>::from).collect();
        rels.extend(pins.iter().map(|&(v, c)| Rel::EqV(v, c)));
        OrderDigest::build(&rels).is_consistent()
    }
}

impl fmt::Display for NcConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        text::write_constraint(f, self, &|v: VarId| v.to_string())
    }
}
