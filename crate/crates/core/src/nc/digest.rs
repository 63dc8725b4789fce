//! Closure of a conjunction of order atoms: equality classes, the strict order
//! between classes, and the constants pinned to each class.

use super::{NcAtom, VarId};
use crate::value::Value;

/// A relation over variables and rational constants. Superset of [`NcAtom`]
/// used internally so ground values can be pinned next to integer constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Rel {
    Eq(VarId, VarId),
    Gt(VarId, VarId),
    EqV(VarId, Value),
    GtV(VarId, Value),
    LtV(VarId, Value),
}

impl From<&NcAtom> for Option<Rel> {
    fn from(a: &NcAtom) -> Self {
        Some(match *a {
            NcAtom::True => return None,
            NcAtom::Eq(x, y) => Rel::Eq(x, y),
            NcAtom::Gt(x, y) => Rel::Gt(x, y),
            NcAtom::EqConst(x, c) => Rel::EqV(x, Value::from_integer(c)),
            NcAtom::GtConst(x, c) => Rel::GtV(x, Value::from_integer(c)),
            NcAtom::LtConst(x, c) => Rel::LtV(x, Value::from_integer(c)),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    #[inline]
    pub(crate) fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn union_with(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= *b;
        }
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Normal form used to decide satisfiability, entailment and projection.
///
/// Nodes are equivalence classes of variables and constants; `reach[a]`
/// holds `b` iff class `a` is forced strictly above class `b`.
#[derive(Clone, Debug)]
pub struct OrderDigest {
    vars: Vec<VarId>,
    var_class: Vec<usize>,
    consts: Vec<Value>,
    const_class: Vec<usize>,
    class_value: Vec<Option<Value>>,
    reach: Vec<Bits>,
    consistent: bool,
}

impl OrderDigest {
    pub fn of_atoms(atoms: &[NcAtom]) -> Self {
        let rels: Vec<Rel> = atoms.iter().filter_map(Option::<Rel>::from).collect();
        Self::build(&rels)
    }

    pub(crate) fn build(rels: &[Rel]) -> Self {
        let mut vars = Vec::new();
        let mut consts = Vec::new();
        for r in rels {
            match *r {
                Rel::Eq(x, y) | Rel::Gt(x, y) => {
                    vars.push(x);
                    vars.push(y);
                }
                Rel::EqV(x, c) | Rel::GtV(x, c) | Rel::LtV(x, c) => {
                    vars.push(x);
                    consts.push(c);
                }
            }
        }
        vars.sort_unstable();
        vars.dedup();
        consts.sort_unstable();
        consts.dedup();

        let nv = vars.len();
        let n = nv + consts.len();
        let vidx = |v: VarId| vars.binary_search(&v).unwrap();
        let cidx = |c: Value| nv + consts.binary_search(&c).unwrap();

        let mut parent: Vec<usize> = (0..n).collect();
        for r in rels {
            let (a, b) = match *r {
                Rel::Eq(x, y) => (vidx(x), vidx(y)),
                Rel::EqV(x, c) => (vidx(x), cidx(c)),
                _ => continue,
            };
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }

        let mut class_of_root = vec![usize::MAX; n];
        let mut node_class = vec![0; n];
        let mut nclasses = 0;
        for i in 0..n {
            let r = find(&mut parent, i);
            if class_of_root[r] == usize::MAX {
                class_of_root[r] = nclasses;
                nclasses += 1;
            }
            node_class[i] = class_of_root[r];
        }

        let mut consistent = true;
        let mut class_value: Vec<Option<Value>> = vec![None; nclasses];
        for (k, &c) in consts.iter().enumerate() {
            let cl = node_class[nv + k];
            match class_value[cl] {
                None => class_value[cl] = Some(c),
                Some(other) if other != c => consistent = false,
                Some(_) => {}
            }
        }

        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nclasses];
        for r in rels {
            let (hi, lo) = match *r {
                Rel::Gt(x, y) => (node_class[vidx(x)], node_class[vidx(y)]),
                Rel::GtV(x, c) => (node_class[vidx(x)], node_class[cidx(c)]),
                Rel::LtV(x, c) => (node_class[cidx(c)], node_class[vidx(x)]),
                _ => continue,
            };
            succ[hi].push(lo);
        }
        for k in 1..consts.len() {
            succ[node_class[nv + k]].push(node_class[nv + k - 1]);
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }

        let mut indeg = vec![0usize; nclasses];
        for s in &succ {
            for &t in s {
                indeg[t] += 1;
            }
        }
        let mut order = Vec::with_capacity(nclasses);
        let mut stack: Vec<usize> = (0..nclasses).filter(|&c| indeg[c] == 0).collect();
        while let Some(u) = stack.pop() {
            order.push(u);
            for &t in &succ[u] {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    stack.push(t);
                }
            }
        }
        if order.len() < nclasses {
            consistent = false;
        }

        let mut reach = vec![Bits::new(nclasses); nclasses];
        if consistent {
            for &u in order.iter().rev() {
                let mut acc = Bits::new(nclasses);
                for &t in &succ[u] {
                    acc.set(t);
                    acc.union_with(&reach[t]);
                }
                reach[u] = acc;
            }
        }

        OrderDigest {
            var_class: vars.iter().map(|&v| node_class[vidx(v)]).collect(),
            const_class: (0..consts.len()).map(|k| node_class[nv + k]).collect(),
            vars,
            consts,
            class_value,
            reach,
            consistent,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    pub fn class_count(&self) -> usize {
        self.class_value.len()
    }

    pub fn class_of(&self, v: VarId) -> Option<usize> {
        self.vars.binary_search(&v).ok().map(|i| self.var_class[i])
    }

    pub fn class_value(&self, class: usize) -> Option<Value> {
        self.class_value[class]
    }

    /// `a` is forced strictly above `b`.
    #[inline]
    pub fn above(&self, a: usize, b: usize) -> bool {
        self.reach[a].get(b)
    }

    fn forced_above_value(&self, cx: usize, c: Value) -> bool {
        if let Some(v) = self.class_value[cx] {
            return v > c;
        }
        // constants form a chain, so the smallest one >= c is the weakest witness
        let k = self.consts.partition_point(|d| *d < c);
        k < self.consts.len() && self.above(cx, self.const_class[k])
    }

    fn forced_below_value(&self, cx: usize, c: Value) -> bool {
        if let Some(v) = self.class_value[cx] {
            return v < c;
        }
        let k = self.consts.partition_point(|d| *d <= c);
        k > 0 && self.above(self.const_class[k - 1], cx)
    }

    /// Whether the relation holds in every solution. Assumes consistency.
    pub(crate) fn holds(&self, r: &Rel) -> bool {
        match *r {
            Rel::Eq(x, y) => {
                x == y
                    || matches!((self.class_of(x), self.class_of(y)), (Some(a), Some(b)) if a == b)
            }
            Rel::Gt(x, y) => match (self.class_of(x), self.class_of(y)) {
                (Some(a), Some(b)) => self.above(a, b),
                _ => false,
            },
            Rel::EqV(x, c) => self
                .class_of(x)
                .is_some_and(|a| self.class_value[a] == Some(c)),
            Rel::GtV(x, c) => self.class_of(x).is_some_and(|a| self.forced_above_value(a, c)),
            Rel::LtV(x, c) => self.class_of(x).is_some_and(|a| self.forced_below_value(a, c)),
        }
    }

    pub fn entails_atom(&self, atom: &NcAtom) -> bool {
        if !self.consistent {
            return true;
        }
        match Option::<Rel>::from(atom) {
            None => true,
            Some(r) => self.holds(&r),
        }
    }

    /// Atoms over `keep` whose conjunction is equivalent to the projection of
    /// this digest onto `keep`. Output is the transitive reduction of the
    /// order restricted to kept classes and constants, so equivalent inputs
    /// yield the same atoms.
    pub(crate) fn project(&self, keep: &dyn Fn(VarId) -> bool) -> Vec<NcAtom> {
        let nclasses = self.class_count();
        let mut rep: Vec<Option<VarId>> = vec![None; nclasses];
        let mut atoms = Vec::new();
        for (i, &v) in self.vars.iter().enumerate() {
            if !keep(v) {
                continue;
            }
            let cl = self.var_class[i];
            match rep[cl] {
                None => {
                    rep[cl] = Some(v);
                    if let Some(c) = self.class_value[cl] {
                        atoms.push(NcAtom::EqConst(v, c.to_integer()));
                    }
                }
                Some(r) => atoms.push(NcAtom::Eq(r, v)),
            }
        }
        let nodes: Vec<usize> = (0..nclasses)
            .filter(|&c| rep[c].is_some() || self.class_value[c].is_some())
            .collect();
        for &u in &nodes {
            for &w in &nodes {
                if u == w || !self.above(u, w) {
                    continue;
                }
                let (uc, wc) = (self.class_value[u], self.class_value[w]);
                if uc.is_some() && wc.is_some() {
                    continue;
                }
                let implied = nodes
                    .iter()
                    .any(|&m| m != u && m != w && self.above(u, m) && self.above(m, w));
                if implied {
                    continue;
                }
                atoms.push(match (uc, wc) {
                    (None, None) => NcAtom::Gt(rep[u].unwrap(), rep[w].unwrap()),
                    (None, Some(c)) => NcAtom::GtConst(rep[u].unwrap(), c.to_integer()),
                    (Some(c), None) => NcAtom::LtConst(rep[w].unwrap(), c.to_integer()),
                    (Some(_), Some(_)) => unreachable!(),
                });
            }
        }
        atoms
    }
}
