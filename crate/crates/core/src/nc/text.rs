use std::collections::BTreeMap;
use std::fmt;

use super::{NcAtom, NcConstraint, VarId, VarSupply};
use crate::error::ParseError;
use crate::lex::{lex, Cursor, Tok};

/// Binds textual variable names to identifiers while reading a constraint.
#[derive(Clone, Debug, Default)]
pub struct NameScope {
    names: BTreeMap<String, VarId>,
    supply: VarSupply,
}

impl NameScope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_supply(supply: VarSupply) -> Self {
        NameScope {
            names: BTreeMap::new(),
            supply,
        }
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn bind(&mut self, name: &str) -> VarId {
        if let Some(v) = self.names.get(name) {
            return *v;
        }
        let v = self.supply.fresh();
        self.names.insert(name.to_string(), v);
        v
    }

    /// A new identifier not bound to any name.
    pub fn fresh(&mut self) -> VarId {
        self.supply.fresh()
    }

    pub fn insert(&mut self, name: &str, v: VarId) {
        self.names.insert(name.to_string(), v);
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, VarId)> {
        self.names.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

enum Term {
    Var(VarId),
    Const(i64),
}

fn term(cur: &mut Cursor, scope: &mut NameScope) -> Result<Term, ParseError> {
    match cur.peek() {
        Some(Tok::Ident(_)) => Ok(Term::Var(scope.bind(cur.ident()?))),
        Some(Tok::Int(_)) | Some(Tok::Minus) => Ok(Term::Const(cur.int()?)),
        _ => Err(cur.unexpected("variable or integer")),
    }
}

pub(crate) fn parse_atoms(
    cur: &mut Cursor,
    scope: &mut NameScope,
) -> Result<(Vec<NcAtom>, bool), ParseError> {
    let mut atoms = Vec::new();
    let mut contradiction = false;
    loop {
        if cur.eat_keyword("true") {
            atoms.push(NcAtom::True);
        } else if cur.eat_keyword("false") {
            contradiction = true;
        } else {
            let (line, col) = cur.position();
            let lhs = term(cur, scope)?;
            let op = cur.next().cloned();
            let rhs = term(cur, scope)?;
            use Term::*;
            let atom = match (op, lhs, rhs) {
                (Some(Tok::Eq), Var(x), Var(y)) => NcAtom::Eq(x, y),
                (Some(Tok::Eq), Var(x), Const(c)) | (Some(Tok::Eq), Const(c), Var(x)) => {
                    NcAtom::EqConst(x, c)
                }
                (Some(Tok::Gt), Var(x), Var(y)) | (Some(Tok::Lt), Var(y), Var(x)) => {
                    NcAtom::Gt(x, y)
                }
                (Some(Tok::Gt), Var(x), Const(c)) | (Some(Tok::Lt), Const(c), Var(x)) => {
                    NcAtom::GtConst(x, c)
                }
                (Some(Tok::Lt), Var(x), Const(c)) | (Some(Tok::Gt), Const(c), Var(x)) => {
                    NcAtom::LtConst(x, c)
                }
                (Some(Tok::Eq | Tok::Gt | Tok::Lt), Const(_), Const(_)) => {
                    return Err(ParseError::new(line, col, "atom compares two constants"))
                }
                _ => return Err(ParseError::new(line, col, "expected `=`, `>` or `<`")),
            };
            atoms.push(atom);
        }
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    Ok((atoms, contradiction))
}

/// Reads `x = y, x > 0, z = 3` (or `true`). Names are bound through `scope`.
pub fn parse_constraint(text: &str, scope: &mut NameScope) -> Result<NcConstraint, ParseError> {
    let toks = lex(text)?;
    let mut cur = Cursor::new(&toks, 1);
    if cur.at_end() {
        return Ok(NcConstraint::truth());
    }
    let (atoms, contradiction) = parse_atoms(&mut cur, scope)?;
    if !cur.at_end() {
        return Err(cur.unexpected("`,` or end of constraint"));
    }
    let mut c = NcConstraint::new(atoms);
    if contradiction {
        c = c.conjoin(&NcConstraint::falsity());
    }
    Ok(c)
}

pub(crate) fn write_constraint(
    f: &mut fmt::Formatter<'_>,
    c: &NcConstraint,
    name: &dyn Fn(VarId) -> String,
) -> fmt::Result {
    if c.contradiction {
        return write!(f, "false");
    }
    if c.atoms.is_empty() {
        return write!(f, "true");
    }
    for (i, a) in c.atoms.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        match *a {
            NcAtom::True => write!(f, "true")?,
            NcAtom::Eq(x, y) => write!(f, "{} = {}", name(x), name(y))?,
            NcAtom::Gt(x, y) => write!(f, "{} > {}", name(x), name(y))?,
            NcAtom::EqConst(x, k) => write!(f, "{} = {k}", name(x))?,
            NcAtom::GtConst(x, k) => write!(f, "{} > {k}", name(x))?,
            NcAtom::LtConst(x, k) => write!(f, "{} < {k}", name(x))?,
        }
    }
    Ok(())
}

/// Renders a constraint with caller-chosen variable names.
pub struct Named<'a> {
    pub constraint: &'a NcConstraint,
    pub name: &'a dyn Fn(VarId) -> String,
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_constraint(f, self.constraint, self.name)
    }
}
