//! `.msr` files: one item per line.
//!
//! ```text
//! # comment lines directly above a rule become its origin
//! init: init
//! init -> fresh(x) | init_M(y) : x > 0, y = 0
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{Atom, GroundAtom, GroundConfig, MsrRule, MsrSpec, Signature};
use crate::error::ParseError;
use crate::lex::{lex, Cursor, Tok};
use crate::nc::{parse_atoms, NameScope, Named, NcConstraint, VarId};
use crate::value::Value;

const RESERVED: [&str; 4] = ["eps", "true", "false", "bot"];

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
        && !RESERVED.contains(&s)
}

/// Reads `eps` or `p(x, y) | q | ...`. New predicates are declared in `sig`
/// only when `declare` is set.
pub(crate) fn parse_atom_list(
    cur: &mut Cursor,
    sig: &mut Signature,
    scope: &mut NameScope,
    declare: bool,
) -> Result<Vec<Atom>, ParseError> {
    if cur.eat_keyword("eps") {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    loop {
        let (line, col) = cur.position();
        let name = cur.ident()?;
        let mut args = Vec::new();
        if cur.eat(&Tok::LParen) {
            if !cur.eat(&Tok::RParen) {
                loop {
                    args.push(scope.bind(cur.ident()?));
                    if cur.eat(&Tok::RParen) {
                        break;
                    }
                    cur.expect(&Tok::Comma)?;
                }
            }
        }
        let pred = match sig.lookup(name) {
            None if !declare => {
                return Err(ParseError::new(line, col, format!("unknown predicate `{name}`")))
            }
            _ => sig
                .intern(name, args.len())
                .map_err(|e| ParseError::new(line, col, e.to_string()))?,
        };
        out.push(Atom { pred, args });
        if !cur.eat(&Tok::Bar) {
            return Ok(out);
        }
    }
}

fn value(cur: &mut Cursor) -> Result<Value, ParseError> {
    let n = cur.int()?;
    if cur.eat(&Tok::Slash) {
        let (line, col) = cur.position();
        let d = cur.int()?;
        if d == 0 {
            return Err(ParseError::new(line, col, "zero denominator"));
        }
        return Ok(Value::new(n, d));
    }
    Ok(Value::from_integer(n))
}

/// Reads `eps` or `p(1, 1/2) | q | ...`.
pub(crate) fn parse_ground_list(
    cur: &mut Cursor,
    sig: &mut Signature,
    declare: bool,
) -> Result<GroundConfig, ParseError> {
    if cur.eat_keyword("eps") {
        return Ok(GroundConfig::default());
    }
    let mut out = Vec::new();
    loop {
        let (line, col) = cur.position();
        let name = cur.ident()?;
        let mut args = Vec::new();
        if cur.eat(&Tok::LParen) && !cur.eat(&Tok::RParen) {
            loop {
                args.push(value(cur)?);
                if cur.eat(&Tok::RParen) {
                    break;
                }
                cur.expect(&Tok::Comma)?;
            }
        }
        let pred = match sig.lookup(name) {
            None if !declare => {
                return Err(ParseError::new(line, col, format!("unknown predicate `{name}`")))
            }
            _ => sig
                .intern(name, args.len())
                .map_err(|e| ParseError::new(line, col, e.to_string()))?,
        };
        out.push(GroundAtom { pred, args });
        if !cur.eat(&Tok::Bar) {
            return Ok(GroundConfig::new(out));
        }
    }
}

/// Reads the constraint after `:`; an absent constraint is `true`.
pub(crate) fn parse_tail_constraint(
    cur: &mut Cursor,
    scope: &mut NameScope,
) -> Result<NcConstraint, ParseError> {
    if !cur.eat(&Tok::Colon) {
        return Ok(NcConstraint::truth());
    }
    let (atoms, contradiction) = parse_atoms(cur, scope)?;
    let c = NcConstraint::new(atoms);
    Ok(if contradiction {
        c.conjoin(&NcConstraint::falsity())
    } else {
        c
    })
}

fn parse_rule(cur: &mut Cursor, sig: &mut Signature) -> Result<MsrRule, ParseError> {
    let mut scope = NameScope::new();
    let head = parse_atom_list(cur, sig, &mut scope, true)?;
    cur.expect(&Tok::Arrow)?;
    let body = parse_atom_list(cur, sig, &mut scope, true)?;
    let constraint = parse_tail_constraint(cur, &mut scope)?;
    if !cur.at_end() {
        return Err(cur.unexpected("`:` or end of line"));
    }
    let mut rule = MsrRule::new(head, body, constraint);
    rule.names = scope.names().map(|(n, v)| (v, n.to_string())).collect();
    Ok(rule)
}

pub fn parse_spec(text: &str) -> Result<MsrSpec, ParseError> {
    let mut spec = MsrSpec::default();
    let mut origin: Vec<&str> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            origin.push(comment.trim());
            continue;
        }
        let toks = lex(raw).map_err(|e| e.offset(line_no, 0))?;
        if toks.is_empty() {
            origin.clear();
            continue;
        }
        let mut cur = Cursor::new(&toks, 1);
        let is_init = matches!(cur.peek(), Some(Tok::Ident(s)) if s == "init")
            && cur.peek_at(1) == Some(&Tok::Colon);
        if is_init {
            cur.next();
            cur.next();
            let g = parse_ground_list(&mut cur, &mut spec.sig, true).map_err(|e| e.offset(line_no, 0))?;
            if !cur.at_end() {
                return Err(cur.unexpected("`|` or end of line").offset(line_no, 0));
            }
            spec.initials.push(g);
        } else {
            let mut rule = parse_rule(&mut cur, &mut spec.sig).map_err(|e| e.offset(line_no, 0))?;
            rule.origin = origin.join("\n");
            spec.rules.push(rule);
        }
        origin.clear();
    }
    Ok(spec)
}

/// Display names for every variable of `rule`, distinct and re-readable.
fn display_names(rule: &MsrRule) -> BTreeMap<VarId, String> {
    let vars = rule.vars();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut out = BTreeMap::new();
    for &v in &vars {
        if let Some(n) = rule.names.get(&v) {
            if is_ident(n) && taken.insert(n.clone()) {
                out.insert(v, n.clone());
            }
        }
    }
    for &v in &vars {
        if out.contains_key(&v) {
            continue;
        }
        let mut n = match rule.names.get(&v) {
            Some(p) if is_ident(p) => format!("{p}_{}", v.0),
            _ => format!("x{}", v.0),
        };
        while !taken.insert(n.clone()) {
            n.push('_');
        }
        out.insert(v, n);
    }
    out
}

fn write_atoms(out: &mut String, atoms: &[Atom], sig: &Signature, names: &BTreeMap<VarId, String>) {
    if atoms.is_empty() {
        out.push_str("eps");
        return;
    }
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            out.push_str(" | ");
        }
        out.push_str(sig.name(a.pred));
        if !a.args.is_empty() {
            let args: Vec<&str> = a.args.iter().map(|v| names[v].as_str()).collect();
            let _ = write!(out, "({})", args.join(", "));
        }
    }
}

/// One line, without the origin comment.
pub fn write_rule(rule: &MsrRule, sig: &Signature) -> String {
    let names = display_names(rule);
    let mut out = String::new();
    write_atoms(&mut out, &rule.head, sig, &names);
    out.push_str(" -> ");
    write_atoms(&mut out, &rule.body, sig, &names);
    if !rule.constraint.is_true() {
        let name = |v: VarId| names[&v].clone();
        let _ = write!(
            out,
            " : {}",
            Named {
                constraint: &rule.constraint,
                name: &name
            }
        );
    }
    out
}

pub fn write_spec(spec: &MsrSpec) -> String {
    let mut out = String::new();
    for g in &spec.initials {
        let _ = writeln!(out, "init: {}", g.show(&spec.sig));
    }
    for r in &spec.rules {
        for line in r.origin.lines() {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{}", write_rule(r, &spec.sig));
    }
    out
}
