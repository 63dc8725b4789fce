//! The monadic fragment: threads with at most one local and templates with
//! at most one variable. Its encodings are verified after replacing the
//! constant 0 by the argument of an auxiliary `zero` atom.

use serde::Serialize;

use crate::msr::{Atom, MsrRule, MsrSpec, Signature};
use crate::nc::{NcAtom, NcConstraint, VarId, VarSupply};
use crate::symbolic::{parse_unsafe, sbr, ConstrainedConfig, SbrOptions, SbrResult, Verdict};
use crate::tdl::{Action, Program};
use crate::tdl2msr::translate;

pub const ZERO_PREDICATE: &str = "zero";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationReason {
    TooManyLocals,
    WideTemplate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub thread: String,
    pub reason: ViolationReason,
    /// Rule source line for template violations, 0 otherwise.
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonadicReport {
    pub is_monadic: bool,
    pub violations: Vec<Violation>,
}

pub fn check_monadic(p: &Program) -> MonadicReport {
    let mut violations = Vec::new();
    for t in &p.threads {
        if t.locals.len() > 1 {
            violations.push(Violation {
                thread: t.name.clone(),
                reason: ViolationReason::TooManyLocals,
                line: 0,
            });
        }
        for r in &t.rules {
            let width = match &r.action {
                Action::Send { template, .. } | Action::Receive { template, .. } => template.len(),
                _ => 0,
            };
            if width > 1 {
                violations.push(Violation {
                    thread: t.name.clone(),
                    reason: ViolationReason::WideTemplate,
                    line: r.pos.line,
                });
            }
        }
    }
    MonadicReport {
        is_monadic: violations.is_empty(),
        violations,
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MonadicError {
    #[error("constant {constant} in rule {rule} cannot be expressed through `zero`")]
    NonZeroConstant { rule: usize, constant: i64 },
    #[error("constant {constant} in an unsafe configuration cannot be expressed through `zero`")]
    NonZeroUnsafe { constant: i64 },
    #[error("predicate `zero` is already used by the specification")]
    ZeroTaken,
    #[error("program is not monadic: {0:?}")]
    NotMonadic(Vec<Violation>),
    #[error("translation failed: {0}")]
    Translation(String),
    #[error("unsafe configurations: {0}")]
    Unsafe(String),
}

/// Rewrites `x = 0`, `x > 0` and `x < 0` against `z` and reports whether any
/// atom mentioned the constant.
fn rewrite_constants(c: &NcConstraint, z: VarId) -> Result<(NcConstraint, bool), i64> {
    let mut used = false;
    let mut out = Vec::with_capacity(c.atoms().len());
    for a in c.atoms() {
        let b = match *a {
            NcAtom::EqConst(x, 0) => NcAtom::Eq(x, z),
            NcAtom::GtConst(x, 0) => NcAtom::Gt(x, z),
            NcAtom::LtConst(x, 0) => NcAtom::Gt(z, x),
            other => match other.constant() {
                Some(k) => return Err(k),
                None => other,
            },
        };
        used |= b != *a;
        out.push(b);
    }
    Ok((NcConstraint::new(out), used))
}

/// Replaces the constant 0 by a `zero(z)` atom. The rules consuming an
/// initial atom create `zero`; every other rule that needs the constant
/// reads `zero(z)` and writes back `zero(z')` with `z' = z`.
pub fn zero_transform(spec: &MsrSpec) -> Result<MsrSpec, MonadicError> {
    if spec.sig.lookup(ZERO_PREDICATE).is_some() {
        return Err(MonadicError::ZeroTaken);
    }
    let mut sig = spec.sig.clone();
    let zero = sig.intern(ZERO_PREDICATE, 1).expect("fresh predicate");
    let roots: Vec<_> = spec
        .initials
        .iter()
        .flat_map(|g| g.atoms().iter().map(|a| a.pred))
        .collect();
    let mut rules = Vec::with_capacity(spec.rules.len());
    for (i, r) in spec.rules.iter().enumerate() {
        let mut supply = VarSupply::above(&r.vars());
        let z = supply.fresh();
        let (constraint, used) = rewrite_constants(&r.constraint, z)
            .map_err(|constant| MonadicError::NonZeroConstant { rule: i, constant })?;
        let creates = r.head.iter().any(|a| roots.contains(&a.pred));
        let mut out = MsrRule {
            constraint,
            ..r.clone()
        };
        if creates {
            out.body.push(Atom { pred: zero, args: vec![z] });
            out.names.insert(z, "z".into());
        } else if used {
            let z2 = supply.fresh();
            out.head.push(Atom { pred: zero, args: vec![z] });
            out.body.push(Atom { pred: zero, args: vec![z2] });
            out.constraint = out.constraint.with([NcAtom::Eq(z2, z)]);
            out.names.insert(z, "z".into());
            out.names.insert(z2, "z'".into());
        }
        rules.push(out);
    }
    Ok(MsrSpec {
        sig,
        initials: spec.initials.clone(),
        rules,
    })
}

/// Brings unsafe configurations into the constant-free setting by adding a
/// `zero` atom wherever the constant 0 is mentioned.
pub fn zero_transform_unsafe(
    configs: &[ConstrainedConfig],
    sig: &Signature,
) -> Result<Vec<ConstrainedConfig>, MonadicError> {
    let zero = sig.lookup(ZERO_PREDICATE).ok_or(MonadicError::ZeroTaken)?;
    let mut out = Vec::with_capacity(configs.len());
    for c in configs {
        let z = VarId(c.var_count());
        let (constraint, used) =
            rewrite_constants(c.constraint(), z).map_err(|constant| MonadicError::NonZeroUnsafe { constant })?;
        let mut atoms = c.atoms().to_vec();
        if used {
            atoms.push(Atom { pred: zero, args: vec![z] });
        }
        if let Some(t) = ConstrainedConfig::new(atoms, constraint) {
            out.push(t);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct MonadicVerification {
    pub spec: MsrSpec,
    pub unsafe_set: Vec<ConstrainedConfig>,
    pub result: SbrResult,
    /// Set when the run stopped at a limit, which the fragment should rule out.
    pub warning: Option<String>,
}

/// Translates, removes constants and runs backward reachability. The unsafe
/// configurations are read against the translated predicates.
pub fn verify_monadic(
    p: &Program,
    unsafe_text: &str,
    opts: SbrOptions,
) -> Result<MonadicVerification, MonadicError> {
    let report = check_monadic(p);
    if !report.is_monadic {
        return Err(MonadicError::NotMonadic(report.violations));
    }
    let tr = translate(p).map_err(|ds| {
        let msgs: Vec<String> = ds.iter().map(|d| d.to_string()).collect();
        MonadicError::Translation(msgs.join("; "))
    })?;
    let spec = zero_transform(&tr.spec)?;
    let bad = parse_unsafe(unsafe_text, &spec.sig).map_err(|e| MonadicError::Unsafe(e.to_string()))?;
    let unsafe_set = zero_transform_unsafe(&bad, &spec.sig)?;
    let result = sbr(&spec, &unsafe_set, opts);
    let warning = match &result.verdict {
        Verdict::BoundExceeded { reason } => Some(format!(
            "backward reachability on a monadic program stopped without a verdict ({reason})"
        )),
        _ => None,
    };
    Ok(MonadicVerification {
        spec,
        unsafe_set,
        result,
        warning,
    })
}
