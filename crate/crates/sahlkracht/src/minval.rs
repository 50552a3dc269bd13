//! Minimal valuations: the KP/KV/KF operator tower.
//!
//! `kp` translates a positive formula into a set expression over set
//! variables; `kv` translates a regular box-formula into a one-hole
//! expression computing the relative minimal valuation of its head; `kf`
//! closes the tower over a requirement map, yielding plain expressions whose
//! value is the absolute minimal valuation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::regular::{validate_regular, RegularError};
use crate::semantics::{Env, Frame, Valuation, World};
use crate::syntax::{substitute_hole, substitute_setvars, LExpr, ModalFormula, ObjVar, PropVar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MinvalError {
    #[error("formula is not positive: `{0}`")]
    NotPositive(ModalFormula),
    #[error("not a regular box-formula: {0}")]
    NotRegular(#[from] RegularError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound object variable {0}")]
    UnboundObjVar(ObjVar),
    #[error("unbound set variable {0}")]
    UnboundSetVar(PropVar),
    #[error("expression contains a hole")]
    HolePresent,
}

/// Translate a positive formula: variables become set variables, `&` becomes
/// intersection, `|` union, diamonds the existential preimage, boxes the
/// universal preimage.
pub fn kp(pos: &ModalFormula) -> Result<LExpr, MinvalError> {
    Ok(match pos {
        ModalFormula::Top => LExpr::Top,
        ModalFormula::Bot => LExpr::Bot,
        ModalFormula::Var(p) => LExpr::SetVar(p.clone()),
        ModalFormula::And(l, r) => LExpr::cap(kp(l)?, kp(r)?),
        ModalFormula::Or(l, r) => LExpr::cup(kp(l)?, kp(r)?),
        ModalFormula::Dia(label, a) => LExpr::inv(*label, kp(a)?),
        ModalFormula::Box(label, a) => LExpr::ibox(*label, kp(a)?),
        other => return Err(MinvalError::NotPositive(other.clone())),
    })
}

/// The relative minimal valuation of a regular box-formula's head, as a
/// one-hole expression: the head becomes the hole, a guard intersects the
/// hole with its `kp` translation, a box wraps the hole in an image.
pub fn kv(formula: &ModalFormula) -> Result<LExpr, MinvalError> {
    validate_regular(formula)?;
    kv_unchecked(formula)
}

fn kv_unchecked(formula: &ModalFormula) -> Result<LExpr, MinvalError> {
    Ok(match formula {
        ModalFormula::Var(_) => LExpr::Hole,
        ModalFormula::Implies(pos, rest) => {
            let inner = kv_unchecked(rest)?;
            debug_assert_eq!(inner.hole_count(), 1);
            substitute_hole(&inner, &LExpr::cap(kp(pos)?, LExpr::Hole))
        }
        ModalFormula::Box(label, rest) => {
            let inner = kv_unchecked(rest)?;
            debug_assert_eq!(inner.hole_count(), 1);
            substitute_hole(&inner, &LExpr::img(*label, LExpr::Hole))
        }
        other => {
            return Err(MinvalError::NotRegular(
                crate::regular::NotBoxFormula {
                    offending: other.clone(),
                }
                .into(),
            ))
        }
    })
}

/// A requirement map: finitely many regular box-formulas demanded at each
/// object variable. Construction validates every formula against its
/// stamped ranks.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RequirementMap {
    assignments: BTreeMap<ObjVar, Vec<ModalFormula>>,
}

impl RequirementMap {
    pub fn new(
        assignments: impl IntoIterator<Item = (ObjVar, Vec<ModalFormula>)>,
    ) -> Result<RequirementMap, MinvalError> {
        let mut map: BTreeMap<ObjVar, Vec<ModalFormula>> = BTreeMap::new();
        for (x, formulas) in assignments {
            let slot = map.entry(x).or_default();
            for f in formulas {
                validate_regular(&f)?;
                if !slot.contains(&f) {
                    slot.push(f);
                }
            }
        }
        Ok(RequirementMap { assignments: map })
    }

    pub fn empty() -> RequirementMap {
        RequirementMap::default()
    }

    pub fn insert(&mut self, x: ObjVar, formula: ModalFormula) -> Result<(), MinvalError> {
        validate_regular(&formula)?;
        let slot = self.assignments.entry(x).or_default();
        if !slot.contains(&formula) {
            slot.push(formula);
        }
        Ok(())
    }

    pub fn domain(&self) -> impl Iterator<Item = ObjVar> + '_ {
        self.assignments.keys().copied()
    }

    pub fn formulas_at(&self, x: ObjVar) -> &[ModalFormula] {
        self.assignments
            .get(&x)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjVar, &ModalFormula)> {
        self.assignments
            .iter()
            .flat_map(|(x, fs)| fs.iter().map(move |f| (*x, f)))
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.values().all(|v| v.is_empty())
    }

    /// Every propositional variable occurring anywhere in the map.
    pub fn prop_vars(&self) -> Vec<PropVar> {
        let mut out = std::collections::BTreeSet::new();
        for (_, f) in self.iter() {
            out.extend(f.vars());
        }
        out.into_iter().collect()
    }

    /// Merge another map in, keeping both requirement sets.
    pub fn absorb(&mut self, other: RequirementMap) {
        for (x, fs) in other.assignments {
            let slot = self.assignments.entry(x).or_default();
            for f in fs {
                if !slot.contains(&f) {
                    slot.push(f);
                }
            }
        }
    }
}

/// One branch of the absolute minimal valuation: the `kv` translation of a
/// single requirement, anchored at its object variable, with lower-rank set
/// variables closed recursively.
pub fn kf_branch(
    f: &RequirementMap,
    x: ObjVar,
    formula: &ModalFormula,
) -> Result<LExpr, MinvalError> {
    let mut memo = BTreeMap::new();
    kf_branch_memo(f, x, formula, &mut memo)
}

fn kf_branch_memo(
    f: &RequirementMap,
    x: ObjVar,
    formula: &ModalFormula,
    memo: &mut BTreeMap<PropVar, Vec<LExpr>>,
) -> Result<LExpr, MinvalError> {
    let relative = kv(formula)?;
    let anchored = substitute_hole(&relative, &LExpr::ObjVar(x));
    let mut bindings = BTreeMap::new();
    for p in anchored.set_vars() {
        let branches = kf_memo(f, &p, memo)?;
        bindings.insert(p, LExpr::cups(branches));
    }
    Ok(substitute_setvars(&anchored, &bindings).expect("all set variables bound"))
}

/// The absolute minimal valuation of a variable under a requirement map, as
/// a union of branches (one per requirement headed by the variable). An
/// empty union denotes the empty set.
pub fn kf(f: &RequirementMap, p: &PropVar) -> Result<Vec<LExpr>, MinvalError> {
    let mut memo = BTreeMap::new();
    kf_memo(f, p, &mut memo)
}

fn kf_memo(
    f: &RequirementMap,
    p: &PropVar,
    memo: &mut BTreeMap<PropVar, Vec<LExpr>>,
) -> Result<Vec<LExpr>, MinvalError> {
    if let Some(done) = memo.get(p) {
        return Ok(done.clone());
    }
    let mut branches = Vec::new();
    for (x, formula) in f.iter() {
        let shape = validate_regular(formula)?;
        if &shape.head == p {
            branches.push(kf_branch_memo(f, x, formula, memo)?);
        }
    }
    memo.insert(p.clone(), branches.clone());
    Ok(branches)
}

/// Set-theoretic value of an expression over a frame: object variables are
/// singletons, set variables look up the valuation, `inv` is the existential
/// preimage, `ibox` the universal preimage, `img` the image.
pub fn eval_expr(
    e: &LExpr,
    frame: &Frame,
    env: &Env,
    valuation: &Valuation,
) -> Result<u64, EvalError> {
    Ok(match e {
        LExpr::ObjVar(x) => {
            let w = env.get(x).copied().ok_or(EvalError::UnboundObjVar(*x))?;
            1u64 << w
        }
        LExpr::SetVar(p) => *valuation
            .get(p)
            .ok_or_else(|| EvalError::UnboundSetVar(p.clone()))?,
        LExpr::Hole => return Err(EvalError::HolePresent),
        LExpr::Top => frame.full(),
        LExpr::Bot => 0,
        LExpr::Cap(l, r) => {
            eval_expr(l, frame, env, valuation)? & eval_expr(r, frame, env, valuation)?
        }
        LExpr::Cup(l, r) => {
            eval_expr(l, frame, env, valuation)? | eval_expr(r, frame, env, valuation)?
        }
        LExpr::Inv(label, a) => frame.preimage(*label, eval_expr(a, frame, env, valuation)?),
        LExpr::IBox(label, a) => {
            frame.preimage_universal(*label, eval_expr(a, frame, env, valuation)?)
        }
        LExpr::Img(label, a) => frame.image(*label, eval_expr(a, frame, env, valuation)?),
    })
}

/// Evaluate a union of branches.
pub fn eval_union(
    branches: &[LExpr],
    frame: &Frame,
    env: &Env,
    valuation: &Valuation,
) -> Result<u64, EvalError> {
    let mut out = 0u64;
    for b in branches {
        out |= eval_expr(b, frame, env, valuation)?;
    }
    Ok(out)
}

/// The smallest valuation making every requirement true at its anchor:
/// each variable gets the value of its `kf` union.
pub fn minimal_valuation(
    f: &RequirementMap,
    frame: &Frame,
    env: &Env,
) -> Result<Valuation, MinvalError> {
    let mut memo = BTreeMap::new();
    let mut out = Valuation::new();
    for p in f.prop_vars() {
        let branches = kf_memo(f, &p, &mut memo)?;
        let value = eval_union(&branches, frame, env, &Valuation::new())
            .expect("kf output is a closed expression over the map's domain");
        out.insert(p, value);
    }
    Ok(out)
}

/// Check a requirement map under a given valuation: every formula true at
/// its anchor point.
pub fn satisfies(
    f: &RequirementMap,
    frame: &Frame,
    env: &Env,
    valuation: &Valuation,
) -> bool {
    f.iter().all(|(x, formula)| {
        let w: World = env[&x];
        match crate::semantics::truth_set_in(frame, valuation, formula) {
            Ok(set) => set & (1u64 << w) != 0,
            Err(_) => false,
        }
    })
}

/// All valuations of the given variables over a frame, for brute-force
/// comparisons in tests and the oracle suites.
pub fn all_valuations(frame: &Frame, vars: &[PropVar]) -> Vec<Valuation> {
    let n = frame.world_count();
    let bits = (n as usize) * vars.len();
    assert!(bits <= 24, "valuation space too large to enumerate");
    let mut out = Vec::with_capacity(1 << bits);
    for code in 0u64..(1u64 << bits) {
        let mut v = Valuation::new();
        for (i, p) in vars.iter().enumerate() {
            let chunk = (code >> (i * n as usize)) & ((1u64 << n) - 1);
            v.insert(p.clone(), chunk);
        }
        out.push(v);
    }
    out
}

#[allow(unused_imports)]
use crate::semantics::Model;
