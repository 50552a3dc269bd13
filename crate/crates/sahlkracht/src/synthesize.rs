//! First-order to modal: recognize generalized Kracht formulas, eliminate
//! restricted existentials into quasi-safe atoms, and rebuild a generalized
//! Sahlqvist formula.
//!
//! The rebuild carries each subformula as a guarded assertion "under every
//! valuation, either some anchor fails its requirements or this boolean
//! combination of pointwise modal assertions holds". Atoms enter through
//! the definability of membership in quasi-safe expressions; conjunction and
//! disjunction combine assertions (their requirement pools are disjoint by
//! construction); a restricted universal folds the bound variable's
//! requirement failures and assertions into a box at the anchor. Every
//! synthesis can be re-checked against the finite-frame oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::correspond::VarGen;
use crate::minval::{MinvalError, RequirementMap};
use crate::regular::{assign_ranks, RegularError};
use crate::safety::{analyze_safety, safe_subexpressions, SafetyError, SafetyStatus};
use crate::semantics::{check_correspondence, Budget, CounterExample};
use crate::syntax::{
    free_vars, rename_clean, FOFormula, LExpr, Label, ModalFormula, ObjVar, PropVar,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthesizeError {
    #[error("not a generalized Kracht formula: {0}")]
    NotKracht(String),
    #[error("atom expression is neither safe nor quasi-safe: `{0}`")]
    NotNormalizable(LExpr),
    #[error("expression is not safe: `{0}`")]
    NotSafe(LExpr),
    #[error("no head variable for safe subexpression `{0}`")]
    MissingHead(LExpr),
    #[error("synthesized formula failed verification: {0}")]
    VerificationFailed(CounterExample),
    #[error(transparent)]
    Regular(#[from] RegularError),
    #[error(transparent)]
    Minval(#[from] MinvalError),
    #[error(transparent)]
    Safety(#[from] SafetyError),
}

// ---------------------------------------------------------------------------
// Recognition
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KrachtStatus {
    Kracht,
    Not,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KrachtVerdict {
    pub status: KrachtStatus,
    pub inherently_universal: BTreeSet<ObjVar>,
    pub reasons: Vec<String>,
    /// The cleaned and normalized formula, when normalization succeeded.
    pub normalized: Option<FOFormula>,
}

impl KrachtVerdict {
    pub fn is_kracht(&self) -> bool {
        self.status == KrachtStatus::Kracht
    }
}

/// Free variables plus variables bound by a restricted universal quantifier
/// that is not inside any existential.
fn inherently_universal(f: &FOFormula) -> BTreeSet<ObjVar> {
    let mut out = free_vars(f);
    fn walk(f: &FOFormula, under_exists: bool, out: &mut BTreeSet<ObjVar>) {
        match f {
            FOFormula::RForall(y, _, _, b) => {
                if !under_exists {
                    out.insert(*y);
                }
                walk(b, under_exists, out);
            }
            FOFormula::Forall(_, b) => walk(b, under_exists, out),
            FOFormula::RExists(_, _, _, b) | FOFormula::Exists(_, b) => walk(b, true, out),
            FOFormula::Not(a) => walk(a, under_exists, out),
            FOFormula::And(l, r) | FOFormula::Or(l, r) => {
                walk(l, under_exists, out);
                walk(r, under_exists, out);
            }
            _ => {}
        }
    }
    walk(f, false, &mut out);
    out
}

/// Decide membership in the generalized Kracht class. The formula is
/// cleaned and normalized first; the verdict lists every violation found.
pub fn check_kracht(formula: &FOFormula) -> KrachtVerdict {
    let cleaned = rename_clean(formula);
    let universal = inherently_universal(&cleaned);
    let mut reasons = Vec::new();
    let normalized = match normalize_kracht(&cleaned) {
        Ok(n) => Some(n),
        Err(e) => {
            reasons.push(e.to_string());
            None
        }
    };
    let subject = normalized.as_ref().unwrap_or(&cleaned);

    let free = free_vars(subject);
    if free.len() > 1 {
        reasons.push(format!(
            "more than one free variable: {}",
            free.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }

    fn scan(
        f: &FOFormula,
        universal: &BTreeSet<ObjVar>,
        reasons: &mut Vec<String>,
    ) {
        match f {
            FOFormula::Member(_, e) => {
                match analyze_safety(e) {
                    Ok(v) if v.status == SafetyStatus::Safe => {}
                    Ok(_) => reasons.push(format!("atom expression is not safe: `{}`", e)),
                    Err(err) => reasons.push(format!("atom expression `{}`: {}", e, err)),
                }
                for p in e.obj_vars() {
                    if !universal.contains(&p) {
                        reasons.push(format!(
                            "parameter {} of `{}` is not inherently universal",
                            p, e
                        ));
                    }
                }
            }
            FOFormula::Top | FOFormula::Bot => {}
            FOFormula::Rel(_, _, _) => {
                reasons.push(format!("relational atom `{}` is not restrictedly positive", f))
            }
            FOFormula::Eq(_, _) => {
                reasons.push(format!("equality atom `{}` is not restrictedly positive", f))
            }
            FOFormula::Not(_) => {
                reasons.push(format!("negation `{}` is not restrictedly positive", f))
            }
            FOFormula::Forall(_, _) | FOFormula::Exists(_, _) => reasons.push(format!(
                "unrestricted quantifier in `{}` is not restrictedly positive",
                f
            )),
            FOFormula::And(l, r) | FOFormula::Or(l, r) => {
                scan(l, universal, reasons);
                scan(r, universal, reasons);
            }
            FOFormula::RForall(_, _, _, b) | FOFormula::RExists(_, _, _, b) => {
                scan(b, universal, reasons)
            }
        }
    }
    scan(subject, &universal, &mut reasons);

    KrachtVerdict {
        status: if reasons.is_empty() {
            KrachtStatus::Kracht
        } else {
            KrachtStatus::Not
        },
        inherently_universal: universal,
        reasons,
        normalized,
    }
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Rewrite towards the Kracht atom discipline: clean the formula, orient
/// relational and equality atoms around inherently universal variables, and
/// peel quasi-safe atom expressions into restricted quantifiers until every
/// atom expression is safe.
pub fn normalize_kracht(formula: &FOFormula) -> Result<FOFormula, SynthesizeError> {
    let cleaned = rename_clean(formula);
    let universal = inherently_universal(&cleaned);
    let top = cleaned.all_vars().iter().map(|v| v.0 + 1).max().unwrap_or(0);
    let mut gen = VarGen::starting_at(top);
    rewrite(&cleaned, &universal, &mut gen)
}

fn rewrite(
    f: &FOFormula,
    universal: &BTreeSet<ObjVar>,
    gen: &mut VarGen,
) -> Result<FOFormula, SynthesizeError> {
    Ok(match f {
        FOFormula::Eq(a, b) => {
            if universal.contains(b) {
                peel_atom(*a, &LExpr::ObjVar(*b), gen)?
            } else if universal.contains(a) {
                peel_atom(*b, &LExpr::ObjVar(*a), gen)?
            } else {
                f.clone()
            }
        }
        FOFormula::Rel(label, a, b) => {
            if universal.contains(a) {
                peel_atom(*b, &LExpr::img(*label, LExpr::ObjVar(*a)), gen)?
            } else if universal.contains(b) {
                let z = gen.fresh();
                FOFormula::rexists(z, *label, *a, FOFormula::Member(z, LExpr::ObjVar(*b)))
            } else {
                f.clone()
            }
        }
        FOFormula::Member(s, e) => peel_atom(*s, e, gen)?,
        FOFormula::Top | FOFormula::Bot => f.clone(),
        FOFormula::Not(a) => FOFormula::not(rewrite(a, universal, gen)?),
        FOFormula::And(l, r) => FOFormula::and(
            rewrite(l, universal, gen)?,
            rewrite(r, universal, gen)?,
        ),
        FOFormula::Or(l, r) => FOFormula::or(
            rewrite(l, universal, gen)?,
            rewrite(r, universal, gen)?,
        ),
        FOFormula::RForall(y, label, x, b) => {
            FOFormula::rforall(*y, *label, *x, rewrite(b, universal, gen)?)
        }
        FOFormula::RExists(y, label, x, b) => {
            FOFormula::rexists(*y, *label, *x, rewrite(b, universal, gen)?)
        }
        FOFormula::Forall(y, b) => FOFormula::forall(*y, rewrite(b, universal, gen)?),
        FOFormula::Exists(y, b) => FOFormula::exists(*y, rewrite(b, universal, gen)?),
    })
}

/// Peel the outer positive operators of a quasi-safe atom expression into
/// connectives and restricted quantifiers until the expression is safe.
fn peel_atom(
    subject: ObjVar,
    e: &LExpr,
    gen: &mut VarGen,
) -> Result<FOFormula, SynthesizeError> {
    let verdict = analyze_safety(e).map_err(|_| SynthesizeError::NotNormalizable(e.clone()))?;
    match verdict.status {
        SafetyStatus::Safe => Ok(FOFormula::Member(subject, e.clone())),
        SafetyStatus::Neither => Err(SynthesizeError::NotNormalizable(e.clone())),
        SafetyStatus::QuasiSafe => Ok(match e {
            LExpr::Top => FOFormula::Top,
            LExpr::Bot => FOFormula::Bot,
            LExpr::Cap(l, r) => FOFormula::and(
                peel_atom(subject, l, gen)?,
                peel_atom(subject, r, gen)?,
            ),
            LExpr::Cup(l, r) => FOFormula::or(
                peel_atom(subject, l, gen)?,
                peel_atom(subject, r, gen)?,
            ),
            LExpr::Inv(label, a) => {
                let z = gen.fresh();
                FOFormula::rexists(z, *label, subject, peel_atom(z, a, gen)?)
            }
            LExpr::IBox(label, a) => {
                let z = gen.fresh();
                FOFormula::rforall(z, *label, subject, peel_atom(z, a, gen)?)
            }
            _ => unreachable!("quasi-safe but not safe is a positive combination node"),
        }),
    }
}

// ---------------------------------------------------------------------------
// Quantifier elimination
// ---------------------------------------------------------------------------

/// Replace every maximal restricted-existential subformula, innermost first,
/// by a quantifier-free formula over quasi-safe atoms: disjunctive normal
/// form under an existential (bound-variable atoms intersect into an `inv`
/// atom at the anchor), conjunctive normal form under a universal inside it
/// (bound-variable atoms union into an `ibox` atom).
pub fn quantifier_eliminate(formula: &FOFormula) -> Result<FOFormula, SynthesizeError> {
    Ok(match formula {
        FOFormula::And(l, r) => FOFormula::and(
            quantifier_eliminate(l)?,
            quantifier_eliminate(r)?,
        ),
        FOFormula::Or(l, r) => FOFormula::or(
            quantifier_eliminate(l)?,
            quantifier_eliminate(r)?,
        ),
        FOFormula::RForall(y, label, x, b) => {
            let body = quantifier_eliminate(b)?;
            // A universal whose variable occurs only as an atom subject is
            // absorbed like the inner case; one binding a parameter stays.
            if quantifier_free(&body) && !is_parameter(&body, *y) {
                eliminate_forall(*y, *label, *x, &body)
            } else {
                FOFormula::rforall(*y, *label, *x, body)
            }
        }
        FOFormula::RExists(y, label, x, b) => {
            let body = eliminate_all(b)?;
            eliminate_exists(*y, *label, *x, &body)
        }
        FOFormula::Member(_, _) | FOFormula::Top | FOFormula::Bot => formula.clone(),
        other => {
            return Err(SynthesizeError::NotKracht(format!(
                "quantifier elimination applies to normalized formulas, found `{}`",
                other
            )))
        }
    })
}

fn quantifier_free(f: &FOFormula) -> bool {
    match f {
        FOFormula::Member(_, _) | FOFormula::Top | FOFormula::Bot => true,
        FOFormula::And(l, r) | FOFormula::Or(l, r) => quantifier_free(l) && quantifier_free(r),
        _ => false,
    }
}

fn is_parameter(f: &FOFormula, y: ObjVar) -> bool {
    match f {
        FOFormula::Member(_, e) => e.obj_vars().contains(&y),
        FOFormula::And(l, r) | FOFormula::Or(l, r) => is_parameter(l, y) || is_parameter(r, y),
        _ => false,
    }
}

fn eliminate_all(formula: &FOFormula) -> Result<FOFormula, SynthesizeError> {
    Ok(match formula {
        FOFormula::And(l, r) => FOFormula::and(eliminate_all(l)?, eliminate_all(r)?),
        FOFormula::Or(l, r) => FOFormula::or(eliminate_all(l)?, eliminate_all(r)?),
        FOFormula::RExists(y, label, x, b) => {
            let body = eliminate_all(b)?;
            eliminate_exists(*y, *label, *x, &body)
        }
        FOFormula::RForall(y, label, x, b) => {
            let body = eliminate_all(b)?;
            eliminate_forall(*y, *label, *x, &body)
        }
        FOFormula::Member(_, _) | FOFormula::Top | FOFormula::Bot => formula.clone(),
        other => {
            return Err(SynthesizeError::NotKracht(format!(
                "quantifier elimination applies to normalized formulas, found `{}`",
                other
            )))
        }
    })
}

/// Disjuncts-of-conjunctions view of a quantifier-free formula.
fn dnf(f: &FOFormula) -> Vec<Vec<FOFormula>> {
    match f {
        FOFormula::Top => vec![vec![]],
        FOFormula::Bot => vec![],
        FOFormula::Or(l, r) => {
            let mut out = dnf(l);
            out.extend(dnf(r));
            out
        }
        FOFormula::And(l, r) => {
            let ls = dnf(l);
            let rs = dnf(r);
            let mut out = Vec::with_capacity(ls.len() * rs.len());
            for a in &ls {
                for b in &rs {
                    let mut k = a.clone();
                    k.extend(b.iter().cloned());
                    out.push(k);
                }
            }
            out
        }
        atom => vec![vec![atom.clone()]],
    }
}

fn cnf(f: &FOFormula) -> Vec<Vec<FOFormula>> {
    match f {
        FOFormula::Bot => vec![vec![]],
        FOFormula::Top => vec![],
        FOFormula::And(l, r) => {
            let mut out = cnf(l);
            out.extend(cnf(r));
            out
        }
        FOFormula::Or(l, r) => {
            let ls = cnf(l);
            let rs = cnf(r);
            let mut out = Vec::with_capacity(ls.len() * rs.len());
            for a in &ls {
                for b in &rs {
                    let mut k = a.clone();
                    k.extend(b.iter().cloned());
                    out.push(k);
                }
            }
            out
        }
        atom => vec![vec![atom.clone()]],
    }
}

fn split_on_subject(
    atoms: &[FOFormula],
    y: ObjVar,
) -> (Vec<LExpr>, Vec<FOFormula>) {
    let mut bound_exprs = Vec::new();
    let mut rest = Vec::new();
    for atom in atoms {
        match atom {
            FOFormula::Member(s, e) if *s == y => {
                debug_assert!(!e.obj_vars().contains(&y), "bound variable as parameter");
                bound_exprs.push(e.clone());
            }
            other => rest.push(other.clone()),
        }
    }
    (bound_exprs, rest)
}

fn eliminate_exists(y: ObjVar, label: Label, x: ObjVar, body: &FOFormula) -> FOFormula {
    let disjuncts = dnf(body);
    let mut out = Vec::with_capacity(disjuncts.len());
    for conj in disjuncts {
        let (bound, mut rest) = split_on_subject(&conj, y);
        rest.push(FOFormula::Member(x, LExpr::inv(label, LExpr::caps(bound))));
        out.push(FOFormula::conj(rest));
    }
    FOFormula::disj(out)
}

fn eliminate_forall(y: ObjVar, label: Label, x: ObjVar, body: &FOFormula) -> FOFormula {
    let conjuncts = cnf(body);
    let mut out = Vec::with_capacity(conjuncts.len());
    for disj in conjuncts {
        let (bound, mut rest) = split_on_subject(&disj, y);
        rest.push(FOFormula::Member(x, LExpr::ibox(label, LExpr::cups(bound))));
        out.push(FOFormula::disj(rest));
    }
    FOFormula::conj(out)
}

// ---------------------------------------------------------------------------
// Expression synthesis (completeness of the safe class)
// ---------------------------------------------------------------------------

struct PropAlloc {
    next: u32,
}

impl PropAlloc {
    fn new() -> PropAlloc {
        PropAlloc { next: 0 }
    }

    fn fresh(&mut self) -> PropVar {
        let p = PropVar::new(0, self.next);
        self.next += 1;
        p
    }
}

/// Requirement slots under construction, before ranks are assigned.
type Builder = BTreeMap<ObjVar, Vec<ModalFormula>>;

struct SynthOne {
    map: Builder,
    head: PropVar,
    main_at: ObjVar,
    main_idx: usize,
}

impl SynthOne {
    fn wrap_main(&mut self, f: impl FnOnce(ModalFormula) -> ModalFormula) {
        let slot = self.map.get_mut(&self.main_at).expect("main slot exists");
        let old = slot[self.main_idx].clone();
        slot[self.main_idx] = f(old);
    }

    /// Merge another builder's slots in, after this one's entries.
    fn absorb(&mut self, other: Builder) {
        for (x, fs) in other {
            self.map.entry(x).or_default().extend(fs);
        }
    }
}

fn is_safe(e: &LExpr) -> bool {
    matches!(
        analyze_safety(e),
        Ok(v) if v.status == SafetyStatus::Safe
    )
}

/// The path of child indexes from the root of a safe expression to an
/// object-variable leaf, passing only through safe subexpressions
/// (leftmost such path).
fn safe_path(e: &LExpr) -> Vec<usize> {
    let mut path = Vec::new();
    let mut cur = e;
    loop {
        match cur {
            LExpr::ObjVar(_) => return path,
            LExpr::Img(_, a) => {
                path.push(0);
                cur = a;
            }
            LExpr::Cap(l, r) => {
                if is_safe(l) {
                    path.push(0);
                    cur = l;
                } else {
                    debug_assert!(is_safe(r));
                    path.push(1);
                    cur = r;
                }
            }
            other => unreachable!("safe path hit a non-safe node {}", other),
        }
    }
}

fn node_at<'a>(e: &'a LExpr, path: &[usize]) -> &'a LExpr {
    let mut cur = e;
    for &i in path {
        cur = cur.children()[i];
    }
    cur
}

fn replace_at(e: &LExpr, path: &[usize], replacement: &LExpr) -> LExpr {
    if path.is_empty() {
        return replacement.clone();
    }
    let kids = e.children();
    let step = path[0];
    let rebuilt = replace_at(kids[step], &path[1..], replacement);
    match e {
        LExpr::Cap(l, r) => {
            if step == 0 {
                LExpr::cap(rebuilt, (**r).clone())
            } else {
                LExpr::cap((**l).clone(), rebuilt)
            }
        }
        LExpr::Cup(l, r) => {
            if step == 0 {
                LExpr::cup(rebuilt, (**r).clone())
            } else {
                LExpr::cup((**l).clone(), rebuilt)
            }
        }
        LExpr::Inv(label, _) => LExpr::inv(*label, rebuilt),
        LExpr::IBox(label, _) => LExpr::ibox(*label, rebuilt),
        LExpr::Img(label, _) => LExpr::img(*label, rebuilt),
        _ => unreachable!("path descends through interior nodes"),
    }
}

/// One safe expression: a requirement map piece and a head variable whose
/// minimal valuation is the expression. Follows the inductive construction:
/// peel the node above the path leaf; an image prepends a box to the main
/// formula, an intersection prepends a guard built from the positive
/// combination with fresh heads for its safe constituents.
fn synth_one(e: &LExpr, alloc: &mut PropAlloc) -> Result<SynthOne, SynthesizeError> {
    if let LExpr::ObjVar(x) = e {
        let p = alloc.fresh();
        let mut map = Builder::new();
        map.insert(*x, vec![ModalFormula::Var(p.clone())]);
        return Ok(SynthOne {
            map,
            head: p,
            main_at: *x,
            main_idx: 0,
        });
    }
    let path = safe_path(e);
    let parent_path = &path[..path.len() - 1];
    let leaf = node_at(e, &path).clone();
    let parent = node_at(e, parent_path);
    match parent {
        LExpr::Img(label, _) => {
            let label = *label;
            let reduced = replace_at(e, parent_path, &leaf);
            let mut s = synth_one(&reduced, alloc)?;
            s.wrap_main(|old| ModalFormula::boxed(label, old));
            Ok(s)
        }
        LExpr::Cap(l, r) => {
            let leaf_is_left = path[path.len() - 1] == 0;
            let positive_part = if leaf_is_left { (**r).clone() } else { (**l).clone() };
            let constituents = safe_subexpressions(&positive_part)?;
            let mut heads: Vec<(LExpr, PropVar)> = Vec::new();
            let mut guard_pools = Builder::new();
            for c in &constituents {
                let s = synth_one(c, alloc)?;
                heads.push((c.clone(), s.head.clone()));
                for (x, fs) in s.map {
                    guard_pools.entry(x).or_default().extend(fs);
                }
            }
            let guard = expr_to_modal_over(&positive_part, &heads)?;
            let reduced = replace_at(e, parent_path, &leaf);
            let mut s = synth_one(&reduced, alloc)?;
            s.wrap_main(|old| ModalFormula::implies(guard, old));
            s.absorb(guard_pools);
            Ok(s)
        }
        other => unreachable!("safe path parent is an image or intersection: {}", other),
    }
}

fn expr_to_modal_over(
    e: &LExpr,
    heads: &[(LExpr, PropVar)],
) -> Result<ModalFormula, SynthesizeError> {
    if let Some((_, p)) = heads.iter().find(|(k, _)| k == e) {
        return Ok(ModalFormula::Var(p.clone()));
    }
    Ok(match e {
        LExpr::Top => ModalFormula::Top,
        LExpr::Bot => ModalFormula::Bot,
        LExpr::Cap(l, r) => ModalFormula::and(
            expr_to_modal_over(l, heads)?,
            expr_to_modal_over(r, heads)?,
        ),
        LExpr::Cup(l, r) => ModalFormula::or(
            expr_to_modal_over(l, heads)?,
            expr_to_modal_over(r, heads)?,
        ),
        LExpr::Inv(label, a) => ModalFormula::dia(*label, expr_to_modal_over(a, heads)?),
        LExpr::IBox(label, a) => ModalFormula::boxed(*label, expr_to_modal_over(a, heads)?),
        other => return Err(SynthesizeError::MissingHead(other.clone())),
    })
}

/// The translation of a quasi-safe expression to a modal formula: safe
/// subexpressions become their head variables, intersections conjunctions,
/// unions disjunctions, preimages diamonds and boxes.
pub fn expr_to_modal(
    e: &LExpr,
    heads: &BTreeMap<LExpr, PropVar>,
) -> Result<ModalFormula, SynthesizeError> {
    let list: Vec<(LExpr, PropVar)> =
        heads.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    expr_to_modal_over(e, &list)
}

/// A shared requirement map realizing every expression of a set as the
/// minimal valuation of a dedicated head variable, with pairwise disjoint
/// variable pools.
pub fn synthesize_expr_f(
    exprs: &[LExpr],
) -> Result<(RequirementMap, BTreeMap<LExpr, PropVar>), SynthesizeError> {
    let mut unique: Vec<LExpr> = Vec::new();
    for e in exprs {
        if !unique.contains(e) {
            unique.push(e.clone());
        }
    }
    let mut alloc = PropAlloc::new();
    let mut builder = Builder::new();
    let mut heads: Vec<(LExpr, PropVar)> = Vec::new();
    for e in &unique {
        if !is_safe(e) {
            return Err(SynthesizeError::NotSafe(e.clone()));
        }
        let s = synth_one(e, &mut alloc)?;
        heads.push((e.clone(), s.head.clone()));
        for (x, fs) in s.map {
            builder.entry(x).or_default().extend(fs);
        }
    }
    // Stamp proper ranks over the merged pool.
    let all: Vec<ModalFormula> = builder.values().flatten().cloned().collect();
    let assignment = assign_ranks(&all)?;
    let ranked = RequirementMap::new(builder.into_iter().map(|(x, fs)| {
        (
            x,
            fs.into_iter().map(|f| assignment.apply(&f)).collect::<Vec<_>>(),
        )
    }))?;
    let heads = heads
        .into_iter()
        .map(|(e, p)| {
            let q = assignment.map.get(&p).cloned().unwrap_or(p);
            (e, q)
        })
        .collect();
    Ok((ranked, heads))
}

/// A sequence of modal formulas witnessing a first-order condition on
/// several points: the condition holds exactly when under every valuation
/// some point satisfies its formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefinableSequence {
    pub variables: Vec<ObjVar>,
    pub formulas: Vec<ModalFormula>,
}

impl fmt::Display for DefinableSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, g) in self.variables.iter().zip(&self.formulas) {
            writeln!(f, "{}: {}", x, g)?;
        }
        Ok(())
    }
}

/// The defining sequence for membership of `subject` in a quasi-safe
/// expression, over a shared requirement map covering the expression's safe
/// subexpressions: every slot carries its requirement failures, and the
/// subject's slot additionally the expression's modal translation.
pub fn define_atom(
    subject: ObjVar,
    e: &LExpr,
    shared: (&RequirementMap, &BTreeMap<LExpr, PropVar>),
) -> Result<DefinableSequence, SynthesizeError> {
    let (requirements, heads) = shared;
    let translated = expr_to_modal(e, heads)?;
    let mut variables: BTreeSet<ObjVar> = requirements.domain().collect();
    variables.insert(subject);
    let variables: Vec<ObjVar> = variables.into_iter().collect();
    let formulas = variables
        .iter()
        .map(|x| {
            let mut parts: Vec<ModalFormula> = requirements
                .formulas_at(*x)
                .iter()
                .map(|f| ModalFormula::not(f.clone()))
                .collect();
            if *x == subject {
                parts.push(translated.clone());
            }
            ModalFormula::disj(parts)
        })
        .collect();
    Ok(DefinableSequence {
        variables,
        formulas,
    })
}

// ---------------------------------------------------------------------------
// The synthesis fold
// ---------------------------------------------------------------------------

/// Boolean combination of pointwise modal assertions.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Assertion {
    True,
    False,
    Point(ObjVar, ModalFormula),
    And(Box<Assertion>, Box<Assertion>),
    Or(Box<Assertion>, Box<Assertion>),
}

impl Assertion {
    fn and(l: Assertion, r: Assertion) -> Assertion {
        match (l, r) {
            (Assertion::False, _) | (_, Assertion::False) => Assertion::False,
            (Assertion::True, x) | (x, Assertion::True) => x,
            (l, r) => Assertion::And(Box::new(l), Box::new(r)),
        }
    }

    fn or(l: Assertion, r: Assertion) -> Assertion {
        match (l, r) {
            (Assertion::True, _) | (_, Assertion::True) => Assertion::True,
            (Assertion::False, x) | (x, Assertion::False) => x,
            (l, r) => Assertion::Or(Box::new(l), Box::new(r)),
        }
    }

    /// Clauses of a conjunctive normal form over points.
    fn cnf(&self) -> Vec<Vec<(ObjVar, ModalFormula)>> {
        match self {
            Assertion::True => vec![],
            Assertion::False => vec![vec![]],
            Assertion::Point(x, f) => vec![vec![(*x, f.clone())]],
            Assertion::And(l, r) => {
                let mut out = l.cnf();
                out.extend(r.cnf());
                out
            }
            Assertion::Or(l, r) => {
                let ls = l.cnf();
                let rs = r.cnf();
                let mut out = Vec::with_capacity(ls.len() * rs.len());
                for a in &ls {
                    for b in &rs {
                        let mut clause = a.clone();
                        clause.extend(b.iter().cloned());
                        out.push(clause);
                    }
                }
                out
            }
        }
    }
}

struct Fold {
    requirements: Builder,
    assertion: Assertion,
}

/// Fuse sibling membership atoms with the same subject: conjoined atoms
/// intersect their expressions, disjoined atoms union them.
fn fuse_atoms(f: &FOFormula) -> FOFormula {
    fn flatten_and(f: &FOFormula, out: &mut Vec<FOFormula>) {
        match f {
            FOFormula::And(l, r) => {
                flatten_and(l, out);
                flatten_and(r, out);
            }
            other => out.push(fuse_atoms(other)),
        }
    }
    fn flatten_or(f: &FOFormula, out: &mut Vec<FOFormula>) {
        match f {
            FOFormula::Or(l, r) => {
                flatten_or(l, out);
                flatten_or(r, out);
            }
            other => out.push(fuse_atoms(other)),
        }
    }
    fn regroup(
        parts: Vec<FOFormula>,
        join: fn(LExpr, LExpr) -> LExpr,
        rebuild: fn(Vec<FOFormula>) -> FOFormula,
    ) -> FOFormula {
        let mut subjects: Vec<ObjVar> = Vec::new();
        let mut merged: BTreeMap<ObjVar, LExpr> = BTreeMap::new();
        let mut rest = Vec::new();
        for part in parts {
            match part {
                FOFormula::Member(s, e) => {
                    match merged.remove(&s) {
                        None => {
                            subjects.push(s);
                            merged.insert(s, e);
                        }
                        Some(prev) => {
                            merged.insert(s, join(prev, e));
                        }
                    }
                }
                other => rest.push(other),
            }
        }
        let mut out: Vec<FOFormula> = subjects
            .into_iter()
            .map(|s| {
                let e = merged.remove(&s).expect("collected");
                FOFormula::Member(s, e)
            })
            .collect();
        out.extend(rest);
        rebuild(out)
    }
    match f {
        FOFormula::And(_, _) => {
            let mut parts = Vec::new();
            flatten_and(f, &mut parts);
            regroup(parts, LExpr::cap, FOFormula::conj)
        }
        FOFormula::Or(_, _) => {
            let mut parts = Vec::new();
            flatten_or(f, &mut parts);
            regroup(parts, LExpr::cup, FOFormula::disj)
        }
        FOFormula::RForall(y, label, x, b) => FOFormula::rforall(*y, *label, *x, fuse_atoms(b)),
        FOFormula::RExists(y, label, x, b) => FOFormula::rexists(*y, *label, *x, fuse_atoms(b)),
        other => other.clone(),
    }
}

fn fold_skeleton(f: &FOFormula, alloc: &mut PropAlloc) -> Result<Fold, SynthesizeError> {
    Ok(match f {
        FOFormula::Top => Fold {
            requirements: Builder::new(),
            assertion: Assertion::True,
        },
        FOFormula::Bot => Fold {
            requirements: Builder::new(),
            assertion: Assertion::False,
        },
        FOFormula::Member(s, e) => {
            let constituents = safe_subexpressions(e)
                .map_err(|_| SynthesizeError::NotNormalizable(e.clone()))?;
            let mut heads = Vec::new();
            let mut requirements = Builder::new();
            for c in &constituents {
                let one = synth_one(c, alloc)?;
                heads.push((c.clone(), one.head.clone()));
                for (x, fs) in one.map {
                    requirements.entry(x).or_default().extend(fs);
                }
            }
            let translated = expr_to_modal_over(e, &heads)?;
            Fold {
                requirements,
                assertion: Assertion::Point(*s, translated),
            }
        }
        FOFormula::And(l, r) => {
            let mut a = fold_skeleton(l, alloc)?;
            let b = fold_skeleton(r, alloc)?;
            for (x, fs) in b.requirements {
                a.requirements.entry(x).or_default().extend(fs);
            }
            Fold {
                requirements: a.requirements,
                assertion: Assertion::and(a.assertion, b.assertion),
            }
        }
        FOFormula::Or(l, r) => {
            let mut a = fold_skeleton(l, alloc)?;
            let b = fold_skeleton(r, alloc)?;
            for (x, fs) in b.requirements {
                a.requirements.entry(x).or_default().extend(fs);
            }
            Fold {
                requirements: a.requirements,
                assertion: Assertion::or(a.assertion, b.assertion),
            }
        }
        FOFormula::RForall(y, label, x, body) => {
            let mut inner = fold_skeleton(body, alloc)?;
            let bound_requirements = inner.requirements.remove(y).unwrap_or_default();
            let failures: Vec<ModalFormula> = bound_requirements
                .iter()
                .map(|g| ModalFormula::not(g.clone()))
                .collect();
            let mut clauses_out = Assertion::True;
            for clause in inner.assertion.cnf() {
                let mut bound_parts: Vec<ModalFormula> = Vec::new();
                let mut outer = Assertion::False;
                for (v, g) in clause {
                    if v == *y {
                        bound_parts.push(g);
                    } else {
                        outer = Assertion::or(outer, Assertion::Point(v, g));
                    }
                }
                bound_parts.extend(failures.iter().cloned());
                let boxed = ModalFormula::boxed(*label, ModalFormula::disj(bound_parts));
                let folded = Assertion::or(outer, Assertion::Point(*x, boxed));
                clauses_out = Assertion::and(clauses_out, folded);
            }
            Fold {
                requirements: inner.requirements,
                assertion: clauses_out,
            }
        }
        other => {
            return Err(SynthesizeError::NotKracht(format!(
                "synthesis fold applies to eliminated formulas, found `{}`",
                other
            )))
        }
    })
}

/// Negate an assertion formula into antecedent material: negations of
/// positive assertions stay as negative leaves, folded boxes open into
/// diamonds over their requirement conjunctions.
fn negate_assertion(f: &ModalFormula) -> ModalFormula {
    if crate::regular::is_positive(f) {
        return match f {
            ModalFormula::Bot => ModalFormula::not(ModalFormula::Bot),
            ModalFormula::Top => ModalFormula::Bot,
            other => ModalFormula::not(other.clone()),
        };
    }
    match f {
        ModalFormula::Not(inner) => (**inner).clone(),
        ModalFormula::Box(label, body) => gsa_dia(*label, negate_assertion(body)),
        ModalFormula::Or(l, r) => gsa_and(negate_assertion(l), negate_assertion(r)),
        ModalFormula::And(l, r) => gsa_or(negate_assertion(l), negate_assertion(r)),
        ModalFormula::Dia(label, body) => {
            // Only reachable through nested folded material.
            ModalFormula::boxed(*label, negate_assertion(body))
        }
        other => ModalFormula::not(other.clone()),
    }
}

fn gsa_and(l: ModalFormula, r: ModalFormula) -> ModalFormula {
    let truish = ModalFormula::not(ModalFormula::Bot);
    match (l, r) {
        (ModalFormula::Bot, _) | (_, ModalFormula::Bot) => ModalFormula::Bot,
        (l, r) if l == truish => r,
        (l, r) if r == truish => l,
        (l, r) => ModalFormula::and(l, r),
    }
}

fn gsa_or(l: ModalFormula, r: ModalFormula) -> ModalFormula {
    let truish = ModalFormula::not(ModalFormula::Bot);
    match (l, r) {
        (ModalFormula::Bot, x) | (x, ModalFormula::Bot) => x,
        (l, _) if l == truish => truish,
        (_, r) if r == truish => truish,
        (l, r) => ModalFormula::or(l, r),
    }
}

fn gsa_dia(label: Label, a: ModalFormula) -> ModalFormula {
    match a {
        ModalFormula::Bot => ModalFormula::Bot,
        other => ModalFormula::dia(label, other),
    }
}

/// Rename propositional variables to a fresh display pool `q0, q1, ...` in
/// first-occurrence order.
fn rename_to_output_pool(f: &ModalFormula) -> ModalFormula {
    let mut order: Vec<PropVar> = Vec::new();
    fn collect(f: &ModalFormula, order: &mut Vec<PropVar>) {
        match f {
            ModalFormula::Var(p) => {
                if !order.contains(p) {
                    order.push(p.clone());
                }
            }
            ModalFormula::Top | ModalFormula::Bot => {}
            ModalFormula::Not(a) | ModalFormula::Box(_, a) | ModalFormula::Dia(_, a) => {
                collect(a, order)
            }
            ModalFormula::And(l, r)
            | ModalFormula::Or(l, r)
            | ModalFormula::Implies(l, r) => {
                collect(l, order);
                collect(r, order);
            }
        }
    }
    collect(f, &mut order);
    let map: BTreeMap<PropVar, PropVar> = order
        .into_iter()
        .enumerate()
        .map(|(i, p)| (p, PropVar::named(0, i as u32, format!("q{}", i))))
        .collect();
    f.rename_vars(&map)
}

/// Synthesize a generalized Sahlqvist formula from a generalized Kracht
/// first-order condition.
pub fn synthesize(formula: &FOFormula) -> Result<ModalFormula, SynthesizeError> {
    let verdict = check_kracht(formula);
    if !verdict.is_kracht() {
        return Err(SynthesizeError::NotKracht(verdict.reasons.join("; ")));
    }
    let normalized = verdict
        .normalized
        .expect("kracht verdict carries the normalized formula");
    let eliminated = quantifier_eliminate(&normalized)?;
    let fused = fuse_atoms(&eliminated);

    let mut alloc = PropAlloc::new();
    let folded = fold_skeleton(&fused, &mut alloc)?;

    // Only the free variable's requirements may remain.
    let free: Vec<ObjVar> = free_vars(&normalized).into_iter().collect();
    let anchor = free.first().copied().unwrap_or(ObjVar(0));
    let mut antecedent_parts: Vec<ModalFormula> = Vec::new();
    for (x, fs) in &folded.requirements {
        debug_assert_eq!(*x, anchor, "only the free variable remains after folding");
        antecedent_parts.extend(fs.iter().cloned());
    }

    // The assertion collapses to one modal formula at the anchor.
    let assertion_formula = assertion_at(&folded.assertion, anchor)?;
    let negated = negate_assertion(&assertion_formula);
    let gsa = antecedent_parts
        .into_iter()
        .fold(negated, |acc, req| gsa_and(req, acc));
    // Note the fold above keeps requirement order: req1 & (req2 & (... & neg)).
    let output = implication_form(gsa);
    let output = rename_to_output_pool(&output);
    debug_assert!(
        crate::correspond::classify_sahlqvist(&output).is_sahlqvist(),
        "synthesized formula must be generalized Sahlqvist: {}",
        output
    );
    Ok(output)
}

fn assertion_at(a: &Assertion, anchor: ObjVar) -> Result<ModalFormula, SynthesizeError> {
    Ok(match a {
        Assertion::True => ModalFormula::Top,
        Assertion::False => ModalFormula::Bot,
        Assertion::Point(x, f) => {
            if *x != anchor {
                return Err(SynthesizeError::NotKracht(format!(
                    "assertion anchored at bound variable {}",
                    x
                )));
            }
            f.clone()
        }
        Assertion::And(l, r) => ModalFormula::and(
            assertion_at(l, anchor)?,
            assertion_at(r, anchor)?,
        ),
        Assertion::Or(l, r) => ModalFormula::or(
            assertion_at(l, anchor)?,
            assertion_at(r, anchor)?,
        ),
    })
}

/// Present an antecedent as an implication: negative top-level conjuncts
/// move to the consequent as their positive bodies.
fn implication_form(gsa: ModalFormula) -> ModalFormula {
    if gsa == ModalFormula::Bot {
        // The condition is a tautology; any point-valid formula works.
        let p = ModalFormula::var(0, 0);
        return ModalFormula::implies(p.clone(), p);
    }
    let mut conjuncts = Vec::new();
    fn flatten(f: ModalFormula, out: &mut Vec<ModalFormula>) {
        match f {
            ModalFormula::And(l, r) => {
                flatten(*l, out);
                flatten(*r, out);
            }
            other => out.push(other),
        }
    }
    flatten(gsa, &mut conjuncts);
    let mut antecedent = Vec::new();
    let mut consequents = Vec::new();
    for c in conjuncts {
        match c {
            ModalFormula::Not(inner) if crate::regular::is_positive(&inner) => {
                consequents.push(*inner)
            }
            other => antecedent.push(other),
        }
    }
    match (antecedent.is_empty(), consequents.is_empty()) {
        (true, true) => unreachable!("flattening a nonempty antecedent"),
        (true, false) => ModalFormula::disj(consequents),
        (false, true) => ModalFormula::implies(ModalFormula::conj(antecedent), ModalFormula::Bot),
        (false, false) => ModalFormula::implies(
            ModalFormula::conj(antecedent),
            ModalFormula::disj(consequents),
        ),
    }
}

/// Synthesize and verify against the oracle, surfacing any counterexample.
pub fn synthesize_verified(
    formula: &FOFormula,
    budget: &Budget,
) -> Result<ModalFormula, SynthesizeError> {
    let output = synthesize(formula)?;
    let report = check_correspondence(&output, formula, budget)
        .map_err(|e| SynthesizeError::NotKracht(e.to_string()))?;
    match report.counterexamples.into_iter().next() {
        None => Ok(output),
        Some(ce) => Err(SynthesizeError::VerificationFailed(ce)),
    }
}
