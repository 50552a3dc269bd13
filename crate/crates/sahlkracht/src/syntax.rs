//! The three syntax families everything else is built on: modal formulas,
//! set expressions, and extended first-order formulas, together with the
//! substitution and renaming algebra they share.
//!
//! All values are immutable trees; every operation here is pure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A modality index: selects one box/diamond pair and one accessibility
/// relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label(pub u32);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A propositional variable, identified by its rank (upper index) and its
/// index within the rank group. `display` keeps the surface spelling the
/// variable was parsed with; it is ignored by equality and ordering.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropVar {
    pub rank: u32,
    pub index: u32,
    pub display: Option<String>,
}

impl PropVar {
    pub fn new(rank: u32, index: u32) -> Self {
        PropVar {
            rank,
            index,
            display: None,
        }
    }

    pub fn named(rank: u32, index: u32, name: impl Into<String>) -> Self {
        PropVar {
            rank,
            index,
            display: Some(name.into()),
        }
    }

    /// Same variable with a different rank/index, keeping the spelling.
    pub fn reranked(&self, rank: u32, index: u32) -> Self {
        PropVar {
            rank,
            index,
            display: self.display.clone(),
        }
    }
}

impl PartialEq for PropVar {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.index == other.index
    }
}
impl Eq for PropVar {}
impl PartialOrd for PropVar {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PropVar {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.rank, self.index).cmp(&(other.rank, other.index))
    }
}
impl std::hash::Hash for PropVar {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        (self.rank, self.index).hash(state);
    }
}

impl fmt::Display for PropVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.display {
            Some(name) => write!(f, "{}", name),
            None => write!(f, "p{}_{}", self.rank, self.index),
        }
    }
}

/// An object (first-order) variable. The pretty-printer spells it `x<i>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjVar(pub u32);

impl fmt::Display for ObjVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Formulas of the multimodal language: boolean connectives, constants and
/// one box/diamond pair per label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModalFormula {
    Var(PropVar),
    Top,
    Bot,
    Not(Box<ModalFormula>),
    And(Box<ModalFormula>, Box<ModalFormula>),
    Or(Box<ModalFormula>, Box<ModalFormula>),
    Implies(Box<ModalFormula>, Box<ModalFormula>),
    Box(Label, Box<ModalFormula>),
    Dia(Label, Box<ModalFormula>),
}

impl ModalFormula {
    pub fn var(rank: u32, index: u32) -> Self {
        ModalFormula::Var(PropVar::new(rank, index))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: ModalFormula) -> Self {
        ModalFormula::Not(Box::new(f))
    }

    pub fn and(l: ModalFormula, r: ModalFormula) -> Self {
        ModalFormula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: ModalFormula, r: ModalFormula) -> Self {
        ModalFormula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: ModalFormula, r: ModalFormula) -> Self {
        ModalFormula::Implies(Box::new(l), Box::new(r))
    }

    pub fn boxed(label: Label, f: ModalFormula) -> Self {
        ModalFormula::Box(label, Box::new(f))
    }

    pub fn dia(label: Label, f: ModalFormula) -> Self {
        ModalFormula::Dia(label, Box::new(f))
    }

    /// Left-associated conjunction of a non-empty list; `⊤` for an empty one.
    pub fn conj(parts: impl IntoIterator<Item = ModalFormula>) -> Self {
        let mut it = parts.into_iter();
        match it.next() {
            None => ModalFormula::Top,
            Some(first) => it.fold(first, ModalFormula::and),
        }
    }

    /// Left-associated disjunction of a non-empty list; `⊥` for an empty one.
    pub fn disj(parts: impl IntoIterator<Item = ModalFormula>) -> Self {
        let mut it = parts.into_iter();
        match it.next() {
            None => ModalFormula::Bot,
            Some(first) => it.fold(first, ModalFormula::or),
        }
    }

    pub fn vars(&self) -> BTreeSet<PropVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<PropVar>) {
        match self {
            ModalFormula::Var(p) => {
                out.insert(p.clone());
            }
            ModalFormula::Top | ModalFormula::Bot => {}
            ModalFormula::Not(a) | ModalFormula::Box(_, a) | ModalFormula::Dia(_, a) => {
                a.collect_vars(out)
            }
            ModalFormula::And(l, r) | ModalFormula::Or(l, r) | ModalFormula::Implies(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut BTreeSet<Label>) {
        match self {
            ModalFormula::Var(_) | ModalFormula::Top | ModalFormula::Bot => {}
            ModalFormula::Not(a) => a.collect_labels(out),
            ModalFormula::Box(l, a) | ModalFormula::Dia(l, a) => {
                out.insert(*l);
                a.collect_labels(out);
            }
            ModalFormula::And(l, r) | ModalFormula::Or(l, r) | ModalFormula::Implies(l, r) => {
                l.collect_labels(out);
                r.collect_labels(out);
            }
        }
    }

    /// Replace every occurrence of a propositional variable according to the
    /// map; variables outside the map are kept.
    pub fn rename_vars(&self, map: &BTreeMap<PropVar, PropVar>) -> ModalFormula {
        match self {
            ModalFormula::Var(p) => match map.get(p) {
                Some(q) => ModalFormula::Var(q.clone()),
                None => self.clone(),
            },
            ModalFormula::Top | ModalFormula::Bot => self.clone(),
            ModalFormula::Not(a) => ModalFormula::not(a.rename_vars(map)),
            ModalFormula::And(l, r) => ModalFormula::and(l.rename_vars(map), r.rename_vars(map)),
            ModalFormula::Or(l, r) => ModalFormula::or(l.rename_vars(map), r.rename_vars(map)),
            ModalFormula::Implies(l, r) => {
                ModalFormula::implies(l.rename_vars(map), r.rename_vars(map))
            }
            ModalFormula::Box(lbl, a) => ModalFormula::boxed(*lbl, a.rename_vars(map)),
            ModalFormula::Dia(lbl, a) => ModalFormula::dia(*lbl, a.rename_vars(map)),
        }
    }
}

/// Set expressions over the expression languages: object variables, set
/// variables, the hole `#`, constants, `∩`, `∪`, and the three relational
/// operators (preimage `inv`, universal preimage `ibox`, image `img`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LExpr {
    ObjVar(ObjVar),
    SetVar(PropVar),
    Hole,
    Top,
    Bot,
    Cap(Box<LExpr>, Box<LExpr>),
    Cup(Box<LExpr>, Box<LExpr>),
    /// `inv<k>(E)`: worlds with a k-successor in E.
    Inv(Label, Box<LExpr>),
    /// `ibox<k>(E)`: worlds all of whose k-successors lie in E.
    IBox(Label, Box<LExpr>),
    /// `img<k>(E)`: k-successors of worlds in E.
    Img(Label, Box<LExpr>),
}

impl LExpr {
    pub fn obj(i: u32) -> Self {
        LExpr::ObjVar(ObjVar(i))
    }

    pub fn cap(l: LExpr, r: LExpr) -> Self {
        LExpr::Cap(Box::new(l), Box::new(r))
    }

    pub fn cup(l: LExpr, r: LExpr) -> Self {
        LExpr::Cup(Box::new(l), Box::new(r))
    }

    pub fn inv(label: Label, e: LExpr) -> Self {
        LExpr::Inv(label, Box::new(e))
    }

    pub fn ibox(label: Label, e: LExpr) -> Self {
        LExpr::IBox(label, Box::new(e))
    }

    pub fn img(label: Label, e: LExpr) -> Self {
        LExpr::Img(label, Box::new(e))
    }

    /// Left-associated intersection; `⊤` when empty.
    pub fn caps(parts: impl IntoIterator<Item = LExpr>) -> Self {
        let mut it = parts.into_iter();
        match it.next() {
            None => LExpr::Top,
            Some(first) => it.fold(first, LExpr::cap),
        }
    }

    /// Left-associated union; `⊥` when empty.
    pub fn cups(parts: impl IntoIterator<Item = LExpr>) -> Self {
        let mut it = parts.into_iter();
        match it.next() {
            None => LExpr::Bot,
            Some(first) => it.fold(first, LExpr::cup),
        }
    }

    pub fn children(&self) -> Vec<&LExpr> {
        match self {
            LExpr::ObjVar(_) | LExpr::SetVar(_) | LExpr::Hole | LExpr::Top | LExpr::Bot => {
                Vec::new()
            }
            LExpr::Cap(l, r) | LExpr::Cup(l, r) => vec![l, r],
            LExpr::Inv(_, a) | LExpr::IBox(_, a) | LExpr::Img(_, a) => vec![a],
        }
    }

    pub fn node_count(&self) -> usize {
        // Iterative: safety analysis feeds chains deep enough to overflow a
        // recursive walk.
        let mut n = 0usize;
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            n += 1;
            stack.extend(e.children());
        }
        n
    }

    pub fn contains_hole(&self) -> bool {
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if matches!(e, LExpr::Hole) {
                return true;
            }
            stack.extend(e.children());
        }
        false
    }

    pub fn hole_count(&self) -> usize {
        let mut n = 0usize;
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if matches!(e, LExpr::Hole) {
                n += 1;
            }
            stack.extend(e.children());
        }
        n
    }

    pub fn set_vars(&self) -> BTreeSet<PropVar> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if let LExpr::SetVar(p) = e {
                out.insert(p.clone());
            }
            stack.extend(e.children());
        }
        out
    }

    pub fn obj_vars(&self) -> BTreeSet<ObjVar> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if let LExpr::ObjVar(x) = e {
                out.insert(*x);
            }
            stack.extend(e.children());
        }
        out
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match e {
                LExpr::Inv(l, _) | LExpr::IBox(l, _) | LExpr::Img(l, _) => {
                    out.insert(*l);
                }
                _ => {}
            }
            stack.extend(e.children());
        }
        out
    }

    /// Member of the plain expression language: no set variables, no hole.
    pub fn is_l(&self) -> bool {
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if matches!(e, LExpr::SetVar(_) | LExpr::Hole) {
                return false;
            }
            stack.extend(e.children());
        }
        true
    }

    /// Member of the positive-formula expression language at rank `k`: no
    /// hole, no image operator, and only set variables of rank below `k`.
    pub fn is_lp(&self, k: u32) -> bool {
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match e {
                LExpr::Hole | LExpr::Img(_, _) | LExpr::ObjVar(_) => return false,
                LExpr::SetVar(p) if p.rank >= k => return false,
                _ => {}
            }
            stack.extend(e.children());
        }
        true
    }

    /// Member of the hole language at rank `k`: no object variables and only
    /// set variables of rank below `k`.
    pub fn is_lsharp(&self, k: u32) -> bool {
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match e {
                LExpr::ObjVar(_) => return false,
                LExpr::SetVar(p) if p.rank >= k => return false,
                _ => {}
            }
            stack.extend(e.children());
        }
        true
    }
}

// A derived recursive Drop overflows the stack on the deep `img` chains the
// safety module is measured on; detach children iteratively instead.
impl Drop for LExpr {
    fn drop(&mut self) {
        if self.is_leaf() {
            return;
        }
        let mut stack: Vec<LExpr> = Vec::new();
        self.take_children_into(&mut stack);
        while let Some(mut e) = stack.pop() {
            e.take_children_into(&mut stack);
        }
    }
}

impl LExpr {
    fn is_leaf(&self) -> bool {
        matches!(
            self,
            LExpr::ObjVar(_) | LExpr::SetVar(_) | LExpr::Hole | LExpr::Top | LExpr::Bot
        )
    }

    fn take_children_into(&mut self, out: &mut Vec<LExpr>) {
        match self {
            LExpr::ObjVar(_) | LExpr::SetVar(_) | LExpr::Hole | LExpr::Top | LExpr::Bot => {}
            LExpr::Cap(l, r) | LExpr::Cup(l, r) => {
                let l = std::mem::replace(l.as_mut(), LExpr::Hole);
                let r = std::mem::replace(r.as_mut(), LExpr::Hole);
                if !l.is_leaf() {
                    out.push(l);
                }
                if !r.is_leaf() {
                    out.push(r);
                }
            }
            LExpr::Inv(_, a) | LExpr::IBox(_, a) | LExpr::Img(_, a) => {
                let a = std::mem::replace(a.as_mut(), LExpr::Hole);
                if !a.is_leaf() {
                    out.push(a);
                }
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubstError {
    #[error("set variable {0} has no binding")]
    MissingBinding(PropVar),
}

/// Replace every hole of `e` by a copy of `t`.
pub fn substitute_hole(e: &LExpr, t: &LExpr) -> LExpr {
    match e {
        LExpr::Hole => t.clone(),
        LExpr::ObjVar(_) | LExpr::SetVar(_) | LExpr::Top | LExpr::Bot => e.clone(),
        LExpr::Cap(l, r) => LExpr::cap(substitute_hole(l, t), substitute_hole(r, t)),
        LExpr::Cup(l, r) => LExpr::cup(substitute_hole(l, t), substitute_hole(r, t)),
        LExpr::Inv(lbl, a) => LExpr::inv(*lbl, substitute_hole(a, t)),
        LExpr::IBox(lbl, a) => LExpr::ibox(*lbl, substitute_hole(a, t)),
        LExpr::Img(lbl, a) => LExpr::img(*lbl, substitute_hole(a, t)),
    }
}

/// Simultaneously replace every set variable of `e` by its image under `m`.
/// No capture is possible: expressions have no binders.
pub fn substitute_setvars(
    e: &LExpr,
    m: &BTreeMap<PropVar, LExpr>,
) -> Result<LExpr, SubstError> {
    Ok(match e {
        LExpr::SetVar(p) => m
            .get(p)
            .ok_or_else(|| SubstError::MissingBinding(p.clone()))?
            .clone(),
        LExpr::ObjVar(_) | LExpr::Hole | LExpr::Top | LExpr::Bot => e.clone(),
        LExpr::Cap(l, r) => LExpr::cap(substitute_setvars(l, m)?, substitute_setvars(r, m)?),
        LExpr::Cup(l, r) => LExpr::cup(substitute_setvars(l, m)?, substitute_setvars(r, m)?),
        LExpr::Inv(lbl, a) => LExpr::inv(*lbl, substitute_setvars(a, m)?),
        LExpr::IBox(lbl, a) => LExpr::ibox(*lbl, substitute_setvars(a, m)?),
        LExpr::Img(lbl, a) => LExpr::img(*lbl, substitute_setvars(a, m)?),
    })
}

/// Extended first-order formulas: membership atoms over expressions,
/// relational and equality atoms, boolean connectives, and both restricted
/// and unrestricted quantifiers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FOFormula {
    /// `y in E`
    Member(ObjVar, LExpr),
    /// `x R<k> y`
    Rel(Label, ObjVar, ObjVar),
    /// `x = y`
    Eq(ObjVar, ObjVar),
    Top,
    Bot,
    Not(Box<FOFormula>),
    And(Box<FOFormula>, Box<FOFormula>),
    Or(Box<FOFormula>, Box<FOFormula>),
    /// `all y <k x . body`: y ranges over the k-successors of x.
    RForall(ObjVar, Label, ObjVar, Box<FOFormula>),
    /// `ex y <k x . body`
    RExists(ObjVar, Label, ObjVar, Box<FOFormula>),
    /// `forall y . body`
    Forall(ObjVar, Box<FOFormula>),
    /// `exists y . body`
    Exists(ObjVar, Box<FOFormula>),
}

impl FOFormula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: FOFormula) -> Self {
        FOFormula::Not(Box::new(f))
    }

    pub fn and(l: FOFormula, r: FOFormula) -> Self {
        FOFormula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: FOFormula, r: FOFormula) -> Self {
        FOFormula::Or(Box::new(l), Box::new(r))
    }

    pub fn rforall(y: ObjVar, label: Label, x: ObjVar, body: FOFormula) -> Self {
        FOFormula::RForall(y, label, x, Box::new(body))
    }

    pub fn rexists(y: ObjVar, label: Label, x: ObjVar, body: FOFormula) -> Self {
        FOFormula::RExists(y, label, x, Box::new(body))
    }

    pub fn forall(y: ObjVar, body: FOFormula) -> Self {
        FOFormula::Forall(y, Box::new(body))
    }

    pub fn exists(y: ObjVar, body: FOFormula) -> Self {
        FOFormula::Exists(y, Box::new(body))
    }

    pub fn conj(parts: impl IntoIterator<Item = FOFormula>) -> Self {
        let mut it = parts.into_iter();
        match it.next() {
            None => FOFormula::Top,
            Some(first) => it.fold(first, FOFormula::and),
        }
    }

    pub fn disj(parts: impl IntoIterator<Item = FOFormula>) -> Self {
        let mut it = parts.into_iter();
        match it.next() {
            None => FOFormula::Bot,
            Some(first) => it.fold(first, FOFormula::or),
        }
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            FOFormula::Rel(l, _, _) => {
                out.insert(*l);
            }
            FOFormula::Member(_, e) => {
                out.extend(e.labels());
            }
            FOFormula::RForall(_, l, _, _) | FOFormula::RExists(_, l, _, _) => {
                out.insert(*l);
            }
            _ => {}
        });
        out
    }

    fn walk(&self, visit: &mut impl FnMut(&FOFormula)) {
        visit(self);
        match self {
            FOFormula::Member(_, _)
            | FOFormula::Rel(_, _, _)
            | FOFormula::Eq(_, _)
            | FOFormula::Top
            | FOFormula::Bot => {}
            FOFormula::Not(a) => a.walk(visit),
            FOFormula::And(l, r) | FOFormula::Or(l, r) => {
                l.walk(visit);
                r.walk(visit);
            }
            FOFormula::RForall(_, _, _, b)
            | FOFormula::RExists(_, _, _, b)
            | FOFormula::Forall(_, b)
            | FOFormula::Exists(_, b) => b.walk(visit),
        }
    }

    /// Every variable occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<ObjVar> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            FOFormula::Member(s, e) => {
                out.insert(*s);
                out.extend(e.obj_vars());
            }
            FOFormula::Rel(_, a, b) | FOFormula::Eq(a, b) => {
                out.insert(*a);
                out.insert(*b);
            }
            FOFormula::RForall(y, _, x, _) | FOFormula::RExists(y, _, x, _) => {
                out.insert(*y);
                out.insert(*x);
            }
            FOFormula::Forall(y, _) | FOFormula::Exists(y, _) => {
                out.insert(*y);
            }
            _ => {}
        });
        out
    }

    /// Substitute `to` for every free occurrence of `from` (including anchor
    /// positions of restricted quantifiers and parameters inside membership
    /// expressions). Binders for `from` shadow as usual.
    pub fn subst_free(&self, from: ObjVar, to: ObjVar) -> FOFormula {
        let sub = |x: ObjVar| if x == from { to } else { x };
        match self {
            FOFormula::Member(s, e) => FOFormula::Member(sub(*s), subst_expr_objvar(e, from, to)),
            FOFormula::Rel(l, a, b) => FOFormula::Rel(*l, sub(*a), sub(*b)),
            FOFormula::Eq(a, b) => FOFormula::Eq(sub(*a), sub(*b)),
            FOFormula::Top | FOFormula::Bot => self.clone(),
            FOFormula::Not(a) => FOFormula::not(a.subst_free(from, to)),
            FOFormula::And(l, r) => {
                FOFormula::and(l.subst_free(from, to), r.subst_free(from, to))
            }
            FOFormula::Or(l, r) => FOFormula::or(l.subst_free(from, to), r.subst_free(from, to)),
            FOFormula::RForall(y, lbl, x, b) => {
                let body = if *y == from { (**b).clone() } else { b.subst_free(from, to) };
                FOFormula::rforall(*y, *lbl, sub(*x), body)
            }
            FOFormula::RExists(y, lbl, x, b) => {
                let body = if *y == from { (**b).clone() } else { b.subst_free(from, to) };
                FOFormula::rexists(*y, *lbl, sub(*x), body)
            }
            FOFormula::Forall(y, b) => {
                let body = if *y == from { (**b).clone() } else { b.subst_free(from, to) };
                FOFormula::forall(*y, body)
            }
            FOFormula::Exists(y, b) => {
                let body = if *y == from { (**b).clone() } else { b.subst_free(from, to) };
                FOFormula::exists(*y, body)
            }
        }
    }
}

pub fn subst_expr_objvar(e: &LExpr, from: ObjVar, to: ObjVar) -> LExpr {
    match e {
        LExpr::ObjVar(x) if *x == from => LExpr::ObjVar(to),
        LExpr::ObjVar(_) | LExpr::SetVar(_) | LExpr::Hole | LExpr::Top | LExpr::Bot => e.clone(),
        LExpr::Cap(l, r) => LExpr::cap(
            subst_expr_objvar(l, from, to),
            subst_expr_objvar(r, from, to),
        ),
        LExpr::Cup(l, r) => LExpr::cup(
            subst_expr_objvar(l, from, to),
            subst_expr_objvar(r, from, to),
        ),
        LExpr::Inv(lbl, a) => LExpr::inv(*lbl, subst_expr_objvar(a, from, to)),
        LExpr::IBox(lbl, a) => LExpr::ibox(*lbl, subst_expr_objvar(a, from, to)),
        LExpr::Img(lbl, a) => LExpr::img(*lbl, subst_expr_objvar(a, from, to)),
    }
}

/// The free object variables of a formula.
pub fn free_vars(f: &FOFormula) -> BTreeSet<ObjVar> {
    let mut free = BTreeSet::new();
    let mut bound = BTreeSet::new();
    collect_free(f, &mut bound, &mut free);
    free
}

fn collect_free(f: &FOFormula, bound: &mut BTreeSet<ObjVar>, free: &mut BTreeSet<ObjVar>) {
    let note = |x: ObjVar, bound: &BTreeSet<ObjVar>, free: &mut BTreeSet<ObjVar>| {
        if !bound.contains(&x) {
            free.insert(x);
        }
    };
    match f {
        FOFormula::Member(s, e) => {
            note(*s, bound, free);
            for x in e.obj_vars() {
                note(x, bound, free);
            }
        }
        FOFormula::Rel(_, a, b) | FOFormula::Eq(a, b) => {
            note(*a, bound, free);
            note(*b, bound, free);
        }
        FOFormula::Top | FOFormula::Bot => {}
        FOFormula::Not(a) => collect_free(a, bound, free),
        FOFormula::And(l, r) | FOFormula::Or(l, r) => {
            collect_free(l, bound, free);
            collect_free(r, bound, free);
        }
        FOFormula::RForall(y, _, x, b) | FOFormula::RExists(y, _, x, b) => {
            note(*x, bound, free);
            let fresh = bound.insert(*y);
            collect_free(b, bound, free);
            if fresh {
                bound.remove(y);
            }
        }
        FOFormula::Forall(y, b) | FOFormula::Exists(y, b) => {
            let fresh = bound.insert(*y);
            collect_free(b, bound, free);
            if fresh {
                bound.remove(y);
            }
        }
    }
}

/// True when no variable occurs both free and bound and no two binders bind
/// the same variable.
pub fn is_clean(f: &FOFormula) -> bool {
    let free = free_vars(f);
    let mut binders = BTreeSet::new();
    let mut clean = true;
    f.walk(&mut |g| {
        let y = match g {
            FOFormula::RForall(y, _, _, _)
            | FOFormula::RExists(y, _, _, _)
            | FOFormula::Forall(y, _)
            | FOFormula::Exists(y, _) => *y,
            _ => return,
        };
        if free.contains(&y) || !binders.insert(y) {
            clean = false;
        }
    });
    clean
}

/// Rename binders so the result is clean and alpha-equivalent to the input.
/// Fresh indices are drawn from a monotone counter starting past every index
/// in the formula, assigned in left-to-right binder order; already-clean
/// formulas come back unchanged.
pub fn rename_clean(f: &FOFormula) -> FOFormula {
    let mut next = f.all_vars().iter().map(|v| v.0 + 1).max().unwrap_or(0);
    let free = free_vars(f);
    let mut used: BTreeSet<ObjVar> = free.clone();
    rename_clean_rec(f, &BTreeMap::new(), &mut used, &mut next)
}

fn rename_clean_rec(
    f: &FOFormula,
    scope: &BTreeMap<ObjVar, ObjVar>,
    used: &mut BTreeSet<ObjVar>,
    next: &mut u32,
) -> FOFormula {
    let look = |x: ObjVar| scope.get(&x).copied().unwrap_or(x);
    let bind = |y: ObjVar, used: &mut BTreeSet<ObjVar>, next: &mut u32| -> ObjVar {
        if used.insert(y) {
            y
        } else {
            let fresh = ObjVar(*next);
            *next += 1;
            used.insert(fresh);
            fresh
        }
    };
    match f {
        FOFormula::Member(s, e) => {
            let mut e2 = e.clone();
            for (from, to) in scope {
                if from != to {
                    e2 = subst_expr_objvar(&e2, *from, *to);
                }
            }
            FOFormula::Member(look(*s), e2)
        }
        FOFormula::Rel(l, a, b) => FOFormula::Rel(*l, look(*a), look(*b)),
        FOFormula::Eq(a, b) => FOFormula::Eq(look(*a), look(*b)),
        FOFormula::Top | FOFormula::Bot => f.clone(),
        FOFormula::Not(a) => FOFormula::not(rename_clean_rec(a, scope, used, next)),
        FOFormula::And(l, r) => FOFormula::and(
            rename_clean_rec(l, scope, used, next),
            rename_clean_rec(r, scope, used, next),
        ),
        FOFormula::Or(l, r) => FOFormula::or(
            rename_clean_rec(l, scope, used, next),
            rename_clean_rec(r, scope, used, next),
        ),
        FOFormula::RForall(y, lbl, x, b) => {
            let x2 = look(*x);
            let y2 = bind(*y, used, next);
            let mut inner = scope.clone();
            inner.insert(*y, y2);
            FOFormula::rforall(y2, *lbl, x2, rename_clean_rec(b, &inner, used, next))
        }
        FOFormula::RExists(y, lbl, x, b) => {
            let x2 = look(*x);
            let y2 = bind(*y, used, next);
            let mut inner = scope.clone();
            inner.insert(*y, y2);
            FOFormula::rexists(y2, *lbl, x2, rename_clean_rec(b, &inner, used, next))
        }
        FOFormula::Forall(y, b) => {
            let y2 = bind(*y, used, next);
            let mut inner = scope.clone();
            inner.insert(*y, y2);
            FOFormula::forall(y2, rename_clean_rec(b, &inner, used, next))
        }
        FOFormula::Exists(y, b) => {
            let y2 = bind(*y, used, next);
            let mut inner = scope.clone();
            inner.insert(*y, y2);
            FOFormula::exists(y2, rename_clean_rec(b, &inner, used, next))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: u32) -> LExpr {
        LExpr::obj(i)
    }

    #[test]
    fn hole_substitution_into_bare_hole() {
        assert_eq!(substitute_hole(&LExpr::Hole, &x(1)), x(1));
    }

    #[test]
    fn hole_substitution_example() {
        // img3(inv2(P0_0) & img1(#)) with x2 plugged in.
        let e = LExpr::img(
            Label(3),
            LExpr::cap(
                LExpr::inv(Label(2), LExpr::SetVar(PropVar::new(0, 0))),
                LExpr::img(Label(1), LExpr::Hole),
            ),
        );
        let expected = LExpr::img(
            Label(3),
            LExpr::cap(
                LExpr::inv(Label(2), LExpr::SetVar(PropVar::new(0, 0))),
                LExpr::img(Label(1), x(2)),
            ),
        );
        assert_eq!(substitute_hole(&e, &x(2)), expected);
    }

    #[test]
    fn hole_for_hole_nesting() {
        let r_hole = LExpr::img(Label(1), LExpr::Hole);
        assert_eq!(
            substitute_hole(&r_hole, &r_hole),
            LExpr::img(Label(1), LExpr::img(Label(1), LExpr::Hole))
        );
    }

    #[test]
    fn hole_identity() {
        let e = LExpr::img(Label(1), LExpr::cap(LExpr::Hole, x(0)));
        assert_eq!(substitute_hole(&e, &LExpr::Hole), e);
    }

    #[test]
    fn hole_substitution_composes() {
        // One hole per layer: sub(sub(e,t),u) == sub(e, sub(t,u)).
        let e = LExpr::img(Label(1), LExpr::Hole);
        let t = LExpr::cap(LExpr::inv(Label(2), LExpr::Hole), x(0));
        let u = LExpr::ibox(Label(1), x(1));
        assert_eq!(
            substitute_hole(&substitute_hole(&e, &t), &u),
            substitute_hole(&e, &substitute_hole(&t, &u))
        );
    }

    #[test]
    fn setvar_substitution_example() {
        let p00 = PropVar::new(0, 0);
        let e = LExpr::img(
            Label(3),
            LExpr::cap(
                LExpr::inv(Label(2), LExpr::SetVar(p00.clone())),
                LExpr::img(Label(1), x(2)),
            ),
        );
        let mut m = BTreeMap::new();
        m.insert(p00, LExpr::img(Label(4), x(1)));
        let expected = LExpr::img(
            Label(3),
            LExpr::cap(
                LExpr::inv(Label(2), LExpr::img(Label(4), x(1))),
                LExpr::img(Label(1), x(2)),
            ),
        );
        assert_eq!(substitute_setvars(&e, &m).unwrap(), expected);
    }

    #[test]
    fn setvar_substitution_no_setvars_and_constants() {
        assert_eq!(substitute_setvars(&x(1), &BTreeMap::new()).unwrap(), x(1));
        let p0 = PropVar::new(0, 0);
        let p1 = PropVar::new(0, 1);
        let e = LExpr::cap(LExpr::SetVar(p0.clone()), LExpr::SetVar(p1.clone()));
        let mut m = BTreeMap::new();
        m.insert(p0, LExpr::Top);
        m.insert(p1, LExpr::Bot);
        assert_eq!(
            substitute_setvars(&e, &m).unwrap(),
            LExpr::cap(LExpr::Top, LExpr::Bot)
        );
    }

    #[test]
    fn setvar_substitution_missing_binding() {
        let e = LExpr::SetVar(PropVar::new(0, 7));
        assert!(matches!(
            substitute_setvars(&e, &BTreeMap::new()),
            Err(SubstError::MissingBinding(_))
        ));
    }

    #[test]
    fn free_vars_examples() {
        // y in img1(x)
        let f = FOFormula::Member(ObjVar(1), LExpr::img(Label(1), x(0)));
        assert_eq!(free_vars(&f), [ObjVar(0), ObjVar(1)].into());
        // ex y <1 x . y in x
        let g = FOFormula::rexists(
            ObjVar(1),
            Label(1),
            ObjVar(0),
            FOFormula::Member(ObjVar(1), x(0)),
        );
        assert_eq!(free_vars(&g), [ObjVar(0)].into());
    }

    #[test]
    fn rename_clean_splits_duplicate_binders() {
        // all y <1 x . all y <1 x . y in x
        let y = ObjVar(1);
        let xv = ObjVar(0);
        let f = FOFormula::rforall(
            y,
            Label(1),
            xv,
            FOFormula::rforall(y, Label(1), xv, FOFormula::Member(y, x(0))),
        );
        let g = rename_clean(&f);
        assert!(is_clean(&g));
        // Outer binder keeps its name, inner gets a fresh one bound in the atom.
        match g {
            FOFormula::RForall(y1, _, _, inner) => {
                assert_eq!(y1, y);
                match *inner {
                    FOFormula::RForall(y2, _, _, atom) => {
                        assert_ne!(y2, y);
                        assert_eq!(*atom, FOFormula::Member(y2, x(0)));
                    }
                    _ => panic!("shape"),
                }
            }
            _ => panic!("shape"),
        }
    }

    #[test]
    fn rename_clean_is_identity_on_clean_input() {
        let f = FOFormula::rexists(
            ObjVar(1),
            Label(1),
            ObjVar(0),
            FOFormula::rforall(
                ObjVar(2),
                Label(1),
                ObjVar(1),
                FOFormula::Member(ObjVar(2), x(0)),
            ),
        );
        assert!(is_clean(&f));
        assert_eq!(rename_clean(&f), f);
    }

    #[test]
    fn rename_clean_handles_free_bound_clash() {
        // x free in the left conjunct, bound on the right.
        let f = FOFormula::and(
            FOFormula::Eq(ObjVar(0), ObjVar(0)),
            FOFormula::exists(ObjVar(0), FOFormula::Eq(ObjVar(0), ObjVar(1))),
        );
        assert!(!is_clean(&f));
        let g = rename_clean(&f);
        assert!(is_clean(&g));
        assert_eq!(free_vars(&g), [ObjVar(0), ObjVar(1)].into());
    }

    #[test]
    fn sublanguage_checks() {
        let l = LExpr::img(Label(1), LExpr::cap(x(0), LExpr::inv(Label(2), x(1))));
        assert!(l.is_l());
        assert!(!l.is_lp(1));
        let lp = LExpr::ibox(Label(1), LExpr::cup(LExpr::SetVar(PropVar::new(0, 0)), LExpr::Bot));
        assert!(lp.is_lp(1));
        assert!(!lp.is_lp(0));
        assert!(!lp.is_l());
        let lsharp = LExpr::img(
            Label(3),
            LExpr::cap(
                LExpr::inv(Label(2), LExpr::SetVar(PropVar::new(0, 0))),
                LExpr::img(Label(1), LExpr::Hole),
            ),
        );
        assert!(lsharp.is_lsharp(1));
        assert!(!lsharp.is_lsharp(0));
        assert!(!lsharp.is_l());
    }

    #[test]
    fn deep_chain_drop_does_not_overflow() {
        let mut e = x(0);
        for _ in 0..200_000 {
            e = LExpr::img(Label(1), e);
        }
        assert_eq!(e.node_count(), 200_001);
        drop(e);
    }

    #[test]
    fn propvar_identity_ignores_display() {
        let a = PropVar::named(0, 1, "p");
        let b = PropVar::new(0, 1);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "p");
        assert_eq!(b.to_string(), "p0_1");
    }
}
