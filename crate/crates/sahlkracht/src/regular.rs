//! Box-formula classification, dependency graphs, and rank assignment.
//!
//! A box-formula is `POS₁ -> [..](POS₂ -> ... -> p)`: positive guards and
//! boxes around a final head variable. A set of box-formulas is regular when
//! its dependency graph (guard variable → head) is acyclic; ranks then order
//! the variables so every guard uses only lower-rank variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::{Label, ModalFormula, PropVar};

/// No `~` and no `->` anywhere (constants allowed).
pub fn is_positive(f: &ModalFormula) -> bool {
    match f {
        ModalFormula::Var(_) | ModalFormula::Top | ModalFormula::Bot => true,
        ModalFormula::Not(_) | ModalFormula::Implies(_, _) => false,
        ModalFormula::And(l, r) | ModalFormula::Or(l, r) => is_positive(l) && is_positive(r),
        ModalFormula::Box(_, a) | ModalFormula::Dia(_, a) => is_positive(a),
    }
}

/// A negation of a positive formula, checked after stripping one outer `~`.
pub fn is_negative(f: &ModalFormula) -> bool {
    match f {
        ModalFormula::Not(a) => is_positive(a),
        _ => false,
    }
}

/// One `POS -> [..]` stretch of a box-formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub guard: Option<ModalFormula>,
    pub boxes: Vec<Label>,
}

/// The normal form of a box-formula: guard/box segments around a head.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxFormulaShape {
    pub segments: Vec<Segment>,
    pub head: PropVar,
}

impl BoxFormulaShape {
    /// Rebuild the formula the shape was read from.
    pub fn reconstruct(&self) -> ModalFormula {
        let mut f = ModalFormula::Var(self.head.clone());
        for seg in self.segments.iter().rev() {
            for label in seg.boxes.iter().rev() {
                f = ModalFormula::boxed(*label, f);
            }
            if let Some(guard) = &seg.guard {
                f = ModalFormula::implies(guard.clone(), f);
            }
        }
        f
    }

    /// Variables occurring in guards (never the head position).
    pub fn guard_vars(&self) -> BTreeSet<PropVar> {
        let mut out = BTreeSet::new();
        for seg in &self.segments {
            if let Some(g) = &seg.guard {
                out.extend(g.vars());
            }
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("not a box-formula: offending subterm `{offending}`")]
pub struct NotBoxFormula {
    pub offending: ModalFormula,
}

/// Decompose a formula along the box-formula grammar
/// (variable | POS -> BF | box BF).
pub fn classify_box(formula: &ModalFormula) -> Result<BoxFormulaShape, NotBoxFormula> {
    let mut segments = Vec::new();
    let mut guard: Option<ModalFormula> = None;
    let mut boxes: Vec<Label> = Vec::new();
    let mut cur = formula;
    loop {
        match cur {
            ModalFormula::Var(p) => {
                segments.push(Segment { guard, boxes });
                return Ok(BoxFormulaShape {
                    segments,
                    head: p.clone(),
                });
            }
            ModalFormula::Implies(pos, rest) => {
                if !is_positive(pos) {
                    return Err(NotBoxFormula {
                        offending: (**pos).clone(),
                    });
                }
                if guard.is_some() || !boxes.is_empty() {
                    segments.push(Segment { guard, boxes });
                    boxes = Vec::new();
                }
                guard = Some((**pos).clone());
                cur = rest;
            }
            ModalFormula::Box(label, rest) => {
                boxes.push(*label);
                cur = rest;
            }
            other => {
                return Err(NotBoxFormula {
                    offending: other.clone(),
                })
            }
        }
    }
}

/// Dependency graph of a set of box-formulas: an edge p → q whenever p
/// occurs in a guard of a formula headed by q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    pub vertices: BTreeSet<PropVar>,
    pub edges: BTreeSet<(PropVar, PropVar)>,
}

impl DependencyGraph {
    pub fn successors<'a>(&'a self, p: &'a PropVar) -> impl Iterator<Item = &'a PropVar> + 'a {
        self.edges
            .iter()
            .filter(move |(a, _)| a == p)
            .map(|(_, b)| b)
    }
}

pub fn dependency_graph(
    formulas: &[ModalFormula],
) -> Result<DependencyGraph, NotBoxFormula> {
    let mut vertices = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for f in formulas {
        let shape = classify_box(f)?;
        vertices.extend(f.vars());
        for p in shape.guard_vars() {
            edges.insert((p, shape.head.clone()));
        }
    }
    Ok(DependencyGraph { vertices, edges })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegularError {
    #[error(transparent)]
    NotBoxFormula(#[from] NotBoxFormula),
    #[error("irregular set: dependency cycle {}", CycleDisplay(.cycle))]
    Irregular { cycle: Vec<PropVar> },
}

struct CycleDisplay<'a>(&'a [PropVar]);
impl fmt::Display for CycleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " -> ")?;
            }
            write!(f, "{}", p)?;
        }
        Ok(())
    }
}

/// A rank assignment: the substitution sending each variable of the input
/// set to its ranked replacement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankAssignment {
    pub map: BTreeMap<PropVar, PropVar>,
}

impl RankAssignment {
    pub fn rank_of(&self, p: &PropVar) -> Option<u32> {
        self.map.get(p).map(|q| q.rank)
    }

    pub fn apply(&self, f: &ModalFormula) -> ModalFormula {
        f.rename_vars(&self.map)
    }
}

/// Assign ranks making the set regular: rank = length of the longest
/// dependency chain into the variable, indexes by first occurrence in the
/// input. Fails with a witness cycle when the dependency graph is cyclic.
pub fn assign_ranks(formulas: &[ModalFormula]) -> Result<RankAssignment, RegularError> {
    let graph = dependency_graph(formulas)?;
    if let Some(cycle) = find_cycle(&graph) {
        return Err(RegularError::Irregular { cycle });
    }
    // Longest incoming chain, memoized over the acyclic graph.
    let mut depth: BTreeMap<PropVar, u32> = BTreeMap::new();
    fn longest(
        p: &PropVar,
        graph: &DependencyGraph,
        depth: &mut BTreeMap<PropVar, u32>,
    ) -> u32 {
        if let Some(d) = depth.get(p) {
            return *d;
        }
        let d = graph
            .edges
            .iter()
            .filter(|(_, b)| b == p)
            .map(|(a, _)| longest(a, graph, depth) + 1)
            .max()
            .unwrap_or(0);
        depth.insert(p.clone(), d);
        d
    }
    for v in &graph.vertices {
        longest(v, &graph, &mut depth);
    }
    // First-occurrence order over the input decides indexes within a rank.
    let mut order: Vec<PropVar> = Vec::new();
    for f in formulas {
        collect_occurrence_order(f, &mut order);
    }
    let mut next_index: BTreeMap<u32, u32> = BTreeMap::new();
    let mut map = BTreeMap::new();
    for p in order {
        if map.contains_key(&p) {
            continue;
        }
        let rank = depth[&p];
        let index = next_index.entry(rank).or_insert(0);
        map.insert(p.clone(), p.reranked(rank, *index));
        *index += 1;
    }
    Ok(RankAssignment { map })
}

fn collect_occurrence_order(f: &ModalFormula, order: &mut Vec<PropVar>) {
    match f {
        ModalFormula::Var(p) => {
            if !order.contains(p) {
                order.push(p.clone());
            }
        }
        ModalFormula::Top | ModalFormula::Bot => {}
        ModalFormula::Not(a) | ModalFormula::Box(_, a) | ModalFormula::Dia(_, a) => {
            collect_occurrence_order(a, order)
        }
        ModalFormula::And(l, r) | ModalFormula::Or(l, r) | ModalFormula::Implies(l, r) => {
            collect_occurrence_order(l, order);
            collect_occurrence_order(r, order);
        }
    }
}

fn find_cycle(graph: &DependencyGraph) -> Option<Vec<PropVar>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark: BTreeMap<&PropVar, Mark> =
        graph.vertices.iter().map(|v| (v, Mark::White)).collect();
    let mut stack: Vec<&PropVar> = Vec::new();

    fn visit<'a>(
        v: &'a PropVar,
        graph: &'a DependencyGraph,
        mark: &mut BTreeMap<&'a PropVar, Mark>,
        stack: &mut Vec<&'a PropVar>,
    ) -> Option<Vec<PropVar>> {
        mark.insert(v, Mark::Grey);
        stack.push(v);
        for w in graph.successors(v) {
            match mark.get(w).copied().unwrap_or(Mark::White) {
                Mark::Grey => {
                    let start = stack.iter().position(|u| *u == w).unwrap();
                    return Some(stack[start..].iter().map(|u| (*u).clone()).collect());
                }
                Mark::White => {
                    if let Some(c) = visit(w, graph, mark, stack) {
                        return Some(c);
                    }
                }
                Mark::Black => {}
            }
        }
        stack.pop();
        mark.insert(v, Mark::Black);
        None
    }

    for v in &graph.vertices {
        if mark[v] == Mark::White {
            if let Some(c) = visit(v, graph, &mut mark, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

/// Check that a formula is a regular box-formula under its stamped ranks:
/// a box-formula whose guards use only variables of rank strictly below the
/// head's rank.
pub fn validate_regular(formula: &ModalFormula) -> Result<BoxFormulaShape, RegularError> {
    let shape = classify_box(formula)?;
    let head_rank = shape.head.rank;
    for p in shape.guard_vars() {
        if p.rank >= head_rank {
            return Err(RegularError::Irregular {
                cycle: vec![p, shape.head.clone()],
            });
        }
    }
    Ok(shape)
}
