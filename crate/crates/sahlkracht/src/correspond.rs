//! Modal to first-order: recognize generalized Sahlqvist formulas, build
//! reduced syntactical trees, and emit the first-order correspondent by
//! substituting minimal valuations for the second-order variables.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::minval::{kf, MinvalError, RequirementMap};
use crate::regular::{assign_ranks, classify_box, is_negative, RegularError};
use crate::syntax::{
    rename_clean, FOFormula, LExpr, Label, ModalFormula, ObjVar, PropVar,
};

/// Monotone fresh-variable source for object variables.
#[derive(Clone, Debug)]
pub struct VarGen {
    next: u32,
}

impl VarGen {
    pub fn starting_at(next: u32) -> VarGen {
        VarGen { next }
    }

    pub fn fresh(&mut self) -> ObjVar {
        let v = ObjVar(self.next);
        self.next += 1;
        v
    }
}

/// A reduced syntactical tree: nodes in preorder, node 0 the root, each
/// non-root linked to its parent by a labelled edge. Labels are split into
/// the regular box-formulas and the negative formulas of the node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelledTree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TreeNode {
    pub parent: Option<(Label, usize)>,
    pub regular: Vec<ModalFormula>,
    pub negative: Vec<ModalFormula>,
}

impl LabelledTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// All regular box-formulas in node order.
    pub fn regular_formulas(&self) -> Vec<ModalFormula> {
        self.nodes
            .iter()
            .flat_map(|n| n.regular.iter().cloned())
            .collect()
    }
}

impl fmt::Display for LabelledTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, node) in self.nodes.iter().enumerate() {
            match node.parent {
                None => write!(f, "x{}:", i)?,
                Some((label, p)) => write!(f, "x{} <{} x{}:", i, label, p)?,
            }
            write!(f, " {{")?;
            for (k, g) in node.regular.iter().chain(node.negative.iter()).enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", g)?;
            }
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorrespondError {
    #[error("not built from box-formulas and negative formulas with & and diamonds: `{0}`")]
    NotGsaShape(ModalFormula),
    #[error("not a generalized Sahlqvist formula: {0}")]
    NotSahlqvist(String),
    #[error(transparent)]
    NotRegular(#[from] RegularError),
    #[error(transparent)]
    Minval(#[from] MinvalError),
    #[error("sharp translation applies to plain expressions only")]
    IllFormedExpr,
}

/// The decomposition of a generalized Sahlqvist formula into boxes,
/// conjunctions, variable-disjoint disjunctions and simple implications.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decomposition {
    Box(Label, Box<Decomposition>),
    And(Box<Decomposition>, Box<Decomposition>),
    DisjointOr(Box<Decomposition>, Box<Decomposition>),
    Simple(LabelledTree),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SahlqvistStatus {
    GeneralizedSahlqvist,
    Not,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SahlqvistClassification {
    pub status: SahlqvistStatus,
    pub decomposition: Option<Decomposition>,
    pub reason: Option<String>,
}

impl SahlqvistClassification {
    pub fn is_sahlqvist(&self) -> bool {
        self.status == SahlqvistStatus::GeneralizedSahlqvist
    }
}

/// Decompose a formula as a generalized Sahlqvist formula: boxes and
/// conjunctions throughout, disjunctions only between variable-disjoint
/// parts, and at the leaves implications whose antecedents decompose into
/// regular box-formulas and negative formulas under `&`, `|` and diamonds.
pub fn classify_sahlqvist(formula: &ModalFormula) -> SahlqvistClassification {
    match classify_outer(formula) {
        Ok(d) => SahlqvistClassification {
            status: SahlqvistStatus::GeneralizedSahlqvist,
            decomposition: Some(d),
            reason: None,
        },
        Err(reason) => SahlqvistClassification {
            status: SahlqvistStatus::Not,
            decomposition: None,
            reason: Some(reason),
        },
    }
}

fn classify_outer(formula: &ModalFormula) -> Result<Decomposition, String> {
    match formula {
        ModalFormula::Box(label, inner) => Ok(Decomposition::Box(
            *label,
            Box::new(classify_outer(inner)?),
        )),
        ModalFormula::And(l, r) => Ok(Decomposition::And(
            Box::new(classify_outer(l)?),
            Box::new(classify_outer(r)?),
        )),
        ModalFormula::Or(l, r) if l.vars().is_disjoint(&r.vars()) => Ok(Decomposition::DisjointOr(
            Box::new(classify_outer(l)?),
            Box::new(classify_outer(r)?),
        )),
        leaf => classify_leaf(leaf),
    }
}

/// Strip a negation, cancelling a double one.
fn negate(f: &ModalFormula) -> ModalFormula {
    match f {
        ModalFormula::Not(inner) => (**inner).clone(),
        other => ModalFormula::not(other.clone()),
    }
}

fn classify_leaf(leaf: &ModalFormula) -> Result<Decomposition, String> {
    // Read the leaf as an implication to falsum: A -> C becomes the
    // antecedent A & ~C.
    let antecedent = match leaf {
        ModalFormula::Implies(a, c) => match &**c {
            ModalFormula::Bot => (**a).clone(),
            c => ModalFormula::and((**a).clone(), negate(c)),
        },
        other => negate(other),
    };
    let simples = distribute_or(&antecedent);
    let mut decomposition: Option<Decomposition> = None;
    for simple in simples {
        let tree = reduced_tree(&simple).map_err(|e| e.to_string())?;
        // Ranking the antecedent's box-formulas must succeed.
        rank_tree(&tree).map_err(|e| e.to_string())?;
        let piece = Decomposition::Simple(tree);
        decomposition = Some(match decomposition {
            None => piece,
            Some(prev) => Decomposition::And(Box::new(prev), Box::new(piece)),
        });
    }
    Ok(decomposition.expect("distribution yields at least one antecedent"))
}

/// Multiply disjunctions out of the antecedent's constructor skeleton,
/// yielding the antecedents of simple implications.
fn distribute_or(gsa: &ModalFormula) -> Vec<ModalFormula> {
    match gsa {
        ModalFormula::Or(l, r) => {
            let mut out = distribute_or(l);
            out.extend(distribute_or(r));
            out
        }
        ModalFormula::And(l, r) => {
            let ls = distribute_or(l);
            let rs = distribute_or(r);
            let mut out = Vec::with_capacity(ls.len() * rs.len());
            for a in &ls {
                for b in &rs {
                    out.push(ModalFormula::and(a.clone(), b.clone()));
                }
            }
            out
        }
        ModalFormula::Dia(label, a) => distribute_or(a)
            .into_iter()
            .map(|x| ModalFormula::dia(*label, x))
            .collect(),
        leaf => vec![leaf.clone()],
    }
}

/// Build the reduced syntactical tree of an antecedent built from
/// box-formulas and negative formulas with `&` and diamonds only.
pub fn reduced_tree(antecedent: &ModalFormula) -> Result<LabelledTree, CorrespondError> {
    struct Build {
        regular: Vec<ModalFormula>,
        negative: Vec<ModalFormula>,
        children: Vec<(Label, Build)>,
    }

    fn build(f: &ModalFormula) -> Result<Build, CorrespondError> {
        match f {
            ModalFormula::And(l, r) => {
                let mut a = build(l)?;
                let b = build(r)?;
                for g in b.regular {
                    if !a.regular.contains(&g) {
                        a.regular.push(g);
                    }
                }
                for g in b.negative {
                    if !a.negative.contains(&g) {
                        a.negative.push(g);
                    }
                }
                a.children.extend(b.children);
                Ok(a)
            }
            ModalFormula::Dia(label, inner) => Ok(Build {
                regular: Vec::new(),
                negative: Vec::new(),
                children: vec![(*label, build(inner)?)],
            }),
            leaf => {
                let mut node = Build {
                    regular: Vec::new(),
                    negative: Vec::new(),
                    children: Vec::new(),
                };
                if classify_box(leaf).is_ok() {
                    node.regular.push(leaf.clone());
                } else if is_negative(leaf) {
                    node.negative.push(leaf.clone());
                } else {
                    return Err(CorrespondError::NotGsaShape(leaf.clone()));
                }
                Ok(node)
            }
        }
    }

    fn flatten(b: Build, parent: Option<(Label, usize)>, nodes: &mut Vec<TreeNode>) {
        let index = nodes.len();
        nodes.push(TreeNode {
            parent,
            regular: b.regular,
            negative: b.negative,
        });
        for (label, child) in b.children {
            flatten(child, Some((label, index)), nodes);
        }
    }

    let root = build(antecedent)?;
    let mut nodes = Vec::new();
    flatten(root, None, &mut nodes);
    Ok(LabelledTree { nodes })
}

/// Rank the tree's regular formulas, rewriting all labels so guards use only
/// lower ranks. Variables occurring solely in negative formulas get fresh
/// rank-0 identities so they cannot collide with ranked ones.
pub fn rank_tree(tree: &LabelledTree) -> Result<LabelledTree, RegularError> {
    let regular = tree.regular_formulas();
    let assignment = assign_ranks(&regular)?;
    let mut map = assignment.map.clone();
    let mut next_rank0 = map
        .values()
        .filter(|p| p.rank == 0)
        .map(|p| p.index + 1)
        .max()
        .unwrap_or(0);
    for node in &tree.nodes {
        for neg in &node.negative {
            for v in neg.vars() {
                if !map.contains_key(&v) {
                    map.insert(v.clone(), v.reranked(0, next_rank0));
                    next_rank0 += 1;
                }
            }
        }
    }
    let nodes = tree
        .nodes
        .iter()
        .map(|n| TreeNode {
            parent: n.parent,
            regular: n.regular.iter().map(|f| f.rename_vars(&map)).collect(),
            negative: n.negative.iter().map(|f| f.rename_vars(&map)).collect(),
        })
        .collect();
    Ok(LabelledTree { nodes })
}

/// The standard first-order translation, with `P(x)` left as membership
/// placeholders `x in P`.
pub fn standard_translation(formula: &ModalFormula, at: ObjVar) -> FOFormula {
    let mut gen = VarGen::starting_at(at.0 + 1);
    st(formula, at, &mut gen, false)
}

/// Translation clauses shared by the plain and the restricted form.
fn st(formula: &ModalFormula, at: ObjVar, gen: &mut VarGen, restricted: bool) -> FOFormula {
    match formula {
        ModalFormula::Var(p) => FOFormula::Member(at, LExpr::SetVar(p.clone())),
        ModalFormula::Top => FOFormula::Top,
        ModalFormula::Bot => FOFormula::Bot,
        ModalFormula::Not(a) => FOFormula::not(st(a, at, gen, restricted)),
        ModalFormula::And(l, r) => FOFormula::and(
            st(l, at, gen, restricted),
            st(r, at, gen, restricted),
        ),
        ModalFormula::Or(l, r) => FOFormula::or(
            st(l, at, gen, restricted),
            st(r, at, gen, restricted),
        ),
        ModalFormula::Implies(l, r) => FOFormula::or(
            FOFormula::not(st(l, at, gen, restricted)),
            st(r, at, gen, restricted),
        ),
        ModalFormula::Dia(label, a) => {
            let y = gen.fresh();
            let body = st(a, y, gen, restricted);
            if restricted {
                FOFormula::rexists(y, *label, at, body)
            } else {
                FOFormula::exists(y, FOFormula::and(FOFormula::Rel(*label, at, y), body))
            }
        }
        ModalFormula::Box(label, a) => {
            let y = gen.fresh();
            let body = st(a, y, gen, restricted);
            if restricted {
                FOFormula::rforall(y, *label, at, body)
            } else {
                FOFormula::forall(
                    y,
                    FOFormula::or(FOFormula::not(FOFormula::Rel(*label, at, y)), body),
                )
            }
        }
    }
}

/// The first-order reading of a membership atom, clause by clause:
/// membership in a variable is equality, intersections become conjunctions,
/// unions disjunctions, the relational operators quantify over neighbours.
pub fn sharp_translate(subject: ObjVar, e: &LExpr) -> Result<FOFormula, CorrespondError> {
    let top = subject.0.max(e.obj_vars().iter().map(|v| v.0).max().unwrap_or(0));
    let mut gen = VarGen::starting_at(top + 1);
    sharp(subject, e, &mut gen)
}

fn sharp(subject: ObjVar, e: &LExpr, gen: &mut VarGen) -> Result<FOFormula, CorrespondError> {
    Ok(match e {
        LExpr::ObjVar(x) => FOFormula::Eq(subject, *x),
        LExpr::Top => FOFormula::Eq(subject, subject),
        LExpr::Bot => FOFormula::not(FOFormula::Eq(subject, subject)),
        LExpr::Cap(l, r) => FOFormula::and(sharp(subject, l, gen)?, sharp(subject, r, gen)?),
        LExpr::Cup(l, r) => FOFormula::or(sharp(subject, l, gen)?, sharp(subject, r, gen)?),
        LExpr::Inv(label, a) => {
            let z = gen.fresh();
            FOFormula::exists(
                z,
                FOFormula::and(FOFormula::Rel(*label, subject, z), sharp(z, a, gen)?),
            )
        }
        LExpr::IBox(label, a) => {
            let z = gen.fresh();
            FOFormula::forall(
                z,
                FOFormula::or(
                    FOFormula::not(FOFormula::Rel(*label, subject, z)),
                    sharp(z, a, gen)?,
                ),
            )
        }
        LExpr::Img(label, a) => {
            let z = gen.fresh();
            FOFormula::exists(
                z,
                FOFormula::and(FOFormula::Rel(*label, z, subject), sharp(z, a, gen)?),
            )
        }
        LExpr::SetVar(_) | LExpr::Hole => return Err(CorrespondError::IllFormedExpr),
    })
}

/// Both emitted forms of a correspondent: the restricted-quantifier
/// generalized Kracht form and the plain first-order form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correspondent {
    pub kracht: FOFormula,
    pub plain: FOFormula,
}

/// The correspondent of one simple implication, presented by its reduced
/// tree. Tree nodes become restricted universal quantifiers along the
/// edges; the consequent is the translated disjunction of the negated
/// negative labels, with every placeholder replaced by the minimal
/// valuation of its variable.
pub fn simple_correspondent(tree: &LabelledTree) -> Result<Correspondent, CorrespondError> {
    let ranked = rank_tree(tree)?;
    let mut gen = VarGen::starting_at(1);
    simple_correspondent_at(&ranked, ObjVar(0), &mut gen)
}

fn simple_correspondent_at(
    ranked: &LabelledTree,
    anchor: ObjVar,
    gen: &mut VarGen,
) -> Result<Correspondent, CorrespondError> {
    // Node variables in preorder: the root is the anchor.
    let mut node_var: Vec<ObjVar> = Vec::with_capacity(ranked.len());
    for (i, _) in ranked.nodes.iter().enumerate() {
        node_var.push(if i == 0 { anchor } else { gen.fresh() });
    }

    let mut requirements = RequirementMap::empty();
    for (i, node) in ranked.nodes.iter().enumerate() {
        for f in &node.regular {
            requirements.insert(node_var[i], f.clone())?;
        }
    }

    // Consequent: for every negative label ~ψ at node j, the translation of
    // the positive formula ψ at the node's variable.
    let mut kracht_parts = Vec::new();
    let mut plain_parts = Vec::new();
    let mut kf_cache: BTreeMap<PropVar, Vec<LExpr>> = BTreeMap::new();
    for (j, node) in ranked.nodes.iter().enumerate() {
        for neg in &node.negative {
            let positive = match neg {
                ModalFormula::Not(inner) => (**inner).clone(),
                other => {
                    return Err(CorrespondError::NotGsaShape(other.clone()));
                }
            };
            let restricted = st(&positive, node_var[j], gen, true);
            let kracht =
                replace_placeholders(&restricted, &requirements, &mut kf_cache, gen, true)?;
            kracht_parts.push(kracht);
            let plain_raw = st(&positive, node_var[j], gen, false);
            let plain =
                replace_placeholders(&plain_raw, &requirements, &mut kf_cache, gen, false)?;
            plain_parts.push(plain);
        }
    }
    let kracht_consequent = FOFormula::disj(kracht_parts);
    let plain_consequent = FOFormula::disj(plain_parts);

    // Restricted form: quantify down the tree edges.
    let mut kracht = kracht_consequent;
    for i in (1..ranked.len()).rev() {
        let (label, parent) = ranked.nodes[i].parent.expect("non-root has a parent");
        kracht = FOFormula::rforall(node_var[i], label, node_var[parent], kracht);
    }

    // Plain form: a universally quantified implication from the edge atoms.
    let mut edge_atoms = Vec::new();
    for i in 1..ranked.len() {
        let (label, parent) = ranked.nodes[i].parent.expect("non-root has a parent");
        edge_atoms.push(FOFormula::Rel(label, node_var[parent], node_var[i]));
    }
    let mut plain = if edge_atoms.is_empty() {
        plain_consequent
    } else {
        FOFormula::or(
            FOFormula::not(FOFormula::conj(edge_atoms)),
            plain_consequent,
        )
    };
    for i in (1..ranked.len()).rev() {
        plain = FOFormula::forall(node_var[i], plain);
    }

    Ok(Correspondent { kracht, plain })
}

/// Replace membership placeholders `y in P` by the union of the variable's
/// minimal-valuation branches: as membership atoms in the restricted form,
/// through the sharp translation in the plain form.
fn replace_placeholders(
    f: &FOFormula,
    requirements: &RequirementMap,
    cache: &mut BTreeMap<PropVar, Vec<LExpr>>,
    gen: &mut VarGen,
    keep_atoms: bool,
) -> Result<FOFormula, CorrespondError> {
    Ok(match f {
        FOFormula::Member(y, LExpr::SetVar(p)) => {
            if !cache.contains_key(p) {
                let branches = kf(requirements, p)?;
                cache.insert(p.clone(), branches);
            }
            let branches = cache[p].clone();
            if keep_atoms {
                FOFormula::disj(branches.into_iter().map(|b| FOFormula::Member(*y, b)))
            } else {
                let mut parts = Vec::new();
                for b in &branches {
                    parts.push(sharp(*y, b, gen)?);
                }
                FOFormula::disj(parts)
            }
        }
        FOFormula::Member(_, _)
        | FOFormula::Rel(_, _, _)
        | FOFormula::Eq(_, _)
        | FOFormula::Top
        | FOFormula::Bot => f.clone(),
        FOFormula::Not(a) => FOFormula::not(replace_placeholders(
            a,
            requirements,
            cache,
            gen,
            keep_atoms,
        )?),
        FOFormula::And(l, r) => FOFormula::and(
            replace_placeholders(l, requirements, cache, gen, keep_atoms)?,
            replace_placeholders(r, requirements, cache, gen, keep_atoms)?,
        ),
        FOFormula::Or(l, r) => FOFormula::or(
            replace_placeholders(l, requirements, cache, gen, keep_atoms)?,
            replace_placeholders(r, requirements, cache, gen, keep_atoms)?,
        ),
        FOFormula::RForall(y, label, x, b) => FOFormula::rforall(
            *y,
            *label,
            *x,
            replace_placeholders(b, requirements, cache, gen, keep_atoms)?,
        ),
        FOFormula::RExists(y, label, x, b) => FOFormula::rexists(
            *y,
            *label,
            *x,
            replace_placeholders(b, requirements, cache, gen, keep_atoms)?,
        ),
        FOFormula::Forall(y, b) => FOFormula::forall(
            *y,
            replace_placeholders(b, requirements, cache, gen, keep_atoms)?,
        ),
        FOFormula::Exists(y, b) => FOFormula::exists(
            *y,
            replace_placeholders(b, requirements, cache, gen, keep_atoms)?,
        ),
    })
}

/// The first-order correspondent of a generalized Sahlqvist formula, in
/// generalized Kracht shape.
pub fn correspond(formula: &ModalFormula) -> Result<FOFormula, CorrespondError> {
    Ok(correspond_full(formula)?.kracht)
}

/// Both the Kracht-shaped and the plain correspondent.
pub fn correspond_full(formula: &ModalFormula) -> Result<Correspondent, CorrespondError> {
    let classification = classify_sahlqvist(formula);
    let decomposition = match classification.decomposition {
        Some(d) => d,
        None => {
            return Err(CorrespondError::NotSahlqvist(
                classification.reason.unwrap_or_default(),
            ))
        }
    };
    let mut gen = VarGen::starting_at(1);
    let folded = fold_decomposition(&decomposition, ObjVar(0), &mut gen)?;
    let result = Correspondent {
        kracht: rename_clean(&folded.kracht),
        plain: rename_clean(&folded.plain),
    };
    debug_assert!(
        crate::synthesize::check_kracht(&result.kracht).is_kracht(),
        "correspondent must be a generalized Kracht formula: {}",
        result.kracht
    );
    Ok(result)
}

fn fold_decomposition(
    d: &Decomposition,
    anchor: ObjVar,
    gen: &mut VarGen,
) -> Result<Correspondent, CorrespondError> {
    Ok(match d {
        Decomposition::Simple(tree) => {
            let ranked = rank_tree(tree)?;
            simple_correspondent_at(&ranked, anchor, gen)?
        }
        Decomposition::Box(label, inner) => {
            let y = gen.fresh();
            let sub = fold_decomposition(inner, y, gen)?;
            Correspondent {
                kracht: FOFormula::rforall(y, *label, anchor, sub.kracht),
                plain: FOFormula::forall(
                    y,
                    FOFormula::or(
                        FOFormula::not(FOFormula::Rel(*label, anchor, y)),
                        sub.plain,
                    ),
                ),
            }
        }
        Decomposition::And(l, r) => {
            let a = fold_decomposition(l, anchor, gen)?;
            let b = fold_decomposition(r, anchor, gen)?;
            Correspondent {
                kracht: FOFormula::and(a.kracht, b.kracht),
                plain: FOFormula::and(a.plain, b.plain),
            }
        }
        Decomposition::DisjointOr(l, r) => {
            let a = fold_decomposition(l, anchor, gen)?;
            let b = fold_decomposition(r, anchor, gen)?;
            Correspondent {
                kracht: FOFormula::or(a.kracht, b.kracht),
                plain: FOFormula::or(a.plain, b.plain),
            }
        }
    })
}
