//! Safe and quasi-safe expression analysis.
//!
//! An expression is safe when it lies in the class generated from object
//! variables by images and by intersections with positive combinations —
//! exactly the shapes the minimal-valuation operators produce. A quasi-safe
//! expression is a positive combination (`&`, `|`, `inv`, `ibox`, `T`, `F`)
//! of safe ones. The analysis is a single bottom-up pass, linear in the node
//! count, using an explicit stack so chains of any depth are fine.
//!
//! Safety here is purely syntactic. It does not coincide with
//! bisimulation-style safety of the corresponding first-order formulas:
//! membership in `img1(img1(x0) & img1(x1))` is safe in this sense but is
//! not preserved under bisimulations.

use thiserror::Error;

use crate::syntax::LExpr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SafetyStatus {
    Safe,
    QuasiSafe,
    Neither,
}

/// Per-node analysis results, indexed by preorder position (document order).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeFlags {
    /// The "safe for the whole expression" flag of the definition: variables
    /// are safe, an image is safe when its argument is, an intersection when
    /// either side is.
    pub safe_for: bool,
    /// Every image operator in this subtree has a safe argument.
    pub images_ok: bool,
    /// The subtree is a safe expression in its own right.
    pub standalone_safe: bool,
    /// The subtree is a positive combination of safe expressions.
    pub positive_combination: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafetyVerdict {
    pub status: SafetyStatus,
    /// Flags per node in preorder.
    pub marked: Vec<NodeFlags>,
    /// Preorder position of the subexpression blocking quasi-safety, when
    /// the status is `Neither`.
    pub witness: Option<usize>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SafetyError {
    #[error("expression is not plain: {0}")]
    IllFormed(&'static str),
    #[error("expression is neither safe nor quasi-safe")]
    NotQuasiSafe,
}

/// Visit nodes in preorder, iteratively.
pub fn preorder(e: &LExpr) -> Vec<&LExpr> {
    let mut out = Vec::new();
    let mut stack = vec![e];
    while let Some(node) = stack.pop() {
        out.push(node);
        // push children right-to-left so the left child is visited first
        let kids = node.children();
        for k in kids.into_iter().rev() {
            stack.push(k);
        }
    }
    out
}

/// Decide safety of a plain expression in one linear bottom-up pass.
pub fn analyze_safety(e: &LExpr) -> Result<SafetyVerdict, SafetyError> {
    let nodes = preorder(e);
    let n = nodes.len();

    // Children positions per preorder node, computed from subtree sizes.
    let mut sizes = vec![0usize; n];
    {
        // Preorder: a node at position i with children spans [i, i+size).
        // Compute sizes by a reverse scan with an explicit stack of pending
        // parents.
        fn arity(e: &LExpr) -> usize {
            e.children().len()
        }
        let mut stack: Vec<usize> = Vec::new();
        for i in (0..n).rev() {
            let a = arity(nodes[i]);
            let mut size = 1usize;
            for _ in 0..a {
                let c = stack.pop().expect("child size available");
                size += sizes[c];
            }
            sizes[i] = size;
            stack.push(i);
        }
    }
    // In preorder, a node at i spans [i, i + sizes[i]); its first child sits
    // at i + 1 and a second child at i + 1 + sizes[i + 1].
    let left = |i: usize| i + 1;
    let right = |i: usize| i + 1 + sizes[i + 1];

    let mut flags = vec![
        NodeFlags {
            safe_for: false,
            images_ok: true,
            standalone_safe: false,
            positive_combination: false,
        };
        n
    ];
    // Bottom-up: positions in reverse preorder always see children first.
    for i in (0..n).rev() {
        let (safe_for, images_ok) = match nodes[i] {
            LExpr::SetVar(_) => return Err(SafetyError::IllFormed("set variable")),
            LExpr::Hole => return Err(SafetyError::IllFormed("hole")),
            LExpr::ObjVar(_) => (true, true),
            LExpr::Top | LExpr::Bot => (false, true),
            LExpr::Img(_, _) => {
                let c = flags[left(i)];
                (c.safe_for, c.images_ok && c.safe_for)
            }
            LExpr::Cap(_, _) => {
                let (l, r) = (flags[left(i)], flags[right(i)]);
                (l.safe_for || r.safe_for, l.images_ok && r.images_ok)
            }
            LExpr::Cup(_, _) => {
                let (l, r) = (flags[left(i)], flags[right(i)]);
                (false, l.images_ok && r.images_ok)
            }
            LExpr::Inv(_, _) | LExpr::IBox(_, _) => (false, flags[left(i)].images_ok),
        };
        let standalone_safe = safe_for && images_ok;
        let positive_combination = standalone_safe
            || match nodes[i] {
                LExpr::Top | LExpr::Bot => true,
                LExpr::Cap(_, _) | LExpr::Cup(_, _) => {
                    flags[left(i)].positive_combination && flags[right(i)].positive_combination
                }
                LExpr::Inv(_, _) | LExpr::IBox(_, _) => flags[left(i)].positive_combination,
                _ => false,
            };
        flags[i] = NodeFlags {
            safe_for,
            images_ok,
            standalone_safe,
            positive_combination,
        };
    }

    let status = if flags[0].standalone_safe {
        SafetyStatus::Safe
    } else if flags[0].positive_combination {
        SafetyStatus::QuasiSafe
    } else {
        SafetyStatus::Neither
    };
    let witness = if status == SafetyStatus::Neither {
        // Shallowest node blocking the positive-combination reading: walk
        // down through failing combination nodes.
        let mut at = 0usize;
        loop {
            let descend = match nodes[at] {
                LExpr::Cap(_, _) | LExpr::Cup(_, _) => {
                    if !flags[left(at)].positive_combination {
                        Some(left(at))
                    } else if !flags[right(at)].positive_combination {
                        Some(right(at))
                    } else {
                        None
                    }
                }
                LExpr::Inv(_, _) | LExpr::IBox(_, _) => {
                    (!flags[left(at)].positive_combination).then(|| left(at))
                }
                _ => None,
            };
            match descend {
                Some(c) => at = c,
                None => break Some(at),
            }
        }
    } else {
        None
    };
    Ok(SafetyVerdict {
        status,
        marked: flags,
        witness,
    })
}

/// The maximal safe subexpressions, left to right, structurally deduplicated.
pub fn safe_subexpressions(e: &LExpr) -> Result<Vec<LExpr>, SafetyError> {
    let verdict = analyze_safety(e)?;
    if verdict.status == SafetyStatus::Neither {
        return Err(SafetyError::NotQuasiSafe);
    }
    let mut out: Vec<LExpr> = Vec::new();
    collect_safe_frontier(e, &mut out);
    Ok(out)
}

fn collect_safe_frontier(e: &LExpr, out: &mut Vec<LExpr>) {
    // Recomputing per node is fine here: expressions at this layer are small.
    let verdict = analyze_safety(e).expect("caller checked well-formedness");
    if verdict.status == SafetyStatus::Safe {
        if !out.contains(e) {
            out.push(e.clone());
        }
        return;
    }
    for child in e.children() {
        collect_safe_frontier(child, out);
    }
}

/// Independent grammar reading of the safe class, used by the test suites as
/// a second route: variables are members, images of members are members,
/// and an intersection is a member when one side is a member and the other a
/// positive combination of members.
pub fn in_k_grammar(e: &LExpr) -> bool {
    match e {
        LExpr::ObjVar(_) => true,
        LExpr::Img(_, a) => in_k_grammar(a),
        LExpr::Cap(l, r) => {
            (in_k_grammar(l) && is_positive_combination_of_k(r))
                || (in_k_grammar(r) && is_positive_combination_of_k(l))
        }
        _ => false,
    }
}

pub fn is_positive_combination_of_k(e: &LExpr) -> bool {
    if in_k_grammar(e) {
        return true;
    }
    match e {
        LExpr::Top | LExpr::Bot => true,
        LExpr::Cap(l, r) | LExpr::Cup(l, r) => {
            is_positive_combination_of_k(l) && is_positive_combination_of_k(r)
        }
        LExpr::Inv(_, a) | LExpr::IBox(_, a) => is_positive_combination_of_k(a),
        _ => false,
    }
}

/// Sample a member of the safe class by its grammar: object variables,
/// images of members, and intersections of a member with a positive
/// combination of members. Independent of the flag-based analysis.
pub fn sample_k_grammar(rng: &mut crate::semantics::SplitMix64, depth: usize, labels: &[crate::syntax::Label]) -> LExpr {
    let label = labels[rng.below(labels.len() as u64) as usize];
    if depth == 0 {
        return LExpr::obj(rng.below(2) as u32);
    }
    match rng.below(3) {
        0 => LExpr::obj(rng.below(2) as u32),
        1 => LExpr::img(label, sample_k_grammar(rng, depth - 1, labels)),
        _ => {
            let member = sample_k_grammar(rng, depth - 1, labels);
            let combination = sample_positive_combination(rng, depth - 1, labels);
            if rng.chance(50) {
                LExpr::cap(member, combination)
            } else {
                LExpr::cap(combination, member)
            }
        }
    }
}

fn sample_positive_combination(
    rng: &mut crate::semantics::SplitMix64,
    depth: usize,
    labels: &[crate::syntax::Label],
) -> LExpr {
    let label = labels[rng.below(labels.len() as u64) as usize];
    if depth == 0 {
        return match rng.below(3) {
            0 => LExpr::Top,
            1 => LExpr::Bot,
            _ => sample_k_grammar(rng, 0, labels),
        };
    }
    match rng.below(6) {
        0 => LExpr::cap(
            sample_positive_combination(rng, depth - 1, labels),
            sample_positive_combination(rng, depth - 1, labels),
        ),
        1 => LExpr::cup(
            sample_positive_combination(rng, depth - 1, labels),
            sample_positive_combination(rng, depth - 1, labels),
        ),
        2 => LExpr::inv(label, sample_positive_combination(rng, depth - 1, labels)),
        3 => LExpr::ibox(label, sample_positive_combination(rng, depth - 1, labels)),
        _ => sample_k_grammar(rng, depth, labels),
    }
}

/// Expressions over `{x0, x1, T, F}` with one relation, grouped by exact
/// depth (`result[d]` holds the expressions of depth `d + 1`). The
/// verification suites enumerate these exhaustively.
pub fn expressions_by_depth(max_depth: usize) -> Vec<Vec<LExpr>> {
    use crate::syntax::Label;
    let mut by_depth: Vec<Vec<LExpr>> = Vec::with_capacity(max_depth);
    by_depth.push(vec![LExpr::obj(0), LExpr::obj(1), LExpr::Top, LExpr::Bot]);
    for d in 1..max_depth {
        let mut layer = Vec::new();
        for e in &by_depth[d - 1] {
            layer.push(LExpr::inv(Label(1), e.clone()));
            layer.push(LExpr::ibox(Label(1), e.clone()));
            layer.push(LExpr::img(Label(1), e.clone()));
        }
        // Binary nodes of depth d+1: at least one side of depth d.
        let exact: &Vec<LExpr> = &by_depth[d - 1];
        let strictly_shallower: Vec<&LExpr> = by_depth[..d - 1].iter().flatten().collect();
        for l in exact {
            for r in exact
                .iter()
                .chain(strictly_shallower.iter().copied())
            {
                layer.push(LExpr::cap(l.clone(), r.clone()));
                layer.push(LExpr::cup(l.clone(), r.clone()));
            }
        }
        for l in &strictly_shallower {
            for r in exact {
                layer.push(LExpr::cap((*l).clone(), r.clone()));
                layer.push(LExpr::cup((*l).clone(), r.clone()));
            }
        }
        by_depth.push(layer);
    }
    by_depth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expr;

    fn status(text: &str) -> SafetyStatus {
        analyze_safety(&parse_expr(text).unwrap()).unwrap().status
    }

    #[test]
    fn safe_golden_examples() {
        for text in [
            "x0",
            "img1(x0)",
            "img1(img1(x0) & inv1(img1(x0)))",
            "img1(img1(x0) & inv1(T))",
            "img1((img1(x0) & inv1(img1(x0))) & (inv1(x0) & inv1(img1(x0))))",
        ] {
            assert_eq!(status(text), SafetyStatus::Safe, "{}", text);
        }
    }

    #[test]
    fn non_safe_golden_examples() {
        assert_eq!(status("inv1(x0)"), SafetyStatus::QuasiSafe);
        assert_eq!(status("img1(inv1(x0))"), SafetyStatus::Neither);
        assert_eq!(status("img1(T)"), SafetyStatus::Neither);
    }

    #[test]
    fn constants_are_quasi_safe_only() {
        assert_eq!(status("T"), SafetyStatus::QuasiSafe);
        assert_eq!(status("F"), SafetyStatus::QuasiSafe);
        assert_eq!(status("inv1(T)"), SafetyStatus::QuasiSafe);
    }

    #[test]
    fn witness_points_at_blocking_image() {
        let e = parse_expr("img1(inv1(x0))").unwrap();
        let verdict = analyze_safety(&e).unwrap();
        assert_eq!(verdict.witness, Some(0)); // the image itself
        let e = parse_expr("inv1(img1(inv1(x0)))").unwrap();
        let verdict = analyze_safety(&e).unwrap();
        // the inner image blocks, one node below the root
        assert_eq!(verdict.witness, Some(1));
    }

    #[test]
    fn ill_formed_inputs_rejected() {
        assert!(matches!(
            analyze_safety(&parse_expr("#").unwrap()),
            Err(SafetyError::IllFormed(_))
        ));
        assert!(matches!(
            analyze_safety(&parse_expr("P0_0").unwrap()),
            Err(SafetyError::IllFormed(_))
        ));
    }

    #[test]
    fn safe_subexpression_examples() {
        assert_eq!(
            safe_subexpressions(&parse_expr("inv1(x0)").unwrap()).unwrap(),
            vec![parse_expr("x0").unwrap()]
        );
        let whole = parse_expr("img1(img1(x0) & inv1(T))").unwrap();
        assert_eq!(safe_subexpressions(&whole).unwrap(), vec![whole.clone()]);
        assert_eq!(
            safe_subexpressions(&parse_expr("inv1(img1(x1)) | img1(x2)").unwrap()).unwrap(),
            vec![parse_expr("img1(x1)").unwrap(), parse_expr("img1(x2)").unwrap()]
        );
        assert!(matches!(
            safe_subexpressions(&parse_expr("img1(T)").unwrap()),
            Err(SafetyError::NotQuasiSafe)
        ));
    }

    #[test]
    fn dedup_in_safe_subexpressions() {
        let e = parse_expr("inv1(img1(x0)) & inv2(img1(x0))").unwrap();
        assert_eq!(
            safe_subexpressions(&e).unwrap(),
            vec![parse_expr("img1(x0)").unwrap()]
        );
    }

    #[test]
    fn flags_cover_every_node_in_preorder() {
        let e = parse_expr("img1(img1(x0) & inv1(img1(x0)))").unwrap();
        let verdict = analyze_safety(&e).unwrap();
        assert_eq!(verdict.marked.len(), e.node_count());
        // Root safe-for, the inv node not.
        assert!(verdict.marked[0].safe_for);
        let nodes = preorder(&e);
        let inv_at = nodes
            .iter()
            .position(|n| matches!(n, LExpr::Inv(_, _)))
            .unwrap();
        assert!(!verdict.marked[inv_at].safe_for);
    }

    #[test]
    fn agrees_with_grammar_route_at_small_depth() {
        // All expressions of depth <= 3 over one relation and two variables.
        let exprs: Vec<LExpr> = expressions_by_depth(3).into_iter().flatten().collect();
        let mut safe_count = 0usize;
        for e in &exprs {
            let verdict = analyze_safety(e).unwrap();
            assert_eq!(
                verdict.status == SafetyStatus::Safe,
                in_k_grammar(e),
                "{}",
                e
            );
            assert_eq!(
                verdict.status != SafetyStatus::Neither,
                is_positive_combination_of_k(e),
                "{}",
                e
            );
            if verdict.status == SafetyStatus::Safe {
                safe_count += 1;
            }
        }
        assert!(safe_count > 0);
    }

    #[test]
    fn substituting_safe_into_safe_stays_safe() {
        use crate::semantics::SplitMix64;
        use crate::syntax::{subst_expr_objvar, ObjVar};
        let all: Vec<LExpr> = expressions_by_depth(3).into_iter().flatten().collect();
        let safes: Vec<&LExpr> = all
            .iter()
            .filter(|e| analyze_safety(e).unwrap().status == SafetyStatus::Safe)
            .collect();
        let mut rng = SplitMix64(23);
        for _ in 0..500 {
            let host = safes[rng.below(safes.len() as u64) as usize];
            let guest = safes[rng.below(safes.len() as u64) as usize];
            for target in [ObjVar(0), ObjVar(1)] {
                // Replacing a variable with a guest expression: emulate
                // single-occurrence replacement by replacing all (the class
                // is closed under each single step, hence under all).
                let substituted = subst_expr_objvar(host, target, ObjVar(9));
                let mut rebuilt = substituted.clone();
                // splice guest at the placeholder variable
                rebuilt = splice(&rebuilt, guest);
                assert_eq!(
                    analyze_safety(&rebuilt).unwrap().status,
                    SafetyStatus::Safe,
                    "host {} guest {}",
                    host,
                    guest
                );
            }
        }

        fn splice(e: &LExpr, guest: &LExpr) -> LExpr {
            match e {
                LExpr::ObjVar(ObjVar(9)) => guest.clone(),
                _ => {
                    let kids = e.children();
                    match e {
                        LExpr::Cap(_, _) => {
                            LExpr::cap(splice(kids[0], guest), splice(kids[1], guest))
                        }
                        LExpr::Cup(_, _) => {
                            LExpr::cup(splice(kids[0], guest), splice(kids[1], guest))
                        }
                        LExpr::Inv(l, _) => LExpr::inv(*l, splice(kids[0], guest)),
                        LExpr::IBox(l, _) => LExpr::ibox(*l, splice(kids[0], guest)),
                        LExpr::Img(l, _) => LExpr::img(*l, splice(kids[0], guest)),
                        other => other.clone(),
                    }
                }
            }
        }
    }

    #[test]
    fn kf_branches_are_safe() {
        use crate::minval::{kf, RequirementMap};
        use crate::parser::parse_modal;
        use crate::syntax::ObjVar;
        let f = RequirementMap::new([
            (ObjVar(1), vec![parse_modal("[4]p0_0").unwrap()]),
            (
                ObjVar(2),
                vec![
                    parse_modal("[1](<2>p0_0 -> [3]p1_0)").unwrap(),
                    parse_modal("p0_0 | <1>p0_0 -> [2]p1_1").unwrap(),
                ],
            ),
        ])
        .unwrap();
        for p in f.prop_vars() {
            for branch in kf(&f, &p).unwrap() {
                assert_eq!(
                    analyze_safety(&branch).unwrap().status,
                    SafetyStatus::Safe,
                    "{}",
                    branch
                );
            }
        }
    }
}
