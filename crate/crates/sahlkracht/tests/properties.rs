//! Property tests over generated syntax trees.

use std::collections::BTreeSet;

use proptest::prelude::*;

use sahlkracht::parser::{parse_expr, parse_fo, parse_modal};
use sahlkracht::safety::{analyze_safety, SafetyStatus};
use sahlkracht::syntax::{
    free_vars, is_clean, rename_clean, substitute_hole, FOFormula, LExpr, Label, ModalFormula,
    ObjVar, PropVar,
};

fn label() -> impl Strategy<Value = Label> {
    (1u32..=3).prop_map(Label)
}

fn prop_var() -> impl Strategy<Value = PropVar> {
    (0u32..=1, 0u32..=2).prop_map(|(r, i)| PropVar::new(r, i))
}

fn modal_formula() -> impl Strategy<Value = ModalFormula> {
    let leaf = prop_oneof![
        prop_var().prop_map(ModalFormula::Var),
        Just(ModalFormula::Top),
        Just(ModalFormula::Bot),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(ModalFormula::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| ModalFormula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| ModalFormula::or(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| ModalFormula::implies(l, r)),
            (label(), inner.clone()).prop_map(|(k, f)| ModalFormula::boxed(k, f)),
            (label(), inner).prop_map(|(k, f)| ModalFormula::dia(k, f)),
        ]
    })
}

fn l_expr() -> impl Strategy<Value = LExpr> {
    let leaf = prop_oneof![
        (0u32..=2).prop_map(LExpr::obj),
        prop_var().prop_map(LExpr::SetVar),
        Just(LExpr::Hole),
        Just(LExpr::Top),
        Just(LExpr::Bot),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| LExpr::cap(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| LExpr::cup(l, r)),
            (label(), inner.clone()).prop_map(|(k, e)| LExpr::inv(k, e)),
            (label(), inner.clone()).prop_map(|(k, e)| LExpr::ibox(k, e)),
            (label(), inner).prop_map(|(k, e)| LExpr::img(k, e)),
        ]
    })
}

/// Well-scoped first-order formulas: binders always introduce a variable
/// above every index used so far, referenced variables come from the scope.
fn fo_formula() -> impl Strategy<Value = FOFormula> {
    fn gen(depth: u32, scope: u32) -> BoxedStrategy<FOFormula> {
        // scope = number of variables available (indices 0..scope)
        let var = move || (0..scope).prop_map(ObjVar);
        let atom = prop_oneof![
            (var(), l_expr_plain(scope)).prop_map(|(s, e)| FOFormula::Member(s, e)),
            (label(), var(), var()).prop_map(|(k, a, b)| FOFormula::Rel(k, a, b)),
            (var(), var()).prop_map(|(a, b)| FOFormula::Eq(a, b)),
            Just(FOFormula::Top),
            Just(FOFormula::Bot),
        ];
        if depth == 0 {
            return atom.boxed();
        }
        prop_oneof![
            atom,
            (gen(depth - 1, scope)).prop_map(FOFormula::not),
            (gen(depth - 1, scope), gen(depth - 1, scope))
                .prop_map(|(l, r)| FOFormula::and(l, r)),
            (gen(depth - 1, scope), gen(depth - 1, scope))
                .prop_map(|(l, r)| FOFormula::or(l, r)),
            (label(), var(), gen(depth - 1, scope + 1)).prop_map(move |(k, x, b)| {
                FOFormula::rforall(ObjVar(scope), k, x, b)
            }),
            (label(), var(), gen(depth - 1, scope + 1)).prop_map(move |(k, x, b)| {
                FOFormula::rexists(ObjVar(scope), k, x, b)
            }),
            gen(depth - 1, scope + 1).prop_map(move |b| FOFormula::forall(ObjVar(scope), b)),
            gen(depth - 1, scope + 1).prop_map(move |b| FOFormula::exists(ObjVar(scope), b)),
        ]
        .boxed()
    }
    fn l_expr_plain(scope: u32) -> BoxedStrategy<LExpr> {
        let leaf = prop_oneof![
            (0..scope.max(1)).prop_map(LExpr::obj),
            Just(LExpr::Top),
            Just(LExpr::Bot),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(l, r)| LExpr::cap(l, r)),
                (label(), inner.clone()).prop_map(|(k, e)| LExpr::inv(k, e)),
                (label(), inner).prop_map(|(k, e)| LExpr::img(k, e)),
            ]
        })
        .boxed()
    }
    gen(3, 2)
}

proptest! {
    #[test]
    fn modal_print_parse_identity(f in modal_formula()) {
        let printed = f.to_string();
        let parsed = parse_modal(&printed).unwrap();
        prop_assert_eq!(parsed, f);
    }

    #[test]
    fn expr_print_parse_identity(e in l_expr()) {
        let printed = e.to_string();
        let parsed = parse_expr(&printed).unwrap();
        prop_assert_eq!(parsed, e);
    }

    #[test]
    fn fo_print_parse_identity(f in fo_formula()) {
        let printed = f.to_string();
        let parsed = parse_fo(&printed).unwrap();
        prop_assert_eq!(parsed, f);
    }

    #[test]
    fn hole_substitution_identity(e in l_expr()) {
        prop_assert_eq!(substitute_hole(&e, &LExpr::Hole), e);
    }

    #[test]
    fn rename_clean_is_clean_and_preserves_free_vars(f in fo_formula()) {
        let cleaned = rename_clean(&f);
        prop_assert!(is_clean(&cleaned));
        prop_assert_eq!(free_vars(&cleaned), free_vars(&f));
        // Idempotent up to being already clean.
        prop_assert_eq!(rename_clean(&cleaned), cleaned);
    }

    #[test]
    fn safety_status_is_stable_under_union_wrapping(e in l_expr()) {
        // A union is never safe; it is quasi-safe exactly when both halves
        // are positive combinations of safe expressions.
        let plain = e.is_l();
        prop_assume!(plain);
        let whole = LExpr::cup(e.clone(), e.clone());
        let part = analyze_safety(&e).unwrap().status;
        let union = analyze_safety(&whole).unwrap().status;
        prop_assert_ne!(union, SafetyStatus::Safe);
        prop_assert_eq!(
            union == SafetyStatus::QuasiSafe,
            part != SafetyStatus::Neither
        );
    }
}

#[test]
fn free_vars_of_goldens() {
    let fo = parse_fo("ex y <1 x0 . all z <1 y . all w <1 z . w in img1(inv1(x0) & img1(x0))")
        .unwrap();
    assert_eq!(free_vars(&fo), BTreeSet::from([ObjVar(0)]));
}
