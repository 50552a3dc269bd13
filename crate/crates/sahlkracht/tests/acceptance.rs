//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! The suite pins the golden examples and the brute-force tolerances; run
//! with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::time::{Duration, Instant};

use sahlkracht::correspond::{classify_sahlqvist, correspond, correspond_full};
use sahlkracht::minval::{
    all_valuations, eval_expr, eval_union, kf, kv, minimal_valuation, satisfies, RequirementMap,
};
use sahlkracht::parser::{parse_expr, parse_fo, parse_modal};
use sahlkracht::safety::{
    analyze_safety, expressions_by_depth, in_k_grammar, is_positive_combination_of_k,
    sample_k_grammar, SafetyStatus,
};
use sahlkracht::semantics::{
    check_correspondence, check_fo_equivalence, check_modal_equivalence, enum_frames, Budget,
    Env, Frame, SplitMix64, Tier, Valuation,
};
use sahlkracht::synthesize::{check_kracht, quantifier_eliminate, synthesize, synthesize_expr_f};
use sahlkracht::syntax::{FOFormula, LExpr, Label, ModalFormula, ObjVar, PropVar};

fn d2() -> ModalFormula {
    parse_modal("p & [](<>p -> []q) -> <>[][]q").unwrap()
}

fn ns() -> ModalFormula {
    parse_modal("p & [1](<1>p -> [3]r) -> <2>(<2>p & <3>r)").unwrap()
}

fn cub1() -> ModalFormula {
    parse_modal(
        "<1>([2]p12 & [3]p13) & <2>([1]p21 & [3]p23) & <3>([1]p31 & [2]p32) \
         & [1][2](p12 & p21 -> [3]q3) & [1][3](p13 & p31 -> [2]q2) \
         & [2][3](p23 & p32 -> [1]q1) -> <1><2><3>(q1 & q2 & q3)",
    )
    .unwrap()
}

fn fo_d2() -> FOFormula {
    parse_fo("ex y <1 x0 . all z <1 y . all w <1 z . w in img1(inv1(x0) & img1(x0))").unwrap()
}

fn fo_ns() -> FOFormula {
    parse_fo("ex y <2 x0 . (y in inv2(x0) & (ex v <3 y . v in img3(img1(x0) & inv1(x0))))")
        .unwrap()
}

fn fo_cub1() -> FOFormula {
    parse_fo(
        "all x1 <1 x0 . all x2 <2 x0 . all x3 <3 x0 . ex y1 <1 x0 . ex y2 <2 y1 . \
         ex y <3 y2 . (y in img3(img2(x1) & img1(x2)) & y in img2(img3(x1) & img1(x3)) \
         & y in img1(img2(x3) & img3(x2)))",
    )
    .unwrap()
}

fn one_relation_budget() -> Budget {
    Budget {
        labels: vec![Label(1)],
        tiers: vec![Tier::Exhaustive { max_worlds: 3 }],
    }
}

fn three_relation_budget() -> Budget {
    Budget {
        labels: vec![Label(1), Label(2), Label(3)],
        tiers: vec![
            Tier::Exhaustive { max_worlds: 2 },
            Tier::Sampled {
                max_worlds: 3,
                count: 10_000,
                seed: 0,
            },
        ],
    }
}

#[test]
fn criterion_01_safety_golden_set() {
    let safe = [
        "x0",
        "img1(x0)",
        "img1(img1(x0) & inv1(img1(x0)))",
        "img1(img1(x0) & inv1(T))",
        "img1((img1(x0) & inv1(img1(x0))) & (inv1(x0) & inv1(img1(x0))))",
    ];
    for text in safe {
        let verdict = analyze_safety(&parse_expr(text).unwrap()).unwrap();
        assert_eq!(verdict.status, SafetyStatus::Safe, "{}", text);
    }
    let expected = [
        ("inv1(x0)", SafetyStatus::QuasiSafe),
        ("img1(inv1(x0))", SafetyStatus::Neither),
        ("img1(T)", SafetyStatus::Neither),
    ];
    for (text, status) in expected {
        let verdict = analyze_safety(&parse_expr(text).unwrap()).unwrap();
        assert_eq!(verdict.status, status, "{}", text);
    }
    println!("criterion 1 (safety golden set): PASS");
}

#[test]
fn criterion_02_safety_equals_k_grammar() {
    let start = Instant::now();
    let by_depth = expressions_by_depth(3);
    let mut mismatches = 0usize;
    let mut total = 0usize;
    let mut check = |e: &LExpr| {
        total += 1;
        let verdict = analyze_safety(e).unwrap();
        if (verdict.status == SafetyStatus::Safe) != in_k_grammar(e) {
            mismatches += 1;
        }
        if (verdict.status != SafetyStatus::Neither) != is_positive_combination_of_k(e) {
            mismatches += 1;
        }
    };
    for e in by_depth.iter().flatten() {
        check(e);
    }
    // Depth 4: stream the combinations, partitioned across threads.
    let depth3: &Vec<LExpr> = &by_depth[2];
    let shallower: Vec<&LExpr> = by_depth[..2].iter().flatten().collect();
    let all_le3: Vec<&LExpr> = by_depth.iter().flatten().collect();
    for e in depth3 {
        for label_op in 0..3 {
            let node = match label_op {
                0 => LExpr::inv(Label(1), e.clone()),
                1 => LExpr::ibox(Label(1), e.clone()),
                _ => LExpr::img(Label(1), e.clone()),
            };
            check(&node);
        }
    }
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(4)
        .min(16);
    // One clone pair per (l, r): check the intersection, then reuse the
    // subtrees for the union.
    fn check_both_ops(l: &LExpr, r: &LExpr, mism: &mut usize, tot: &mut usize) {
        let mut check = |e: &LExpr| {
            *tot += 1;
            let verdict = analyze_safety(e).unwrap();
            if (verdict.status == SafetyStatus::Safe) != in_k_grammar(e) {
                *mism += 1;
            }
            if (verdict.status != SafetyStatus::Neither) != is_positive_combination_of_k(e) {
                *mism += 1;
            }
        };
        let mut cap = LExpr::cap(l.clone(), r.clone());
        check(&cap);
        let cup = if let LExpr::Cap(lb, rb) = &mut cap {
            let a = std::mem::replace(lb.as_mut(), LExpr::Hole);
            let b = std::mem::replace(rb.as_mut(), LExpr::Hole);
            LExpr::cup(a, b)
        } else {
            unreachable!()
        };
        check(&cup);
    }
    let counters: Vec<(usize, usize)> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for t in 0..threads {
            let depth3 = &depth3;
            let all_le3 = &all_le3;
            let shallower = &shallower;
            handles.push(scope.spawn(move || {
                let mut mism = 0usize;
                let mut tot = 0usize;
                for (i, l) in depth3.iter().enumerate() {
                    if i % threads != t {
                        continue;
                    }
                    for r in all_le3.iter() {
                        check_both_ops(l, r, &mut mism, &mut tot);
                    }
                }
                for (i, l) in shallower.iter().enumerate() {
                    if i % threads != t {
                        continue;
                    }
                    for r in depth3.iter() {
                        check_both_ops(l, r, &mut mism, &mut tot);
                    }
                }
                (mism, tot)
            }));
        }
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (m, t) in counters {
        mismatches += m;
        total += t;
    }
    assert_eq!(mismatches, 0, "safety/grammar disagreement");
    println!(
        "criterion 2 (safety = grammar on {} expressions of depth <= 4): PASS in {:?}",
        total,
        start.elapsed()
    );
}

#[test]
fn criterion_03_linear_time_safety() {
    fn chain(n: usize) -> LExpr {
        let mut e = LExpr::obj(0);
        for _ in 0..n {
            e = LExpr::img(Label(1), e);
        }
        e
    }
    fn per_node_time(n: usize, reps: usize) -> f64 {
        let e = chain(n);
        let mut best = Duration::MAX;
        for _ in 0..reps {
            let t = Instant::now();
            let verdict = analyze_safety(&e).unwrap();
            assert_eq!(verdict.status, SafetyStatus::Safe);
            best = best.min(t.elapsed());
        }
        best.as_secs_f64() / (n as f64)
    }
    let start = Instant::now();
    per_node_time(1_000, 5); // warm up
    let rates = [
        per_node_time(1_000, 60),
        per_node_time(10_000, 20),
        per_node_time(100_000, 6),
    ];
    let total = start.elapsed();
    let max = rates.iter().cloned().fold(f64::MIN, f64::max);
    let min = rates.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        max / min <= 2.0,
        "per-node time varies more than 2x across chain lengths: {:?}",
        rates
    );
    assert!(total < Duration::from_secs(10), "took {:?}", total);
    println!(
        "criterion 3 (linear-time safety, per-node ns {:?}): PASS in {:?}",
        rates.iter().map(|r| r * 1e9).collect::<Vec<_>>(),
        total
    );
}

/// Random regular requirement maps over at most two variables and one
/// relation, anchored at x1 and x2.
fn random_requirement_map(rng: &mut SplitMix64) -> RequirementMap {
    let low = PropVar::new(0, 0);
    let high = PropVar::new(1, 0);
    let mut f = RequirementMap::empty();
    let count = 1 + rng.below(3);
    for _ in 0..count {
        let anchor = ObjVar(1 + rng.below(2) as u32);
        let formula = if rng.chance(50) {
            // Boxed rank-0 atom.
            let mut g = ModalFormula::Var(low.clone());
            for _ in 0..rng.below(3) {
                g = ModalFormula::boxed(Label(1), g);
            }
            g
        } else {
            // Guarded rank-1 formula over the rank-0 variable.
            let guard = match rng.below(4) {
                0 => ModalFormula::Var(low.clone()),
                1 => ModalFormula::dia(Label(1), ModalFormula::Var(low.clone())),
                2 => ModalFormula::boxed(Label(1), ModalFormula::Var(low.clone())),
                _ => ModalFormula::or(ModalFormula::Var(low.clone()), ModalFormula::Bot),
            };
            let mut g = ModalFormula::Var(high.clone());
            for _ in 0..rng.below(2) {
                g = ModalFormula::boxed(Label(1), g);
            }
            g = ModalFormula::implies(guard, g);
            if rng.chance(50) {
                g = ModalFormula::boxed(Label(1), g);
            }
            g
        };
        f.insert(anchor, formula).unwrap();
    }
    f
}

#[test]
fn criterion_04_minimal_valuation_suite() {
    let start = Instant::now();
    let mut rng = SplitMix64(2024);
    let frames: Vec<Frame> = enum_frames(3, &[Label(1)]).collect();
    let mut checked = 0usize;
    for _ in 0..200 {
        let f = random_requirement_map(&mut rng);
        let vars = f.prop_vars();
        let anchors: Vec<ObjVar> = f.domain().collect();
        for frame in &frames {
            let valuations = all_valuations(frame, &vars);
            // Anchor assignments: every map from the domain into the frame.
            let n = frame.world_count();
            let mut assignments = vec![Env::new()];
            for x in &anchors {
                let mut next = Vec::new();
                for env in &assignments {
                    for w in 0..n {
                        let mut e = env.clone();
                        e.insert(*x, w);
                        next.push(e);
                    }
                }
                assignments = next;
            }
            for env in &assignments {
                let theta = minimal_valuation(&f, frame, env).unwrap();
                assert!(
                    satisfies(&f, frame, env, &theta),
                    "minimal valuation fails its own requirements"
                );
                for v in &valuations {
                    if satisfies(&f, frame, env, v) {
                        for p in &vars {
                            assert_eq!(
                                theta[p] & !v[p],
                                0,
                                "not pointwise minimal at {} on {}",
                                p,
                                frame
                            );
                        }
                    }
                }
                checked += 1;
            }
        }
    }
    println!(
        "criterion 4 (minimal valuations, {} map/frame/anchor combinations): PASS in {:?}",
        checked,
        start.elapsed()
    );
}

#[test]
fn criterion_05_kv_kf_golden() {
    // KV of a doubly boxed rank-1 atom.
    assert_eq!(
        kv(&parse_modal("[2][2]p1_0").unwrap()).unwrap(),
        parse_expr("img2(img2(#))").unwrap()
    );
    assert_eq!(
        kv(&parse_modal("[1](<2>p0_0 -> [3]p1_0)").unwrap()).unwrap(),
        parse_expr("img3(inv2(P0_0) & img1(#))").unwrap()
    );
    let f = RequirementMap::new([
        (ObjVar(1), vec![parse_modal("[4]p0_0").unwrap()]),
        (
            ObjVar(2),
            vec![parse_modal("[1](<2>p0_0 -> [3]p1_0)").unwrap()],
        ),
    ])
    .unwrap();
    assert_eq!(
        kf(&f, &PropVar::new(0, 0)).unwrap(),
        vec![parse_expr("img4(x1)").unwrap()]
    );
    assert_eq!(
        kf(&f, &PropVar::new(1, 0)).unwrap(),
        vec![parse_expr("img3(inv2(img4(x1)) & img1(x2))").unwrap()]
    );
    println!("criterion 5 (KV/KF golden trees): PASS");
}

#[test]
fn criterion_06_correspondence_soundness() {
    let start = Instant::now();
    let budget = one_relation_budget();
    let singles = [
        d2(),
        ns(),
        parse_modal("<>p -> []p").unwrap(),
        parse_modal("<><>p -> <>p").unwrap(),
        parse_modal("p -> <>p").unwrap(),
        parse_modal("[](p -> <>p)").unwrap(),
    ];
    for formula in &singles {
        let fo = correspond(formula).unwrap();
        let report = check_correspondence(formula, &fo, &budget).unwrap();
        assert!(
            report.passed(),
            "{}: {}",
            formula,
            report.counterexamples[0]
        );
    }
    let multi = three_relation_budget();
    for formula in [cub1(), ns()] {
        let fo = correspond(&formula).unwrap();
        let report = check_correspondence(&formula, &fo, &multi).unwrap();
        assert!(
            report.passed(),
            "{}: {}",
            formula,
            report.counterexamples[0]
        );
    }
    println!(
        "criterion 6 (correspondence soundness over exhaustive and sampled frames): PASS in {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_07_kracht_recognition() {
    assert!(check_kracht(&fo_d2()).is_kracht());
    assert!(check_kracht(&fo_ns()).is_kracht());
    assert!(check_kracht(&fo_cub1()).is_kracht());
    let rejected = parse_fo("ex y <1 x0 . x0 in img1(y)").unwrap();
    let verdict = check_kracht(&rejected);
    assert!(!verdict.is_kracht());
    assert!(
        verdict
            .reasons
            .iter()
            .any(|r| r.contains("not inherently universal")),
        "{:?}",
        verdict.reasons
    );
    println!("criterion 7 (Kracht recognition): PASS");
}

#[test]
fn criterion_08_qe_preserves_semantics() {
    let start = Instant::now();
    let budget = one_relation_budget();
    let goldens = [
        fo_d2(),
        fo_ns(),
        fo_cub1(),
        parse_fo("all y <1 x0 . y in x0").unwrap(),
        parse_fo("ex y <1 x0 . y in img1(x0)").unwrap(),
    ];
    for alpha in goldens {
        let verdict = check_kracht(&alpha);
        let normalized = verdict.normalized.expect("golden normalizes");
        let eliminated = quantifier_eliminate(&normalized).unwrap();
        let report = check_fo_equivalence(&alpha, &eliminated, &budget).unwrap();
        assert!(report.passed(), "{}: {}", alpha, report.counterexamples[0]);
    }
    println!(
        "criterion 8 (quantifier elimination preserves semantics): PASS in {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_09_roundtrips() {
    let start = Instant::now();
    let budget = one_relation_budget();
    // Round-trip A on the one-relation golden set.
    let modal_goldens = [
        d2(),
        parse_modal("<>p -> []p").unwrap(),
        parse_modal("<><>p -> <>p").unwrap(),
        parse_modal("p -> <>p").unwrap(),
        parse_modal("[](p -> <>p)").unwrap(),
    ];
    for phi in &modal_goldens {
        let fo = correspond(phi).unwrap();
        let back = synthesize(&fo).unwrap();
        let report = check_modal_equivalence(phi, &back, &budget).unwrap();
        assert!(
            report.passed(),
            "roundtrip A {}: {}",
            phi,
            report.counterexamples[0]
        );
    }
    // Round-trip A for the multi-relation goldens at their budget.
    let multi = three_relation_budget();
    for phi in [ns(), cub1()] {
        let fo = correspond(&phi).unwrap();
        let back = synthesize(&fo).unwrap();
        let report = check_modal_equivalence(&phi, &back, &multi).unwrap();
        assert!(
            report.passed(),
            "roundtrip A {}: {}",
            phi,
            report.counterexamples[0]
        );
    }
    // Round-trip B on the golden Kracht set.
    for (alpha, b) in [
        (fo_d2(), &budget),
        (parse_fo("all y <1 x0 . y in x0").unwrap(), &budget),
        (fo_ns(), &multi),
        (fo_cub1(), &multi),
    ] {
        let modal = synthesize(&alpha).unwrap();
        let back = correspond(&modal).unwrap();
        let report = check_fo_equivalence(&alpha, &back, b).unwrap();
        assert!(
            report.passed(),
            "roundtrip B {}: {}",
            alpha,
            report.counterexamples[0]
        );
    }
    println!("criterion 9 (both round-trips on golden sets): PASS in {:?}", start.elapsed());
}

#[test]
fn criterion_10_expression_synthesis_contract() {
    let start = Instant::now();
    let mut rng = SplitMix64(10);
    let frames: Vec<Frame> = enum_frames(3, &[Label(1)]).collect();
    let mut collected = 0usize;
    let mut attempts = 0usize;
    while collected < 500 {
        attempts += 1;
        assert!(attempts < 50_000, "sampler starved");
        let e = sample_k_grammar(&mut rng, 3, &[Label(1)]);
        if depth(&e) > 4 {
            continue;
        }
        collected += 1;
        let (f, heads) = synthesize_expr_f(std::slice::from_ref(&e)).unwrap();
        let branches = kf(&f, &heads[&e]).unwrap();
        for frame in &frames {
            let n = frame.world_count();
            for w0 in 0..n {
                for w1 in 0..n {
                    let mut env = Env::new();
                    env.insert(ObjVar(0), w0);
                    env.insert(ObjVar(1), w1);
                    let direct = eval_expr(&e, frame, &env, &Valuation::new()).unwrap();
                    let via = eval_union(&branches, frame, &env, &Valuation::new()).unwrap();
                    assert_eq!(direct, via, "{} on {}", e, frame);
                }
            }
        }
    }
    println!(
        "criterion 10 (expression synthesis contract on 500 safe expressions): PASS in {:?}",
        start.elapsed()
    );

    fn depth(e: &LExpr) -> usize {
        1 + e.children().into_iter().map(depth).max().unwrap_or(0)
    }
}

#[test]
fn criterion_11_synthesize_outputs_are_sahlqvist() {
    let goldens = [
        fo_d2(),
        fo_ns(),
        fo_cub1(),
        parse_fo("all y <1 x0 . y in x0").unwrap(),
        parse_fo("ex y <1 x0 . y in img1(x0)").unwrap(),
        parse_fo("all y <1 x0 . ex z <1 y . z in y").unwrap(),
        parse_fo("x0 in img1(x0)").unwrap(),
    ];
    let mut count = 0usize;
    for alpha in goldens {
        let modal = synthesize(&alpha).unwrap();
        assert!(
            classify_sahlqvist(&modal).is_sahlqvist(),
            "output of {} is {}",
            alpha,
            modal
        );
        count += 1;
    }
    // Outputs of round-trip A count as synthesized goldens too.
    for phi in [d2(), ns(), cub1()] {
        let back = synthesize(&correspond(&phi).unwrap()).unwrap();
        assert!(classify_sahlqvist(&back).is_sahlqvist(), "{}", back);
        count += 1;
    }
    println!(
        "criterion 11 ({} synthesized formulas classify as generalized Sahlqvist): PASS",
        count
    );
}

#[test]
fn correspondents_match_classic_displays() {
    // The two fully displayed correspondents, pinned as exact text.
    let c = correspond_full(&d2()).unwrap();
    assert_eq!(
        c.kracht.to_string(),
        "ex x1 <1 x0 . all x2 <1 x1 . all x3 <1 x2 . x3 in img1(inv1(x0) & img1(x0))"
    );
    let c = correspond_full(&ns()).unwrap();
    assert_eq!(
        c.kracht.to_string(),
        "ex x1 <2 x0 . (ex x2 <2 x1 . x2 in x0) & (ex x3 <3 x1 . x3 in img3(inv1(x0) & img1(x0)))"
    );
}
