//! Finite Kripke frames and models, modal and first-order evaluation, frame
//! enumeration and sampling, and the correspondence checker every other
//! module is verified against.
//!
//! Worlds are dense integers `0..n`. World sets are `u64` bitmasks, which
//! caps frames at 64 worlds; the oracle works at desk scale (a handful of
//! worlds), so the cap is never near.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::minval::{eval_expr, EvalError};
use crate::syntax::{FOFormula, Label, ModalFormula, ObjVar, PropVar};

pub const MAX_WORLDS: u32 = 64;

pub type World = u32;

/// A finite frame: a world count and one edge relation per label. Labels
/// absent from the map have the empty relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    world_count: u32,
    /// Successor masks, indexed by world.
    relations: BTreeMap<Label, Vec<u64>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("world count must be between 1 and {MAX_WORLDS}, got {0}")]
    BadWorldCount(u32),
    #[error("edge ({0}, {1}) out of range for {2} worlds")]
    EdgeOutOfRange(World, World, u32),
    #[error("malformed frame literal: {0}")]
    BadLiteral(String),
}

impl Frame {
    pub fn new(
        world_count: u32,
        edges: impl IntoIterator<Item = (Label, World, World)>,
    ) -> Result<Frame, FrameError> {
        if world_count == 0 || world_count > MAX_WORLDS {
            return Err(FrameError::BadWorldCount(world_count));
        }
        let mut relations: BTreeMap<Label, Vec<u64>> = BTreeMap::new();
        for (label, a, b) in edges {
            if a >= world_count || b >= world_count {
                return Err(FrameError::EdgeOutOfRange(a, b, world_count));
            }
            relations.entry(label).or_insert_with(|| vec![0; world_count as usize])[a as usize] |=
                1u64 << b;
        }
        Ok(Frame {
            world_count,
            relations,
        })
    }

    pub fn world_count(&self) -> u32 {
        self.world_count
    }

    pub fn worlds(&self) -> impl Iterator<Item = World> {
        0..self.world_count
    }

    /// All worlds as a mask.
    pub fn full(&self) -> u64 {
        if self.world_count == 64 {
            u64::MAX
        } else {
            (1u64 << self.world_count) - 1
        }
    }

    pub fn successors(&self, label: Label, w: World) -> u64 {
        self.relations
            .get(&label)
            .map(|r| r[w as usize])
            .unwrap_or(0)
    }

    pub fn has_edge(&self, label: Label, a: World, b: World) -> bool {
        self.successors(label, a) & (1u64 << b) != 0
    }

    pub fn edges(&self) -> Vec<(Label, World, World)> {
        let mut out = Vec::new();
        for (label, rows) in &self.relations {
            for (a, mask) in rows.iter().enumerate() {
                for b in iter_mask(*mask) {
                    out.push((*label, a as World, b));
                }
            }
        }
        out
    }

    /// Worlds with a `label`-successor inside `set`.
    pub fn preimage(&self, label: Label, set: u64) -> u64 {
        let mut out = 0u64;
        for w in self.worlds() {
            if self.successors(label, w) & set != 0 {
                out |= 1 << w;
            }
        }
        out
    }

    /// Worlds all of whose `label`-successors lie inside `set`.
    pub fn preimage_universal(&self, label: Label, set: u64) -> u64 {
        let mut out = 0u64;
        for w in self.worlds() {
            if self.successors(label, w) & !set == 0 {
                out |= 1 << w;
            }
        }
        out
    }

    /// `label`-successors of worlds in `set`.
    pub fn image(&self, label: Label, set: u64) -> u64 {
        let mut out = 0u64;
        for w in iter_mask(set) {
            out |= self.successors(label, w);
        }
        out
    }

    /// Parse the literal format `n; k: (i,j) (i,j) ...`, one `k:` group per
    /// relation.
    pub fn parse_literal(text: &str) -> Result<Frame, FrameError> {
        let bad = |msg: &str| FrameError::BadLiteral(msg.to_string());
        let mut parts = text.splitn(2, ';');
        let n: u32 = parts
            .next()
            .ok_or_else(|| bad("missing world count"))?
            .trim()
            .parse()
            .map_err(|_| bad("world count is not an integer"))?;
        let mut edges = Vec::new();
        let rest = parts.next().unwrap_or("").trim();
        if !rest.is_empty() {
            for group in rest.split(';') {
                let group = group.trim();
                if group.is_empty() {
                    continue;
                }
                let (k, pairs) = group
                    .split_once(':')
                    .ok_or_else(|| bad("relation group without `k:`"))?;
                let label = Label(
                    k.trim()
                        .parse()
                        .map_err(|_| bad("relation label is not an integer"))?,
                );
                for pair in pairs.split_whitespace() {
                    let inner = pair
                        .strip_prefix('(')
                        .and_then(|p| p.strip_suffix(')'))
                        .ok_or_else(|| bad("edge is not of the form (i,j)"))?;
                    let (i, j) = inner
                        .split_once(',')
                        .ok_or_else(|| bad("edge is not of the form (i,j)"))?;
                    edges.push((
                        label,
                        i.trim().parse().map_err(|_| bad("edge endpoint"))?,
                        j.trim().parse().map_err(|_| bad("edge endpoint"))?,
                    ));
                }
            }
        }
        Frame::new(n, edges)
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.world_count)?;
        for (label, rows) in &self.relations {
            if rows.iter().all(|m| *m == 0) {
                continue;
            }
            write!(f, "; {}:", label)?;
            for (a, mask) in rows.iter().enumerate() {
                for b in iter_mask(*mask) {
                    write!(f, " ({},{})", a, b)?;
                }
            }
        }
        Ok(())
    }
}

pub fn iter_mask(mask: u64) -> impl Iterator<Item = World> {
    (0..64u32).filter(move |b| mask & (1u64 << b) != 0)
}

/// A valuation: the set of worlds each propositional variable is true at.
pub type Valuation = BTreeMap<PropVar, u64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub frame: Frame,
    pub valuation: Valuation,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("unbound propositional variable {0}")]
    UnboundVariable(PropVar),
    #[error("unbound object variable {0}")]
    UnboundObjVar(ObjVar),
    #[error("expression evaluation: {0}")]
    Eval(#[from] EvalError),
}

/// The truth set of a modal formula in a model.
pub fn truth_set(model: &Model, formula: &ModalFormula) -> Result<u64, SemanticsError> {
    truth_set_in(&model.frame, &model.valuation, formula)
}

/// The truth set over a borrowed frame and valuation.
pub fn truth_set_in(
    frame: &Frame,
    valuation: &Valuation,
    formula: &ModalFormula,
) -> Result<u64, SemanticsError> {
    Ok(match formula {
        ModalFormula::Var(p) => *valuation
            .get(p)
            .ok_or_else(|| SemanticsError::UnboundVariable(p.clone()))?,
        ModalFormula::Top => frame.full(),
        ModalFormula::Bot => 0,
        ModalFormula::Not(a) => !truth_set_in(frame, valuation, a)? & frame.full(),
        ModalFormula::And(l, r) => {
            truth_set_in(frame, valuation, l)? & truth_set_in(frame, valuation, r)?
        }
        ModalFormula::Or(l, r) => {
            truth_set_in(frame, valuation, l)? | truth_set_in(frame, valuation, r)?
        }
        ModalFormula::Implies(l, r) => {
            (!truth_set_in(frame, valuation, l)? & frame.full())
                | truth_set_in(frame, valuation, r)?
        }
        ModalFormula::Box(label, a) => {
            frame.preimage_universal(*label, truth_set_in(frame, valuation, a)?)
        }
        ModalFormula::Dia(label, a) => {
            frame.preimage(*label, truth_set_in(frame, valuation, a)?)
        }
    })
}

/// Standard Kripke satisfaction at a point.
pub fn modal_truth(model: &Model, w: World, formula: &ModalFormula) -> Result<bool, SemanticsError> {
    Ok(truth_set(model, formula)? & (1u64 << w) != 0)
}

/// Three-valued truth bounds under a partial valuation: for each subformula
/// the pair (definitely-true worlds, possibly-true worlds). The bounds are
/// monotone in the partial assignment, so a verdict at a partial point is a
/// verdict for every completion.
fn truth_bounds(
    frame: &Frame,
    formula: &ModalFormula,
    lo: &BTreeMap<PropVar, u64>,
    hi: &BTreeMap<PropVar, u64>,
) -> (u64, u64) {
    let full = frame.full();
    match formula {
        ModalFormula::Var(p) => (
            lo.get(p).copied().unwrap_or(0),
            hi.get(p).copied().unwrap_or(full),
        ),
        ModalFormula::Top => (full, full),
        ModalFormula::Bot => (0, 0),
        ModalFormula::Not(a) => {
            let (alo, ahi) = truth_bounds(frame, a, lo, hi);
            (!ahi & full, !alo & full)
        }
        ModalFormula::And(l, r) => {
            let (llo, lhi) = truth_bounds(frame, l, lo, hi);
            let (rlo, rhi) = truth_bounds(frame, r, lo, hi);
            (llo & rlo, lhi & rhi)
        }
        ModalFormula::Or(l, r) => {
            let (llo, lhi) = truth_bounds(frame, l, lo, hi);
            let (rlo, rhi) = truth_bounds(frame, r, lo, hi);
            (llo | rlo, lhi | rhi)
        }
        ModalFormula::Implies(l, r) => {
            let (llo, lhi) = truth_bounds(frame, l, lo, hi);
            let (rlo, rhi) = truth_bounds(frame, r, lo, hi);
            ((!lhi & full) | rlo, (!llo & full) | rhi)
        }
        ModalFormula::Box(label, a) => {
            let (alo, ahi) = truth_bounds(frame, a, lo, hi);
            (
                frame.preimage_universal(*label, alo),
                frame.preimage_universal(*label, ahi),
            )
        }
        ModalFormula::Dia(label, a) => {
            let (alo, ahi) = truth_bounds(frame, a, lo, hi);
            (frame.preimage(*label, alo), frame.preimage(*label, ahi))
        }
    }
}

/// Validity at a point: truth under every valuation of the pool. Implemented
/// as a search over partial valuations with three-valued pruning, which keeps
/// many-variable formulas tractable; agreement with plain enumeration is
/// property-tested at small scale.
pub fn valid_at_point(
    frame: &Frame,
    w: World,
    formula: &ModalFormula,
    pool: &[PropVar],
) -> Result<bool, SemanticsError> {
    let vars = formula.vars();
    for v in &vars {
        if !pool.contains(v) {
            return Err(SemanticsError::UnboundVariable(v.clone()));
        }
    }
    let order: Vec<PropVar> = vars.into_iter().collect();
    let mut lo: BTreeMap<PropVar, u64> = order.iter().map(|p| (p.clone(), 0)).collect();
    let mut hi: BTreeMap<PropVar, u64> = order.iter().map(|p| (p.clone(), frame.full())).collect();
    Ok(search_falsifier(frame, w, formula, &order, &mut lo, &mut hi))
}

fn search_falsifier(
    frame: &Frame,
    w: World,
    formula: &ModalFormula,
    order: &[PropVar],
    lo: &mut BTreeMap<PropVar, u64>,
    hi: &mut BTreeMap<PropVar, u64>,
) -> bool {
    let (def, pos) = truth_bounds(frame, formula, lo, hi);
    let bit = 1u64 << w;
    if def & bit != 0 {
        return true; // true under every completion of this branch
    }
    if pos & bit == 0 {
        return false; // some completion falsifies (in fact all of them here)
    }
    // Branch on the first undecided (variable, world) bit.
    for p in order {
        let undecided = hi[p] & !lo[p];
        if undecided == 0 {
            continue;
        }
        let b = undecided & undecided.wrapping_neg(); // lowest undecided bit
        *hi.get_mut(p).unwrap() &= !b;
        let without = search_falsifier(frame, w, formula, order, lo, hi);
        *hi.get_mut(p).unwrap() |= b;
        if !without {
            return false;
        }
        *lo.get_mut(p).unwrap() |= b;
        let with = search_falsifier(frame, w, formula, order, lo, hi);
        *lo.get_mut(p).unwrap() &= !b;
        return with;
    }
    // Fully assigned and still undecided cannot happen: bounds collapse.
    unreachable!("three-valued bounds did not collapse on a total valuation")
}

/// Plain exhaustive validity: iterate every valuation of the pool. The
/// reference implementation `valid_at_point` is checked against.
pub fn valid_at_point_exhaustive(
    frame: &Frame,
    w: World,
    formula: &ModalFormula,
    pool: &[PropVar],
) -> Result<bool, SemanticsError> {
    let n = frame.world_count;
    let bits = (n as usize) * pool.len();
    assert!(bits <= 24, "exhaustive valuation space too large");
    for code in 0u64..(1u64 << bits) {
        let mut valuation = Valuation::new();
        for (i, p) in pool.iter().enumerate() {
            let chunk = (code >> (i * n as usize)) & ((1u64 << n) - 1);
            valuation.insert(p.clone(), chunk);
        }
        let model = Model {
            frame: frame.clone(),
            valuation,
        };
        if !modal_truth(&model, w, formula)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Environment for first-order evaluation.
pub type Env = BTreeMap<ObjVar, World>;

/// Classical evaluation of an extended first-order formula over a frame.
/// Membership atoms go through the expression evaluator; set variables
/// inside expressions are looked up in `valuation` (normally empty).
pub fn fo_eval(frame: &Frame, env: &Env, formula: &FOFormula) -> Result<bool, SemanticsError> {
    fo_eval_with(frame, env, &Valuation::new(), formula)
}

pub fn fo_eval_with(
    frame: &Frame,
    env: &Env,
    valuation: &Valuation,
    formula: &FOFormula,
) -> Result<bool, SemanticsError> {
    let world = |x: &ObjVar| -> Result<World, SemanticsError> {
        env.get(x).copied().ok_or(SemanticsError::UnboundObjVar(*x))
    };
    Ok(match formula {
        FOFormula::Member(s, e) => {
            let set = eval_expr(e, frame, env, valuation)?;
            set & (1u64 << world(s)?) != 0
        }
        FOFormula::Rel(label, a, b) => frame.has_edge(*label, world(a)?, world(b)?),
        FOFormula::Eq(a, b) => world(a)? == world(b)?,
        FOFormula::Top => true,
        FOFormula::Bot => false,
        FOFormula::Not(a) => !fo_eval_with(frame, env, valuation, a)?,
        FOFormula::And(l, r) => {
            fo_eval_with(frame, env, valuation, l)? && fo_eval_with(frame, env, valuation, r)?
        }
        FOFormula::Or(l, r) => {
            fo_eval_with(frame, env, valuation, l)? || fo_eval_with(frame, env, valuation, r)?
        }
        FOFormula::RForall(y, label, x, body) => {
            let base = world(x)?;
            let mut inner = env.clone();
            let mut ok = true;
            for w in iter_mask(frame.successors(*label, base)) {
                inner.insert(*y, w);
                if !fo_eval_with(frame, &inner, valuation, body)? {
                    ok = false;
                    break;
                }
            }
            ok
        }
        FOFormula::RExists(y, label, x, body) => {
            let base = world(x)?;
            let mut inner = env.clone();
            let mut ok = false;
            for w in iter_mask(frame.successors(*label, base)) {
                inner.insert(*y, w);
                if fo_eval_with(frame, &inner, valuation, body)? {
                    ok = true;
                    break;
                }
            }
            ok
        }
        FOFormula::Forall(y, body) => {
            let mut inner = env.clone();
            let mut ok = true;
            for w in frame.worlds() {
                inner.insert(*y, w);
                if !fo_eval_with(frame, &inner, valuation, body)? {
                    ok = false;
                    break;
                }
            }
            ok
        }
        FOFormula::Exists(y, body) => {
            let mut inner = env.clone();
            let mut ok = false;
            for w in frame.worlds() {
                inner.insert(*y, w);
                if fo_eval_with(frame, &inner, valuation, body)? {
                    ok = true;
                    break;
                }
            }
            ok
        }
    })
}

/// Every frame with `1..=max_worlds` worlds over the given labels, by raw
/// edge-set enumeration (no isomorphism reduction).
pub fn enum_frames(max_worlds: u32, labels: &[Label]) -> impl Iterator<Item = Frame> + '_ {
    assert!((1..=4).contains(&max_worlds), "enumeration is desk-scale");
    (1..=max_worlds).flat_map(move |n| {
        let bits = (n * n) as u128 * labels.len() as u128;
        assert!(bits <= 63, "enumeration space too large");
        (0u128..(1u128 << bits)).map(move |code| frame_from_code(n, labels, code))
    })
}

fn frame_from_code(n: u32, labels: &[Label], code: u128) -> Frame {
    let mut edges = Vec::new();
    let mut bit = 0u32;
    for label in labels {
        for a in 0..n {
            for b in 0..n {
                if code & (1u128 << bit) != 0 {
                    edges.push((*label, a, b));
                }
                bit += 1;
            }
        }
    }
    Frame::new(n, edges).expect("enumerated frame is well-formed")
}

/// splitmix64: a small deterministic generator, stable across platforms.
#[derive(Clone, Debug)]
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform value in `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }

    pub fn chance(&mut self, prob_percent: u64) -> bool {
        self.below(100) < prob_percent
    }
}

/// `count` random frames with `1..=max_worlds` worlds, seed-deterministic.
/// Edge densities cycle so both sparse and dense frames appear.
pub fn sample_frames(
    max_worlds: u32,
    labels: &[Label],
    count: usize,
    seed: u64,
) -> impl Iterator<Item = Frame> + '_ {
    let mut rng = SplitMix64(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    (0..count).map(move |i| {
        let n = 1 + (rng.below(max_worlds as u64)) as u32;
        let density = [50u64, 25, 75][i % 3];
        let mut edges = Vec::new();
        for label in labels {
            for a in 0..n {
                for b in 0..n {
                    if rng.chance(density) {
                        edges.push((*label, a, b));
                    }
                }
            }
        }
        Frame::new(n, edges).expect("sampled frame is well-formed")
    })
}

/// One stage of a verification budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tier {
    Exhaustive { max_worlds: u32 },
    Sampled { max_worlds: u32, count: usize, seed: u64 },
}

/// A frame budget: which labels to realize and which frame families to try.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    pub labels: Vec<Label>,
    pub tiers: Vec<Tier>,
}

impl Budget {
    /// Default tiering: exhaustive up to 3 worlds for one relation,
    /// exhaustive up to 2 worlds for up to three relations, and a sampled
    /// family of larger frames otherwise.
    pub fn default_for(labels: Vec<Label>, samples: usize, seed: u64) -> Budget {
        let labels = if labels.is_empty() {
            vec![Label(1)]
        } else {
            labels
        };
        let tiers = if labels.len() == 1 {
            vec![Tier::Exhaustive { max_worlds: 3 }]
        } else if labels.len() <= 3 {
            vec![
                Tier::Exhaustive { max_worlds: 2 },
                Tier::Sampled {
                    max_worlds: 4,
                    count: samples,
                    seed,
                },
            ]
        } else {
            vec![Tier::Sampled {
                max_worlds: 4,
                count: samples,
                seed,
            }]
        };
        Budget { labels, tiers }
    }

    pub fn frames(&self) -> Vec<Frame> {
        let mut out = Vec::new();
        for tier in &self.tiers {
            match tier {
                Tier::Exhaustive { max_worlds } => {
                    out.extend(enum_frames(*max_worlds, &self.labels))
                }
                Tier::Sampled {
                    max_worlds,
                    count,
                    seed,
                } => out.extend(sample_frames(*max_worlds, &self.labels, *count, *seed)),
            }
        }
        out
    }
}

/// A disagreement between the modal and first-order sides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterExample {
    pub frame: Frame,
    pub world: World,
    pub modal_valid: bool,
    pub fo_true: bool,
}

impl fmt::Display for CounterExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "frame `{}` at world {}: modal side {}, first-order side {}",
            self.frame, self.world, self.modal_valid, self.fo_true
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub frames_checked: usize,
    pub points_checked: usize,
    pub counterexamples: Vec<CounterExample>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

const MAX_RECORDED: usize = 5;

/// Compare point-validity of a modal formula with truth of a first-order
/// formula (in its single free variable) over the budget's frames.
pub fn check_correspondence(
    formula: &ModalFormula,
    fo: &FOFormula,
    budget: &Budget,
) -> Result<Report, SemanticsError> {
    let free: Vec<ObjVar> = crate::syntax::free_vars(fo).into_iter().collect();
    let anchor = match free.as_slice() {
        [x] => *x,
        [] => ObjVar(0),
        more => return Err(SemanticsError::UnboundObjVar(more[1])),
    };
    let pool: Vec<PropVar> = formula.vars().into_iter().collect();
    let mut report = Report {
        frames_checked: 0,
        points_checked: 0,
        counterexamples: Vec::new(),
    };
    for frame in budget.frames() {
        report.frames_checked += 1;
        for w in frame.worlds() {
            report.points_checked += 1;
            let modal_valid = valid_at_point(&frame, w, formula, &pool)?;
            let mut env = Env::new();
            env.insert(anchor, w);
            let fo_true = fo_eval(&frame, &env, fo)?;
            if modal_valid != fo_true {
                if report.counterexamples.len() < MAX_RECORDED {
                    report.counterexamples.push(CounterExample {
                        frame: frame.clone(),
                        world: w,
                        modal_valid,
                        fo_true,
                    });
                } else {
                    return Ok(report);
                }
            }
        }
    }
    Ok(report)
}

/// Pointwise equivalence of two first-order formulas, each with at most one
/// free variable, over the budget's frames.
pub fn check_fo_equivalence(
    a: &FOFormula,
    b: &FOFormula,
    budget: &Budget,
) -> Result<Report, SemanticsError> {
    let anchor_of = |f: &FOFormula| -> Result<ObjVar, SemanticsError> {
        let free: Vec<ObjVar> = crate::syntax::free_vars(f).into_iter().collect();
        match free.as_slice() {
            [x] => Ok(*x),
            [] => Ok(ObjVar(0)),
            more => Err(SemanticsError::UnboundObjVar(more[1])),
        }
    };
    let xa = anchor_of(a)?;
    let xb = anchor_of(b)?;
    let mut report = Report {
        frames_checked: 0,
        points_checked: 0,
        counterexamples: Vec::new(),
    };
    for frame in budget.frames() {
        report.frames_checked += 1;
        for w in frame.worlds() {
            report.points_checked += 1;
            let mut env = Env::new();
            env.insert(xa, w);
            let va = fo_eval(&frame, &env, a)?;
            let mut env = Env::new();
            env.insert(xb, w);
            let vb = fo_eval(&frame, &env, b)?;
            if va != vb {
                if report.counterexamples.len() < MAX_RECORDED {
                    report.counterexamples.push(CounterExample {
                        frame: frame.clone(),
                        world: w,
                        modal_valid: va,
                        fo_true: vb,
                    });
                } else {
                    return Ok(report);
                }
            }
        }
    }
    Ok(report)
}

/// Pointwise frame-equivalence of two modal formulas (validity agrees at
/// every point) over the budget's frames.
pub fn check_modal_equivalence(
    a: &ModalFormula,
    b: &ModalFormula,
    budget: &Budget,
) -> Result<Report, SemanticsError> {
    let pool_a: Vec<PropVar> = a.vars().into_iter().collect();
    let pool_b: Vec<PropVar> = b.vars().into_iter().collect();
    let mut report = Report {
        frames_checked: 0,
        points_checked: 0,
        counterexamples: Vec::new(),
    };
    for frame in budget.frames() {
        report.frames_checked += 1;
        for w in frame.worlds() {
            report.points_checked += 1;
            let va = valid_at_point(&frame, w, a, &pool_a)?;
            let vb = valid_at_point(&frame, w, b, &pool_b)?;
            if va != vb {
                if report.counterexamples.len() < MAX_RECORDED {
                    report.counterexamples.push(CounterExample {
                        frame: frame.clone(),
                        world: w,
                        modal_valid: va,
                        fo_true: vb,
                    });
                } else {
                    return Ok(report);
                }
            }
        }
    }
    Ok(report)
}
