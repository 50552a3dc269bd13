//! Command-line front end: parsing, classification, both translation
//! directions, safety analysis, and oracle verification.
//!
//! Exit codes: 0 success/accept, 1 reject/counterexample, 2 usage or parse
//! error.

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sahlkracht::correspond::{
    classify_sahlqvist, correspond_full, rank_tree, Decomposition, LabelledTree,
};
use sahlkracht::minval::{kf, RequirementMap};
use sahlkracht::parser::{parse_expr, parse_fo, parse_modal};
use sahlkracht::safety::{analyze_safety, preorder, SafetyStatus};
use sahlkracht::semantics::{check_correspondence, check_fo_equivalence, Budget, Report, Tier};
use sahlkracht::synthesize::{
    check_kracht, normalize_kracht, quantifier_eliminate, synthesize, synthesize_verified,
};
use sahlkracht::syntax::{FOFormula, Label, ModalFormula, ObjVar};

#[derive(Parser)]
#[command(name = "sahlkracht", version, about = "Correspondence engine for multimodal logic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Modal,
    Expr,
    Fo,
}

#[derive(Args, Clone)]
struct InputArg {
    /// Formula text; `-` reads standard input.
    #[arg(value_name = "FORMULA", conflicts_with = "file")]
    text: Option<String>,
    /// Read the formula from a file instead.
    #[arg(long, value_name = "PATH")]
    file: Option<std::path::PathBuf>,
}

impl InputArg {
    fn read(&self) -> Result<String, String> {
        match (&self.text, &self.file) {
            (Some(t), None) if t == "-" => {
                let mut buf = String::new();
                std::io::stdin()
                    .read_to_string(&mut buf)
                    .map_err(|e| e.to_string())?;
                Ok(buf.trim().to_string())
            }
            (Some(t), None) => Ok(t.clone()),
            (None, Some(path)) => Ok(std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {}", path.display(), e))?
                .trim()
                .to_string()),
            _ => Err("exactly one input source (argument, --file, or `-`) required".into()),
        }
    }
}

#[derive(Args, Clone)]
struct BudgetArgs {
    /// Cap on frame sizes explored by the oracle.
    #[arg(long, value_name = "N")]
    max_worlds: Option<u32>,
    /// Number of relations to realize (default: those mentioned).
    #[arg(long, value_name = "K")]
    relations: Option<u32>,
    /// Sample count for the non-exhaustive tier.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Seed for sampled frames (SAHLKRACHT_SEED overrides).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl BudgetArgs {
    fn seed(&self) -> u64 {
        std::env::var("SAHLKRACHT_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(self.seed)
    }

    fn budget(&self, mentioned: impl IntoIterator<Item = Label>) -> Budget {
        let labels: Vec<Label> = match self.relations {
            Some(k) => (1..=k.max(1)).map(Label).collect(),
            None => {
                let set: std::collections::BTreeSet<Label> = mentioned.into_iter().collect();
                if set.is_empty() {
                    vec![Label(1)]
                } else {
                    set.into_iter().collect()
                }
            }
        };
        let seed = self.seed();
        let mut tiers = Vec::new();
        if labels.len() == 1 {
            tiers.push(Tier::Exhaustive {
                max_worlds: self.max_worlds.unwrap_or(3).min(3),
            });
        } else if labels.len() <= 3 {
            tiers.push(Tier::Exhaustive {
                max_worlds: self.max_worlds.unwrap_or(2).min(2),
            });
        }
        if labels.len() > 1 {
            tiers.push(Tier::Sampled {
                max_worlds: self.max_worlds.unwrap_or(4),
                count: self.samples,
                seed,
            });
        }
        Budget { labels, tiers }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and print its canonical form.
    Parse {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        json: bool,
    },
    /// Classify a modal formula as generalized Sahlqvist.
    Classify {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        json: bool,
    },
    /// Compute the first-order correspondent of a generalized Sahlqvist formula.
    Correspond {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        json: bool,
        /// Check the translation against the finite-frame oracle.
        #[arg(long)]
        verify: bool,
        /// Print intermediate artifacts.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Decide membership in the generalized Kracht class.
    KrachtCheck {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        json: bool,
    },
    /// Synthesize a generalized Sahlqvist formula from a Kracht condition.
    Synthesize {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Analyze an expression for safety.
    Safe {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        json: bool,
    },
    /// Check a modal formula against a first-order condition on finite frames.
    Verify {
        modal: String,
        fo: String,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Translate there and back again, verifying equivalence.
    Roundtrip {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {}", message);
            ExitCode::from(2)
        }
    }
}

/// Bundled named formulas; reports mention a match, purely informational.
fn golden_modal() -> Vec<(&'static str, ModalFormula)> {
    vec![
        ("D2", parse_modal("p & [](<>p -> []q) -> <>[][]q").unwrap()),
        (
            "ns",
            parse_modal("p & [1](<1>p -> [3]r) -> <2>(<2>p & <3>r)").unwrap(),
        ),
        (
            "cub1",
            parse_modal(
                "<1>([2]p12 & [3]p13) & <2>([1]p21 & [3]p23) & <3>([1]p31 & [2]p32) \
                 & [1][2](p12 & p21 -> [3]q3) & [1][3](p13 & p31 -> [2]q2) \
                 & [2][3](p23 & p32 -> [1]q1) -> <1><2><3>(q1 & q2 & q3)",
            )
            .unwrap(),
        ),
    ]
}

fn golden_fo() -> Vec<(&'static str, FOFormula)> {
    vec![
        (
            "FO(D2)",
            parse_fo("ex y <1 x0 . all z <1 y . all w <1 z . w in img1(inv1(x0) & img1(x0))")
                .unwrap(),
        ),
        (
            "FO(ns)",
            parse_fo(
                "ex y <2 x0 . (y in inv2(x0) & (ex v <3 y . v in img3(img1(x0) & inv1(x0))))",
            )
            .unwrap(),
        ),
        (
            "FO(cub1)",
            parse_fo(
                "all x1 <1 x0 . all x2 <2 x0 . all x3 <3 x0 . ex y1 <1 x0 . ex y2 <2 y1 . \
                 ex y <3 y2 . (y in img3(img2(x1) & img1(x2)) & y in img2(img3(x1) & img1(x3)) \
                 & y in img1(img2(x3) & img3(x2)))",
            )
            .unwrap(),
        ),
    ]
}

fn note_golden_modal(f: &ModalFormula) -> Option<&'static str> {
    golden_modal().into_iter().find(|(_, g)| g == f).map(|(n, _)| n)
}

fn note_golden_fo(f: &FOFormula) -> Option<&'static str> {
    golden_fo().into_iter().find(|(_, g)| g == f).map(|(n, _)| n)
}

#[derive(Serialize)]
struct VerifyReport {
    frames_checked: usize,
    points_checked: usize,
    passed: bool,
    counterexamples: Vec<CounterExampleReport>,
}

#[derive(Serialize)]
struct CounterExampleReport {
    frame: String,
    world: u32,
    modal_side: bool,
    fo_side: bool,
}

impl VerifyReport {
    fn from(report: &Report) -> VerifyReport {
        VerifyReport {
            frames_checked: report.frames_checked,
            points_checked: report.points_checked,
            passed: report.passed(),
            counterexamples: report
                .counterexamples
                .iter()
                .map(|ce| CounterExampleReport {
                    frame: ce.frame.to_string(),
                    world: ce.world,
                    modal_side: ce.modal_valid,
                    fo_side: ce.fo_true,
                })
                .collect(),
        }
    }

    fn print_text(&self) {
        if self.passed {
            println!(
                "verified: {} frames, {} points, no counterexample",
                self.frames_checked, self.points_checked
            );
        } else {
            println!("counterexample found:");
            for ce in &self.counterexamples {
                println!(
                    "  frame `{}` at world {}: modal side {}, first-order side {}",
                    ce.frame, ce.world, ce.modal_side, ce.fo_side
                );
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Parse { kind, input, json } => {
            let text = input.read()?;
            match kind {
                KindArg::Modal => {
                    let f = parse_modal(&text).map_err(|e| e.to_string())?;
                    emit_parse(json, &f.to_string(), &f)?;
                }
                KindArg::Expr => {
                    let e = parse_expr(&text).map_err(|e| e.to_string())?;
                    emit_parse(json, &e.to_string(), &e)?;
                }
                KindArg::Fo => {
                    let f = parse_fo(&text).map_err(|e| e.to_string())?;
                    emit_parse(json, &f.to_string(), &f)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Classify { input, json } => {
            let text = input.read()?;
            let formula = parse_modal(&text).map_err(|e| e.to_string())?;
            let classification = classify_sahlqvist(&formula);
            #[derive(Serialize)]
            struct ClassifyReport {
                formula: String,
                generalized_sahlqvist: bool,
                #[serde(skip_serializing_if = "Option::is_none")]
                reason: Option<String>,
                #[serde(skip_serializing_if = "Option::is_none")]
                decomposition: Option<String>,
                #[serde(skip_serializing_if = "Option::is_none")]
                golden: Option<&'static str>,
            }
            let report = ClassifyReport {
                formula: formula.to_string(),
                generalized_sahlqvist: classification.is_sahlqvist(),
                reason: classification.reason.clone(),
                decomposition: classification
                    .decomposition
                    .as_ref()
                    .map(render_decomposition),
                golden: note_golden_modal(&formula),
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                if let Some(name) = report.golden {
                    println!("note: matches bundled example {}", name);
                }
                if report.generalized_sahlqvist {
                    println!("generalized Sahlqvist");
                    print!("{}", report.decomposition.as_deref().unwrap_or(""));
                } else {
                    println!("not generalized Sahlqvist: {}", report.reason.as_deref().unwrap_or(""));
                }
            }
            Ok(if classification.is_sahlqvist() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Correspond {
            input,
            json,
            verify,
            trace,
            budget,
        } => {
            let text = input.read()?;
            let formula = parse_modal(&text).map_err(|e| e.to_string())?;
            if let Some(name) = note_golden_modal(&formula) {
                if !json {
                    println!("note: matches bundled example {}", name);
                }
            }
            if trace && !json {
                print_correspond_trace(&formula)?;
            }
            let result = correspond_full(&formula).map_err(|e| e.to_string())?;
            let verification = if verify {
                let b = budget.budget(formula.labels());
                Some(
                    check_correspondence(&formula, &result.kracht, &b)
                        .map_err(|e| e.to_string())?,
                )
            } else {
                None
            };
            #[derive(Serialize)]
            struct CorrespondReport {
                formula: String,
                kracht: String,
                plain: String,
                #[serde(skip_serializing_if = "Option::is_none")]
                verification: Option<VerifyReport>,
            }
            let report = CorrespondReport {
                formula: formula.to_string(),
                kracht: result.kracht.to_string(),
                plain: result.plain.to_string(),
                verification: verification.as_ref().map(VerifyReport::from),
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                println!("{}", report.kracht);
                if trace {
                    println!("plain form: {}", report.plain);
                }
                if let Some(v) = &report.verification {
                    v.print_text();
                }
            }
            Ok(match verification {
                Some(r) if !r.passed() => ExitCode::from(1),
                _ => ExitCode::SUCCESS,
            })
        }
        Command::KrachtCheck { input, json } => {
            let text = input.read()?;
            let formula = parse_fo(&text).map_err(|e| e.to_string())?;
            let verdict = check_kracht(&formula);
            #[derive(Serialize)]
            struct KrachtReport {
                formula: String,
                kracht: bool,
                inherently_universal: Vec<String>,
                reasons: Vec<String>,
                #[serde(skip_serializing_if = "Option::is_none")]
                normalized: Option<String>,
                #[serde(skip_serializing_if = "Option::is_none")]
                golden: Option<&'static str>,
            }
            let report = KrachtReport {
                formula: formula.to_string(),
                kracht: verdict.is_kracht(),
                inherently_universal: verdict
                    .inherently_universal
                    .iter()
                    .map(|v| v.to_string())
                    .collect(),
                reasons: verdict.reasons.clone(),
                normalized: verdict.normalized.as_ref().map(|f| f.to_string()),
                golden: note_golden_fo(&formula),
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                if let Some(name) = report.golden {
                    println!("note: matches bundled example {}", name);
                }
                if report.kracht {
                    println!("generalized Kracht formula");
                    if let Some(n) = &report.normalized {
                        if *n != report.formula {
                            println!("normalized: {}", n);
                        }
                    }
                } else {
                    println!("not a generalized Kracht formula:");
                    for r in &report.reasons {
                        println!("  - {}", r);
                    }
                }
                println!(
                    "inherently universal: {}",
                    report.inherently_universal.join(", ")
                );
            }
            Ok(if verdict.is_kracht() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Synthesize {
            input,
            json,
            verify,
            trace,
            budget,
        } => {
            let text = input.read()?;
            let formula = parse_fo(&text).map_err(|e| e.to_string())?;
            if let Some(name) = note_golden_fo(&formula) {
                if !json {
                    println!("note: matches bundled example {}", name);
                }
            }
            if trace && !json {
                print_synthesize_trace(&formula)?;
            }
            let b = budget.budget(formula.labels());
            let result = if verify {
                synthesize_verified(&formula, &b)
            } else {
                synthesize(&formula)
            };
            let output = result.map_err(|e| e.to_string())?;
            let verification = if verify {
                Some(check_correspondence(&output, &formula, &b).map_err(|e| e.to_string())?)
            } else {
                None
            };
            #[derive(Serialize)]
            struct SynthesizeReport {
                formula: String,
                modal: String,
                #[serde(skip_serializing_if = "Option::is_none")]
                verification: Option<VerifyReport>,
            }
            let report = SynthesizeReport {
                formula: formula.to_string(),
                modal: output.to_string(),
                verification: verification.as_ref().map(VerifyReport::from),
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                println!("{}", report.modal);
                if let Some(v) = &report.verification {
                    v.print_text();
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Safe { input, json } => {
            let text = input.read()?;
            let expr = parse_expr(&text).map_err(|e| e.to_string())?;
            let verdict = analyze_safety(&expr).map_err(|e| e.to_string())?;
            let status = match verdict.status {
                SafetyStatus::Safe => "Safe",
                SafetyStatus::QuasiSafe => "QuasiSafe",
                SafetyStatus::Neither => "Neither",
            };
            #[derive(Serialize)]
            struct SafeReport {
                expression: String,
                status: &'static str,
                tree: Vec<String>,
                #[serde(skip_serializing_if = "Option::is_none")]
                witness: Option<String>,
            }
            let nodes = preorder(&expr);
            let witness = verdict.witness.map(|i| nodes[i].to_string());
            let report = SafeReport {
                expression: expr.to_string(),
                status,
                tree: render_safety_tree(&expr, &verdict.marked),
                witness,
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                println!("{}", report.status);
                for line in &report.tree {
                    println!("{}", line);
                }
                if let Some(w) = &report.witness {
                    println!("blocking subexpression: {}", w);
                }
            }
            Ok(match verdict.status {
                SafetyStatus::Safe | SafetyStatus::QuasiSafe => ExitCode::SUCCESS,
                SafetyStatus::Neither => ExitCode::from(1),
            })
        }
        Command::Verify {
            modal,
            fo,
            json,
            budget,
        } => {
            let formula = parse_modal(&modal).map_err(|e| e.to_string())?;
            let condition = parse_fo(&fo).map_err(|e| e.to_string())?;
            let mut labels: Vec<Label> = formula.labels().into_iter().collect();
            labels.extend(condition.labels());
            let b = budget.budget(labels);
            let report = check_correspondence(&formula, &condition, &b)
                .map_err(|e| e.to_string())?;
            let out = VerifyReport::from(&report);
            if json {
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                out.print_text();
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Roundtrip { input, json, budget } => {
            let text = input.read()?;
            if let Ok(formula) = parse_modal(&text) {
                roundtrip_modal(&formula, json, &budget)
            } else {
                let formula = parse_fo(&text).map_err(|e| {
                    format!(
                        "input parses neither as a modal formula nor as a first-order one: {}",
                        e
                    )
                })?;
                roundtrip_fo(&formula, json, &budget)
            }
        }
    }
}

fn emit_parse<T: Serialize>(json: bool, printed: &str, tree: &T) -> Result<(), String> {
    if json {
        #[derive(Serialize)]
        struct ParseReport<'a, T> {
            printed: &'a str,
            tree: &'a T,
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&ParseReport { printed, tree }).unwrap()
        );
    } else {
        println!("{}", printed);
    }
    Ok(())
}

fn render_decomposition(d: &Decomposition) -> String {
    let mut out = String::new();
    fn go(d: &Decomposition, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match d {
            Decomposition::Box(label, inner) => {
                out.push_str(&format!("{}box [{}]\n", pad, label));
                go(inner, depth + 1, out);
            }
            Decomposition::And(l, r) => {
                out.push_str(&format!("{}and\n", pad));
                go(l, depth + 1, out);
                go(r, depth + 1, out);
            }
            Decomposition::DisjointOr(l, r) => {
                out.push_str(&format!("{}or (variable-disjoint)\n", pad));
                go(l, depth + 1, out);
                go(r, depth + 1, out);
            }
            Decomposition::Simple(tree) => {
                out.push_str(&format!("{}simple implication, reduced tree:\n", pad));
                for line in tree.to_string().lines() {
                    out.push_str(&format!("{}  {}\n", pad, line));
                }
            }
        }
    }
    go(d, 0, &mut out);
    out
}

fn render_safety_tree(expr: &sahlkracht::LExpr, marked: &[sahlkracht::safety::NodeFlags]) -> Vec<String> {
    use sahlkracht::LExpr;
    let mut lines = Vec::new();
    fn go(
        e: &LExpr,
        depth: usize,
        pos: &mut usize,
        marked: &[sahlkracht::safety::NodeFlags],
        lines: &mut Vec<String>,
    ) {
        let flags = marked[*pos];
        *pos += 1;
        let name = match e {
            LExpr::ObjVar(x) => x.to_string(),
            LExpr::SetVar(p) => format!("P{}_{}", p.rank, p.index),
            LExpr::Hole => "#".into(),
            LExpr::Top => "T".into(),
            LExpr::Bot => "F".into(),
            LExpr::Cap(_, _) => "&".into(),
            LExpr::Cup(_, _) => "|".into(),
            LExpr::Inv(l, _) => format!("inv{}", l),
            LExpr::IBox(l, _) => format!("ibox{}", l),
            LExpr::Img(l, _) => format!("img{}", l),
        };
        lines.push(format!(
            "{}{} {}",
            "  ".repeat(depth),
            name,
            if flags.safe_for { "[safe]" } else { "[not safe]" }
        ));
        for child in e.children() {
            go(child, depth + 1, pos, marked, lines);
        }
    }
    let mut pos = 0;
    go(expr, 0, &mut pos, marked, &mut lines);
    lines
}

fn print_correspond_trace(formula: &ModalFormula) -> Result<(), String> {
    let classification = classify_sahlqvist(formula);
    let Some(decomposition) = classification.decomposition else {
        return Ok(());
    };
    println!("decomposition:");
    print!("{}", render_decomposition(&decomposition));
    fn trees(d: &Decomposition, out: &mut Vec<LabelledTree>) {
        match d {
            Decomposition::Box(_, inner) => trees(inner, out),
            Decomposition::And(l, r) | Decomposition::DisjointOr(l, r) => {
                trees(l, out);
                trees(r, out);
            }
            Decomposition::Simple(t) => out.push(t.clone()),
        }
    }
    let mut all = Vec::new();
    trees(&decomposition, &mut all);
    for tree in all {
        let ranked = rank_tree(&tree).map_err(|e| e.to_string())?;
        let mut requirements = RequirementMap::empty();
        for (i, node) in ranked.nodes.iter().enumerate() {
            for f in &node.regular {
                requirements
                    .insert(ObjVar(i as u32), f.clone())
                    .map_err(|e| e.to_string())?;
            }
        }
        println!("requirements:");
        for (x, f) in requirements.iter() {
            println!("  {}: {}", x, f);
        }
        for p in requirements.prop_vars() {
            let branches = kf(&requirements, &p).map_err(|e| e.to_string())?;
            let rendered = if branches.is_empty() {
                "F".to_string()
            } else {
                branches
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(" | ")
            };
            println!("minimal valuation of {}: {}", p, rendered);
        }
    }
    Ok(())
}

fn print_synthesize_trace(formula: &FOFormula) -> Result<(), String> {
    let normalized = normalize_kracht(formula).map_err(|e| e.to_string())?;
    println!("normalized: {}", normalized);
    let eliminated = quantifier_eliminate(&normalized).map_err(|e| e.to_string())?;
    println!("after quantifier elimination: {}", eliminated);
    Ok(())
}

fn roundtrip_modal(
    formula: &ModalFormula,
    json: bool,
    budget: &BudgetArgs,
) -> Result<ExitCode, String> {
    let b = budget.budget(formula.labels());
    let fo = correspond_full(formula).map_err(|e| e.to_string())?;
    let back = synthesize(&fo.kracht).map_err(|e| e.to_string())?;
    let correspondence = check_correspondence(formula, &fo.kracht, &b).map_err(|e| e.to_string())?;
    let equivalence = sahlkracht::semantics::check_modal_equivalence(formula, &back, &b)
        .map_err(|e| e.to_string())?;
    emit_roundtrip(
        json,
        formula.to_string(),
        fo.kracht.to_string(),
        back.to_string(),
        &correspondence,
        &equivalence,
    )
}

fn roundtrip_fo(formula: &FOFormula, json: bool, budget: &BudgetArgs) -> Result<ExitCode, String> {
    let b = budget.budget(formula.labels());
    let modal = synthesize(formula).map_err(|e| e.to_string())?;
    let back = correspond_full(&modal).map_err(|e| e.to_string())?;
    let correspondence = check_correspondence(&modal, formula, &b).map_err(|e| e.to_string())?;
    let equivalence = check_fo_equivalence(formula, &back.kracht, &b).map_err(|e| e.to_string())?;
    emit_roundtrip(
        json,
        formula.to_string(),
        modal.to_string(),
        back.kracht.to_string(),
        &correspondence,
        &equivalence,
    )
}

fn emit_roundtrip(
    json: bool,
    input: String,
    forward: String,
    back: String,
    correspondence: &Report,
    equivalence: &Report,
) -> Result<ExitCode, String> {
    #[derive(Serialize)]
    struct RoundtripReport {
        input: String,
        forward: String,
        back: String,
        correspondence: VerifyReport,
        equivalence: VerifyReport,
    }
    let report = RoundtripReport {
        input,
        forward,
        back,
        correspondence: VerifyReport::from(correspondence),
        equivalence: VerifyReport::from(equivalence),
    };
    let ok = correspondence.passed() && equivalence.passed();
    if json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        println!("forward:  {}", report.forward);
        println!("back:     {}", report.back);
        print!("translation ");
        report.correspondence.print_text();
        print!("roundtrip ");
        report.equivalence.print_text();
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
