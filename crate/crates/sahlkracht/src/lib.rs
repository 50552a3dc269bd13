//! Correspondence engine for multimodal logic.
//!
//! The crate implements both directions of the generalized Sahlqvist/Kracht
//! correspondence: [`correspond`] turns a generalized Sahlqvist modal formula
//! into its first-order frame condition via minimal valuations, and
//! [`synthesize`] turns a generalized Kracht first-order condition back into
//! a generalized Sahlqvist modal formula. Every translation can be checked
//! against the brute-force finite-frame oracle in [`semantics`].

pub mod correspond;
pub mod minval;
pub mod parser;
pub mod regular;
pub mod safety;
pub mod semantics;
pub mod synthesize;
pub mod syntax;

pub use correspond::{classify_sahlqvist, correspond, correspond_full};
pub use parser::{parse, parse_expr, parse_fo, parse_modal, Parsed, SyntaxError, SyntaxKind};
pub use synthesize::{check_kracht, normalize_kracht, quantifier_eliminate, synthesize};
pub use syntax::{FOFormula, LExpr, Label, ModalFormula, ObjVar, PropVar};
