//! Decidable analysis of infinite two-choice sequential games.
//!
//! Games, strategy profiles, and strategies are represented as finite
//! guarded equation systems — the rational fragment of the space of
//! infinite trees. On that fragment every notion this crate deals with is
//! computable by a fixed-point iteration over the node set: convergence of
//! play, strong convergence, subgame perfect equilibria, Nash equilibria
//! via deviation search, and escalation (families of individually sound
//! strategies whose combination never stops).
//!
//! ```
//! use coindgame::{dsl, equilibria, fixpoint};
//!
//! let file = dsl::parse(
//!     "agents A B
//!      profile s10a =
//!        s10a: A(d -> l01, r! -> s10b),
//!        s10b: B(d! -> l10, r -> s10a),
//!        l01: leaf{A: 0, B: 1},
//!        l10: leaf{A: 1, B: 0}",
//! )
//! .expect("parses");
//! let profile = &file.declarations[0].system;
//!
//! // The cyclic profile denotes an infinite tree, yet its play stops:
//! assert!(fixpoint::strongly_converges(profile, profile.root()));
//! assert!(equilibria::is_spe(profile, profile.root()));
//! let payoff = equilibria::payoff(profile, profile.root());
//! assert!(payoff.is_defined());
//! ```
//!
//! Module map:
//! - [`system`]: equation systems, validation, depth-limited unfolding.
//! - [`bisim`]: bisimilarity (partition refinement), subprofile testing,
//!   quotient minimization.
//! - [`transform`]: structure maps between the three kinds — stripping
//!   choices, strategy-to-game, fullness, strategy summation.
//! - [`fixpoint`]: the least/greatest fixed-point engine and the predicate
//!   library built on it.
//! - [`equilibria`]: payoff evaluation, subgame perfection, convertibility,
//!   Nash checking with deviation witnesses, backward induction.
//! - [`zero_one`]: the 0,1-game laboratory — canonical equilibria,
//!   escalation strategies, bounded equilibrium enumeration, and the
//!   finite-truncation comparison.
//! - [`dsl`]: the text format and its parser/printer.
//! - [`json`]: JSON export (`coindgame/1` schema).
//! - [`generate`]: seeded random systems for property testing.

pub mod bisim;
pub mod dsl;
pub mod equilibria;
pub mod fixpoint;
pub mod generate;
pub mod json;
pub mod system;
pub mod transform;
pub mod zero_one;

pub use system::{
    unfold, validate_system, AgentId, Choice, EquationSystem, Head, Kind, Node, NodeId, PayoffMap,
    Rational, RawNode, RawSystem, Tree, ValidateError,
};
