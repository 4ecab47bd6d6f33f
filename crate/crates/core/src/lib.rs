//! Multi-object reallocation without transfers: generalized Top Trading
//! Cycles (TTC), Augmented TTC for conditionally lexicographic preferences,
//! preference-domain machinery (lexicographic, responsive, LP trees), axiom
//! auditors backed by brute-force oracles, manipulation-strategy generators,
//! and a registry of reference rules with their property matrices.
//!
//! Everything operates at desk scale: agents and objects are string-labeled,
//! object sets are 64-bit masks, and the efficiency oracles enumerate
//! allocations exhaustively (capped, override via `TTCLAB_CAP`).

pub mod attc;
pub mod axioms;
mod error;
pub mod prefs;
pub mod problem;
pub mod rules;
pub mod schema;
pub mod strategies;
pub mod suites;
pub mod ttc;

pub use error::{Error, Result};
pub use prefs::{
    check_conditionally_lexicographic, check_monotonic, check_responsive, lex_compare,
    responsive_extension, BundleOrder, Comparator, ExtensionScheme, LpTree, MarginalPreference,
    Preference, ResponsivePref,
};
pub use problem::{
    enumerate_allocations, is_balanced, validate_allocation, Allocation, Endowment, ObjSet,
    Problem, Violation,
};
pub use ttc::{pointing_cycles, run_ttc, MechanismTrace, TraceStep, TradingCycle};
