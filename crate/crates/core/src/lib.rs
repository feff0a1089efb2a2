//! Belief propagation guided decimation for random k-SAT.
//!
//! The crate is organised bottom-up:
//!
//! - [`formula`]: CNF formulas, decimation, random models, DIMACS I/O.
//! - [`factor_graph`]: the bipartite variable/clause graph and its balls.
//! - [`bp`]: the BP operator and marginals.
//! - [`exact`]: brute-force counting, exact and local marginals, ideal
//!   decimation.
//! - [`decimation`]: the BP decimation drivers and their traces.
//! - [`quasirandom`]: bias thresholds, balancedness, the structural
//!   conditions Q0 to Q4 and cut norms.
//! - [`harness`]: seeds, sweeps, trace files and replay.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bp;
pub mod decimation;
pub mod error;
pub mod exact;
pub mod factor_graph;
pub mod formula;
pub mod harness;
pub mod quasirandom;
pub mod seeds;
pub mod stats;

pub use error::{Error, Result};
