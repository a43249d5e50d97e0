//! Stable cyclic partitions of roommates instances.
//!
//! The crate covers the whole pipeline: random instances ([`instance`]),
//! partitions and their stability predicates ([`partition`]), a polynomial
//! solver ([`solver`]), a brute-force enumerator ([`enumerate`]), exact
//! rational evaluation of the stability integrals ([`exact`]) and seeded
//! Monte Carlo estimators ([`mc`]).

pub mod enumerate;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod instance;
pub mod mc;
pub mod partition;
pub mod rng;
pub mod solver;

pub use enumerate::ShapeSpec;
pub use error::{Error, Result};
pub use exact::RankPolynomial;
pub use instance::{LatentMatrix, PreferenceInstance};
pub use solver::{tan_solve, SolveResult};
pub use partition::{CyclicPartition, ReduceChoice, StabilityVerdict, Witness};
