//! Verification toolkit for agreement problems on codes in [m]^n.
//!
//! A code is a set of words over the alphabet [m] = {1,..,m} of length n,
//! stored as a dense indicator over all m^n points. The crate provides
//! exact combinatorics on codes (balls, restrictions, juntas, isomorphism,
//! compression, shadows, projections, configuration containment, extremal
//! search) and numeric analysis of real functions on product spaces
//! (Efron-Stein decomposition, Laplacians, noise operators, Markov chains,
//! spectral gaps, Hoffman bounds, hypercontractivity), together with the
//! pseudorandomness machinery (pseudorandom / global / uncapturable
//! checkers, regularity decompositions, measure boosting under gluings).
//!
//! Conventions: symbols are 1-based in every external format and 0-based
//! internally; points are ranked in mixed-radix order with coordinate 1
//! most significant; measures on the uniform cube are exact rationals.

pub mod chain;
pub mod code;
pub mod compression;
pub mod configs;
pub mod es;
pub mod extremal;
pub mod fileio;
pub mod gluing;
pub mod hoffman;
pub mod hyper;
pub mod laplacian;
pub mod measure;
pub mod noise;
pub mod pseudo;
pub mod realfn;
pub mod report;
pub mod seeds;
pub mod space;

pub use chain::MarkovChain;
pub use code::{BallSpec, Code, Isomorphism, Restriction, Subcube};
pub use configs::Configuration;
pub use es::ESDecomposition;
pub use gluing::Gluing;
pub use measure::ProductMeasure;
pub use realfn::RealFn;
pub use report::{Report, Verdict};
pub use space::{MixedShape, Point, Shape};

use thiserror::Error;

pub type Rat = num::BigRational;

/// Numeric tolerance for floating-point identities (norms, decompositions).
pub const TOL: f64 = 1e-10;
/// Tolerance for quantities that are exact rationals evaluated in floats.
pub const TOL_EXACT: f64 = 1e-12;
/// Looser tolerance for the reversible-gap cross-check (two independent
/// numeric routes, each with its own roundoff).
pub const TOL_GAP: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape too large: {m}^{n} exceeds cap {cap}")]
    ShapeTooLarge { m: u32, n: u32, cap: usize },
    #[error("invalid shape: m={m}, n={n} (need m >= 2, n >= 1)")]
    BadShape { m: u32, n: u32 },
    #[error("coordinate {value} out of range for alphabet [{m}]")]
    SymbolOutOfRange { value: u32, m: u32 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Exact rational a/b from unsigned integers.
pub fn rat(num: usize, den: usize) -> Rat {
    use num::BigInt;
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// f64 value of an exact rational (for reporting only).
pub fn rat_to_f64(r: &Rat) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
