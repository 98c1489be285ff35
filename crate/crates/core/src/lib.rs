//! Polynomial progressions in Piatetski-Shapiro sequences `floor(f(n))`.
//!
//! The crate is organised as
//! - [`exactmath`]: rationals, combinatorial tables, certified real enclosures and floors;
//! - [`functions`]: the regularly varying functions `f` and their certified derivatives;
//! - [`progressions`]: membership in `P_{k,d}`, Taylor vectors and the polytope criterion;
//! - [`polytope`]: H-polytopes with exact volumes and Monte-Carlo checks;
//! - [`experiments`]: density, gap, sweep and variable-step counting experiments;
//! - [`discrepancy`]: extreme discrepancy of two-dimensional orbits and its bounds.

pub mod discrepancy;
pub mod error;
pub mod exactmath;
pub mod experiments;
pub mod functions;
pub mod polytope;
pub mod progressions;

pub use error::{Error, Result};
pub use exactmath::Rational;
