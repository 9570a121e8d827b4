//! Numerical and symbolic laboratory for the periodic dispersion-generalized
//! Benjamin-Ono equation `∂t u + ∂x D^α u + ∂x P(u) = 0`.

pub mod combinatorics;
pub mod diagnostics;
pub mod error;
pub mod multipliers;
pub mod resonance;
pub mod scan;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
