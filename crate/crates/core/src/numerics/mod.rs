//! Shared numerical routines: derivative-free minimization and quadrature.

pub mod integrate;
pub mod simplex;

pub use integrate::adaptive_simpson;
pub use simplex::{nelder_mead, SimplexResult};
