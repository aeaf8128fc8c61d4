//! Spatial modeling of the extreme lower tail of SNR over a coverage area.
//!
//! The pipeline: measured locations provide i.i.d. linear-SNR samples; the
//! lower tail at each site is fitted with a Generalized Pareto distribution
//! after a mirror transform; the fitted tail parameters are kriged to the
//! whole grid with Gaussian-process regression; and a per-point transmission
//! rate is selected so a target outage probability holds everywhere. A
//! quantile-kriging baseline and an evaluation harness (empirical outage,
//! availability, tail divergence) round out the toolkit.

pub mod alloc;
pub mod eval;
pub mod evt;
pub mod geo;
pub mod gp;
pub mod io;
pub mod numerics;
pub mod special;
pub mod synth;

pub use geo::{build_grid, GridSpec, Location};
