//! Correlated Gaussian field sampling via covariance factorization.

use super::SynthError;
use crate::geo::Location;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Jitter ladder for the generator covariance: `1e-10 * variance`,
/// escalating tenfold up to `1e-6 * variance`.
const JITTER_START_FRAC: f64 = 1e-10;
const JITTER_MAX_FRAC: f64 = 1e-6;

/// One draw from a zero-mean multivariate Gaussian whose covariance is the
/// exponential kernel `variance * exp(-d / decorrelation_m)`. Deterministic
/// given `seed`.
pub fn sample_correlated_field(
    locations: &[Location],
    variance: f64,
    decorrelation_m: f64,
    seed: u64,
) -> Result<Vec<f64>, SynthError> {
    if !(decorrelation_m > 0.0) {
        return Err(SynthError::BadConfig {
            field: "decorrelation_m",
            reason: format!("must be > 0, got {decorrelation_m}"),
        });
    }
    if variance < 0.0 || !variance.is_finite() {
        return Err(SynthError::BadConfig {
            field: "variance",
            reason: format!("must be >= 0 and finite, got {variance}"),
        });
    }
    let n = locations.len();
    if variance == 0.0 || n == 0 {
        return Ok(vec![0.0; n]);
    }

    let base = DMatrix::from_fn(n, n, |i, j| {
        variance * (-locations[i].distance(&locations[j]) / decorrelation_m).exp()
    });

    let mut jitter = JITTER_START_FRAC * variance;
    let chol = loop {
        let mut cov = base.clone();
        for i in 0..n {
            cov[(i, i)] += jitter;
        }
        match Cholesky::new(cov) {
            Some(c) => break c,
            None => {
                jitter *= 10.0;
                if jitter > JITTER_MAX_FRAC * variance {
                    return Err(SynthError::FieldFactorization);
                }
            }
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let field = chol.l() * z;
    Ok(field.iter().cloned().collect())
}
