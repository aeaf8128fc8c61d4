//! Stationary covariance kernels: exponential (Gudmundson) and Matérn with
//! half-integer smoothness.

use crate::geo::Location;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Supported Matérn smoothness values; the half-integer family has closed
/// forms, which covers the practically distinguishable regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl MaternNu {
    pub const ALL: [MaternNu; 3] = [MaternNu::Half, MaternNu::ThreeHalves, MaternNu::FiveHalves];

    pub fn value(self) -> f64 {
        match self {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelKind {
    Exponential,
    Matern(MaternNu),
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Exponential => "exponential",
            KernelKind::Matern(_) => "matern",
        }
    }

    pub fn nu(&self) -> Option<f64> {
        match self {
            KernelKind::Exponential => None,
            KernelKind::Matern(nu) => Some(nu.value()),
        }
    }
}

/// A fully specified stationary covariance: kernel family, process variance,
/// decorrelation range, and observation-noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub kind: KernelKind,
    /// Process variance omega^2 (the zero-lag value).
    pub variance: f64,
    /// Decorrelation range in meters.
    pub range_m: f64,
    /// Observation noise variance lambda^2, added on the Gram diagonal only.
    pub noise2: f64,
}

impl CovarianceSpec {
    /// Kernel value at distance `d`; exactly `variance` at zero lag.
    pub fn kernel(&self, d: f64) -> f64 {
        debug_assert!(self.variance >= 0.0 && self.range_m > 0.0);
        if d == 0.0 {
            return self.variance;
        }
        match self.kind {
            KernelKind::Exponential => self.variance * (-d / self.range_m).exp(),
            KernelKind::Matern(nu) => {
                let t = nu.value().sqrt() * d / self.range_m;
                let poly = match nu {
                    MaternNu::Half => 1.0,
                    MaternNu::ThreeHalves => 1.0 + t,
                    MaternNu::FiveHalves => 1.0 + t + t * t / 3.0,
                };
                self.variance * poly * (-t).exp()
            }
        }
    }
}

/// Cross-covariance matrix with entry `(i, j) = kernel(|a_i - b_j|)`.
pub fn covariance_matrix(
    locs_a: &[Location],
    locs_b: &[Location],
    spec: &CovarianceSpec,
) -> DMatrix<f64> {
    DMatrix::from_fn(locs_a.len(), locs_b.len(), |i, j| {
        spec.kernel(locs_a[i].distance(&locs_b[j]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loc(x: f64, y: f64) -> Location {
        Location::new(x, y)
    }

    #[test]
    fn exponential_at_range_distance() {
        let spec = CovarianceSpec {
            kind: KernelKind::Exponential,
            variance: 2.5,
            range_m: 13.0,
            noise2: 0.0,
        };
        assert!((spec.kernel(13.0) - 2.5 * (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn zero_lag_is_variance_for_all_kernels() {
        for kind in [
            KernelKind::Exponential,
            KernelKind::Matern(MaternNu::Half),
            KernelKind::Matern(MaternNu::ThreeHalves),
            KernelKind::Matern(MaternNu::FiveHalves),
        ] {
            let spec = CovarianceSpec {
                kind,
                variance: 3.7,
                range_m: 5.0,
                noise2: 0.1,
            };
            assert_eq!(spec.kernel(0.0), 3.7);
        }
    }

    #[test]
    fn matern_half_equals_exponential_reparameterized() {
        // nu = 1/2 collapses to exp(-sqrt(0.5) d / r), an exponential kernel
        // with range r / sqrt(0.5).
        let matern = CovarianceSpec {
            kind: KernelKind::Matern(MaternNu::Half),
            variance: 1.4,
            range_m: 9.0,
            noise2: 0.0,
        };
        let expo = CovarianceSpec {
            kind: KernelKind::Exponential,
            variance: 1.4,
            range_m: 9.0 / 0.5f64.sqrt(),
            noise2: 0.0,
        };
        for i in 0..200 {
            let d = i as f64 * 0.37;
            assert!((matern.kernel(d) - expo.kernel(d)).abs() < 1e-10);
        }
    }

    #[test]
    fn matrix_is_symmetric_for_same_locations() {
        let locs: Vec<Location> = (0..7)
            .map(|i| loc((i * i % 5) as f64, (i * 3 % 7) as f64))
            .collect();
        let spec = CovarianceSpec {
            kind: KernelKind::Matern(MaternNu::ThreeHalves),
            variance: 1.0,
            range_m: 2.0,
            noise2: 0.0,
        };
        let m = covariance_matrix(&locs, &locs, &spec);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }
}
