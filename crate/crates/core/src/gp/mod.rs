//! Gaussian-process kriging of per-location parameter observations.
//!
//! Observations are normalized to zero mean and unit standard deviation,
//! kernel hyperparameters are fitted by marginal likelihood, and the
//! predictive mean and variance at target locations come from the standard
//! conditional-Gaussian identities, solved through a symmetric Cholesky
//! factorization (never an explicit inverse).

mod hyper;
mod kernel;

pub use hyper::{fit_hyperparams, log_marginal_likelihood, HyperFit, KernelFamily};
pub use kernel::{covariance_matrix, CovarianceSpec, KernelKind, MaternNu};

use crate::geo::Location;
use crate::special;
use nalgebra::{Cholesky, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Jitter ladder for Gram factorization: start at `1e-10 * variance`,
/// escalate tenfold up to `1e-4 * variance`.
const JITTER_START_FRAC: f64 = 1e-10;
const JITTER_MAX_FRAC: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("need at least {needed} values, have {have}")]
    TooFewValues { needed: usize, have: usize },
    #[error("cannot normalize a zero-variance (constant) observation vector")]
    ZeroVariance,
    #[error("observation/location length mismatch: {values} values vs {locations} locations")]
    LengthMismatch { values: usize, locations: usize },
    #[error("Gram matrix factorization failed even at maximum jitter ({max_jitter:e})")]
    FactorizationFailed { max_jitter: f64 },
    #[error("all hyperparameter candidates were numerically singular")]
    SingularFit,
    #[error("quantile level tau must lie in (0, 0.5], got {tau}")]
    BadTau { tau: f64 },
}

/// Sample mean and (Bessel-corrected) standard deviation used to normalize
/// an observation vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: f64,
    pub std: f64,
}

impl NormalizationStats {
    /// Identity transform.
    pub fn identity() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }

    pub fn normalize_value(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn denorm_mean(&self, m: f64) -> f64 {
        m * self.std + self.mean
    }

    pub fn denorm_var(&self, v: f64) -> f64 {
        v * self.std * self.std
    }
}

/// Normalizes to sample mean 0 and sample standard deviation 1.
pub fn normalize(values: &[f64]) -> Result<(Vec<f64>, NormalizationStats), GpError> {
    if values.len() < 2 {
        return Err(GpError::TooFewValues {
            needed: 2,
            have: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    if !(std > 0.0) || !std.is_finite() {
        return Err(GpError::ZeroVariance);
    }
    let stats = NormalizationStats { mean, std };
    Ok((
        values.iter().map(|&x| stats.normalize_value(x)).collect(),
        stats,
    ))
}

/// Predictive mean and per-target variance of one parameter map.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    pub targets: Vec<Location>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub stats: NormalizationStats,
    pub spec: CovarianceSpec,
}

/// Factors `C_LL + noise2 I` with escalating diagonal jitter.
fn factor_gram(
    obs_locs: &[Location],
    spec: &CovarianceSpec,
) -> Result<Cholesky<f64, nalgebra::Dyn>, GpError> {
    let m = obs_locs.len();
    let base = covariance_matrix(obs_locs, obs_locs, spec);
    let scale = spec.variance.max(f64::MIN_POSITIVE);
    let mut jitter = JITTER_START_FRAC * scale;
    loop {
        let mut gram = base.clone();
        for i in 0..m {
            gram[(i, i)] += spec.noise2 + jitter;
        }
        if let Some(chol) = Cholesky::new(gram) {
            return Ok(chol);
        }
        jitter *= 10.0;
        if jitter > JITTER_MAX_FRAC * scale {
            return Err(GpError::FactorizationFailed {
                max_jitter: JITTER_MAX_FRAC * scale,
            });
        }
    }
}

/// Kriging prediction at `targets` from normalized observations:
/// mean `C_*L (C_LL + noise2 I)^-1 d`, variance
/// `diag(C_** - C_*L (C_LL + noise2 I)^-1 C_L*)`, clamped at zero.
pub fn predict(
    normalized_obs: &[f64],
    obs_locs: &[Location],
    targets: &[Location],
    spec: &CovarianceSpec,
    stats: NormalizationStats,
) -> Result<GpPosterior, GpError> {
    if normalized_obs.len() != obs_locs.len() {
        return Err(GpError::LengthMismatch {
            values: normalized_obs.len(),
            locations: obs_locs.len(),
        });
    }
    if obs_locs.is_empty() {
        return Err(GpError::TooFewValues { needed: 1, have: 0 });
    }
    let chol = factor_gram(obs_locs, spec)?;
    let alpha = chol.solve(&DVector::from_column_slice(normalized_obs));
    let lower = chol.l();

    let mut mean = Vec::with_capacity(targets.len());
    let mut var = Vec::with_capacity(targets.len());
    // Targets are processed in blocks so the triangular solve works on a
    // matrix rather than one vector at a time.
    const BLOCK: usize = 1024;
    for chunk in targets.chunks(BLOCK) {
        let cross = covariance_matrix(obs_locs, chunk, spec); // m x b
        let sol = lower
            .solve_lower_triangular(&cross)
            .ok_or(GpError::FactorizationFailed {
                max_jitter: JITTER_MAX_FRAC * spec.variance,
            })?;
        for (j, _t) in chunk.iter().enumerate() {
            let c = cross.column(j);
            mean.push(c.dot(&alpha));
            let reduction = sol.column(j).norm_squared();
            var.push((spec.variance - reduction).max(0.0));
        }
    }

    Ok(GpPosterior {
        targets: targets.to_vec(),
        mean,
        var,
        stats,
        spec: *spec,
    })
}

/// Maps a normalized posterior back to physical units:
/// `mean <- mean * std + mean_stat`, `var <- var * std^2`.
pub fn denormalize(posterior: &GpPosterior, stats: &NormalizationStats) -> GpPosterior {
    GpPosterior {
        targets: posterior.targets.clone(),
        mean: posterior.mean.iter().map(|&m| stats.denorm_mean(m)).collect(),
        var: posterior.var.iter().map(|&v| stats.denorm_var(v)).collect(),
        stats: *stats,
        spec: posterior.spec,
    }
}

/// Value of `N(mean, var)` exceeded with probability `tau`, for
/// `tau` in `(0, 0.5]`. The margin is conservative in the transformed
/// domain: a larger threshold lowers the allocated rate.
pub fn gaussian_upper_quantile(tau: f64, mean: f64, var: f64) -> Result<f64, GpError> {
    if !(tau > 0.0 && tau <= 0.5) {
        return Err(GpError::BadTau { tau });
    }
    Ok(special::gaussian_upper_quantile_raw(tau, mean, var.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loc(x: f64, y: f64) -> Location {
        Location::new(x, y)
    }

    #[test]
    fn normalize_symmetric_triple() {
        let (v, stats) = normalize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v, vec![-1.0, 0.0, 1.0]);
        assert_eq!(stats.mean, 2.0);
        assert_eq!(stats.std, 1.0);
    }

    #[test]
    fn normalize_round_trip() {
        let data = [4.2, -1.0, 3.3, 8.8, 0.1];
        let (v, stats) = normalize(&data).unwrap();
        for (orig, n) in data.iter().zip(&v) {
            assert!((stats.denorm_mean(*n) - orig).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_constant() {
        assert!(matches!(
            normalize(&[5.0, 5.0, 5.0]),
            Err(GpError::ZeroVariance)
        ));
        assert!(matches!(
            normalize(&[5.0]),
            Err(GpError::TooFewValues { .. })
        ));
    }

    #[test]
    fn denormalize_affine_rule() {
        let p = GpPosterior {
            targets: vec![loc(0.0, 0.0)],
            mean: vec![1.0],
            var: vec![1.0],
            stats: NormalizationStats::identity(),
            spec: CovarianceSpec {
                kind: KernelKind::Exponential,
                variance: 1.0,
                range_m: 1.0,
                noise2: 0.0,
            },
        };
        let stats = NormalizationStats { mean: 5.0, std: 2.0 };
        let d = denormalize(&p, &stats);
        assert_eq!(d.mean[0], 7.0);
        assert_eq!(d.var[0], 4.0);
        let id = denormalize(&p, &NormalizationStats::identity());
        assert_eq!(id.mean[0], 1.0);
        assert_eq!(id.var[0], 1.0);
    }

    fn spec_matern(variance: f64, range_m: f64, noise2: f64) -> CovarianceSpec {
        CovarianceSpec {
            kind: KernelKind::Matern(MaternNu::ThreeHalves),
            variance,
            range_m,
            noise2,
        }
    }

    #[test]
    fn noiseless_interpolation_reproduces_observations() {
        let locs = vec![
            loc(0.0, 0.0),
            loc(4.0, 1.0),
            loc(2.0, 7.0),
            loc(9.0, 3.0),
            loc(5.0, 5.0),
        ];
        let obs = vec![0.3, -1.1, 0.7, 1.9, -0.2];
        let spec = spec_matern(1.3, 6.0, 0.0);
        let p = predict(&obs, &locs, &locs, &spec, NormalizationStats::identity()).unwrap();
        for i in 0..locs.len() {
            assert!((p.mean[i] - obs[i]).abs() < 1e-6, "mean[{i}] = {}", p.mean[i]);
            assert!(p.var[i] <= 1e-6 * spec.variance, "var[{i}] = {}", p.var[i]);
        }
    }

    #[test]
    fn far_target_reverts_to_prior() {
        let locs = vec![loc(0.0, 0.0), loc(1.0, 1.0), loc(2.0, 0.5)];
        let obs = vec![1.0, -0.5, 0.8];
        let spec = spec_matern(2.0, 3.0, 0.1);
        let p = predict(
            &obs,
            &locs,
            &[loc(500.0, 500.0)],
            &spec,
            NormalizationStats::identity(),
        )
        .unwrap();
        assert!(p.mean[0].abs() < 0.01 * spec.variance);
        assert!((p.var[0] - spec.variance).abs() < 0.01 * spec.variance);
    }

    #[test]
    fn matches_dense_inverse_oracle() {
        // Independent route: explicit matrix inverse of the joint identities.
        let locs = vec![
            loc(0.0, 0.0),
            loc(3.0, 2.0),
            loc(6.0, 1.0),
            loc(1.5, 4.5),
            loc(8.0, 8.0),
        ];
        let obs = vec![0.4, -0.9, 1.3, 0.2, -0.6];
        let targets = vec![loc(2.0, 2.0), loc(7.0, 4.0), loc(0.5, 0.5), loc(10.0, 2.0)];
        let spec = spec_matern(1.7, 5.0, 0.2);

        let p = predict(&obs, &locs, &targets, &spec, NormalizationStats::identity()).unwrap();

        let m = locs.len();
        let mut gram = covariance_matrix(&locs, &locs, &spec);
        for i in 0..m {
            gram[(i, i)] += spec.noise2 + 1e-10 * spec.variance;
        }
        let inv = gram.try_inverse().expect("oracle inverse");
        let cross = covariance_matrix(&targets, &locs, &spec);
        let y = DVector::from_column_slice(&obs);
        let mean_oracle = &cross * &inv * &y;
        let cov_oracle = covariance_matrix(&targets, &targets, &spec)
            - &cross * &inv * &cross.transpose();
        for i in 0..targets.len() {
            assert!(
                (p.mean[i] - mean_oracle[i]).abs() < 1e-10,
                "mean[{i}]: {} vs {}",
                p.mean[i],
                mean_oracle[i]
            );
            assert!(
                (p.var[i] - cov_oracle[(i, i)]).abs() < 1e-10,
                "var[{i}]: {} vs {}",
                p.var[i],
                cov_oracle[(i, i)]
            );
        }
    }

    #[test]
    fn variance_bounded_by_prior_and_monotone_in_observations() {
        let all_locs: Vec<Location> = (0..12)
            .map(|i| loc((i * 7 % 10) as f64, (i * 3 % 11) as f64))
            .collect();
        let obs: Vec<f64> = (0..12).map(|i| ((i * i) % 5) as f64 - 2.0).collect();
        let spec = spec_matern(1.9, 4.0, 0.05);
        let target = [loc(4.2, 4.8)];

        let mut prev_var = f64::INFINITY;
        for k in 2..=12 {
            let p = predict(
                &obs[..k],
                &all_locs[..k],
                &target,
                &spec,
                NormalizationStats::identity(),
            )
            .unwrap();
            assert!(p.var[0] <= spec.variance + 1e-8);
            assert!(
                p.var[0] <= prev_var + 1e-8,
                "variance increased when adding observation {k}"
            );
            prev_var = p.var[0];
        }
    }

    #[test]
    fn kernel_matrices_positive_semidefinite() {
        let locs: Vec<Location> = (0..20)
            .map(|i| loc((i * 13 % 17) as f64 * 0.7, (i * 5 % 19) as f64 * 0.9))
            .collect();
        for kind in [
            KernelKind::Exponential,
            KernelKind::Matern(MaternNu::Half),
            KernelKind::Matern(MaternNu::ThreeHalves),
            KernelKind::Matern(MaternNu::FiveHalves),
        ] {
            let spec = CovarianceSpec {
                kind,
                variance: 2.2,
                range_m: 5.0,
                noise2: 0.0,
            };
            let m = covariance_matrix(&locs, &locs, &spec);
            let eigs = m.symmetric_eigenvalues();
            let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(
                min_eig >= -1e-8 * spec.variance,
                "{kind:?}: min eigenvalue {min_eig}"
            );
        }
    }

    #[test]
    fn upper_quantile_examples() {
        assert_eq!(gaussian_upper_quantile(0.5, 3.3, 4.0).unwrap(), 3.3);
        assert_eq!(gaussian_upper_quantile(1e-3, 7.0, 0.0).unwrap(), 7.0);
        let v = gaussian_upper_quantile(1e-3, 0.0, 1.0).unwrap();
        assert!((v - 3.09023230616781354154).abs() < 1e-9);
        assert!(gaussian_upper_quantile(0.7, 0.0, 1.0).is_err());
    }
}
