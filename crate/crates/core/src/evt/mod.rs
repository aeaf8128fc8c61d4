//! Tail machinery: mirror transform, threshold selection, GPD fitting, and
//! the tail outage law with its rate inversion.
//!
//! Linear SNR samples are mapped through `psi = -ln(gamma)` so the lower
//! SNR tail becomes an upper tail, a high threshold is chosen as an
//! empirical quantile (the fixed-threshold rule of DuMouchel), and the
//! excesses above it are modeled with a Generalized Pareto distribution.

mod bhattacharyya;
mod fit;

pub use bhattacharyya::bhattacharyya_gpd;
pub use fit::{fit_gpd_mle, gpd_loglik, GpdFit};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shape parameters below this magnitude take the exponential-limit branch.
pub const XI_ZERO_EPS: f64 = 1e-8;

/// Fitted tail at one location: threshold, GPD shape/scale, and the tail
/// fraction the threshold was taken at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Threshold in the transformed domain.
    pub mu: f64,
    /// GPD shape.
    pub xi: f64,
    /// GPD scale, > 0.
    pub sigma: f64,
    /// Quantile level the threshold was taken at; exceedance mass is `1 - rho`.
    pub rho: f64,
    /// Number of excesses used in the fit.
    pub n_exceed: usize,
}

#[derive(Debug, Error)]
pub enum EvtError {
    #[error("SNR sample must be positive for the -ln transform, got {value}")]
    NonPositiveSnr { value: f64 },
    #[error("tail fraction rho must lie in (0,1), got {rho}")]
    BadRho { rho: f64 },
    #[error("need at least {needed} samples for rho = {rho}, have {have}")]
    TooFewSamples { needed: usize, have: usize, rho: f64 },
    #[error("no samples exceed the threshold {threshold}")]
    NoExceedances { threshold: f64 },
    #[error("need at least 2 distinct excesses to fit a GPD, have {have}")]
    DegenerateExcesses { have: usize },
    #[error("GPD likelihood maximization did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("target {phi} lies below the tail threshold {mu}; outage is not tail-resolvable")]
    TargetBelowThreshold { phi: f64, mu: f64 },
    #[error(
        "target outage {zeta} exceeds the tail fraction {tail_fraction}; \
         the constraint is met at the threshold itself (raise rho or N to resolve it)"
    )]
    ZetaAboveTailFraction { zeta: f64, tail_fraction: f64 },
    #[error("non-finite integrand while comparing tail densities")]
    NonFiniteIntegrand,
}

/// Mirror transform `psi = -ln(gamma)`: strictly decreasing, so the lower
/// SNR tail maps to the upper psi tail.
pub fn mirror_transform(gamma: f64) -> Result<f64, EvtError> {
    if !(gamma > 0.0) {
        return Err(EvtError::NonPositiveSnr { value: gamma });
    }
    Ok(-gamma.ln())
}

/// Applies the mirror transform to a whole sample set.
pub fn mirror_transform_all(gammas: &[f64]) -> Result<Vec<f64>, EvtError> {
    gammas.iter().map(|&g| mirror_transform(g)).collect()
}

/// Inverse of the mirror transform: `gamma = exp(-psi)`.
pub fn inverse_mirror(psi: f64) -> f64 {
    (-psi).exp()
}

/// Number of samples required so at least one exceedance exists under `rho`.
fn min_samples(rho: f64) -> usize {
    (1.0 / (1.0 - rho)).ceil() as usize
}

/// Empirical quantile index: 1-based `ceil(rho * n)`, with a guard so exact
/// products like `0.99 * 100` do not get bumped up by float rounding.
fn quantile_index(rho: f64, n: usize) -> usize {
    let t = rho * n as f64;
    if (t - t.round()).abs() < 1e-9 {
        t.round() as usize
    } else {
        t.ceil() as usize
    }
}

/// Fixed-threshold rule: the empirical `rho`-quantile of the transformed
/// samples (ascending sort, 1-based index `ceil(rho * N)`, no interpolation).
/// Exactly the samples strictly above the returned value are exceedances.
pub fn dumouchel_threshold(psi_samples: &[f64], rho: f64) -> Result<f64, EvtError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(EvtError::BadRho { rho });
    }
    let needed = min_samples(rho);
    if psi_samples.len() < needed {
        return Err(EvtError::TooFewSamples {
            needed,
            have: psi_samples.len(),
            rho,
        });
    }
    let mut sorted = psi_samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite psi sample"));
    let k = quantile_index(rho, sorted.len()).clamp(1, sorted.len());
    let mu = sorted[k - 1];
    if sorted[sorted.len() - 1] <= mu {
        return Err(EvtError::NoExceedances { threshold: mu });
    }
    Ok(mu)
}

/// Excess data `{psi - mu : psi > mu}`, order-preserving.
pub fn excesses(psi_samples: &[f64], mu: f64) -> Result<Vec<f64>, EvtError> {
    let z: Vec<f64> = psi_samples
        .iter()
        .filter(|&&p| p > mu)
        .map(|&p| p - mu)
        .collect();
    if z.is_empty() {
        return Err(EvtError::NoExceedances { threshold: mu });
    }
    Ok(z)
}

/// GPD CDF `1 - (1 + xi z / sigma)^(-1/xi)` with the exponential limit at
/// `xi -> 0`. For `xi < 0` and `z` at or beyond the finite endpoint the CDF
/// is exactly 1.
pub fn gpd_cdf(z: f64, xi: f64, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    if z <= 0.0 {
        return 0.0;
    }
    if xi.abs() < XI_ZERO_EPS {
        return 1.0 - (-z / sigma).exp();
    }
    let t = 1.0 + xi * z / sigma;
    if t <= 0.0 {
        // Reachable only for xi < 0 past the upper endpoint.
        return 1.0;
    }
    1.0 - t.powf(-1.0 / xi)
}

/// Tail outage `(1 - rho) * (1 + xi (phi - mu) / sigma)^(-1/xi)` for a
/// target `phi` inside the modeled tail.
pub fn tail_outage(phi: f64, fit: &TailFit) -> Result<f64, EvtError> {
    if phi < fit.mu {
        return Err(EvtError::TargetBelowThreshold { phi, mu: fit.mu });
    }
    let survival = 1.0 - gpd_cdf(phi - fit.mu, fit.xi, fit.sigma);
    Ok((1.0 - fit.rho) * survival)
}

/// Solves `tail_outage(phi) = zeta` for `phi`:
/// `phi = mu + (sigma / xi) * ((zeta / (1 - rho))^(-xi) - 1)`.
pub fn invert_tail_outage(zeta: f64, fit: &TailFit) -> Result<f64, EvtError> {
    let tail_fraction = 1.0 - fit.rho;
    if !(zeta > 0.0) || zeta > tail_fraction {
        return Err(EvtError::ZetaAboveTailFraction {
            zeta,
            tail_fraction,
        });
    }
    let ratio = zeta / tail_fraction;
    if fit.xi.abs() < XI_ZERO_EPS {
        Ok(fit.mu + fit.sigma * (-ratio.ln()))
    } else {
        Ok(fit.mu + fit.sigma / fit.xi * (ratio.powf(-fit.xi) - 1.0))
    }
}

/// Rate supported by a transformed-domain SNR target:
/// `log2(1 + exp(-phi))` bps/Hz, strictly decreasing in `phi`.
pub fn rate_from_phi(phi: f64) -> f64 {
    log2_1p_exp(-phi)
}

/// Numerically stable `log2(1 + exp(x))`.
pub fn log2_1p_exp(x: f64) -> f64 {
    if x > 700.0 {
        x / std::f64::consts::LN_2
    } else {
        x.exp().ln_1p() / std::f64::consts::LN_2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_transform_known_points() {
        assert_eq!(mirror_transform(1.0).unwrap(), 0.0);
        assert!((mirror_transform(std::f64::consts::E).unwrap() + 1.0).abs() < 1e-15);
        assert!(mirror_transform(0.0).is_err());
        assert!(mirror_transform(-2.0).is_err());
    }

    #[test]
    fn mirror_round_trip() {
        for &g in &[1e-9, 0.5, 1.0, 3.7, 1e8] {
            let psi = mirror_transform(g).unwrap();
            assert!((inverse_mirror(psi) - g).abs() <= 1e-12 * g);
        }
    }

    #[test]
    fn threshold_order_statistic_convention() {
        let samples: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(dumouchel_threshold(&samples, 0.99).unwrap(), 99.0);
        let mu = dumouchel_threshold(&samples, 0.9).unwrap();
        assert_eq!(mu, 90.0);
        assert_eq!(excesses(&samples, mu).unwrap().len(), 10);
    }

    #[test]
    fn threshold_rejects_degenerate_inputs() {
        let constant = vec![5.0; 200];
        assert!(matches!(
            dumouchel_threshold(&constant, 0.99),
            Err(EvtError::NoExceedances { .. })
        ));
        let short = vec![1.0, 2.0, 3.0];
        assert!(matches!(
            dumouchel_threshold(&short, 0.99),
            Err(EvtError::TooFewSamples { .. })
        ));
        assert!(dumouchel_threshold(&constant, 1.2).is_err());
    }

    #[test]
    fn exceedance_count_matches_quantile_convention() {
        // With distinct values, exceedances = N - ceil(rho N).
        let n = 1000;
        let samples: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        for &rho in &[0.9, 0.95, 0.99, 0.993] {
            let mu = dumouchel_threshold(&samples, rho).unwrap();
            let k = super::quantile_index(rho, n);
            assert_eq!(excesses(&samples, mu).unwrap().len(), n - k, "rho={rho}");
        }
    }

    #[test]
    fn excesses_examples() {
        assert_eq!(excesses(&[1.0, 2.0, 3.0], 2.0).unwrap(), vec![1.0]);
        assert_eq!(
            excesses(&[1.0, 2.0, 3.0], 0.5).unwrap(),
            vec![0.5, 1.5, 2.5]
        );
        assert!(matches!(
            excesses(&[1.0, 2.0], 5.0),
            Err(EvtError::NoExceedances { .. })
        ));
    }

    #[test]
    fn gpd_cdf_known_values() {
        assert_eq!(gpd_cdf(0.0, 0.3, 1.0), 0.0);
        assert!((gpd_cdf(1.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        let limit = 1.0 - (-1.0f64).exp();
        assert!((gpd_cdf(2.0, 1e-12, 2.0) - limit).abs() < 1e-6);
        // Beyond the finite endpoint for xi < 0.
        assert_eq!(gpd_cdf(5.0, -0.5, 1.0), 1.0);
    }

    #[test]
    fn gpd_cdf_continuous_at_xi_zero() {
        for i in 0..50 {
            let z = 0.1 + i as f64 * 0.2;
            let lo = gpd_cdf(z, -1e-9, 1.3);
            let mid = gpd_cdf(z, 0.0, 1.3);
            let hi = gpd_cdf(z, 1e-9, 1.3);
            assert!((lo - mid).abs() < 1e-6);
            assert!((hi - mid).abs() < 1e-6);
        }
    }

    #[test]
    fn outage_at_threshold_is_tail_fraction() {
        let fit = TailFit {
            mu: 2.0,
            xi: 0.1,
            sigma: 0.5,
            rho: 0.99,
            n_exceed: 100,
        };
        let o = tail_outage(2.0, &fit).unwrap();
        assert_eq!(o, 1.0 - 0.99);
    }

    #[test]
    fn outage_chain_example() {
        let fit = TailFit {
            mu: 2.0,
            xi: 0.1,
            sigma: 0.5,
            rho: 0.99,
            n_exceed: 100,
        };
        // phi computed in closed form for zeta = 1e-3 (mpmath, 22 digits).
        let phi = 3.29462705897083605212;
        let o = tail_outage(phi, &fit).unwrap();
        assert!((o - 1e-3).abs() < 1e-12, "outage = {o}");
        let back = invert_tail_outage(1e-3, &fit).unwrap();
        assert!((back - phi).abs() < 1e-10);
        assert!(matches!(
            tail_outage(1.5, &fit),
            Err(EvtError::TargetBelowThreshold { .. })
        ));
    }

    #[test]
    fn outage_monotone_decreasing_in_phi() {
        let fit = TailFit {
            mu: 0.0,
            xi: -0.2,
            sigma: 1.5,
            rho: 0.95,
            n_exceed: 50,
        };
        let mut prev = tail_outage(0.0, &fit).unwrap();
        for i in 1..40 {
            let o = tail_outage(i as f64 * 0.1, &fit).unwrap();
            assert!(o <= prev);
            prev = o;
        }
    }

    #[test]
    fn inversion_boundary_and_rejection() {
        let fit = TailFit {
            mu: 4.2,
            xi: 0.3,
            sigma: 1.1,
            rho: 0.99,
            n_exceed: 100,
        };
        let phi = invert_tail_outage(0.01, &fit).unwrap();
        assert!((phi - fit.mu).abs() < 1e-12);
        assert!(matches!(
            invert_tail_outage(0.02, &fit),
            Err(EvtError::ZetaAboveTailFraction { .. })
        ));
    }

    #[test]
    fn rate_known_points() {
        assert!((rate_from_phi(0.0) - 1.0).abs() < 1e-15);
        assert!(rate_from_phi(50.0) > 0.0);
        assert!(rate_from_phi(50.0) < 1e-20);
        // mpmath: log2(1 + exp(-3.29462705897083605212))
        assert!((rate_from_phi(3.29462705897083605212) - 0.05252979136093366).abs() < 1e-12);
        // Stable for very favorable targets.
        let r = rate_from_phi(-800.0);
        assert!((r - 800.0 / std::f64::consts::LN_2).abs() < 1e-9);
    }
}
