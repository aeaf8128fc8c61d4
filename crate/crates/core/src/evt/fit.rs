//! Maximum-likelihood GPD fitting.
//!
//! Direct 2-D maximization of the GPD log-likelihood over `(xi, ln sigma)`
//! by Nelder-Mead, started from probability-weighted-moments estimates.
//! Support violations (`1 + xi z / sigma <= 0`) enter the objective as an
//! infinite penalty.

use super::{EvtError, XI_ZERO_EPS};
use crate::numerics::nelder_mead;

const MAX_ITER: usize = 500;

/// Result of a GPD maximum-likelihood fit.
#[derive(Debug, Clone, Copy)]
pub struct GpdFit {
    pub xi: f64,
    pub sigma: f64,
    pub loglik: f64,
}

/// GPD log-likelihood of `excesses` at `(xi, sigma)`; `-inf` outside the
/// parameter support.
pub fn gpd_loglik(excesses: &[f64], xi: f64, sigma: f64) -> f64 {
    if !(sigma > 0.0) || !sigma.is_finite() || !xi.is_finite() {
        return f64::NEG_INFINITY;
    }
    let n = excesses.len() as f64;
    if xi.abs() < XI_ZERO_EPS {
        let sum: f64 = excesses.iter().sum();
        return -n * sigma.ln() - sum / sigma;
    }
    let mut sum_ln = 0.0;
    for &z in excesses {
        let t = 1.0 + xi * z / sigma;
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        sum_ln += t.ln();
    }
    -n * sigma.ln() - (1.0 + 1.0 / xi) * sum_ln
}

/// Probability-weighted-moments starting point (Hosking & Wallis form).
fn pwm_start(excesses: &[f64]) -> (f64, f64) {
    let n = excesses.len() as f64;
    let mut sorted = excesses.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite excess"));
    let b0: f64 = sorted.iter().sum::<f64>() / n;
    let b1: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &z)| i as f64 / (n - 1.0).max(1.0) * z)
        .sum::<f64>()
        / n;
    let denom = b0 - 2.0 * b1;
    let (mut xi, mut sigma) = if denom.abs() < 1e-12 * b0.max(1e-300) {
        (0.0, b0)
    } else {
        (2.0 - b0 / denom, 2.0 * b0 * b1 / denom)
    };
    xi = xi.clamp(-0.45, 2.0);
    if !(sigma > 0.0) {
        sigma = b0;
    }
    // Keep the start inside the likelihood support.
    let z_max = *sorted.last().unwrap();
    if xi < 0.0 && 1.0 + xi * z_max / sigma <= 0.0 {
        sigma = -xi * z_max * 1.05;
    }
    (xi, sigma)
}

/// Fits a GPD to positive excesses by maximum likelihood.
///
/// Needs at least two excesses that are not all equal. Returns the
/// attained log-likelihood alongside the estimates.
pub fn fit_gpd_mle(excesses: &[f64]) -> Result<GpdFit, EvtError> {
    if excesses.len() < 2 {
        return Err(EvtError::DegenerateExcesses {
            have: excesses.len(),
        });
    }
    let z_min = excesses.iter().cloned().fold(f64::INFINITY, f64::min);
    let z_max = excesses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(z_max > z_min) || !(z_min > 0.0) {
        return Err(EvtError::DegenerateExcesses {
            have: excesses.len(),
        });
    }

    let objective = |p: &[f64]| -> f64 {
        let xi = p[0];
        let sigma = p[1].exp();
        -gpd_loglik(excesses, xi, sigma)
    };

    let (xi0, sigma0) = pwm_start(excesses);
    let starts = [
        (xi0, sigma0),
        (xi0 + 0.05, sigma0 * 1.2),
        (0.1, excesses.iter().sum::<f64>() / excesses.len() as f64),
    ];
    let mut iterations = 0;
    for (xi_s, sigma_s) in starts {
        let r = nelder_mead(
            objective,
            &[xi_s, sigma_s.ln()],
            &[0.1, 0.2],
            MAX_ITER,
            1e-10,
        );
        iterations += r.iterations;
        if r.converged && r.value.is_finite() {
            return Ok(GpdFit {
                xi: r.x[0],
                sigma: r.x[1].exp(),
                loglik: -r.value,
            });
        }
    }
    Err(EvtError::NonConvergence { iterations })
}
