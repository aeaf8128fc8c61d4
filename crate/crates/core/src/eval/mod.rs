//! Scoring of rate maps against ground-truth test data: empirical outage,
//! availability, ECDFs, and Bhattacharyya validation of predicted tails.

use crate::alloc::RateMap;
use crate::evt::{
    bhattacharyya_gpd, dumouchel_threshold, excesses, fit_gpd_mle, mirror_transform_all,
};
use crate::synth::Dataset;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty test sample set")]
    EmptyTestSet,
    #[error("empty result set")]
    EmptyResults,
    #[error("dataset hash mismatch: `{left}` vs `{right}`; reports come from different datasets")]
    HashMismatch { left: String, right: String },
}

/// Outage scored at one grid point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OutageRow {
    pub loc_id: usize,
    /// Linear SNR target implied by the allocated rate.
    pub gamma_tar: f64,
    pub empirical_outage: f64,
    pub met: bool,
}

/// Linear SNR required to support `rate` bps/Hz: `2^rate - 1`.
pub fn gamma_target(rate: f64) -> f64 {
    debug_assert!(rate >= 0.0);
    rate.exp2() - 1.0
}

/// Fraction of test samples strictly below the SNR target implied by
/// `rate`. Returns `(gamma_tar, outage)`.
pub fn empirical_outage(test_samples: &[f64], rate: f64) -> Result<(f64, f64), EvalError> {
    if test_samples.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let gamma_tar = gamma_target(rate);
    let below = test_samples.iter().filter(|&&g| g < gamma_tar).count();
    Ok((gamma_tar, below as f64 / test_samples.len() as f64))
}

/// Percentage of locations whose empirical outage meets the target.
pub fn availability(outages: &[f64], zeta: f64) -> f64 {
    if outages.is_empty() {
        return 0.0;
    }
    let met = outages.iter().filter(|&&o| o <= zeta).count();
    100.0 * met as f64 / outages.len() as f64
}

/// Empirical CDF as sorted `(value, cumulative fraction)` pairs; duplicate
/// values collapse onto the last tied index so the function is
/// right-continuous and ends at 1.
pub fn ecdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in ecdf"));
    let n = sorted.len();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n as f64;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    out
}

/// Bhattacharyya distance between a predicted tail `(xi, sigma)` and the
/// tail fitted from ground-truth samples at the same tail fraction, both
/// anchored at a common zero threshold.
pub fn tail_divergence(
    xi_pred: f64,
    sigma_pred: f64,
    test_samples: &[f64],
    rho: f64,
) -> Option<f64> {
    let psi = mirror_transform_all(test_samples).ok()?;
    let mu = dumouchel_threshold(&psi, rho).ok()?;
    let z = excesses(&psi, mu).ok()?;
    let fit = fit_gpd_mle(&z).ok()?;
    bhattacharyya_gpd(xi_pred, sigma_pred, fit.xi, fit.sigma).ok()
}

/// Per-location tail divergences over the whole grid; failed ground-truth
/// fits are excluded and counted.
pub fn divergence_map(
    dataset: &Dataset,
    xi_pred: &[f64],
    sigma_pred: &[f64],
    rho: f64,
    n_test: usize,
) -> (Vec<Option<f64>>, usize) {
    let rows: Vec<Option<f64>> = (0..dataset.grid.len())
        .into_par_iter()
        .map(|loc_id| {
            let mut sampler = dataset.test_sampler(loc_id);
            let samples: Vec<f64> = (0..n_test).map(|_| sampler.next_sample()).collect();
            tail_divergence(xi_pred[loc_id], sigma_pred[loc_id], &samples, rho)
        })
        .collect();
    let excluded = rows.iter().filter(|r| r.is_none()).count();
    (rows, excluded)
}

/// Default test-set size per grid point: enough to resolve outage at level
/// `zeta` with roughly 10% relative Monte Carlo error.
pub fn default_test_samples_per_point(zeta: f64) -> usize {
    let needed = (100.0 / zeta).ceil() as usize;
    needed.max(100_000)
}

/// Streams test samples per location and scores the allocated rates.
pub fn evaluate_rate_map(
    dataset: &Dataset,
    rates: &RateMap,
    zeta: f64,
    n_test: usize,
) -> Result<Vec<OutageRow>, EvalError> {
    if n_test == 0 {
        return Err(EvalError::EmptyTestSet);
    }
    let rows: Vec<OutageRow> = (0..dataset.grid.len())
        .into_par_iter()
        .map(|loc_id| {
            let gamma_tar = gamma_target(rates.rate_bpshz[loc_id]);
            let mut sampler = dataset.test_sampler(loc_id);
            let mut below = 0usize;
            for _ in 0..n_test {
                if sampler.next_sample() < gamma_tar {
                    below += 1;
                }
            }
            let outage = below as f64 / n_test as f64;
            OutageRow {
                loc_id,
                gamma_tar,
                empirical_outage: outage,
                met: outage <= zeta,
            }
        })
        .collect();
    Ok(rows)
}

/// Echo of the evaluated request, stored in every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RequestEcho {
    pub zeta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub n_test_per_point: usize,
}

/// Full evaluation of one method on one dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub availability_pct: f64,
    pub mean_rate_bpshz: f64,
    /// Allocated rate per grid point, in `loc_id` order.
    pub rates: Vec<f64>,
    pub rate_ecdf: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bhattacharyya_ecdf: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dbh_excluded: Option<usize>,
    pub dataset_hash: String,
    pub request: RequestEcho,
}

/// Assembles an [`EvalReport`] from scored rows.
pub fn build_eval_report(
    method: &str,
    rates: &RateMap,
    outage_rows: &[OutageRow],
    dbh: Option<(&[Option<f64>], usize)>,
    dataset_hash: &str,
    request: RequestEcho,
) -> Result<EvalReport, EvalError> {
    if outage_rows.is_empty() {
        return Err(EvalError::EmptyResults);
    }
    let outages: Vec<f64> = outage_rows.iter().map(|r| r.empirical_outage).collect();
    let availability_pct = availability(&outages, request.zeta);
    let mean_rate = rates.rate_bpshz.iter().sum::<f64>() / rates.rate_bpshz.len() as f64;
    let (bhattacharyya_ecdf, dbh_excluded) = match dbh {
        Some((rows, excluded)) => {
            let present: Vec<f64> = rows.iter().filter_map(|r| *r).collect();
            (Some(ecdf(&present)), Some(excluded))
        }
        None => (None, None),
    };
    Ok(EvalReport {
        method: method.to_string(),
        availability_pct,
        mean_rate_bpshz: mean_rate,
        rates: rates.rate_bpshz.clone(),
        rate_ecdf: ecdf(&rates.rate_bpshz),
        bhattacharyya_ecdf,
        dbh_excluded,
        dataset_hash: dataset_hash.to_string(),
        request,
    })
}

/// Head-to-head summary of two reports computed from the same dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub mean_rate_gain_pct: f64,
    pub availability_diff_pct: f64,
    /// Fraction of grid points where the first report's rate is strictly
    /// higher.
    pub pointwise_win_fraction: f64,
    pub dataset_hash: String,
}

/// Compares two evaluation reports; refuses mismatched dataset hashes.
pub fn compare_report(evt: &EvalReport, bench: &EvalReport) -> Result<ComparisonSummary, EvalError> {
    if evt.dataset_hash != bench.dataset_hash {
        return Err(EvalError::HashMismatch {
            left: evt.dataset_hash.clone(),
            right: bench.dataset_hash.clone(),
        });
    }
    if evt.rates.is_empty() || evt.rates.len() != bench.rates.len() {
        return Err(EvalError::EmptyResults);
    }
    let wins = evt
        .rates
        .iter()
        .zip(&bench.rates)
        .filter(|(a, b)| a > b)
        .count();
    Ok(ComparisonSummary {
        mean_rate_gain_pct: 100.0 * (evt.mean_rate_bpshz / bench.mean_rate_bpshz - 1.0),
        availability_diff_pct: evt.availability_pct - bench.availability_pct,
        pointwise_win_fraction: wins as f64 / evt.rates.len() as f64,
        dataset_hash: evt.dataset_hash.clone(),
    })
}
