//! Quantile-kriging baseline: per-site empirical ln-SNR quantiles at the
//! target outage level, kriged with the exponential kernel, and a
//! meta-probability margin on the predictive standard deviation.

use super::{AllocError, Method, RateMap};
use crate::evt::log2_1p_exp;
use crate::geo::Location;
use crate::gp::KernelFamily;
use crate::special::erf_inv;
use crate::synth::MeasurementSet;
use std::f64::consts::SQRT_2;

/// Empirical `zeta`-quantile of the ln-SNR samples, taken as the
/// `floor(N * zeta)`-th order statistic (1-based). Requires `N >= 1/zeta`.
pub fn benchmark_quantile(set: &MeasurementSet, zeta: f64) -> Result<f64, AllocError> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(AllocError::InvalidZeta { zeta });
    }
    let n = set.samples.len();
    let k = (n as f64 * zeta).floor() as usize;
    if k < 1 {
        return Err(AllocError::BenchmarkInfeasible { n, zeta });
    }
    let mut ln_samples: Vec<f64> = set.samples.iter().map(|&g| g.ln()).collect();
    ln_samples.sort_by(|a, b| a.partial_cmp(b).expect("non-finite ln-SNR"));
    Ok(ln_samples[k - 1])
}

/// Kriged quantile map: predictive mean `theta` and standard deviation
/// `alpha` of the ln-SNR `zeta`-quantile at every grid point.
#[derive(Debug, Clone)]
pub struct BenchmarkPosterior {
    pub grid: Vec<Location>,
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub delta: f64,
}

/// Builds the benchmark posterior: per-site quantiles, then the same
/// normalize / fit / predict / denormalize path used for the threshold map.
pub fn build_benchmark_posterior(
    observed: &[MeasurementSet],
    grid: &[Location],
    zeta: f64,
    delta: f64,
) -> Result<BenchmarkPosterior, AllocError> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(AllocError::InvalidDelta { delta });
    }
    if observed.is_empty() {
        return Err(AllocError::NoObservations);
    }
    let sites = super::canonical_sites(observed);
    let mut quantiles = Vec::with_capacity(sites.len());
    let mut obs_locs = Vec::with_capacity(sites.len());
    for site in &sites {
        quantiles.push(benchmark_quantile(site, zeta)?);
        obs_locs.push(site.location);
    }

    let diag = grid
        .iter()
        .map(|l| l.x.hypot(l.y))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let (theta, var, _hyper) = super::krige_map(
        &quantiles,
        &obs_locs,
        grid,
        KernelFamily::Exponential,
        diag / 4.0,
    )?;

    Ok(BenchmarkPosterior {
        grid: grid.to_vec(),
        theta,
        alpha: var.into_iter().map(|v| v.max(0.0).sqrt()).collect(),
        delta,
    })
}

/// Benchmark rate selection:
/// `R = log2(1 + exp(theta + sqrt(2) * alpha * erf_inv(2 delta - 1)))`.
/// With `delta < 0.5` the margin term is negative, so prediction
/// uncertainty lowers the allocated rate.
pub fn allocate_rates_benchmark(
    observed: &[MeasurementSet],
    grid: &[Location],
    zeta: f64,
    delta: f64,
) -> Result<RateMap, AllocError> {
    let posterior = build_benchmark_posterior(observed, grid, zeta, delta)?;
    let margin_z = SQRT_2 * erf_inv(2.0 * delta - 1.0);
    let rate: Vec<f64> = posterior
        .theta
        .iter()
        .zip(&posterior.alpha)
        .map(|(&t, &a)| log2_1p_exp(t + a * margin_z))
        .collect();
    Ok(RateMap {
        grid: posterior.grid.clone(),
        exponent: posterior.theta,
        rate_bpshz: rate,
        method: Method::Benchmark,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GridSpec;
    use crate::synth::{generate_dataset, ScenarioConfig};

    fn set_with(samples: Vec<f64>) -> MeasurementSet {
        MeasurementSet {
            loc_id: 0,
            location: Location::new(0.0, 0.0),
            samples,
        }
    }

    #[test]
    fn quantile_order_statistic_examples() {
        // N = 1000, zeta = 1e-3: the minimum.
        let samples: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let q = benchmark_quantile(&set_with(samples), 1e-3).unwrap();
        assert_eq!(q, 1.0f64.ln());

        // N = 999: floor(0.999) = 0, infeasible.
        let samples: Vec<f64> = (1..=999).map(|i| i as f64).collect();
        assert!(matches!(
            benchmark_quantile(&set_with(samples), 1e-3),
            Err(AllocError::BenchmarkInfeasible { .. })
        ));

        // N = 2000: the 2nd smallest.
        let samples: Vec<f64> = (1..=2000).map(|i| i as f64).collect();
        let q = benchmark_quantile(&set_with(samples), 1e-3).unwrap();
        assert_eq!(q, 2.0f64.ln());
    }

    #[test]
    fn margin_terms_behave() {
        // alpha = 0: rate = log2(1 + exp(theta)).
        let r0 = log2_1p_exp(1.3);
        assert!((r0 - (1.0 + 1.3f64.exp()).log2()).abs() < 1e-12);

        // delta = 0.5 would zero the margin; erf_inv(0) = 0.
        assert_eq!(erf_inv(0.0), 0.0);

        // theta = 0, alpha = 1, delta = 1e-3 (mpmath reference).
        let margin = SQRT_2 * erf_inv(2.0 * 1e-3 - 1.0);
        let rate = log2_1p_exp(0.0 + margin);
        assert!((rate - 0.06418117430272580108).abs() < 1e-9, "rate = {rate}");
    }

    #[test]
    fn benchmark_pipeline_on_small_scene() {
        let cfg = ScenarioConfig {
            grid: GridSpec::new(60.0, 60.0, 8, 8),
            m_observed: 15,
            n_samples: 2_000,
            seed: 5,
            ..ScenarioConfig::desk()
        };
        let ds = generate_dataset(&cfg).unwrap();
        let rates = allocate_rates_benchmark(&ds.observed, &ds.grid, 1e-3, 1e-3).unwrap();
        assert_eq!(rates.rate_bpshz.len(), 64);
        assert!(rates.rate_bpshz.iter().all(|r| r.is_finite() && *r >= 0.0));

        // Infeasibility propagates: zeta = 1e-5 with N = 2000.
        assert!(matches!(
            allocate_rates_benchmark(&ds.observed, &ds.grid, 1e-5, 1e-3),
            Err(AllocError::BenchmarkInfeasible { .. })
        ));
    }

    #[test]
    fn posterior_rejects_bad_delta() {
        let cfg = ScenarioConfig {
            grid: GridSpec::new(20.0, 20.0, 4, 4),
            m_observed: 4,
            n_samples: 1_000,
            seed: 6,
            ..ScenarioConfig::desk()
        };
        let ds = generate_dataset(&cfg).unwrap();
        assert!(matches!(
            build_benchmark_posterior(&ds.observed, &ds.grid, 1e-3, 0.5),
            Err(AllocError::InvalidDelta { .. })
        ));
    }
}
