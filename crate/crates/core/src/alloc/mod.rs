//! Rate allocation: builds the three tail-parameter maps over the grid,
//! applies the tau-quantile margin to the threshold map, and solves the
//! outage-constrained rate maximization per grid point. The quantile-kriging
//! baseline lives in [`benchmark`].

mod benchmark;

pub use benchmark::{allocate_rates_benchmark, benchmark_quantile, build_benchmark_posterior, BenchmarkPosterior};

use crate::evt::{
    dumouchel_threshold, excesses, fit_gpd_mle, invert_tail_outage, mirror_transform_all,
    rate_from_phi, EvtError, TailFit,
};
use crate::geo::Location;
use crate::gp::{
    self, denormalize, fit_hyperparams, gaussian_upper_quantile, predict, CovarianceSpec,
    GpError, HyperFit, KernelFamily, KernelKind, MaternNu, NormalizationStats,
};
use crate::synth::MeasurementSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floor applied to kriged scale predictions; the outage law needs
/// sigma > 0 and kriging can dip nonpositive.
pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AllocError {
    #[error("target outage zeta must lie in (0,1), got {zeta}")]
    InvalidZeta { zeta: f64 },
    #[error("tail fraction rho must lie in (0,1), got {rho}")]
    InvalidRho { rho: f64 },
    #[error("margin level tau must lie in (0, 0.5], got {tau}")]
    InvalidTau { tau: f64 },
    #[error("meta-probability delta must lie in (0, 0.5), got {delta}")]
    InvalidDelta { delta: f64 },
    #[error(
        "target outage {zeta} exceeds the modeled tail fraction {tail_fraction}; \
         raise rho (deeper tail) or N so the tail resolves the target"
    )]
    ZetaExceedsTailFraction { zeta: f64, tail_fraction: f64 },
    #[error("quantile-benchmark needs N >= 1/zeta samples: floor(N * zeta) = 0 for N = {n}, zeta = {zeta}")]
    BenchmarkInfeasible { n: usize, zeta: f64 },
    #[error("no observed measurement sets supplied")]
    NoObservations,
    #[error("all {failures} per-site tail fits failed; nothing to krige")]
    AllSitesFailed { failures: usize },
    #[error("hyperparameter fit failed: {0}")]
    Gp(#[from] GpError),
    #[error(transparent)]
    Evt(#[from] EvtError),
}

/// Kernel family per parameter map. Defaults: exponential for the threshold
/// map, Matérn (smoothness selected by likelihood) for shape and scale.
#[derive(Debug, Clone, Copy)]
pub struct MapKernels {
    pub mu: KernelFamily,
    pub xi: KernelFamily,
    pub sigma: KernelFamily,
}

impl Default for MapKernels {
    fn default() -> Self {
        Self {
            mu: KernelFamily::Exponential,
            xi: KernelFamily::Matern,
            sigma: KernelFamily::Matern,
        }
    }
}

/// Allocation parameters: target outage, tail fraction, margin level, and
/// the kernel choice per map.
#[derive(Debug, Clone, Copy)]
pub struct AllocationRequest {
    pub zeta: f64,
    pub rho: f64,
    pub tau: f64,
    pub kernels: MapKernels,
}

impl AllocationRequest {
    pub fn new(zeta: f64, rho: f64, tau: f64) -> Self {
        Self {
            zeta,
            rho,
            tau,
            kernels: MapKernels::default(),
        }
    }

    pub fn validate(&self) -> Result<(), AllocError> {
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(AllocError::InvalidZeta { zeta: self.zeta });
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(AllocError::InvalidRho { rho: self.rho });
        }
        if !(self.tau > 0.0 && self.tau <= 0.5) {
            return Err(AllocError::InvalidTau { tau: self.tau });
        }
        Ok(())
    }
}

/// A per-site tail fit kept for the kriging stage.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SiteFit {
    pub loc_id: usize,
    #[serde(flatten)]
    pub fit: TailFit,
}

/// Predicted tail parameters over the whole grid, plus fit bookkeeping.
#[derive(Debug, Clone)]
pub struct RadioMap {
    pub grid: Vec<Location>,
    pub xi_hat: Vec<f64>,
    pub xi_var: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub sigma_var: Vec<f64>,
    pub mu_mean: Vec<f64>,
    pub mu_var: Vec<f64>,
    pub mu_tau: Vec<f64>,
    pub site_fits: Vec<SiteFit>,
    pub excluded_sites: usize,
    pub sigma_clamped: usize,
    pub hyper_mu: HyperFit,
    pub hyper_xi: HyperFit,
    pub hyper_sigma: HyperFit,
    pub rho: f64,
    pub tau: f64,
}

/// Which allocator produced a rate map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Evt,
    Benchmark,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Evt => "evt",
            Method::Benchmark => "benchmark",
        }
    }
}

/// Allocated rate per grid point. `exponent` is the transformed-domain SNR
/// target phi for the EVT method, or the predicted ln-SNR quantile theta for
/// the benchmark.
#[derive(Debug, Clone)]
pub struct RateMap {
    pub grid: Vec<Location>,
    pub exponent: Vec<f64>,
    pub rate_bpshz: Vec<f64>,
    pub method: Method,
}

/// Canonical ordering: sites sorted by coordinates, samples sorted
/// ascending. Makes every downstream result invariant to input permutation.
fn canonical_sites(observed: &[MeasurementSet]) -> Vec<MeasurementSet> {
    let mut sites: Vec<MeasurementSet> = observed.to_vec();
    for site in &mut sites {
        site.samples
            .sort_by(|a, b| a.partial_cmp(b).expect("non-finite SNR sample"));
    }
    sites.sort_by(|a, b| {
        (a.location.y, a.location.x)
            .partial_cmp(&(b.location.y, b.location.x))
            .expect("non-finite location")
    });
    sites
}

/// Per-site tail fit: mirror transform, threshold, excesses, GPD MLE.
fn fit_site(site: &MeasurementSet, rho: f64) -> Result<TailFit, EvtError> {
    let psi = mirror_transform_all(&site.samples)?;
    let mu = dumouchel_threshold(&psi, rho)?;
    let z = excesses(&psi, mu)?;
    let gpd = fit_gpd_mle(&z)?;
    Ok(TailFit {
        mu,
        xi: gpd.xi,
        sigma: gpd.sigma,
        rho,
        n_exceed: z.len(),
    })
}

/// Normalization that tolerates degenerate vectors (constant or singleton)
/// by centering only; kriging then predicts the constant back.
fn normalize_lenient(values: &[f64]) -> (Vec<f64>, NormalizationStats) {
    match gp::normalize(values) {
        Ok(r) => r,
        Err(_) => {
            let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
            let stats = NormalizationStats { mean, std: 1.0 };
            (values.iter().map(|&v| v - mean).collect(), stats)
        }
    }
}

/// Hyperparameter fit with a fixed-spec fallback for observation sets too
/// small to estimate from (fewer than 10 sites).
fn fit_map_hyper(
    normalized: &[f64],
    locs: &[Location],
    family: KernelFamily,
    fallback_range: f64,
) -> Result<HyperFit, GpError> {
    match fit_hyperparams(normalized, locs, family) {
        Ok(fit) => Ok(fit),
        Err(GpError::TooFewValues { .. }) => {
            let n = normalized.len().max(1) as f64;
            let var = normalized.iter().map(|v| v * v).sum::<f64>() / n;
            let kind = match family {
                KernelFamily::Exponential => KernelKind::Exponential,
                KernelFamily::Matern => KernelKind::Matern(MaternNu::ThreeHalves),
            };
            Ok(HyperFit {
                spec: CovarianceSpec {
                    kind,
                    variance: var.max(1e-12),
                    range_m: fallback_range,
                    noise2: 0.0,
                },
                log_marginal: f64::NEG_INFINITY,
                low_spatial_signal: true,
            })
        }
        Err(e) => Err(e),
    }
}

/// Smallest nonzero pairwise distance, or `None` when every pair coincides.
fn min_site_spacing(locs: &[Location]) -> Option<f64> {
    let mut best = f64::INFINITY;
    for i in 0..locs.len() {
        for j in (i + 1)..locs.len() {
            let d = locs[i].distance(&locs[j]);
            if d > 0.0 && d < best {
                best = d;
            }
        }
    }
    best.is_finite().then_some(best)
}

/// A fitted range below the minimum site spacing makes the kernel
/// effectively diagonal: the process and noise variances are then
/// identified only through their sum, and whatever split the optimizer
/// landed on passes per-site estimation noise straight into the map at the
/// observed sites. Resolve the ambiguity toward noise, which shrinks the
/// prediction to the global mean.
fn collapse_degenerate_hyper(hyper: HyperFit, obs_locs: &[Location]) -> HyperFit {
    let Some(spacing) = min_site_spacing(obs_locs) else {
        return hyper;
    };
    if hyper.spec.range_m > spacing {
        return hyper;
    }
    let total = hyper.spec.variance + hyper.spec.noise2;
    let variance = 1e-3 * total;
    HyperFit {
        spec: CovarianceSpec {
            variance,
            noise2: total - variance,
            ..hyper.spec
        },
        log_marginal: hyper.log_marginal,
        low_spatial_signal: true,
    }
}

/// One kriged parameter map: normalize, fit hyperparameters, predict at the
/// grid, denormalize.
fn krige_map(
    values: &[f64],
    obs_locs: &[Location],
    grid: &[Location],
    family: KernelFamily,
    fallback_range: f64,
) -> Result<(Vec<f64>, Vec<f64>, HyperFit), GpError> {
    let (normalized, stats) = normalize_lenient(values);
    let hyper = fit_map_hyper(&normalized, obs_locs, family, fallback_range)?;
    let hyper = collapse_degenerate_hyper(hyper, obs_locs);
    let posterior = predict(&normalized, obs_locs, grid, &hyper.spec, stats)?;
    let physical = denormalize(&posterior, &stats);
    Ok((physical.mean, physical.var, hyper))
}

/// Builds the tail-parameter radio map: fits every observed site, kriges
/// the threshold, shape, and scale observations to all grid locations, and
/// applies the tau margin to the threshold map.
///
/// Sites whose tail fit fails are excluded from the kriging observations
/// and counted in `excluded_sites`; kriged scale values are floored at
/// [`SIGMA_FLOOR`] with the count in `sigma_clamped`.
pub fn build_tail_maps(
    observed: &[MeasurementSet],
    grid: &[Location],
    request: &AllocationRequest,
) -> Result<RadioMap, AllocError> {
    request.validate()?;
    if observed.is_empty() {
        return Err(AllocError::NoObservations);
    }
    let sites = canonical_sites(observed);

    let fits: Vec<(usize, Location, Result<TailFit, EvtError>)> = sites
        .par_iter()
        .map(|site| (site.loc_id, site.location, fit_site(site, request.rho)))
        .collect();

    let mut site_fits = Vec::with_capacity(fits.len());
    let mut obs_locs = Vec::with_capacity(fits.len());
    let mut excluded = 0usize;
    for (loc_id, location, fit) in fits {
        match fit {
            Ok(fit) => {
                site_fits.push(SiteFit { loc_id, fit });
                obs_locs.push(location);
            }
            Err(_) => excluded += 1,
        }
    }
    if site_fits.is_empty() {
        return Err(AllocError::AllSitesFailed { failures: excluded });
    }

    let mu_obs: Vec<f64> = site_fits.iter().map(|s| s.fit.mu).collect();
    let xi_obs: Vec<f64> = site_fits.iter().map(|s| s.fit.xi).collect();
    let sigma_obs: Vec<f64> = site_fits.iter().map(|s| s.fit.sigma).collect();

    // Fallback range for degenerate observation sets: a quarter of the
    // grid's bounding diagonal.
    let diag = grid
        .iter()
        .map(|l| l.x.hypot(l.y))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let fallback_range = diag / 4.0;

    let ((mu_res, xi_res), sigma_res) = rayon::join(
        || {
            rayon::join(
                || krige_map(&mu_obs, &obs_locs, grid, request.kernels.mu, fallback_range),
                || krige_map(&xi_obs, &obs_locs, grid, request.kernels.xi, fallback_range),
            )
        },
        || {
            krige_map(
                &sigma_obs,
                &obs_locs,
                grid,
                request.kernels.sigma,
                fallback_range,
            )
        },
    );
    let (mu_mean, mu_var, hyper_mu) = mu_res?;
    let (xi_hat, xi_var, hyper_xi) = xi_res?;
    let (sigma_raw, sigma_var, hyper_sigma) = sigma_res?;

    let mut sigma_clamped = 0usize;
    let sigma_hat: Vec<f64> = sigma_raw
        .into_iter()
        .map(|s| {
            if s < SIGMA_FLOOR {
                sigma_clamped += 1;
                SIGMA_FLOOR
            } else {
                s
            }
        })
        .collect();

    let mu_tau: Vec<f64> = mu_mean
        .iter()
        .zip(&mu_var)
        .map(|(&m, &v)| gaussian_upper_quantile(request.tau, m, v))
        .collect::<Result<_, _>>()?;

    Ok(RadioMap {
        grid: grid.to_vec(),
        xi_hat,
        xi_var,
        sigma_hat,
        sigma_var,
        mu_mean,
        mu_var,
        mu_tau,
        site_fits,
        excluded_sites: excluded,
        sigma_clamped,
        hyper_mu,
        hyper_xi,
        hyper_sigma,
        rho: request.rho,
        tau: request.tau,
    })
}

impl RadioMap {
    /// Recomputes the tau-margin threshold map for a new margin level.
    pub fn with_tau(mut self, tau: f64) -> Result<Self, AllocError> {
        if !(tau > 0.0 && tau <= 0.5) {
            return Err(AllocError::InvalidTau { tau });
        }
        self.mu_tau = self
            .mu_mean
            .iter()
            .zip(&self.mu_var)
            .map(|(&m, &v)| gaussian_upper_quantile(tau, m, v))
            .collect::<Result<_, _>>()?;
        self.tau = tau;
        Ok(self)
    }
}

/// Maximum rate meeting the outage target at every grid point: inverts the
/// tail outage law at `zeta` with the margined threshold, then maps the
/// transformed target back to a rate.
pub fn allocate_rates_evt(map: &RadioMap, request: &AllocationRequest) -> Result<RateMap, AllocError> {
    request.validate()?;
    let tail_fraction = 1.0 - map.rho;
    if request.zeta > tail_fraction {
        return Err(AllocError::ZetaExceedsTailFraction {
            zeta: request.zeta,
            tail_fraction,
        });
    }
    let n = map.grid.len();
    let mut exponent = Vec::with_capacity(n);
    let mut rate = Vec::with_capacity(n);
    for i in 0..n {
        let fit = TailFit {
            mu: map.mu_tau[i],
            xi: map.xi_hat[i],
            sigma: map.sigma_hat[i],
            rho: map.rho,
            n_exceed: 0,
        };
        let phi = invert_tail_outage(request.zeta, &fit)?;
        exponent.push(phi);
        rate.push(rate_from_phi(phi));
    }
    Ok(RateMap {
        grid: map.grid.clone(),
        exponent,
        rate_bpshz: rate,
        method: Method::Evt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evt;
    use crate::geo::GridSpec;
    use crate::synth::{draw_snr_samples, generate_dataset, ScenarioConfig};

    fn small_dataset() -> crate::synth::Dataset {
        let cfg = ScenarioConfig {
            grid: GridSpec::new(60.0, 60.0, 10, 10),
            m_observed: 20,
            n_samples: 2_000,
            seed: 3,
            ..ScenarioConfig::desk()
        };
        generate_dataset(&cfg).unwrap()
    }

    #[test]
    fn single_site_interpolation_collapse() {
        // One observed location, noiseless kriging at that same location:
        // the map reproduces the site's fitted parameters with ~zero
        // threshold variance.
        let samples = draw_snr_samples(50.0, 2.0, 3_000, 17);
        let loc = Location::new(5.0, 5.0);
        let observed = vec![MeasurementSet {
            loc_id: 0,
            location: loc,
            samples: samples.clone(),
        }];
        let grid = vec![loc, Location::new(6.0, 5.0)];
        let request = AllocationRequest::new(1e-3, 0.99, 1e-3);
        let map = build_tail_maps(&observed, &grid, &request).unwrap();

        let mut sorted = samples;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let psi = evt::mirror_transform_all(&sorted).unwrap();
        let mu = evt::dumouchel_threshold(&psi, 0.99).unwrap();
        let z = evt::excesses(&psi, mu).unwrap();
        let fit = evt::fit_gpd_mle(&z).unwrap();

        assert!((map.mu_mean[0] - mu).abs() < 1e-6);
        assert!((map.xi_hat[0] - fit.xi).abs() < 1e-6);
        assert!((map.sigma_hat[0] - fit.sigma).abs() < 1e-6);
        assert!(map.mu_var[0] < 1e-9);
        assert!((map.mu_tau[0] - map.mu_mean[0]).abs() < 1e-4);
    }

    #[test]
    fn site_bookkeeping_conserved() {
        let ds = small_dataset();
        let mut observed = ds.observed.clone();
        // Poison one site with constant samples so its fit fails.
        observed[3].samples = vec![1.0; observed[3].samples.len()];
        let request = AllocationRequest::new(1e-3, 0.99, 1e-3);
        let map = build_tail_maps(&observed, &ds.grid, &request).unwrap();
        assert_eq!(map.excluded_sites, 1);
        assert_eq!(map.site_fits.len() + map.excluded_sites, observed.len());
        assert_eq!(map.grid.len(), ds.grid.len());
        assert_eq!(map.mu_tau.len(), ds.grid.len());
    }

    #[test]
    fn rate_map_permutation_invariant() {
        let ds = small_dataset();
        let request = AllocationRequest::new(1e-3, 0.99, 1e-3);
        let map_a = build_tail_maps(&ds.observed, &ds.grid, &request).unwrap();
        let rates_a = allocate_rates_evt(&map_a, &request).unwrap();

        let mut shuffled = ds.observed.clone();
        shuffled.reverse();
        for site in &mut shuffled {
            site.samples.reverse();
        }
        let map_b = build_tail_maps(&shuffled, &ds.grid, &request).unwrap();
        let rates_b = allocate_rates_evt(&map_b, &request).unwrap();
        assert_eq!(rates_a.rate_bpshz, rates_b.rate_bpshz);
        assert_eq!(rates_a.exponent, rates_b.exponent);
    }

    #[test]
    fn margin_is_conservative_and_monotone_in_tau() {
        let ds = small_dataset();
        let request = AllocationRequest::new(1e-3, 0.99, 1e-3);
        let map = build_tail_maps(&ds.observed, &ds.grid, &request).unwrap();
        for (mt, mm) in map.mu_tau.iter().zip(&map.mu_mean) {
            assert!(mt >= mm, "tau margin must not lower the threshold");
        }
        let rates_loose = allocate_rates_evt(&map, &request).unwrap();
        let map_tight = map.clone().with_tau(1e-4).unwrap();
        let req_tight = AllocationRequest::new(1e-3, 0.99, 1e-4);
        let rates_tight = allocate_rates_evt(&map_tight, &req_tight).unwrap();
        for (t, l) in rates_tight.rate_bpshz.iter().zip(&rates_loose.rate_bpshz) {
            assert!(*t <= l + 1e-15, "smaller tau must not raise rates");
        }
    }

    #[test]
    fn allocation_closed_form_point() {
        let map = RadioMap {
            grid: vec![Location::new(0.0, 0.0)],
            xi_hat: vec![0.1],
            xi_var: vec![0.0],
            sigma_hat: vec![0.5],
            sigma_var: vec![0.0],
            mu_mean: vec![2.0],
            mu_var: vec![0.0],
            mu_tau: vec![2.0],
            site_fits: vec![],
            excluded_sites: 0,
            sigma_clamped: 0,
            hyper_mu: dummy_hyper(),
            hyper_xi: dummy_hyper(),
            hyper_sigma: dummy_hyper(),
            rho: 0.99,
            tau: 1e-3,
        };
        let request = AllocationRequest::new(1e-3, 0.99, 1e-3);
        let rates = allocate_rates_evt(&map, &request).unwrap();
        assert!((rates.exponent[0] - 3.29462705897083605212).abs() < 1e-12);
        assert!((rates.rate_bpshz[0] - 0.05252979136093366).abs() < 1e-9);

        // zeta = tail fraction: the bracket vanishes and the rate comes from
        // the margined threshold alone.
        let req_edge = AllocationRequest::new(0.01, 0.99, 1e-3);
        let edge = allocate_rates_evt(&map, &req_edge).unwrap();
        assert!((edge.exponent[0] - 2.0).abs() < 1e-12);
        assert!((edge.rate_bpshz[0] - evt::rate_from_phi(2.0)).abs() < 1e-15);

        // Stricter zeta never yields a larger rate.
        let req_strict = AllocationRequest::new(1e-4, 0.99, 1e-3);
        let strict = allocate_rates_evt(&map, &req_strict).unwrap();
        assert!(strict.rate_bpshz[0] <= rates.rate_bpshz[0]);

        // Infeasible zeta is rejected with guidance.
        let req_bad = AllocationRequest::new(0.02, 0.99, 1e-3);
        assert!(matches!(
            allocate_rates_evt(&map, &req_bad),
            Err(AllocError::ZetaExceedsTailFraction { .. })
        ));
    }

    fn dummy_hyper() -> HyperFit {
        HyperFit {
            spec: CovarianceSpec {
                kind: KernelKind::Exponential,
                variance: 1.0,
                range_m: 10.0,
                noise2: 0.0,
            },
            log_marginal: 0.0,
            low_spatial_signal: false,
        }
    }
}
