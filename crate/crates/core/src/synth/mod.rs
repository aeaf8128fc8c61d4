//! Synthetic ground-truth SNR fields and sampled datasets.
//!
//! The generator layers log-distance path loss, a spatially correlated
//! Gaussian shadowing field, and Rician small-scale fading whose K-factor
//! is itself a correlated field, so the mean SNR and the heaviness of the
//! lower tail both vary smoothly over the area. Everything is a pure
//! function of `(config, seed)`.

mod channel;
mod field;

pub use channel::{draw_snr_samples, mean_snr_db, noise_power_dbm, SnrSampler};
pub use field::sample_correlated_field;

use crate::geo::{build_grid, GridError, GridSpec, Location};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("config field `{field}` is invalid: {reason}")]
    BadConfig { field: &'static str, reason: String },
    #[error("m_observed = {m} exceeds the grid size {grid}")]
    TooManyObserved { m: usize, grid: usize },
    #[error("correlated-field covariance factorization failed even at maximum jitter")]
    FieldFactorization,
}

/// Scenario parameters: the grid, the sampling plan, and the radio model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub grid: GridSpec,
    /// Number of observed locations (drawn from the grid without replacement).
    pub m_observed: usize,
    /// i.i.d. SNR samples per observed location.
    pub n_samples: usize,
    pub tx_power_mw: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub carrier_freq_hz: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub pathloss_exponent: f64,
    pub shadowing_std_db: f64,
    pub shadowing_decorrelation_m: f64,
    pub kfactor_mean_db: f64,
    pub kfactor_std_db: f64,
    pub kfactor_decorrelation_m: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Desk-scale scenario: 40x40 grid over 100 m x 100 m, 100 observed
    /// locations, 1e4 samples each. Completes a full pipeline in seconds.
    pub fn desk() -> Self {
        Self {
            grid: GridSpec::new(100.0, 100.0, 40, 40),
            m_observed: 100,
            n_samples: 10_000,
            tx_power_mw: 1.0,
            bandwidth_hz: 1e5,
            noise_figure_db: 7.0,
            carrier_freq_hz: 1.5e9,
            bs_height_m: 10.0,
            ue_height_m: 1.5,
            pathloss_exponent: 2.2,
            shadowing_std_db: 4.0,
            shadowing_decorrelation_m: 25.0,
            kfactor_mean_db: 9.0,
            kfactor_std_db: 3.0,
            kfactor_decorrelation_m: 25.0,
            seed: 1,
        }
    }

    /// Full-scale scenario: 120x120 grid, 500 observed locations, 1e5
    /// samples each. Generation is minutes-scale; prefer `desk` for tests.
    pub fn paper() -> Self {
        Self {
            grid: GridSpec::new(100.0, 100.0, 120, 120),
            m_observed: 500,
            n_samples: 100_000,
            ..Self::desk()
        }
    }

    /// Noise power in dBm: `-173.8 + 10 log10(BW) + NF`.
    pub fn noise_power_dbm(&self) -> f64 {
        noise_power_dbm(self.bandwidth_hz, self.noise_figure_db)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |field: &'static str, reason: String| Err(SynthError::BadConfig { field, reason });
        if self.grid.nx < 2 || self.grid.ny < 2 {
            return bad("grid", format!("nx and ny must be >= 2, got {}x{}", self.grid.nx, self.grid.ny));
        }
        if self.m_observed == 0 {
            return bad("m_observed", "must be >= 1".into());
        }
        if self.m_observed > self.grid.n_points() {
            return Err(SynthError::TooManyObserved {
                m: self.m_observed,
                grid: self.grid.n_points(),
            });
        }
        if self.n_samples == 0 {
            return bad("n_samples", "must be >= 1".into());
        }
        if !(self.tx_power_mw > 0.0) {
            return bad("tx_power_mw", format!("must be > 0, got {}", self.tx_power_mw));
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad("bandwidth_hz", format!("must be > 0, got {}", self.bandwidth_hz));
        }
        if !(self.carrier_freq_hz > 0.0) {
            return bad("carrier_freq_hz", format!("must be > 0, got {}", self.carrier_freq_hz));
        }
        if !(self.bs_height_m > self.ue_height_m) {
            return bad(
                "bs_height_m",
                format!("must exceed ue_height_m ({} vs {})", self.bs_height_m, self.ue_height_m),
            );
        }
        if !(self.pathloss_exponent > 0.0) {
            return bad("pathloss_exponent", format!("must be > 0, got {}", self.pathloss_exponent));
        }
        if self.shadowing_std_db < 0.0 || !self.shadowing_std_db.is_finite() {
            return bad("shadowing_std_db", format!("must be >= 0, got {}", self.shadowing_std_db));
        }
        if !(self.shadowing_decorrelation_m > 0.0) {
            return bad(
                "shadowing_decorrelation_m",
                format!("must be > 0, got {}", self.shadowing_decorrelation_m),
            );
        }
        if self.kfactor_std_db < 0.0 || !self.kfactor_std_db.is_finite() {
            return bad("kfactor_std_db", format!("must be >= 0, got {}", self.kfactor_std_db));
        }
        if !(self.kfactor_decorrelation_m > 0.0) {
            return bad(
                "kfactor_decorrelation_m",
                format!("must be > 0, got {}", self.kfactor_decorrelation_m),
            );
        }
        Ok(())
    }
}

/// N linear-SNR samples attached to one grid location.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub loc_id: usize,
    pub location: Location,
    pub samples: Vec<f64>,
}

/// Per-grid-point ground truth: mean SNR in dB and the linear Rician
/// K-factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthField {
    pub mean_snr_db: Vec<f64>,
    pub k_factor: Vec<f64>,
}

/// A generated scenario: the grid, the observed measurement sets, and the
/// ground-truth field that also drives test-sample streams.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub config: ScenarioConfig,
    pub grid: Vec<Location>,
    pub observed: Vec<MeasurementSet>,
    pub truth: GroundTruthField,
}

// Substream labels for seed derivation.
const STREAM_SELECT: u64 = 1;
const STREAM_SHADOW: u64 = 2;
const STREAM_KFACTOR: u64 = 3;
const STREAM_MEASURE: u64 = 1 << 40;
const STREAM_TEST: u64 = 2 << 40;

/// Splitmix64 step, used to derive independent substream seeds.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Dataset {
    /// Linear mean SNR at a grid point.
    pub fn mean_snr_linear(&self, loc_id: usize) -> f64 {
        10f64.powf(self.truth.mean_snr_db[loc_id] / 10.0)
    }

    /// Deterministic test-sample stream for one grid point, independent of
    /// the measurement streams.
    pub fn test_sampler(&self, loc_id: usize) -> SnrSampler {
        SnrSampler::new(
            self.mean_snr_linear(loc_id),
            self.truth.k_factor[loc_id],
            derive_seed(self.config.seed, STREAM_TEST + loc_id as u64),
        )
    }

    /// Materialized test measurement set for one grid point.
    pub fn test_measurement_set(&self, loc_id: usize, n: usize) -> MeasurementSet {
        let mut sampler = self.test_sampler(loc_id);
        MeasurementSet {
            loc_id,
            location: self.grid[loc_id],
            samples: (0..n).map(|_| sampler.next_sample()).collect(),
        }
    }
}

/// Generates the full dataset: grid, correlated ground-truth fields,
/// observed locations drawn without replacement, and their sample sets.
pub fn generate_dataset(config: &ScenarioConfig) -> Result<Dataset, SynthError> {
    use rand::SeedableRng;

    config.validate()?;
    let grid = build_grid(&config.grid)?;
    let n_points = grid.len();

    let shadow = sample_correlated_field(
        &grid,
        config.shadowing_std_db * config.shadowing_std_db,
        config.shadowing_decorrelation_m,
        derive_seed(config.seed, STREAM_SHADOW),
    )?;
    let k_db = sample_correlated_field(
        &grid,
        config.kfactor_std_db * config.kfactor_std_db,
        config.kfactor_decorrelation_m,
        derive_seed(config.seed, STREAM_KFACTOR),
    )?;

    let mut mean_snr = Vec::with_capacity(n_points);
    let mut k_factor = Vec::with_capacity(n_points);
    for (i, loc) in grid.iter().enumerate() {
        mean_snr.push(mean_snr_db(loc, config) + shadow[i]);
        k_factor.push(10f64.powf((config.kfactor_mean_db + k_db[i]) / 10.0));
    }
    let truth = GroundTruthField {
        mean_snr_db: mean_snr,
        k_factor,
    };

    let mut select_rng =
        rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_SELECT));
    let mut ids =
        rand::seq::index::sample(&mut select_rng, n_points, config.m_observed).into_vec();
    ids.sort_unstable();

    let observed = ids
        .into_iter()
        .map(|loc_id| {
            let mean_lin = 10f64.powf(truth.mean_snr_db[loc_id] / 10.0);
            let samples = draw_snr_samples(
                mean_lin,
                truth.k_factor[loc_id],
                config.n_samples,
                derive_seed(config.seed, STREAM_MEASURE + loc_id as u64),
            );
            MeasurementSet {
                loc_id,
                location: grid[loc_id],
                samples,
            }
        })
        .collect();

    Ok(Dataset {
        config: config.clone(),
        grid,
        observed,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ScenarioConfig {
        ScenarioConfig {
            grid: GridSpec::new(50.0, 50.0, 8, 8),
            m_observed: 12,
            n_samples: 200,
            seed: 9,
            ..ScenarioConfig::desk()
        }
    }

    #[test]
    fn observed_locations_distinct_and_counted() {
        let ds = generate_dataset(&tiny_config()).unwrap();
        assert_eq!(ds.observed.len(), 12);
        let mut ids: Vec<usize> = ds.observed.iter().map(|m| m.loc_id).collect();
        ids.dedup();
        assert_eq!(ids.len(), 12);
        for m in &ds.observed {
            assert_eq!(m.samples.len(), 200);
            assert!(m.samples.iter().all(|&s| s > 0.0));
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = generate_dataset(&tiny_config()).unwrap();
        let b = generate_dataset(&tiny_config()).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.observed, b.observed);
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_dataset(&tiny_config()).unwrap();
        let mut cfg = tiny_config();
        cfg.seed = 10;
        let b = generate_dataset(&cfg).unwrap();
        assert!(
            a.truth
                .mean_snr_db
                .iter()
                .zip(&b.truth.mean_snr_db)
                .any(|(x, y)| x != y),
            "shadowing fields should differ across seeds"
        );
    }

    #[test]
    fn m_exceeding_grid_rejected() {
        let mut cfg = tiny_config();
        cfg.m_observed = 65;
        assert!(matches!(
            generate_dataset(&cfg),
            Err(SynthError::TooManyObserved { .. })
        ));
    }

    #[test]
    fn config_validation_names_fields() {
        let mut cfg = tiny_config();
        cfg.tx_power_mw = 0.0;
        match generate_dataset(&cfg) {
            Err(SynthError::BadConfig { field, .. }) => assert_eq!(field, "tx_power_mw"),
            other => panic!("expected BadConfig, got {other:?}"),
        }
    }

    #[test]
    fn test_sampler_is_deterministic() {
        let ds = generate_dataset(&tiny_config()).unwrap();
        let a = ds.test_measurement_set(5, 50);
        let b = ds.test_measurement_set(5, 50);
        assert_eq!(a, b);
        let c = ds.test_measurement_set(6, 50);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn noise_power_matches_closed_form() {
        let cfg = ScenarioConfig::desk();
        assert!((cfg.noise_power_dbm() + 116.8).abs() < 1e-12);
    }
}
