//! Large-scale path loss and Rician small-scale fading.

use super::ScenarioConfig;
use crate::geo::Location;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// K-factors at or above this are treated as the deterministic
/// (no-fading) limit.
const K_DETERMINISTIC: f64 = 1e6;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise power in dBm: `-173.8 + 10 log10(BW) + NF`.
pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    -173.8 + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Free-space path loss at 1 m reference distance, in dB.
fn pathloss_1m_db(carrier_freq_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * carrier_freq_hz / SPEED_OF_LIGHT).log10()
}

/// Mean SNR in dB at `location` before shadowing: transmit power minus
/// log-distance path loss minus noise power. The base station sits at the
/// center of the area at `bs_height_m`; distances are 3-D.
pub fn mean_snr_db(location: &Location, config: &ScenarioConfig) -> f64 {
    let bs = config.grid.center();
    let dh = config.bs_height_m - config.ue_height_m;
    let d3 = location.distance(&bs).hypot(dh);
    let pl = pathloss_1m_db(config.carrier_freq_hz)
        + 10.0 * config.pathloss_exponent * d3.log10();
    10.0 * config.tx_power_mw.log10() - pl - config.noise_power_dbm()
}

/// Streaming generator of linear SNR samples `mean * |h|^2`, where `|h|^2`
/// is unit-mean Rician power fading with factor K.
pub struct SnrSampler {
    mean_linear: f64,
    los_amp: f64,
    scatter_sd: f64,
    deterministic: bool,
    rng: ChaCha8Rng,
}

impl SnrSampler {
    pub fn new(mean_linear: f64, k_factor: f64, seed: u64) -> Self {
        assert!(mean_linear > 0.0, "mean SNR must be positive");
        assert!(k_factor >= 0.0, "K-factor must be nonnegative");
        // Unit mean: E|h|^2 = K/(K+1) + 2 * 1/(2(K+1)) = 1.
        let los_amp = (k_factor / (k_factor + 1.0)).sqrt();
        let scatter_sd = (0.5 / (k_factor + 1.0)).sqrt();
        Self {
            mean_linear,
            los_amp,
            scatter_sd,
            deterministic: k_factor >= K_DETERMINISTIC,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_sample(&mut self) -> f64 {
        if self.deterministic {
            return self.mean_linear;
        }
        let zi: f64 = StandardNormal.sample(&mut self.rng);
        let zq: f64 = StandardNormal.sample(&mut self.rng);
        let i = self.los_amp + self.scatter_sd * zi;
        let q = self.scatter_sd * zq;
        // Guard against underflow to exactly zero; samples must stay
        // strictly positive for the -ln transform.
        let power = (i * i + q * q).max(1e-300);
        self.mean_linear * power
    }
}

/// `n` i.i.d. linear-SNR draws, deterministic given `seed`.
pub fn draw_snr_samples(mean_snr_linear: f64, k_factor: f64, n: usize, seed: u64) -> Vec<f64> {
    assert!(n >= 1);
    let mut sampler = SnrSampler::new(mean_snr_linear, k_factor, seed);
    (0..n).map(|_| sampler.next_sample()).collect()
}
