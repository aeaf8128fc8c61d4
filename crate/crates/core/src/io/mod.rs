//! On-disk formats for every pipeline stage.
//!
//! CSV files carry a header row, `.` decimal separator, and shortest
//! round-trip float formatting (exact double precision). JSON files are
//! pretty-printed with stable key order. Large measurement sets switch to a
//! flat little-endian f64 sidecar with a CSV index.

use crate::alloc::{Method, RadioMap, RateMap, SiteFit};
use crate::eval::OutageRow;
use crate::evt::TailFit;
use crate::geo::Location;
use crate::gp::{CovarianceSpec, HyperFit, KernelKind, MaternNu};
use crate::synth::{Dataset, GroundTruthField, MeasurementSet, ScenarioConfig};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Measurement sets larger than this (total samples) go to the binary
/// sidecar instead of CSV.
pub const BINARY_SIDECAR_THRESHOLD: usize = 10_000_000;

pub const CONFIG_JSON: &str = "config.json";
pub const GRID_CSV: &str = "grid.csv";
pub const MEASUREMENTS_CSV: &str = "measurements.csv";
pub const MEASUREMENTS_BIN: &str = "measurements.bin";
pub const MEASUREMENTS_INDEX_CSV: &str = "measurements_index.csv";
pub const TAILFITS_CSV: &str = "tailfits.csv";
pub const HYPERPARAMS_JSON: &str = "hyperparams.json";
pub const MAP_META_JSON: &str = "map_meta.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error on {path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed {path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error("missing file {path}")]
    Missing { path: String },
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> IoError {
    IoError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> IoError {
    IoError::Malformed {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn parse_f64(path: &Path, s: &str) -> Result<f64, IoError> {
    s.parse::<f64>()
        .map_err(|_| malformed(path, format!("bad float `{s}`")))
}

fn parse_usize(path: &Path, s: &str) -> Result<usize, IoError> {
    s.parse::<usize>()
        .map_err(|_| malformed(path, format!("bad integer `{s}`")))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<fs::File>>, IoError> {
    let file = fs::File::create(path).map_err(|e| file_err(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<BufReader<fs::File>>, IoError> {
    let file = fs::File::open(path).map_err(|e| file_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file)))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| file_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Json {
        path: path.display().to_string(),
        source: e,
    })
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

/// Writes `config.json`, `grid.csv`, and the measurement data (CSV below
/// [`BINARY_SIDECAR_THRESHOLD`] total samples, binary sidecar above).
/// Returns the list of files written.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<Vec<PathBuf>, IoError> {
    fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
    let mut written = Vec::new();

    let config_path = dir.join(CONFIG_JSON);
    write_json(&config_path, &ds.config)?;
    written.push(config_path);

    let grid_path = dir.join(GRID_CSV);
    {
        let mut w = csv_writer(&grid_path)?;
        w.write_record(["loc_id", "x_m", "y_m", "mean_snr_db", "k_factor"])
            .map_err(|e| csv_err(&grid_path, e))?;
        for (i, loc) in ds.grid.iter().enumerate() {
            w.write_record(&[
                i.to_string(),
                loc.x.to_string(),
                loc.y.to_string(),
                ds.truth.mean_snr_db[i].to_string(),
                ds.truth.k_factor[i].to_string(),
            ])
            .map_err(|e| csv_err(&grid_path, e))?;
        }
        w.flush().map_err(|e| file_err(&grid_path, e))?;
    }
    written.push(grid_path);

    let total: usize = ds.observed.iter().map(|m| m.samples.len()).sum();
    if total > BINARY_SIDECAR_THRESHOLD {
        let bin_path = dir.join(MEASUREMENTS_BIN);
        let idx_path = dir.join(MEASUREMENTS_INDEX_CSV);
        let mut bin = BufWriter::new(fs::File::create(&bin_path).map_err(|e| file_err(&bin_path, e))?);
        let mut idx = csv_writer(&idx_path)?;
        idx.write_record(["loc_id", "x_m", "y_m", "offset", "count"])
            .map_err(|e| csv_err(&idx_path, e))?;
        let mut offset = 0usize;
        for m in &ds.observed {
            idx.write_record(&[
                m.loc_id.to_string(),
                m.location.x.to_string(),
                m.location.y.to_string(),
                offset.to_string(),
                m.samples.len().to_string(),
            ])
            .map_err(|e| csv_err(&idx_path, e))?;
            for &s in &m.samples {
                bin.write_all(&s.to_le_bytes())
                    .map_err(|e| file_err(&bin_path, e))?;
            }
            offset += m.samples.len();
        }
        bin.flush().map_err(|e| file_err(&bin_path, e))?;
        idx.flush().map_err(|e| file_err(&idx_path, e))?;
        written.push(idx_path);
        written.push(bin_path);
    } else {
        let meas_path = dir.join(MEASUREMENTS_CSV);
        let mut w = csv_writer(&meas_path)?;
        w.write_record(["loc_id", "x_m", "y_m", "sample_idx", "snr_linear"])
            .map_err(|e| csv_err(&meas_path, e))?;
        for m in &ds.observed {
            for (k, &s) in m.samples.iter().enumerate() {
                w.write_record(&[
                    m.loc_id.to_string(),
                    m.location.x.to_string(),
                    m.location.y.to_string(),
                    k.to_string(),
                    s.to_string(),
                ])
                .map_err(|e| csv_err(&meas_path, e))?;
            }
        }
        w.flush().map_err(|e| file_err(&meas_path, e))?;
        written.push(meas_path);
    }
    Ok(written)
}

/// Reads a dataset directory back into memory.
pub fn read_dataset(dir: &Path) -> Result<Dataset, IoError> {
    let config: ScenarioConfig = read_json(&dir.join(CONFIG_JSON))?;

    let grid_path = dir.join(GRID_CSV);
    let mut grid = Vec::new();
    let mut mean_snr_db = Vec::new();
    let mut k_factor = Vec::new();
    {
        let mut r = csv_reader(&grid_path)?;
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_err(&grid_path, e))?;
            let loc_id = parse_usize(&grid_path, &rec[0])?;
            if loc_id != grid.len() {
                return Err(malformed(&grid_path, "loc_id out of order"));
            }
            grid.push(Location::new(
                parse_f64(&grid_path, &rec[1])?,
                parse_f64(&grid_path, &rec[2])?,
            ));
            mean_snr_db.push(parse_f64(&grid_path, &rec[3])?);
            k_factor.push(parse_f64(&grid_path, &rec[4])?);
        }
    }

    let mut sets: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let csv_path = dir.join(MEASUREMENTS_CSV);
    let bin_path = dir.join(MEASUREMENTS_BIN);
    if csv_path.exists() {
        let mut r = csv_reader(&csv_path)?;
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_err(&csv_path, e))?;
            let loc_id = parse_usize(&csv_path, &rec[0])?;
            sets.entry(loc_id)
                .or_default()
                .push(parse_f64(&csv_path, &rec[4])?);
        }
    } else if bin_path.exists() {
        let idx_path = dir.join(MEASUREMENTS_INDEX_CSV);
        let mut raw = Vec::new();
        fs::File::open(&bin_path)
            .map_err(|e| file_err(&bin_path, e))?
            .read_to_end(&mut raw)
            .map_err(|e| file_err(&bin_path, e))?;
        if raw.len() % 8 != 0 {
            return Err(malformed(&bin_path, "length not a multiple of 8"));
        }
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut r = csv_reader(&idx_path)?;
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_err(&idx_path, e))?;
            let loc_id = parse_usize(&idx_path, &rec[0])?;
            let offset = parse_usize(&idx_path, &rec[3])?;
            let count = parse_usize(&idx_path, &rec[4])?;
            if offset + count > values.len() {
                return Err(malformed(&idx_path, "index range past end of sidecar"));
            }
            sets.insert(loc_id, values[offset..offset + count].to_vec());
        }
    } else {
        return Err(IoError::Missing {
            path: csv_path.display().to_string(),
        });
    }

    let observed = sets
        .into_iter()
        .map(|(loc_id, samples)| {
            if loc_id >= grid.len() {
                return Err(malformed(&csv_path, format!("loc_id {loc_id} outside grid")));
            }
            Ok(MeasurementSet {
                loc_id,
                location: grid[loc_id],
                samples,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Dataset {
        config,
        grid,
        observed,
        truth: GroundTruthField {
            mean_snr_db,
            k_factor,
        },
    })
}

/// SHA-256 over the dataset files (config, grid, measurements) in a fixed
/// order, hex-encoded. The same bytes always hash identically, so stages
/// can verify they consume the dataset they were pointed at.
pub fn dataset_hash(dir: &Path) -> Result<String, IoError> {
    let mut hasher = Sha256::new();
    let mut feed = |name: &str, required: bool| -> Result<(), IoError> {
        let path = dir.join(name);
        if !path.exists() {
            if required {
                return Err(IoError::Missing {
                    path: path.display().to_string(),
                });
            }
            return Ok(());
        }
        let bytes = fs::read(&path).map_err(|e| file_err(&path, e))?;
        hasher.update(name.as_bytes());
        hasher.update(bytes);
        Ok(())
    };
    feed(CONFIG_JSON, true)?;
    feed(GRID_CSV, true)?;
    let have_csv = dir.join(MEASUREMENTS_CSV).exists();
    let have_bin = dir.join(MEASUREMENTS_BIN).exists();
    if !have_csv && !have_bin {
        return Err(IoError::Missing {
            path: dir.join(MEASUREMENTS_CSV).display().to_string(),
        });
    }
    feed(MEASUREMENTS_CSV, false)?;
    feed(MEASUREMENTS_INDEX_CSV, false)?;
    feed(MEASUREMENTS_BIN, false)?;
    Ok(hex::encode(hasher.finalize()))
}

// ---------------------------------------------------------------------------
// Tail fits and parameter maps
// ---------------------------------------------------------------------------

pub fn write_tail_fits(dir: &Path, fits: &[SiteFit]) -> Result<PathBuf, IoError> {
    fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
    let path = dir.join(TAILFITS_CSV);
    let mut w = csv_writer(&path)?;
    w.write_record(["loc_id", "mu", "xi", "sigma", "rho", "n_exceed"])
        .map_err(|e| csv_err(&path, e))?;
    for s in fits {
        w.write_record(&[
            s.loc_id.to_string(),
            s.fit.mu.to_string(),
            s.fit.xi.to_string(),
            s.fit.sigma.to_string(),
            s.fit.rho.to_string(),
            s.fit.n_exceed.to_string(),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| file_err(&path, e))?;
    Ok(path)
}

pub fn read_tail_fits(dir: &Path) -> Result<Vec<SiteFit>, IoError> {
    let path = dir.join(TAILFITS_CSV);
    let mut r = csv_reader(&path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(&path, e))?;
        out.push(SiteFit {
            loc_id: parse_usize(&path, &rec[0])?,
            fit: TailFit {
                mu: parse_f64(&path, &rec[1])?,
                xi: parse_f64(&path, &rec[2])?,
                sigma: parse_f64(&path, &rec[3])?,
                rho: parse_f64(&path, &rec[4])?,
                n_exceed: parse_usize(&path, &rec[5])?,
            },
        });
    }
    Ok(out)
}

/// One kernel description inside `hyperparams.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelReport {
    pub kind: String,
    pub omega2: f64,
    pub range_m: f64,
    pub nu: Option<f64>,
    pub noise2: f64,
}

impl KernelReport {
    pub fn from_spec(spec: &CovarianceSpec) -> Self {
        Self {
            kind: spec.kind.name().to_string(),
            omega2: spec.variance,
            range_m: spec.range_m,
            nu: spec.kind.nu(),
            noise2: spec.noise2,
        }
    }

    pub fn to_spec(&self, path: &Path) -> Result<CovarianceSpec, IoError> {
        let kind = match (self.kind.as_str(), self.nu) {
            ("exponential", _) => KernelKind::Exponential,
            ("matern", Some(nu)) if (nu - 0.5).abs() < 1e-9 => KernelKind::Matern(MaternNu::Half),
            ("matern", Some(nu)) if (nu - 1.5).abs() < 1e-9 => {
                KernelKind::Matern(MaternNu::ThreeHalves)
            }
            ("matern", Some(nu)) if (nu - 2.5).abs() < 1e-9 => {
                KernelKind::Matern(MaternNu::FiveHalves)
            }
            _ => {
                return Err(malformed(
                    path,
                    format!("unsupported kernel kind `{}` nu {:?}", self.kind, self.nu),
                ))
            }
        };
        Ok(CovarianceSpec {
            kind,
            variance: self.omega2,
            range_m: self.range_m,
            noise2: self.noise2,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperparamsFile {
    pub mu: KernelReport,
    pub xi: KernelReport,
    pub sigma: KernelReport,
}

/// Fit bookkeeping carried from `fit-maps` to `allocate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapMeta {
    pub rho: f64,
    pub dataset_hash: String,
    pub retained_sites: usize,
    pub excluded_sites: usize,
    pub sigma_clamped: usize,
}

fn write_param_map(
    dir: &Path,
    name: &str,
    grid: &[Location],
    mean: &[f64],
    var: &[f64],
) -> Result<PathBuf, IoError> {
    let path = dir.join(name);
    let mut w = csv_writer(&path)?;
    w.write_record(["loc_id", "x_m", "y_m", "mean", "var"])
        .map_err(|e| csv_err(&path, e))?;
    for (i, loc) in grid.iter().enumerate() {
        w.write_record(&[
            i.to_string(),
            loc.x.to_string(),
            loc.y.to_string(),
            mean[i].to_string(),
            var[i].to_string(),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| file_err(&path, e))?;
    Ok(path)
}

fn read_param_map(dir: &Path, name: &str) -> Result<(Vec<Location>, Vec<f64>, Vec<f64>), IoError> {
    let path = dir.join(name);
    let mut r = csv_reader(&path)?;
    let (mut grid, mut mean, mut var) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(&path, e))?;
        grid.push(Location::new(
            parse_f64(&path, &rec[1])?,
            parse_f64(&path, &rec[2])?,
        ));
        mean.push(parse_f64(&path, &rec[3])?);
        var.push(parse_f64(&path, &rec[4])?);
    }
    Ok((grid, mean, var))
}

/// Writes the three parameter maps, the tail fits, the hyperparameters, and
/// the fit metadata. Returns the files written.
pub fn write_radio_map(
    dir: &Path,
    map: &RadioMap,
    dataset_hash: &str,
) -> Result<Vec<PathBuf>, IoError> {
    fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
    let mut written = vec![
        write_param_map(dir, "map_mu.csv", &map.grid, &map.mu_mean, &map.mu_var)?,
        write_param_map(dir, "map_xi.csv", &map.grid, &map.xi_hat, &map.xi_var)?,
        write_param_map(dir, "map_sigma.csv", &map.grid, &map.sigma_hat, &map.sigma_var)?,
        write_tail_fits(dir, &map.site_fits)?,
    ];
    let hp_path = dir.join(HYPERPARAMS_JSON);
    write_json(
        &hp_path,
        &HyperparamsFile {
            mu: KernelReport::from_spec(&map.hyper_mu.spec),
            xi: KernelReport::from_spec(&map.hyper_xi.spec),
            sigma: KernelReport::from_spec(&map.hyper_sigma.spec),
        },
    )?;
    written.push(hp_path);
    let meta_path = dir.join(MAP_META_JSON);
    write_json(
        &meta_path,
        &MapMeta {
            rho: map.rho,
            dataset_hash: dataset_hash.to_string(),
            retained_sites: map.site_fits.len(),
            excluded_sites: map.excluded_sites,
            sigma_clamped: map.sigma_clamped,
        },
    )?;
    written.push(meta_path);
    Ok(written)
}

/// Reads the parameter maps back and reconstructs a [`RadioMap`] with the
/// tau margin recomputed at `tau`.
pub fn read_radio_map(dir: &Path, tau: f64) -> Result<(RadioMap, MapMeta), IoError> {
    let (grid, mu_mean, mu_var) = read_param_map(dir, "map_mu.csv")?;
    let (_, xi_hat, xi_var) = read_param_map(dir, "map_xi.csv")?;
    let (_, sigma_hat, sigma_var) = read_param_map(dir, "map_sigma.csv")?;
    let site_fits = read_tail_fits(dir)?;
    let hp_path = dir.join(HYPERPARAMS_JSON);
    let hp: HyperparamsFile = read_json(&hp_path)?;
    let meta: MapMeta = read_json(&dir.join(MAP_META_JSON))?;

    let as_hyper = |k: &KernelReport| -> Result<HyperFit, IoError> {
        Ok(HyperFit {
            spec: k.to_spec(&hp_path)?,
            log_marginal: f64::NAN,
            low_spatial_signal: false,
        })
    };

    let n = grid.len();
    let map = RadioMap {
        grid,
        xi_hat,
        xi_var,
        sigma_hat,
        sigma_var,
        mu_mean,
        mu_var,
        mu_tau: vec![0.0; n],
        site_fits,
        excluded_sites: meta.excluded_sites,
        sigma_clamped: meta.sigma_clamped,
        hyper_mu: as_hyper(&hp.mu)?,
        hyper_xi: as_hyper(&hp.xi)?,
        hyper_sigma: as_hyper(&hp.sigma)?,
        rho: meta.rho,
        tau,
    };
    let map = map.with_tau(tau).map_err(|e| {
        malformed(
            &dir.join("map_mu.csv"),
            format!("cannot recompute tau margin: {e}"),
        )
    })?;
    Ok((map, meta))
}

// ---------------------------------------------------------------------------
// Rates, outage, divergence
// ---------------------------------------------------------------------------

pub fn rates_file_name(method: Method) -> String {
    format!("rates_{}.csv", method.name())
}

pub fn write_rate_map(dir: &Path, rates: &RateMap) -> Result<PathBuf, IoError> {
    fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
    let path = dir.join(rates_file_name(rates.method));
    let mut w = csv_writer(&path)?;
    w.write_record(["loc_id", "x_m", "y_m", "phi_or_theta", "rate_bpshz"])
        .map_err(|e| csv_err(&path, e))?;
    for (i, loc) in rates.grid.iter().enumerate() {
        w.write_record(&[
            i.to_string(),
            loc.x.to_string(),
            loc.y.to_string(),
            rates.exponent[i].to_string(),
            rates.rate_bpshz[i].to_string(),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| file_err(&path, e))?;
    Ok(path)
}

pub fn read_rate_map(dir: &Path, method: Method) -> Result<RateMap, IoError> {
    let path = dir.join(rates_file_name(method));
    let mut r = csv_reader(&path)?;
    let (mut grid, mut exponent, mut rate) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(&path, e))?;
        grid.push(Location::new(
            parse_f64(&path, &rec[1])?,
            parse_f64(&path, &rec[2])?,
        ));
        exponent.push(parse_f64(&path, &rec[3])?);
        rate.push(parse_f64(&path, &rec[4])?);
    }
    Ok(RateMap {
        grid,
        exponent,
        rate_bpshz: rate,
        method,
    })
}

pub fn write_outage_rows(
    dir: &Path,
    method: Method,
    grid: &[Location],
    rows: &[OutageRow],
) -> Result<PathBuf, IoError> {
    fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
    let path = dir.join(format!("outage_{}.csv", method.name()));
    let mut w = csv_writer(&path)?;
    w.write_record(["loc_id", "x_m", "y_m", "gamma_tar", "empirical_outage", "met"])
        .map_err(|e| csv_err(&path, e))?;
    for row in rows {
        let loc = grid[row.loc_id];
        w.write_record(&[
            row.loc_id.to_string(),
            loc.x.to_string(),
            loc.y.to_string(),
            row.gamma_tar.to_string(),
            row.empirical_outage.to_string(),
            row.met.to_string(),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| file_err(&path, e))?;
    Ok(path)
}

/// Per-location tail divergences; locations with failed ground-truth fits
/// are omitted from the file.
pub fn write_dbh(dir: &Path, dbh: &[Option<f64>]) -> Result<PathBuf, IoError> {
    fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
    let path = dir.join("dbh.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["loc_id", "d_bh"]).map_err(|e| csv_err(&path, e))?;
    for (i, d) in dbh.iter().enumerate() {
        if let Some(d) = d {
            w.write_record(&[i.to_string(), d.to_string()])
                .map_err(|e| csv_err(&path, e))?;
        }
    }
    w.flush().map_err(|e| file_err(&path, e))?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Run reports and manifests
// ---------------------------------------------------------------------------

/// Allocation run summary (`run_report.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    pub zeta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub excluded_sites: usize,
    pub sigma_clamped: usize,
    pub dataset_hash: String,
    pub timings_ms: Vec<(String, f64)>,
}

pub fn run_report_name(method: Method) -> String {
    format!("run_report_{}.json", method.name())
}

/// Per-subcommand manifest: inputs, outputs, hash, and stage timings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset_hash: Option<String>,
    pub timings_ms: Vec<(String, f64)>,
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf, IoError> {
    fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
    let path = dir.join(format!("manifest_{}.json", manifest.subcommand));
    write_json(&path, manifest)?;
    Ok(path)
}
