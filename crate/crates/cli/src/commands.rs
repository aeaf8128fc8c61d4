//! Subcommand implementations.

use crate::error::CliError;
use crate::{preset_config, PresetArg};
use std::path::{Path, PathBuf};
use std::time::Instant;
use tailmap_core::alloc::{
    allocate_rates_benchmark, allocate_rates_evt, build_tail_maps, AllocationRequest, Method,
    RadioMap, RateMap,
};
use tailmap_core::eval::{
    build_eval_report, compare_report, default_test_samples_per_point, divergence_map,
    evaluate_rate_map, EvalReport, RequestEcho,
};
use tailmap_core::io::{self, MapMeta, RunManifest, RunReport};
use tailmap_core::synth::{generate_dataset, Dataset, ScenarioConfig};

/// Test samples per grid point used to fit the ground-truth tail for the
/// Bhattacharyya divergence map.
const DBH_TEST_SAMPLES: usize = 100_000;

struct Timings {
    t0: Instant,
    last: Instant,
    stages: Vec<(String, f64)>,
}

impl Timings {
    fn start() -> Self {
        let now = Instant::now();
        Self {
            t0: now,
            last: now,
            stages: Vec::new(),
        }
    }

    fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.stages
            .push((name.to_string(), now.duration_since(self.last).as_secs_f64() * 1e3));
        self.last = now;
    }

    fn finish(mut self) -> Vec<(String, f64)> {
        self.stages.push((
            "total".to_string(),
            self.t0.elapsed().as_secs_f64() * 1e3,
        ));
        self.stages
    }
}

fn display(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

fn resolve_config(
    config: Option<PathBuf>,
    preset: Option<PresetArg>,
    seed: Option<u64>,
) -> Result<(ScenarioConfig, Option<String>), CliError> {
    let (mut cfg, path) = match (config, preset) {
        (Some(path), _) => {
            let cfg: ScenarioConfig = io::read_json(&path)?;
            let display = path.display().to_string();
            (cfg, Some(display))
        }
        (None, Some(p)) => (preset_config(p), None),
        (None, None) => {
            return Err(CliError::Config(
                "either --config <path> or --preset {desk,paper} is required".into(),
            ))
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok((cfg, path))
}

pub fn generate(
    config: Option<PathBuf>,
    preset: Option<PresetArg>,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), CliError> {
    let mut timings = Timings::start();
    let (cfg, config_path) = resolve_config(config, preset, seed)?;
    let dataset = generate_dataset(&cfg)?;
    timings.stage("generate");
    let files = io::write_dataset(out, &dataset)?;
    let hash = io::dataset_hash(out)?;
    timings.stage("write");
    let manifest = RunManifest {
        subcommand: "generate".into(),
        config_path,
        seed: Some(cfg.seed),
        inputs: vec![],
        outputs: display(&files),
        dataset_hash: Some(hash.clone()),
        timings_ms: timings.finish(),
    };
    io::write_manifest(out, &manifest)?;
    println!(
        "generated {} observed sites x {} samples on a {}x{} grid -> {} (hash {})",
        cfg.m_observed,
        cfg.n_samples,
        cfg.grid.nx,
        cfg.grid.ny,
        out.display(),
        &hash[..12],
    );
    Ok(())
}

pub fn fit_maps(data: &Path, rho: f64, out: &Path) -> Result<(), CliError> {
    let mut timings = Timings::start();
    let dataset = io::read_dataset(data)?;
    let hash = io::dataset_hash(data)?;
    timings.stage("read");
    // zeta and tau are not consumed while fitting maps; allocation sets
    // them. The placeholder zeta equals the tail fraction, which is always
    // valid for the request.
    let request = AllocationRequest::new(1.0 - rho, rho, 1e-3);
    let map = build_tail_maps(&dataset.observed, &dataset.grid, &request)?;
    timings.stage("fit");
    let files = io::write_radio_map(out, &map, &hash)?;
    timings.stage("write");
    let manifest = RunManifest {
        subcommand: "fit-maps".into(),
        config_path: None,
        seed: Some(dataset.config.seed),
        inputs: vec![data.display().to_string()],
        outputs: display(&files),
        dataset_hash: Some(hash),
        timings_ms: timings.finish(),
    };
    io::write_manifest(out, &manifest)?;
    println!(
        "fitted {} sites ({} excluded), kriged {} grid points; kernels: mu={} xi={} sigma={}",
        map.site_fits.len(),
        map.excluded_sites,
        map.grid.len(),
        map.hyper_mu.spec.kind.name(),
        map.hyper_xi.spec.kind.name(),
        map.hyper_sigma.spec.kind.name(),
    );
    Ok(())
}

pub fn allocate(
    run: &Path,
    zeta: f64,
    tau: f64,
    method: Method,
    delta: f64,
    out: &Path,
) -> Result<(), CliError> {
    let mut timings = Timings::start();
    let hash = io::dataset_hash(run)?;
    let (rates, report) = match method {
        Method::Evt => {
            let (map, meta) = io::read_radio_map(run, tau)?;
            if meta.dataset_hash != hash {
                return Err(CliError::Data(format!(
                    "maps in {} were fitted on dataset {} but the directory now hashes to {}",
                    run.display(),
                    &meta.dataset_hash[..12],
                    &hash[..12],
                )));
            }
            timings.stage("read");
            let request = AllocationRequest::new(zeta, meta.rho, tau);
            let rates = allocate_rates_evt(&map, &request)?;
            timings.stage("allocate");
            let report = RunReport {
                method: method.name().into(),
                zeta,
                rho: Some(meta.rho),
                tau: Some(tau),
                delta: None,
                excluded_sites: meta.excluded_sites,
                sigma_clamped: meta.sigma_clamped,
                dataset_hash: hash.clone(),
                timings_ms: vec![],
            };
            (rates, report)
        }
        Method::Benchmark => {
            let dataset = io::read_dataset(run)?;
            timings.stage("read");
            let rates = allocate_rates_benchmark(&dataset.observed, &dataset.grid, zeta, delta)?;
            timings.stage("allocate");
            let report = RunReport {
                method: method.name().into(),
                zeta,
                rho: None,
                tau: None,
                delta: Some(delta),
                excluded_sites: 0,
                sigma_clamped: 0,
                dataset_hash: hash.clone(),
                timings_ms: vec![],
            };
            (rates, report)
        }
    };
    let rate_path = io::write_rate_map(out, &rates)?;
    let mut report = report;
    report.timings_ms = timings.finish();
    let report_path = out.join("run_report.json");
    io::write_json(&report_path, &report)?;
    let manifest = RunManifest {
        subcommand: "allocate".into(),
        config_path: None,
        seed: None,
        inputs: vec![run.display().to_string()],
        outputs: vec![
            rate_path.display().to_string(),
            report_path.display().to_string(),
        ],
        dataset_hash: Some(hash),
        timings_ms: report.timings_ms.clone(),
    };
    io::write_manifest(out, &manifest)?;
    let mean_rate = rates.rate_bpshz.iter().sum::<f64>() / rates.rate_bpshz.len() as f64;
    println!(
        "{} allocation at zeta={zeta}: mean rate {:.4} bps/Hz over {} points -> {}",
        method.name(),
        mean_rate,
        rates.rate_bpshz.len(),
        rate_path.display(),
    );
    Ok(())
}

/// Reads tau/delta back from the allocation report when it matches the
/// method being evaluated; evaluation itself does not need them.
fn request_echo_from_report(run: &Path, method: Method, zeta: f64, n_test: usize) -> RequestEcho {
    let mut echo = RequestEcho {
        zeta,
        rho: None,
        tau: None,
        delta: None,
        n_test_per_point: n_test,
    };
    if let Ok(report) = io::read_json::<RunReport>(&run.join("run_report.json")) {
        if report.method == method.name() {
            echo.rho = report.rho;
            echo.tau = report.tau;
            echo.delta = report.delta;
        }
    }
    echo
}

pub fn evaluate(
    run: &Path,
    method: Method,
    zeta: f64,
    test_n: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(CliError::Config(format!(
            "target outage zeta must lie in (0,1), got {zeta}"
        )));
    }
    let mut timings = Timings::start();
    let dataset = io::read_dataset(run)?;
    let hash = io::dataset_hash(run)?;
    let rates = read_rates_checked(run, method, &dataset, &hash)?;
    timings.stage("read");

    let n_test = test_n.unwrap_or_else(|| default_test_samples_per_point(zeta));
    let rows = evaluate_rate_map(&dataset, &rates, zeta, n_test)?;
    timings.stage("outage");

    let dbh = match method {
        Method::Evt => {
            let (map, meta) = io::read_radio_map(run, 0.5)?;
            let (rows, excluded) =
                divergence_map(&dataset, &map.xi_hat, &map.sigma_hat, meta.rho, DBH_TEST_SAMPLES);
            io::write_dbh(out, &rows)?;
            Some((rows, excluded))
        }
        Method::Benchmark => None,
    };
    timings.stage("divergence");

    let echo = request_echo_from_report(run, method, zeta, n_test);
    let report = build_eval_report(
        method.name(),
        &rates,
        &rows,
        dbh.as_ref().map(|(r, e)| (r.as_slice(), *e)),
        &hash,
        echo,
    )?;
    let outage_path = io::write_outage_rows(out, method, &dataset.grid, &rows)?;
    let report_path = out.join(format!("eval_{}.json", method.name()));
    io::write_json(&report_path, &report)?;
    timings.stage("write");

    let manifest = RunManifest {
        subcommand: "evaluate".into(),
        config_path: None,
        seed: Some(dataset.config.seed),
        inputs: vec![run.display().to_string()],
        outputs: vec![
            outage_path.display().to_string(),
            report_path.display().to_string(),
        ],
        dataset_hash: Some(hash),
        timings_ms: timings.finish(),
    };
    io::write_manifest(out, &manifest)?;
    println!(
        "{}: availability {:.2}% | mean rate {:.4} bps/Hz ({} test samples/point)",
        method.name(),
        report.availability_pct,
        report.mean_rate_bpshz,
        n_test,
    );
    Ok(())
}

fn read_rates_checked(
    run: &Path,
    method: Method,
    dataset: &Dataset,
    hash: &str,
) -> Result<RateMap, CliError> {
    let rates = io::read_rate_map(run, method)?;
    if rates.grid.len() != dataset.grid.len() {
        return Err(CliError::Data(format!(
            "rates cover {} points but the grid has {}",
            rates.grid.len(),
            dataset.grid.len(),
        )));
    }
    // When fitted maps are present they must match the dataset bytes.
    if let Ok(meta) = io::read_json::<MapMeta>(&run.join(io::MAP_META_JSON)) {
        if meta.dataset_hash != hash {
            return Err(CliError::Data(format!(
                "maps were fitted on dataset {} but the directory hashes to {}",
                &meta.dataset_hash[..12],
                &hash[..12],
            )));
        }
    }
    Ok(rates)
}

pub fn compare(run: &Path, out: &Path) -> Result<(), CliError> {
    let evt: EvalReport = io::read_json(&run.join("eval_evt.json"))?;
    let bench: EvalReport = io::read_json(&run.join("eval_benchmark.json"))?;
    let summary = compare_report(&evt, &bench)?;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    io::write_json(&out.join("comparison.json"), &summary)?;
    println!(
        "evt vs benchmark: mean rate {:+.2}% | availability {:+.2} pp | evt wins at {:.1}% of points",
        summary.mean_rate_gain_pct,
        summary.availability_diff_pct,
        100.0 * summary.pointwise_win_fraction,
    );
    Ok(())
}

struct SweepRow {
    zeta: f64,
    n: usize,
    seed: u64,
    method: Method,
    status: String,
    availability_pct: Option<f64>,
    mean_rate_bpshz: Option<f64>,
}

fn run_sweep_cell(
    dataset: &Dataset,
    map: Option<&Result<RadioMap, String>>,
    method: Method,
    zeta: f64,
    rho: f64,
    tau: f64,
    delta: f64,
    n_test: usize,
) -> Result<(f64, f64), CliError> {
    let rates = match method {
        Method::Evt => {
            let map = map
                .expect("evt cells need a fitted map")
                .as_ref()
                .map_err(|e| CliError::Numerical(e.clone()))?;
            let request = AllocationRequest::new(zeta, rho, tau);
            allocate_rates_evt(map, &request)?
        }
        Method::Benchmark => {
            allocate_rates_benchmark(&dataset.observed, &dataset.grid, zeta, delta)?
        }
    };
    let rows = evaluate_rate_map(dataset, &rates, zeta, n_test)?;
    let outages: Vec<f64> = rows.iter().map(|r| r.empirical_outage).collect();
    let availability = tailmap_core::eval::availability(&outages, zeta);
    let mean_rate = rates.rate_bpshz.iter().sum::<f64>() / rates.rate_bpshz.len() as f64;
    Ok((availability, mean_rate))
}

#[allow(clippy::too_many_arguments)]
pub fn sweep(
    config: Option<PathBuf>,
    preset: Option<PresetArg>,
    zetas: &[f64],
    ns: &[usize],
    seeds: &[u64],
    methods: &[Method],
    rho: f64,
    tau: f64,
    delta: f64,
    test_n: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    let mut timings = Timings::start();
    let (base_cfg, config_path) = resolve_config(config, preset, None)?;
    if zetas.is_empty() || ns.is_empty() || seeds.is_empty() {
        return Err(CliError::Config(
            "--zetas, --ns, and --seeds must all be nonempty".into(),
        ));
    }
    let mut rows: Vec<SweepRow> = Vec::new();

    for &n in ns {
        for &seed in seeds {
            let mut cfg = base_cfg.clone();
            cfg.n_samples = n;
            cfg.seed = seed;
            let dataset = generate_dataset(&cfg)?;

            // One map fit per (N, seed), shared by every zeta.
            let needs_map = methods.contains(&Method::Evt);
            let map = needs_map.then(|| {
                let request = AllocationRequest::new(1.0 - rho, rho, tau);
                build_tail_maps(&dataset.observed, &dataset.grid, &request)
                    .map_err(|e| e.to_string())
            });

            for &zeta in zetas {
                let n_test = test_n.unwrap_or_else(|| default_test_samples_per_point(zeta));
                for &method in methods {
                    let cell = run_sweep_cell(
                        &dataset,
                        map.as_ref(),
                        method,
                        zeta,
                        rho,
                        tau,
                        delta,
                        n_test,
                    );
                    let row = match cell {
                        Ok((availability, mean_rate)) => SweepRow {
                            zeta,
                            n,
                            seed,
                            method,
                            status: "ok".into(),
                            availability_pct: Some(availability),
                            mean_rate_bpshz: Some(mean_rate),
                        },
                        Err(e) => SweepRow {
                            zeta,
                            n,
                            seed,
                            method,
                            status: match e {
                                CliError::Infeasible(_) => "infeasible".into(),
                                other => format!("error: {}", other.message()),
                            },
                            availability_pct: None,
                            mean_rate_bpshz: None,
                        },
                    };
                    rows.push(row);
                }
            }
        }
    }
    timings.stage("cells");

    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    let sweep_path = out.join("sweep.csv");
    {
        let mut w = csv::Writer::from_path(&sweep_path)
            .map_err(|e| CliError::Io(format!("cannot write sweep.csv: {e}")))?;
        w.write_record([
            "zeta",
            "n",
            "seed",
            "method",
            "status",
            "availability_pct",
            "mean_rate_bpshz",
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
        for r in &rows {
            w.write_record(&[
                r.zeta.to_string(),
                r.n.to_string(),
                r.seed.to_string(),
                r.method.name().to_string(),
                r.status.clone(),
                r.availability_pct.map(|v| v.to_string()).unwrap_or_default(),
                r.mean_rate_bpshz.map(|v| v.to_string()).unwrap_or_default(),
            ])
            .map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }

    // Seed-averaged summary per (zeta, N, method), over ok cells only.
    let summary_path = out.join("sweep_summary.csv");
    {
        let mut w = csv::Writer::from_path(&summary_path)
            .map_err(|e| CliError::Io(format!("cannot write sweep_summary.csv: {e}")))?;
        w.write_record([
            "zeta",
            "n",
            "method",
            "seeds_ok",
            "availability_pct",
            "mean_rate_bpshz",
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
        for &zeta in zetas {
            for &n in ns {
                for &method in methods {
                    let ok: Vec<&SweepRow> = rows
                        .iter()
                        .filter(|r| {
                            r.zeta == zeta && r.n == n && r.method == method && r.status == "ok"
                        })
                        .collect();
                    let (avail, rate) = if ok.is_empty() {
                        (String::new(), String::new())
                    } else {
                        let a = ok.iter().filter_map(|r| r.availability_pct).sum::<f64>()
                            / ok.len() as f64;
                        let m = ok.iter().filter_map(|r| r.mean_rate_bpshz).sum::<f64>()
                            / ok.len() as f64;
                        (a.to_string(), m.to_string())
                    };
                    w.write_record(&[
                        zeta.to_string(),
                        n.to_string(),
                        method.name().to_string(),
                        ok.len().to_string(),
                        avail,
                        rate,
                    ])
                    .map_err(|e| CliError::Io(e.to_string()))?;
                }
            }
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    timings.stage("write");

    let manifest = RunManifest {
        subcommand: "sweep".into(),
        config_path,
        seed: None,
        inputs: vec![],
        outputs: vec![
            sweep_path.display().to_string(),
            summary_path.display().to_string(),
        ],
        dataset_hash: None,
        timings_ms: timings.finish(),
    };
    io::write_manifest(out, &manifest)?;
    let ok = rows.iter().filter(|r| r.status == "ok").count();
    println!(
        "sweep finished: {}/{} cells ok -> {}",
        ok,
        rows.len(),
        sweep_path.display(),
    );
    Ok(())
}
