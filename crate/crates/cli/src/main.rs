//! Batch front end for the tailmap pipeline.
//!
//! Subcommands: `generate`, `fit-maps`, `allocate`, `evaluate`, `compare`,
//! `sweep`. Every run is reproducible from its config and seed; each
//! subcommand writes a manifest listing inputs, outputs, the dataset hash,
//! and stage timings.

mod commands;
mod error;

use clap::{Parser, Subcommand, ValueEnum};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;
use tailmap_core::alloc::Method;

#[derive(Parser)]
#[command(name = "tailmap", version, about = "Outage-constrained rate maps from spatially kriged SNR tail fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    /// 40x40 grid, M=100, N=1e4: completes a full pipeline in seconds.
    Desk,
    /// 120x120 grid, M=500, N=1e5: full-scale run, minutes to hours.
    Paper,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Evt,
    Benchmark,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Evt => Method::Evt,
            MethodArg::Benchmark => Method::Benchmark,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (grid, ground truth, measurements).
    Generate {
        /// Scenario config JSON; overrides --preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Overrides the seed from the config/preset.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit per-site tails and krige the three parameter maps.
    FitMaps {
        /// Directory holding a generated dataset.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.99)]
        rho: f64,
        /// Output directory (defaults to --data).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Select the maximum rate meeting the outage target at every grid point.
    Allocate {
        /// Run directory holding the dataset (and fitted maps for evt).
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        zeta: f64,
        /// Margin level for the threshold map (evt only).
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Meta-probability margin (benchmark only).
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score allocated rates against streamed ground-truth test samples.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        zeta: f64,
        /// Test samples per grid point (default: max(1e5, 100/zeta)).
        #[arg(long)]
        test_n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the evaluation reports of both methods.
    Compare {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep (zeta, N, seed, method) cells and aggregate availability and
    /// mean rate.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long, value_delimiter = ',', required = true)]
        zetas: Vec<f64>,
        /// Sample counts N to sweep.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        /// Methods to run (default: both).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<MethodArg>,
        #[arg(long, default_value_t = 0.99)]
        rho: f64,
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        /// Test samples per grid point (default: max(1e5, 100/zeta)).
        #[arg(long)]
        test_n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            config,
            preset,
            seed,
            out,
        } => commands::generate(config, preset, seed, &out),
        Command::FitMaps { data, rho, out } => {
            commands::fit_maps(&data, rho, out.as_deref().unwrap_or(&data))
        }
        Command::Allocate {
            run,
            zeta,
            tau,
            method,
            delta,
            out,
        } => commands::allocate(
            &run,
            zeta,
            tau,
            method.into(),
            delta,
            out.as_deref().unwrap_or(&run),
        ),
        Command::Evaluate {
            run,
            method,
            zeta,
            test_n,
            out,
        } => commands::evaluate(
            &run,
            method.into(),
            zeta,
            test_n,
            out.as_deref().unwrap_or(&run),
        ),
        Command::Compare { run, out } => commands::compare(&run, out.as_deref().unwrap_or(&run)),
        Command::Sweep {
            config,
            preset,
            zetas,
            ns,
            seeds,
            methods,
            rho,
            tau,
            delta,
            test_n,
            out,
        } => {
            let methods: Vec<Method> = if methods.is_empty() {
                vec![Method::Evt, Method::Benchmark]
            } else {
                methods.into_iter().map(Method::from).collect()
            };
            commands::sweep(
                config, preset, &zetas, &ns, &seeds, &methods, rho, tau, delta, test_n, &out,
            )
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

pub(crate) use Preset as PresetArg;

pub(crate) fn preset_config(preset: Preset) -> tailmap_core::synth::ScenarioConfig {
    match preset {
        Preset::Desk => tailmap_core::synth::ScenarioConfig::desk(),
        Preset::Paper => tailmap_core::synth::ScenarioConfig::paper(),
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> ExitCode {
        ExitCode::from(e.exit_code())
    }
}
