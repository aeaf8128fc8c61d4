//! Error classification for process exit codes.

use tailmap_core::alloc::AllocError;
use tailmap_core::eval::EvalError;
use tailmap_core::evt::EvtError;
use tailmap_core::geo::GridError;
use tailmap_core::gp::GpError;
use tailmap_core::io::IoError;
use tailmap_core::synth::SynthError;

/// Exit codes: 0 success, 1 I/O, 2 configuration, 3 infeasibility,
/// 4 numerical failure, 5 data/hash mismatch.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Numerical(String),
    Data(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Data(_) => 5,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Infeasible(m)
            | CliError::Numerical(m)
            | CliError::Data(m)
            | CliError::Io(m) => m,
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::FieldFactorization => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        match e {
            GpError::FactorizationFailed { .. } | GpError::SingularFit => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EvtError> for CliError {
    fn from(e: EvtError) -> Self {
        match e {
            EvtError::NonConvergence { .. } | EvtError::NonFiniteIntegrand => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<AllocError> for CliError {
    fn from(e: AllocError) -> Self {
        match e {
            AllocError::ZetaExceedsTailFraction { .. } | AllocError::BenchmarkInfeasible { .. } => {
                CliError::Infeasible(e.to_string())
            }
            AllocError::Gp(inner) => CliError::from(inner),
            AllocError::Evt(inner) => CliError::from(inner),
            AllocError::AllSitesFailed { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::HashMismatch { .. } => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Missing { .. } | IoError::Malformed { .. } => CliError::Data(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}
