use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::PhiRange;

const AFTER_HELP: &str = "\
Settings are resolved in order of precedence: command-line flags, then keys
of the --config TOML file (same names with underscores, e.g. gamma_deg,
phi_deg_range = \"45.5:55:0.5\", n_list = [1, 4], mode = [\"iterative\"]),
then built-in defaults. Unknown config keys are rejected.

Angles are in degrees. WVA_LAB_THREADS caps the worker threads; output does
not depend on it.

Exit codes: 0 success, 1 verification failure, 2 configuration or i/o error,
3 weakness condition violated (--strict-weakness), 4 statistically
insufficient input.";

#[derive(Debug, Parser)]
#[command(name = "wva-lab", version, about = "Weak-value amplification experiments", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Readout and detection probability over a grid of post-selection angles
    Sweep,
    /// Detection probability against N, with optional Monte Carlo columns
    Scaling,
    /// Monte Carlo estimation of the coupling and log-log precision slopes
    Estimate,
    /// Entangled/iterative equivalence and apparatus/model agreement checks
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Scaling => "scaling",
            Command::Estimate => "estimate",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Iterative,
    Entangled,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    /// Invert the exact readout curve
    Exact,
    /// Invert the first-order readout
    Linear,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// TOML file with default settings
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output file (standard output when absent)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Coupling strength in degrees
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    pub gamma_deg: Option<f64>,
    /// Post-selection angles as LO:HI:STEP in degrees
    #[arg(long, global = true, value_name = "LO:HI:STEP")]
    pub phi_deg_range: Option<PhiRange>,
    /// Comma-separated interaction counts
    #[arg(long, global = true, value_name = "1,2,4", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Magnitude of the effective weak value; selects designed states over
    /// the apparatus settings in `scaling`
    #[arg(long, global = true, value_name = "F")]
    pub target_aw: Option<f64>,
    /// Monte Carlo trials per N
    #[arg(long, global = true, value_name = "U")]
    pub trials: Option<usize>,
    /// Photons sent per post-selected shot
    #[arg(long, global = true, value_name = "U")]
    pub photons: Option<u64>,
    /// Comma-separated measurement schemes
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    pub mode: Option<Vec<Mode>>,
    /// Reject any N violating the weak-interaction condition
    #[arg(long, global = true)]
    pub strict_weakness: bool,
    /// Bound on both weakness ratios in strict mode
    #[arg(long, global = true, value_name = "F")]
    pub weakness_threshold: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub estimator: Option<EstimatorChoice>,
    /// Random instances checked by `verify`
    #[arg(long, global = true, value_name = "U")]
    pub cases: Option<usize>,
    /// Perturb the entangled post-selection state by this amount in `verify`
    #[arg(long, global = true, value_name = "F")]
    pub fault: Option<f64>,
}
