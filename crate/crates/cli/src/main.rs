//! `allocwise`: scripted access to the planner.
//!
//! Exit codes: 0 success, 1 invalid input, 2 inconsistent judgments,
//! 3 non-convergent solver or training, 4 I/O failure.

mod commands;
mod config;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use allocwise_api::{ApiError, ErrorCode};

#[derive(Debug, Parser)]
#[command(name = "allocwise", version, about = "Judgment weighting, tier allocation and demand forecasting")]
pub struct Cli {
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    pub json: bool,

    /// Config file; defaults to ./allocwise.toml when present.
    #[arg(long, global = true, env = "ALLOCWISE_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Scenario and dataset store directory.
    #[arg(long, global = true, env = "ALLOCWISE_STORE", value_name = "DIR")]
    pub store: Option<PathBuf>,

    /// Power-iteration residual tolerance.
    #[arg(long, global = true, env = "ALLOCWISE_AHP_TOLERANCE", value_name = "TOL")]
    pub tolerance: Option<f64>,

    /// Power-iteration iteration cap.
    #[arg(long, global = true, env = "ALLOCWISE_AHP_MAX_ITERATIONS", value_name = "N")]
    pub max_iterations: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Consistency test of a judgment matrix; exits 2 when CR is not below 0.1.
    Check {
        matrix: PathBuf,
        /// Treat off-scale or non-reciprocal entries as errors.
        #[arg(long)]
        strict_scale: bool,
    },
    /// Criterion weights of a judgment matrix.
    Weights { matrix: PathBuf },
    /// Allocation ratio for a scenario file or a stored scenario id.
    Allocate {
        scenario: String,
        #[arg(long, env = "ALLOCWISE_PENALTY_RATE", value_name = "RATE")]
        penalty_rate: Option<f64>,
    },
    /// Train on a cumulative series (CSV file or dataset id) and roll forward.
    Forecast(ForecastArgs),
    /// Import a CSV file into the store as a dataset.
    Import {
        file: PathBuf,
        #[arg(long, value_parser = ["time_series", "feature_table"], default_value = "time_series")]
        kind: String,
        /// Dataset id; defaults to the file stem.
        #[arg(long)]
        id: Option<String>,
    },
    /// Run the HTTP service until interrupted.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    pub series: String,
    #[arg(long, env = "ALLOCWISE_HORIZON")]
    pub horizon: Option<usize>,
    #[arg(long, env = "ALLOCWISE_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "ALLOCWISE_EPOCHS")]
    pub epochs: Option<usize>,
    #[arg(long, env = "ALLOCWISE_HIDDEN_SIZE")]
    pub hidden_size: Option<usize>,
    #[arg(long, env = "ALLOCWISE_LOOKBACK")]
    pub lookback: Option<usize>,
    #[arg(long, env = "ALLOCWISE_LEARNING_RATE")]
    pub learning_rate: Option<f64>,
    /// Plot-data CSV (date, observed, forecast); defaults to <series>-plot.csv.
    #[arg(long, value_name = "FILE")]
    pub plot_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "ALLOCWISE_BIND")]
    pub bind: Option<IpAddr>,
    #[arg(long, env = "ALLOCWISE_PORT")]
    pub port: Option<u16>,
    /// Allowed CORS origin; repeatable. None disables cross-origin access.
    #[arg(long = "cors-origin", env = "ALLOCWISE_CORS_ORIGINS", value_delimiter = ',')]
    pub cors_origins: Vec<String>,
    #[arg(long, env = "ALLOCWISE_FORECAST_TIMEOUT_SECS", value_name = "SECS")]
    pub forecast_timeout_secs: Option<u64>,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Ok = 0,
    Invalid = 1,
    Inconsistent = 2,
    NonConvergent = 3,
    Io = 4,
}

impl Exit {
    pub fn for_code(code: ErrorCode) -> Self {
        match code {
            ErrorCode::NonConvergent => Self::NonConvergent,
            ErrorCode::Internal | ErrorCode::Timeout => Self::Io,
            _ => Self::Invalid,
        }
    }
}

/// A failed command: the exit status plus the body printed for `--json`.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub error: ApiError,
}

impl Failure {
    pub fn io(message: impl Into<String>) -> Self {
        Self {
            exit: Exit::Io,
            error: ApiError::new(ErrorCode::Internal, message),
        }
    }

    pub fn invalid(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            exit: Exit::Invalid,
            error: ApiError::new(code, message),
        }
    }
}

macro_rules! failure_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                let error = ApiError::from(e);
                Self {
                    exit: Exit::for_code(error.code),
                    error,
                }
            }
        }
    )*};
}

failure_from!(
    allocwise_core::AhpError,
    allocwise_core::AllocationError,
    allocwise_core::ForecastError,
    allocwise_core::StoreError
);

impl From<ApiError> for Failure {
    fn from(error: ApiError) -> Self {
        Self {
            exit: Exit::for_code(error.code),
            error,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage errors are invalid input; clap's own status 2 would read as "inconsistent".
            return ExitCode::from(if e.use_stderr() { Exit::Invalid as u8 } else { 0 });
        }
    };
    let json = cli.json;
    let exit = match commands::run(cli) {
        Ok(exit) => exit,
        Err(f) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&f.error).expect("ApiError serializes"));
            }
            eprintln!("error: {}", f.error.message);
            f.exit
        }
    };
    ExitCode::from(exit as u8)
}
