use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mbsts_cli::{commands, CliError, LoadedConfig, Overrides};

/// Multivariate Bayesian structural time series.
///
/// Exit codes: 0 success, 2 invalid input, 3 file error, 4 numeric failure.
#[derive(Parser)]
#[command(name = "mbsts", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known components and coefficients.
    Simulate(Common),
    /// Run the Gibbs sampler on a dataset and summarise the draws.
    Train(Common),
    /// Simulate the posterior predictive distribution ahead of the data.
    Forecast(Common),
    /// Summarise a saved draw file and export its arrays as CSV.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; missing values take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "mbsts-out")]
    out: PathBuf,
    /// Seed for this command's random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Dataset CSV for training: target columns then stacked predictors.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Leading dataset rows used for training.
    #[arg(long)]
    train_rows: Option<usize>,
    /// Number of independent chains (run concurrently).
    #[arg(long)]
    chains: Option<usize>,
    /// Do not retain per-draw state paths.
    #[arg(long)]
    no_states: bool,
    /// Inclusion-probability threshold for summaries.
    #[arg(long)]
    threshold: Option<f64>,
    /// Draw file written by `train`.
    #[arg(long)]
    draws: Option<PathBuf>,
    /// Predictors for the forecast horizon.
    #[arg(long)]
    newdata: Option<PathBuf>,
    /// Observed targets over the forecast horizon.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Forecast horizon.
    #[arg(long)]
    steps: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            steps: self.steps,
            train_rows: self.train_rows,
            threshold: self.threshold,
            chains: self.chains,
            no_states: self.no_states,
            data: self.data.clone(),
            draws: self.draws.clone(),
            newdata: self.newdata.clone(),
            truth: self.truth.clone(),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Simulate(c) | Command::Train(c) | Command::Forecast(c) | Command::Report(c)) = &cli.command;
    let loaded = LoadedConfig::load(c.config.as_deref())?;
    let ov = c.overrides();
    match &cli.command {
        Command::Simulate(_) => commands::simulate(&loaded, &ov, &c.out),
        Command::Train(_) => commands::train(&loaded, &ov, &c.out).map(drop),
        Command::Forecast(_) => commands::forecast(&loaded, &ov, &c.out).map(drop),
        Command::Report(_) => commands::report(&loaded, &ov, &c.out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
