use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eeforecast_cli::commands::{self, AblationAxis};
use eeforecast_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "eeforecast",
    version,
    about = "Extreme-event forecasting experiments"
)]
struct Cli {
    /// TOML experiment configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir` from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated training seeds, e.g. `1,2,3`.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate every regime and summarize its peak statistics.
    Simulate,
    /// Train and forecast every model on every regime.
    Run,
    /// Train a parameter-conditioned LSTM on one regime, forecast another.
    ParamSwitch,
    /// Sweep one architecture or data axis.
    Ablate {
        /// mlp_neurons, cnn_filters, lstm_units_1layer, lstm_units_2layer, data_size or multi_step.
        #[arg(long)]
        axis: String,
    },
    /// Consolidate the run reports in a directory.
    Report {
        /// Run directory; defaults to the output directory.
        dir: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seeds) = cli.seeds {
        cfg.seeds = seeds;
    }
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    cfg.validate()?;
    let out = cfg.out_dir.clone();
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Run => commands::run(&cfg, &out),
        Command::ParamSwitch => commands::param_switch(&cfg, &out),
        Command::Ablate { axis } => commands::ablate(&cfg, axis.parse::<AblationAxis>()?, &out),
        Command::Report { dir } => Ok(commands::report(&dir.unwrap_or(out))?.table()),
        Command::Config => Ok(cfg.to_toml()),
    }
}
