//! Subcommand implementations. Each writes its outputs under an output
//! directory and returns a short human-readable summary.

mod ablate;
mod param_switch;
mod report;
mod run;
mod simulate;

pub use ablate::{ablate, AblationAxis};
pub use param_switch::param_switch;
pub use report::{report, Report};
pub use run::run;
pub use simulate::simulate;

use std::path::Path;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::output::{num, write_csv, write_json};
use crate::pipeline::{Regime, RunResult};
use crate::CliError;

fn regimes(cfg: &ExperimentConfig, epsilons: &[f64]) -> Result<Vec<Regime>, CliError> {
    epsilons
        .par_iter()
        .map(|&eps| Regime::simulate(cfg, eps))
        .collect()
}

fn find_regime(regimes: &[Regime], eps: f64) -> &Regime {
    regimes
        .iter()
        .find(|r| r.epsilon == eps)
        .expect("regime simulated")
}

/// Writes `<stem>.json` (summary) and `<stem>.csv` (`t,actual,predicted`).
fn write_run(dir: &Path, stem: &str, result: &RunResult) -> Result<(), CliError> {
    let s = &result.summary;
    write_json(&dir.join(format!("{stem}.json")), s)?;
    write_csv(
        &dir.join(format!("{stem}.csv")),
        &s.config_hash,
        Some(s.seed),
        |buf| result.report.write_csv(buf),
    )
}

/// Writes `actual,predicted` scatter data.
fn write_scatter(path: &Path, result: &RunResult) -> Result<(), CliError> {
    let s = &result.summary;
    write_csv(path, &s.config_hash, Some(s.seed), |buf| {
        buf.extend_from_slice(b"actual,predicted\n");
        for (a, p) in result.report.actual.iter().zip(&result.report.predicted) {
            buf.extend_from_slice(format!("{a:.16e},{p:.16e}\n").as_bytes());
        }
        Ok(())
    })
}

fn eps_tag(eps: f64) -> String {
    format!("eps{}", num(eps))
}

/// Reports failed runs on stderr; an error if any failed.
fn check_failures(failures: &[String], total: usize) -> Result<(), CliError> {
    for f in failures {
        eprintln!("run failed: {f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::RunsFailed {
            failed: failures.len(),
            total,
        })
    }
}
