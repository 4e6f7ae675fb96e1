use std::path::Path;

use eeforecast::dynamics::classify_extremes;
use serde::Serialize;

use super::{eps_tag, regimes};
use crate::config::ExperimentConfig;
use crate::output::{write_csv, write_json};
use crate::CliError;

#[derive(Debug, Serialize)]
struct RegimeSummary {
    epsilon: f64,
    samples: usize,
    peak_count: usize,
    mean_peak: f64,
    std_peak: f64,
    threshold: f64,
    extreme_events: usize,
    max_value: f64,
    trajectory_file: String,
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    config_hash: String,
    observable: eeforecast::dynamics::Observable,
    regimes: Vec<RegimeSummary>,
}

/// One trajectory CSV per regime plus `simulate_summary.json`.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<String, CliError> {
    let hash = cfg.hash();
    let regimes = regimes(cfg, &cfg.system.epsilons)?;
    let mut summary = SimulateSummary {
        config_hash: hash.clone(),
        observable: cfg.integrator.observable,
        regimes: Vec::new(),
    };
    let mut text = String::from("epsilon  peaks   mean     std      x_ee     events  max\n");

    for r in &regimes {
        let file = format!("trajectories/{}.csv", eps_tag(r.epsilon));
        write_csv(&out.join(&file), &hash, None, |buf| {
            r.trajectory.write_csv(buf)
        })?;
        let (events, _) = classify_extremes(&r.stats.peaks, r.stats.threshold);
        let max_value = r
            .trajectory
            .series(cfg.integrator.observable)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        text.push_str(&format!(
            "{:<8} {:<7} {:<8.4} {:<8.4} {:<8.4} {:<7} {:.4}\n",
            r.epsilon,
            r.stats.peaks.len(),
            r.stats.mean_peak,
            r.stats.std_peak,
            r.stats.threshold,
            events,
            max_value
        ));
        summary.regimes.push(RegimeSummary {
            epsilon: r.epsilon,
            samples: r.trajectory.len(),
            peak_count: r.stats.peaks.len(),
            mean_peak: r.stats.mean_peak,
            std_peak: r.stats.std_peak,
            threshold: r.stats.threshold,
            extreme_events: events,
            max_value,
            trajectory_file: file,
        });
    }
    write_json(&out.join("simulate_summary.json"), &summary)?;
    Ok(text)
}
