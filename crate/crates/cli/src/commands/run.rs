use std::path::Path;

use eeforecast::models::ModelKind;
use rayon::prelude::*;

use super::{check_failures, eps_tag, find_regime, regimes, write_run, write_scatter};
use crate::config::ExperimentConfig;
use crate::output::{full, num, write_rows};
use crate::pipeline::{execute, median, median_index, RunRequest, RunResult};
use crate::CliError;

/// Trains every model on every regime for every seed and forecasts the
/// test split.
///
/// Writes `runs/<model>_<eps>_seed<s>.{json,csv}`, the per-(model, ε)
/// median RMSE table `fig10_rmse.csv`, and one `actual,predicted` scatter
/// file per (model, ε) under `scatter/`, taken from the median-RMSE seed.
/// Failed runs are reported and skipped.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<String, CliError> {
    let hash = cfg.hash();
    let regimes = regimes(cfg, &cfg.system.epsilons)?;
    let tasks: Vec<(ModelKind, f64, u64)> = ModelKind::ALL
        .iter()
        .flat_map(|&k| {
            cfg.system
                .epsilons
                .iter()
                .flat_map(move |&e| cfg.seeds.iter().map(move |&s| (k, e, s)))
        })
        .collect();

    let results: Vec<Result<RunResult, CliError>> = tasks
        .par_iter()
        .map(|&(kind, eps, seed)| {
            let regime = find_regime(&regimes, eps);
            execute(
                cfg,
                &RunRequest {
                    experiment: "run".into(),
                    spec: cfg.model_spec(kind, 1),
                    train_regime: regime,
                    test_regime: regime,
                    n_train: cfg.data.n_train,
                    conditioned: false,
                    seed,
                },
            )
        })
        .collect();

    let runs_dir = out.join("runs");
    let mut failures = Vec::new();
    let mut done: Vec<(ModelKind, f64, RunResult)> = Vec::new();
    for (&(kind, eps, seed), result) in tasks.iter().zip(results) {
        match result {
            Ok(r) => {
                write_run(
                    &runs_dir,
                    &format!("{kind}_{}_seed{seed}", eps_tag(eps)),
                    &r,
                )?;
                done.push((kind, eps, r));
            }
            Err(e) => failures.push(e.to_string()),
        }
    }

    let mut rows = Vec::new();
    let mut text = String::from("model  epsilon  median_rmse  seeds\n");
    for kind in ModelKind::ALL {
        for &eps in &cfg.system.epsilons {
            let cell: Vec<&RunResult> = done
                .iter()
                .filter(|(k, e, _)| *k == kind && *e == eps)
                .map(|(_, _, r)| r)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let rmses: Vec<f64> = cell.iter().map(|r| r.summary.rmse).collect();
            let seeds: Vec<String> = cell.iter().map(|r| r.summary.seed.to_string()).collect();
            let m = median(&rmses);
            text.push_str(&format!(
                "{:<6} {:<8} {:<12.4} {}\n",
                kind,
                eps,
                m,
                seeds.join(";")
            ));
            rows.push(vec![
                kind.to_string(),
                num(eps),
                full(m),
                cell.len().to_string(),
                seeds.join(";"),
            ]);
            let pick = cell[median_index(&rmses).expect("nonempty")];
            write_scatter(
                &out.join(format!("scatter/fig11_{kind}_{}.csv", eps_tag(eps))),
                pick,
            )?;
        }
    }
    write_rows(
        &out.join("fig10_rmse.csv"),
        &hash,
        None,
        &["model", "epsilon", "median_rmse", "n_seeds", "seeds"],
        &rows,
    )?;
    check_failures(&failures, tasks.len())?;
    Ok(text)
}
