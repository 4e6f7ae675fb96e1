use std::path::Path;

use eeforecast::models::ModelSpec;
use rayon::prelude::*;

use super::{check_failures, eps_tag, find_regime, regimes, write_run, write_scatter};
use crate::config::ExperimentConfig;
use crate::output::{full, num, write_rows};
use crate::pipeline::{execute, median, RunRequest, RunResult};
use crate::CliError;

/// Parameter-conditioned LSTM trained on one regime and forecasting another.
///
/// The drive strength is a second input feature; during the forecast it is
/// the test regime's value at every step.
pub fn param_switch(cfg: &ExperimentConfig, out: &Path) -> Result<String, CliError> {
    let hash = cfg.hash();
    let mut eps: Vec<f64> = cfg.param_switch.pairs.iter().flatten().copied().collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let regimes = regimes(cfg, &eps)?;
    let spec = ModelSpec {
        window_len: cfg.data.window_len,
        horizon: 1,
        num_features: 2,
        architecture: cfg.param_switch.model.clone(),
    };
    let tasks: Vec<([f64; 2], u64)> = cfg
        .param_switch
        .pairs
        .iter()
        .flat_map(|&pair| cfg.seeds.iter().map(move |&s| (pair, s)))
        .collect();
    let results: Vec<Result<RunResult, CliError>> = tasks
        .par_iter()
        .map(|&([train_eps, test_eps], seed)| {
            execute(
                cfg,
                &RunRequest {
                    experiment: "param-switch".into(),
                    spec: spec.clone(),
                    train_regime: find_regime(&regimes, train_eps),
                    test_regime: find_regime(&regimes, test_eps),
                    n_train: cfg.data.n_train,
                    conditioned: true,
                    seed,
                },
            )
        })
        .collect();

    let dir = out.join("param_switch");
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    let mut by_pair: Vec<([f64; 2], Vec<f64>)> = Vec::new();
    for (&(pair, seed), result) in tasks.iter().zip(results) {
        match result {
            Ok(r) => {
                let stem = format!(
                    "lstm_train{}_test{}_seed{seed}",
                    eps_tag(pair[0]),
                    eps_tag(pair[1])
                );
                write_run(&dir, &stem, &r)?;
                write_scatter(&dir.join(format!("scatter_{stem}.csv")), &r)?;
                rows.push(vec![
                    num(pair[0]),
                    num(pair[1]),
                    seed.to_string(),
                    full(r.summary.rmse),
                    full(r.summary.correlation),
                ]);
                match by_pair.iter_mut().find(|(p, _)| *p == pair) {
                    Some((_, v)) => v.push(r.summary.rmse),
                    None => by_pair.push((pair, vec![r.summary.rmse])),
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    write_rows(
        &dir.join("summary.csv"),
        &hash,
        None,
        &["train_epsilon", "test_epsilon", "seed", "rmse", "pearson_r"],
        &rows,
    )?;
    check_failures(&failures, tasks.len())?;
    let mut text = String::from("train_eps  test_eps  median_rmse\n");
    for (pair, rmses) in by_pair {
        text.push_str(&format!(
            "{:<10} {:<9} {:.4}\n",
            pair[0],
            pair[1],
            median(&rmses)
        ));
    }
    Ok(text)
}
