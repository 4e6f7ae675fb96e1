use std::fmt;
use std::path::Path;
use std::str::FromStr;

use eeforecast::models::{Architecture, ModelKind, ModelSpec};
use rayon::prelude::*;

use super::{check_failures, eps_tag, find_regime, regimes};
use crate::config::ExperimentConfig;
use crate::output::{full, num, write_json, write_rows};
use crate::pipeline::{execute, median, RunRequest, RunResult};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationAxis {
    /// Second MLP hidden layer width, first fixed at 8.
    MlpNeurons,
    /// Conv filters on a window of 5 with kernel 2.
    CnnFilters,
    LstmUnits1Layer,
    /// Second LSTM layer width, first fixed at 32.
    LstmUnits2Layer,
    /// Training size, all three models, fixed test split.
    DataSize,
    /// Forecast block length, all three models.
    MultiStep,
}

impl AblationAxis {
    pub const ALL: [AblationAxis; 6] = [
        AblationAxis::MlpNeurons,
        AblationAxis::CnnFilters,
        AblationAxis::LstmUnits1Layer,
        AblationAxis::LstmUnits2Layer,
        AblationAxis::DataSize,
        AblationAxis::MultiStep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationAxis::MlpNeurons => "mlp_neurons",
            AblationAxis::CnnFilters => "cnn_filters",
            AblationAxis::LstmUnits1Layer => "lstm_units_1layer",
            AblationAxis::LstmUnits2Layer => "lstm_units_2layer",
            AblationAxis::DataSize => "data_size",
            AblationAxis::MultiStep => "multi_step",
        }
    }

    fn values(self, cfg: &ExperimentConfig) -> &[usize] {
        let a = &cfg.ablation;
        match self {
            AblationAxis::MlpNeurons => &a.mlp_neurons,
            AblationAxis::CnnFilters => &a.cnn_filters,
            AblationAxis::LstmUnits1Layer => &a.lstm_units_1layer,
            AblationAxis::LstmUnits2Layer => &a.lstm_units_2layer,
            AblationAxis::DataSize => &a.data_size,
            AblationAxis::MultiStep => &a.multi_step,
        }
    }

    /// `(model spec, training size)` for every model swept at `value`.
    fn points(self, cfg: &ExperimentConfig, value: usize) -> Vec<(ModelSpec, usize)> {
        let n = cfg.data.n_train;
        let base = |kind| cfg.model_spec(kind, 1);
        let with = |kind, architecture| ModelSpec {
            architecture,
            ..base(kind)
        };
        match self {
            AblationAxis::MlpNeurons => {
                let first = match &cfg.models.mlp {
                    Architecture::Mlp { hidden } => hidden[0],
                    _ => unreachable!("validated"),
                };
                vec![(
                    with(
                        ModelKind::Mlp,
                        Architecture::Mlp {
                            hidden: vec![first, value],
                        },
                    ),
                    n,
                )]
            }
            AblationAxis::CnnFilters => {
                let Architecture::Cnn { pool, dense, .. } = cfg.models.cnn else {
                    unreachable!("validated")
                };
                let arch = Architecture::Cnn {
                    filters: value,
                    kernel: cfg.ablation.cnn_kernel,
                    pool,
                    dense,
                };
                vec![(
                    ModelSpec {
                        window_len: cfg.ablation.cnn_window,
                        ..with(ModelKind::Cnn, arch)
                    },
                    n,
                )]
            }
            AblationAxis::LstmUnits1Layer => {
                vec![(
                    with(ModelKind::Lstm, Architecture::Lstm { units: vec![value] }),
                    n,
                )]
            }
            AblationAxis::LstmUnits2Layer => {
                let first = match &cfg.models.lstm {
                    Architecture::Lstm { units } => units[0],
                    _ => unreachable!("validated"),
                };
                vec![(
                    with(
                        ModelKind::Lstm,
                        Architecture::Lstm {
                            units: vec![first, value],
                        },
                    ),
                    n,
                )]
            }
            AblationAxis::DataSize => ModelKind::ALL.iter().map(|&k| (base(k), value)).collect(),
            AblationAxis::MultiStep => ModelKind::ALL
                .iter()
                .map(|&k| {
                    (
                        ModelSpec {
                            horizon: value,
                            ..base(k)
                        },
                        n,
                    )
                })
                .collect(),
        }
    }
}

impl fmt::Display for AblationAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for AblationAxis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        AblationAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = AblationAxis::ALL.iter().map(|a| a.name()).collect();
                CliError::Usage(format!(
                    "unknown ablation axis {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

struct Task {
    value: usize,
    spec: ModelSpec,
    n_train: usize,
    eps: f64,
    seed: u64,
}

/// Sweeps one axis over the ablation regimes and writes
/// `ablation/<axis>.csv` with one row per (value, model, ε).
/// `(value index, model, epsilon, per-seed rmse)`.
type AxisCell = (usize, String, f64, Vec<(u64, f64)>);

pub fn ablate(cfg: &ExperimentConfig, axis: AblationAxis, out: &Path) -> Result<String, CliError> {
    let hash = cfg.hash();
    let values = axis.values(cfg);
    if values.is_empty() {
        return Err(CliError::Config(format!("no sweep values for axis {axis}")));
    }
    let regimes = regimes(cfg, &cfg.ablation.epsilons)?;
    let mut tasks = Vec::new();
    for &value in values {
        for (spec, n_train) in axis.points(cfg, value) {
            for &eps in &cfg.ablation.epsilons {
                for &seed in &cfg.seeds {
                    tasks.push(Task {
                        value,
                        spec: spec.clone(),
                        n_train,
                        eps,
                        seed,
                    });
                }
            }
        }
    }
    let results: Vec<Result<RunResult, CliError>> = tasks
        .par_iter()
        .map(|t| {
            let regime = find_regime(&regimes, t.eps);
            execute(
                cfg,
                &RunRequest {
                    experiment: format!("ablate:{axis}"),
                    spec: t.spec.clone(),
                    train_regime: regime,
                    test_regime: regime,
                    n_train: t.n_train,
                    conditioned: false,
                    seed: t.seed,
                },
            )
        })
        .collect();

    let dir = out.join("ablation").join(axis.name());
    let mut failures = Vec::new();
    let mut cells: Vec<AxisCell> = Vec::new();
    for (t, result) in tasks.iter().zip(results) {
        match result {
            Ok(r) => {
                let kind = t.spec.kind();
                let stem = format!("{kind}_v{}_{}_seed{}", t.value, eps_tag(t.eps), t.seed);
                write_json(&dir.join(format!("{stem}.json")), &r.summary)?;
                let key = (t.value, kind.to_string(), t.eps);
                match cells.iter_mut().find(|c| (c.0, c.1.clone(), c.2) == key) {
                    Some(c) => c.3.push((t.seed, r.summary.rmse)),
                    None => cells.push((key.0, key.1, key.2, vec![(t.seed, r.summary.rmse)])),
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }

    let mut rows = Vec::new();
    let mut text = format!("{axis}\nvalue  model  epsilon  median_rmse\n");
    for (value, model, eps, runs) in &cells {
        let rmses: Vec<f64> = runs.iter().map(|r| r.1).collect();
        let m = median(&rmses);
        text.push_str(&format!("{value:<6} {model:<6} {eps:<8} {m:.4}\n"));
        rows.push(vec![
            axis.name().to_string(),
            value.to_string(),
            model.clone(),
            num(*eps),
            full(m),
            runs.len().to_string(),
            runs.iter()
                .map(|r| r.0.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            rmses.iter().map(|&r| full(r)).collect::<Vec<_>>().join(";"),
        ]);
    }
    write_rows(
        &out.join("ablation").join(format!("{axis}.csv")),
        &hash,
        None,
        &[
            "axis",
            "value",
            "model",
            "epsilon",
            "median_rmse",
            "n_seeds",
            "seeds",
            "rmses",
        ],
        &rows,
    )?;
    check_failures(&failures, tasks.len())?;
    Ok(text)
}
