//! One regime's data preparation and one train-then-forecast run.

use std::time::Instant;

use eeforecast::dataset::{
    augment_with_parameter, fit_scaler, frame_supervised, split, ParameterEncoding,
};
use eeforecast::dynamics::{integrate, peak_statistics, PeakStatistics, Trajectory};
use eeforecast::forecast::{
    multi_step_forecast, train, walk_forward, FeedbackMode, ForecastInput, ForecastReport,
};
use eeforecast::models::{Architecture, Model, ModelKind, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

/// A simulated regime with its train/test split.
#[derive(Debug, Clone)]
pub struct Regime {
    pub epsilon: f64,
    pub trajectory: Trajectory,
    pub train: Vec<f64>,
    pub test: Vec<f64>,
    /// Peak statistics of the whole stored trajectory.
    pub stats: PeakStatistics,
    /// Peak statistics restricted to the training window; event thresholds
    /// for forecasts come from here.
    pub train_stats: PeakStatistics,
    pub test_t0: f64,
}

impl Regime {
    pub fn simulate(cfg: &ExperimentConfig, epsilon: f64) -> Result<Self, CliError> {
        let label = format!("regime eps={epsilon}");
        let ctx = |e| CliError::core(label.clone(), e);
        let ic = &cfg.integrator;
        let trajectory = integrate(
            &cfg.system.params(epsilon),
            &ic.initial_state(),
            cfg.t_end(),
            ic.dt,
            ic.sample_interval,
            ic.transient,
        )
        .map_err(ctx)?;
        let series = trajectory.series(ic.observable);
        let (train, test) = split(&series, cfg.data.n_train, cfg.data.n_test).map_err(ctx)?;
        let peaks = trajectory.peaks(ic.observable).map_err(ctx)?;
        let stats = peak_statistics(&peaks).map_err(ctx)?;
        let t_train_end = trajectory.samples[cfg.data.n_train - 1].t;
        let train_peaks: Vec<_> = peaks
            .iter()
            .copied()
            .filter(|p| p.t <= t_train_end)
            .collect();
        let train_stats = peak_statistics(&train_peaks).map_err(ctx)?;
        let test_t0 = trajectory.samples[cfg.data.n_train].t;
        Ok(Regime {
            epsilon,
            trajectory,
            train,
            test,
            stats,
            train_stats,
            test_t0,
        })
    }
}

/// Everything needed for one run besides the shared configuration.
#[derive(Debug, Clone)]
pub struct RunRequest<'a> {
    pub experiment: String,
    pub spec: ModelSpec,
    pub train_regime: &'a Regime,
    pub test_regime: &'a Regime,
    /// Training points taken from the end of the training split.
    pub n_train: usize,
    /// Adds the regime parameter as a second input feature.
    pub conditioned: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub experiment: String,
    pub model: ModelKind,
    pub architecture: Architecture,
    pub window_len: usize,
    pub horizon: usize,
    pub num_features: usize,
    pub epsilon: f64,
    pub test_epsilon: f64,
    pub seed: u64,
    pub n_train: usize,
    pub parameter_encoding: Option<ParameterEncoding>,
    pub final_loss: f64,
    pub loss_history: Vec<f64>,
    pub rmse: f64,
    /// RMSE of the same model with true values fed back, for one-step runs.
    pub rmse_actual_feedback: Option<f64>,
    pub correlation: f64,
    pub forecast: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub report: ForecastReport,
}

pub fn execute(cfg: &ExperimentConfig, req: &RunRequest<'_>) -> Result<RunResult, CliError> {
    let label = format!(
        "{} {} eps={}→{} seed={}",
        req.experiment,
        req.spec.kind(),
        req.train_regime.epsilon,
        req.test_regime.epsilon,
        req.seed
    );
    let ctx = |e| CliError::core(label.clone(), e);
    let started = Instant::now();

    let full = &req.train_regime.train;
    if req.n_train == 0 || req.n_train > full.len() {
        return Err(CliError::Config(format!(
            "{label}: training size {} outside 1..={}",
            req.n_train,
            full.len()
        )));
    }
    let train_series = &full[full.len() - req.n_train..];
    let scaler = fit_scaler(train_series, cfg.data.scale_lo, cfg.data.scale_hi).map_err(ctx)?;
    let mut dataset = frame_supervised(
        &scaler.transform(train_series),
        req.spec.window_len,
        req.spec.horizon,
    )
    .map_err(ctx)?;
    let encoding = if req.conditioned {
        let enc = ParameterEncoding::fit(&[req.train_regime.epsilon]).map_err(ctx)?;
        dataset =
            augment_with_parameter(&dataset, enc.encode(req.train_regime.epsilon)).map_err(ctx)?;
        Some(enc)
    } else {
        None
    };

    let mut model = Model::new(req.spec.clone(), req.seed).map_err(ctx)?;
    let train_cfg = eeforecast::forecast::TrainConfig {
        seed: req.seed,
        ..cfg.train
    };
    let loss_history = train(&mut model, &dataset, &train_cfg).map_err(ctx)?;

    let input = ForecastInput {
        history: &req.test_regime.train,
        actual: &req.test_regime.test,
        scaler: &scaler,
        parameter: encoding.as_ref().map(|e| e.encode(req.test_regime.epsilon)),
        t_start: req.test_regime.test_t0,
        dt: cfg.integrator.sample_interval,
    };
    let n_steps = req.test_regime.test.len();
    let (mut report, rmse_actual_feedback) = if req.spec.horizon > 1 {
        (
            multi_step_forecast(&model, &input, n_steps).map_err(ctx)?,
            None,
        )
    } else {
        let main = walk_forward(&model, &input, n_steps, cfg.forecast.feedback).map_err(ctx)?;
        let teacher = match cfg.forecast.feedback {
            FeedbackMode::Actual => main.rmse,
            FeedbackMode::Predicted => {
                walk_forward(&model, &input, n_steps, FeedbackMode::Actual)
                    .map_err(ctx)?
                    .rmse
            }
        };
        (main, Some(teacher))
    };
    report.seed = Some(req.seed);
    report.annotate_events(
        req.test_regime.train_stats.threshold,
        cfg.forecast.match_window,
    );

    let summary = RunSummary {
        config_hash: cfg.hash(),
        experiment: req.experiment.clone(),
        model: req.spec.kind(),
        architecture: req.spec.architecture.clone(),
        window_len: req.spec.window_len,
        horizon: req.spec.horizon,
        num_features: req.spec.num_features,
        epsilon: req.train_regime.epsilon,
        test_epsilon: req.test_regime.epsilon,
        seed: req.seed,
        n_train: req.n_train,
        parameter_encoding: encoding,
        final_loss: *loss_history.last().expect("at least one epoch"),
        loss_history,
        rmse: report.rmse,
        rmse_actual_feedback,
        correlation: report.correlation(),
        forecast: report.summary_json().map_err(ctx)?,
    };
    eprintln!(
        "{label}: rmse {:.4} in {:.1}s",
        report.rmse,
        started.elapsed().as_secs_f64()
    );
    Ok(RunResult { summary, report })
}

/// Median; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Index of the lower-median element.
pub fn median_index(values: &[f64]) -> Option<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx.get((values.len().max(1) - 1) / 2).copied()
}
