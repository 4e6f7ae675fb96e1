//! Training, walk-forward forecasting and forecast metrics.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{MinMaxScaler, SupervisedDataset};
use crate::dynamics::{classify_extremes, detect_peaks, fmt_f64};
use crate::models::Model;
use crate::neuralcore::{adam_update, AdamConfig, AdamState, Tensor};
use crate::{Error, Result};

/// Default half-width of the event-matching window, in time units.
pub const DEFAULT_MATCH_WINDOW: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle: bool,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 250,
            batch_size: 64,
            shuffle: true,
            seed: 1,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::domain("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch_size must be at least 1"));
        }
        Ok(())
    }
}

fn gather(dataset: &SupervisedDataset, indices: &[usize]) -> (Tensor, Tensor) {
    let width = dataset.input_width();
    let mut x = Vec::with_capacity(indices.len() * width);
    let mut y = Vec::with_capacity(indices.len() * dataset.horizon);
    for &i in indices {
        x.extend_from_slice(dataset.input(i));
        y.extend_from_slice(dataset.target(i));
    }
    (
        Tensor::new(
            vec![indices.len(), dataset.window_len, dataset.num_features],
            x,
        )
        .unwrap(),
        Tensor::new(vec![indices.len(), dataset.horizon], y).unwrap(),
    )
}

/// Mini-batch Adam on the batch MSE for `cfg.epochs` full passes.
///
/// Returns the per-epoch mean training loss (weighted by batch size).
/// Shuffling uses its own stream derived from `cfg.seed`, so the run is
/// reproducible bit for bit.
pub fn train(
    model: &mut Model,
    dataset: &SupervisedDataset,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::domain("training dataset is empty"));
    }
    let spec = &model.spec;
    if (dataset.window_len, dataset.horizon, dataset.num_features)
        != (spec.window_len, spec.horizon, spec.num_features)
    {
        return Err(Error::shape(format!(
            "dataset (window {}, horizon {}, features {}) does not fit model (window {}, horizon {}, features {})",
            dataset.window_len,
            dataset.horizon,
            dataset.num_features,
            spec.window_len,
            spec.horizon,
            spec.num_features
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut adam = AdamState::new(cfg.adam);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for (batch, indices) in order.chunks(cfg.batch_size).enumerate() {
            let (x, y) = gather(dataset, indices);
            let (loss, grads) = match model.network.loss_and_gradients(&x, &y) {
                Err(Error::NonFinite { .. }) => {
                    return Err(Error::TrainingDiverged { epoch, batch })
                }
                other => other?,
            };
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, batch });
            }
            total += loss * indices.len() as f64;
            adam_update(
                &mut model.network.parameters_mut(),
                grads.tensors(),
                &mut adam,
            )?;
        }
        history.push(total / dataset.len() as f64);
    }
    Ok(history)
}

/// Anything that maps one normalized input window to `horizon` values.
pub trait Predictor {
    fn window_len(&self) -> usize;
    fn horizon(&self) -> usize;
    fn num_features(&self) -> usize {
        1
    }
    /// `window` is `(window_len, num_features)` row-major.
    fn predict_window(&self, window: &[f64]) -> Result<Vec<f64>>;
}

impl Predictor for Model {
    fn window_len(&self) -> usize {
        self.spec.window_len
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn num_features(&self) -> usize {
        self.spec.num_features
    }

    fn predict_window(&self, window: &[f64]) -> Result<Vec<f64>> {
        let x = Tensor::from_slice(&[1, self.spec.window_len, self.spec.num_features], window)?;
        Ok(self.predict(&x)?.into_data())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMode {
    /// The model's own output is appended to the rolling input.
    #[default]
    Predicted,
    /// The true value is appended (teacher forcing).
    Actual,
}

impl std::str::FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predicted" => Ok(FeedbackMode::Predicted),
            "actual" => Ok(FeedbackMode::Actual),
            other => Err(Error::domain(format!("unknown feedback mode {other:?}"))),
        }
    }
}

/// Everything a forecast needs besides the model.
#[derive(Debug, Clone, Copy)]
pub struct ForecastInput<'a> {
    /// Raw values immediately preceding the forecast window.
    pub history: &'a [f64],
    /// Raw ground truth for the forecast window.
    pub actual: &'a [f64],
    pub scaler: &'a MinMaxScaler,
    /// Encoded conditioning parameter appended to every input step.
    pub parameter: Option<f64>,
    /// Time stamp of the first forecast value.
    pub t_start: f64,
    pub dt: f64,
}

impl ForecastInput<'_> {
    fn check<P: Predictor + ?Sized>(&self, model: &P, n_steps: usize) -> Result<()> {
        if n_steps == 0 {
            return Err(Error::domain("n_steps must be at least 1"));
        }
        if self.history.len() < model.window_len() {
            return Err(Error::domain(format!(
                "history of {} values is shorter than the input window {}",
                self.history.len(),
                model.window_len()
            )));
        }
        if self.actual.len() < n_steps {
            return Err(Error::domain(format!(
                "{n_steps} forecast steps requested but only {} actual values supplied",
                self.actual.len()
            )));
        }
        let features = 1 + usize::from(self.parameter.is_some());
        if features != model.num_features() {
            return Err(Error::shape(format!(
                "model takes {} features per step, input provides {features}",
                model.num_features()
            )));
        }
        Ok(())
    }

    fn window(&self, rolling: &[f64], window_len: usize) -> Vec<f64> {
        let tail = &rolling[rolling.len() - window_len..];
        match self.parameter {
            None => tail.to_vec(),
            Some(p) => tail.iter().flat_map(|&x| [x, p]).collect(),
        }
    }
}

/// Events found on the predicted and actual series, and how they match up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventOutcomes {
    pub threshold: f64,
    pub match_window: f64,
    pub predicted_events: Vec<f64>,
    pub actual_events: Vec<f64>,
    pub hits: usize,
    pub misses: usize,
    pub false_alarms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub times: Vec<f64>,
    /// De-normalized forecast.
    pub predicted: Vec<f64>,
    pub actual: Vec<f64>,
    pub rmse: f64,
    pub feedback_mode: FeedbackMode,
    /// Values produced per model call.
    pub horizon: usize,
    pub seed: Option<u64>,
    pub events: Option<EventOutcomes>,
    /// Not serialized, so that reports are byte-reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Serialize)]
struct ReportSummary<'a> {
    n_steps: usize,
    rmse: f64,
    feedback_mode: FeedbackMode,
    horizon: usize,
    seed: Option<u64>,
    events: &'a Option<EventOutcomes>,
}

impl ForecastReport {
    fn build(
        input: &ForecastInput<'_>,
        predicted_norm: &[f64],
        feedback_mode: FeedbackMode,
        horizon: usize,
        started: Instant,
    ) -> Result<Self> {
        let n = predicted_norm.len();
        let predicted = input.scaler.inverse_transform(predicted_norm);
        let actual = input.actual[..n].to_vec();
        let rmse = rmse(&predicted, &actual)?;
        Ok(ForecastReport {
            times: (0..n)
                .map(|i| input.t_start + i as f64 * input.dt)
                .collect(),
            predicted,
            actual,
            rmse,
            feedback_mode,
            horizon,
            seed: None,
            events: None,
            wall_time: started.elapsed(),
        })
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    /// Recomputes the RMSE from the stored series.
    pub fn recompute_rmse(&self) -> Result<f64> {
        rmse(&self.predicted, &self.actual)
    }

    /// Runs event detection and matching and stores the outcome.
    pub fn annotate_events(&mut self, threshold: f64, match_window: f64) {
        self.events = Some(event_outcomes(self, threshold, match_window));
    }

    /// Pearson correlation between actual and predicted values.
    pub fn correlation(&self) -> f64 {
        pearson(&self.actual, &self.predicted)
    }

    /// Metadata and metrics as JSON (series go to CSV).
    pub fn summary_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(ReportSummary {
            n_steps: self.len(),
            rmse: self.rmse,
            feedback_mode: self.feedback_mode,
            horizon: self.horizon,
            seed: self.seed,
            events: &self.events,
        })?)
    }

    /// Rows of `t,actual,predicted` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "actual", "predicted"])?;
        for ((t, a), p) in self.times.iter().zip(&self.actual).zip(&self.predicted) {
            w.write_record([fmt_f64(*t), fmt_f64(*a), fmt_f64(*p)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Iterated one-step forecasting over `n_steps` values.
///
/// After each step either the prediction or the true value (both normalized)
/// is appended to the rolling input, depending on `feedback`.
pub fn walk_forward<P: Predictor + ?Sized>(
    model: &P,
    input: &ForecastInput<'_>,
    n_steps: usize,
    feedback: FeedbackMode,
) -> Result<ForecastReport> {
    let started = Instant::now();
    input.check(model, n_steps)?;
    let window_len = model.window_len();
    let mut rolling = input.scaler.transform(input.history);
    let mut predicted = Vec::with_capacity(n_steps);
    for step in 0..n_steps {
        let out = model.predict_window(&input.window(&rolling, window_len))?;
        let next = out[0];
        if !next.is_finite() {
            return Err(Error::ForecastDiverged { step });
        }
        predicted.push(next);
        rolling.push(match feedback {
            FeedbackMode::Predicted => next,
            FeedbackMode::Actual => input.scaler.scale(input.actual[step]),
        });
    }
    ForecastReport::build(input, &predicted, feedback, 1, started)
}

/// Free-running block forecast: each call yields `horizon` values, all of
/// which are appended to the rolling input. The final block is truncated to
/// `n_steps`.
pub fn multi_step_forecast<P: Predictor + ?Sized>(
    model: &P,
    input: &ForecastInput<'_>,
    n_steps: usize,
) -> Result<ForecastReport> {
    let started = Instant::now();
    input.check(model, n_steps)?;
    let (window_len, horizon) = (model.window_len(), model.horizon());
    let mut rolling = input.scaler.transform(input.history);
    let mut predicted = Vec::with_capacity(n_steps);
    while predicted.len() < n_steps {
        let block = model.predict_window(&input.window(&rolling, window_len))?;
        if block.len() != horizon {
            return Err(Error::shape(format!(
                "model returned {} values, horizon is {horizon}",
                block.len()
            )));
        }
        if let Some(k) = block.iter().position(|v| !v.is_finite()) {
            return Err(Error::ForecastDiverged {
                step: predicted.len() + k,
            });
        }
        let take = horizon.min(n_steps - predicted.len());
        predicted.extend_from_slice(&block[..take]);
        rolling.extend_from_slice(&block);
    }
    ForecastReport::build(input, &predicted, FeedbackMode::Predicted, horizon, started)
}

pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::shape(format!(
            "rmse of series with lengths {} and {}",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::domain("rmse of empty series"));
    }
    let sum: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sum / predicted.len() as f64).sqrt())
}

fn event_times(times: &[f64], values: &[f64], threshold: f64) -> Vec<f64> {
    if values.len() < 3 {
        return Vec::new();
    }
    let dt = if times.len() > 1 {
        times[1] - times[0]
    } else {
        1.0
    };
    let peaks = detect_peaks(values, times[0], dt).expect("length checked");
    classify_extremes(&peaks, threshold)
        .1
        .iter()
        .map(|p| p.t)
        .collect()
}

/// Matches predicted to actual extreme events within `±match_window`.
///
/// Both event lists are in time order; each actual event takes the earliest
/// unmatched predicted event inside its window, which maximizes the number
/// of one-to-one matches.
pub fn event_outcomes(report: &ForecastReport, threshold: f64, match_window: f64) -> EventOutcomes {
    let predicted_events = event_times(&report.times, &report.predicted, threshold);
    let actual_events = event_times(&report.times, &report.actual, threshold);
    let tol = 1e-9 * match_window.abs().max(1.0);
    let mut hits = 0;
    let mut next = 0;
    for &a in &actual_events {
        while next < predicted_events.len() && predicted_events[next] < a - match_window - tol {
            next += 1;
        }
        if next < predicted_events.len() && predicted_events[next] <= a + match_window + tol {
            hits += 1;
            next += 1;
        }
    }
    EventOutcomes {
        threshold,
        match_window,
        misses: actual_events.len() - hits,
        false_alarms: predicted_events.len() - hits,
        hits,
        predicted_events,
        actual_events,
    }
}

/// Pearson correlation; zero when either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{fit_scaler, frame_supervised};
    use crate::models::{ModelKind, ModelSpec};
    use crate::neuralcore::mse_loss;

    /// Returns the last input value, optionally shifted by a constant.
    struct Echo {
        window: usize,
        horizon: usize,
        shift: f64,
    }

    impl Predictor for Echo {
        fn window_len(&self) -> usize {
            self.window
        }
        fn horizon(&self) -> usize {
            self.horizon
        }
        fn predict_window(&self, window: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![window[window.len() - 1] + self.shift; self.horizon])
        }
    }

    fn scaler() -> MinMaxScaler {
        fit_scaler(&[0.0, 10.0], -1.0, 1.0).unwrap()
    }

    fn input<'a>(
        history: &'a [f64],
        actual: &'a [f64],
        scaler: &'a MinMaxScaler,
    ) -> ForecastInput<'a> {
        ForecastInput {
            history,
            actual,
            scaler,
            parameter: None,
            t_start: 100.0,
            dt: 1.0,
        }
    }

    #[test]
    fn identity_model_holds_last_value() {
        let sc = scaler();
        let actual = [1.0, 2.0, 3.0, 4.0];
        let model = Echo {
            window: 2,
            horizon: 1,
            shift: 0.0,
        };
        let rep = walk_forward(
            &model,
            &input(&[5.0, 7.5], &actual, &sc),
            4,
            FeedbackMode::Predicted,
        )
        .unwrap();
        for p in &rep.predicted {
            assert!((p - 7.5).abs() < 1e-12);
        }
        assert_eq!(rep.times, vec![100.0, 101.0, 102.0, 103.0]);
    }

    #[test]
    fn shifted_model_ramps() {
        // Normalized +0.1 per step is +0.5 raw per step for a [0, 10] -> [-1, 1] fit.
        let sc = scaler();
        let actual = [2.0, 2.0, 2.0, 2.0, 2.0];
        let model = Echo {
            window: 1,
            horizon: 1,
            shift: 0.1,
        };
        let rep = walk_forward(
            &model,
            &input(&[4.0], &actual, &sc),
            5,
            FeedbackMode::Predicted,
        )
        .unwrap();
        let expected: Vec<f64> = (1..=5).map(|k| 4.0 + 0.5 * k as f64).collect();
        for (p, e) in rep.predicted.iter().zip(&expected) {
            assert!((p - e).abs() < 1e-12);
        }
        // sqrt(mean((2.5 + 0.5 k)^2)) for k = 0..4
        let closed = ((0..5).map(|k| (2.5 + 0.5 * k as f64).powi(2)).sum::<f64>() / 5.0).sqrt();
        assert!((rep.rmse - closed).abs() < 1e-12);

        let teacher = walk_forward(
            &model,
            &input(&[4.0], &actual, &sc),
            5,
            FeedbackMode::Actual,
        )
        .unwrap();
        assert!((teacher.predicted[0] - 4.5).abs() < 1e-12);
        assert!(teacher.predicted[1..]
            .iter()
            .all(|p| (p - 2.5).abs() < 1e-12));
    }

    #[test]
    fn forecast_preconditions() {
        let sc = scaler();
        let model = Echo {
            window: 3,
            horizon: 1,
            shift: 0.0,
        };
        assert!(walk_forward(
            &model,
            &input(&[1.0, 2.0], &[1.0; 4], &sc),
            4,
            FeedbackMode::Predicted
        )
        .is_err());
        assert!(walk_forward(
            &model,
            &input(&[1.0; 3], &[1.0; 2], &sc),
            4,
            FeedbackMode::Predicted
        )
        .is_err());
    }

    #[test]
    fn non_finite_prediction_aborts() {
        let sc = scaler();
        let model = Echo {
            window: 1,
            horizon: 1,
            shift: f64::NAN,
        };
        match walk_forward(
            &model,
            &input(&[1.0], &[1.0; 3], &sc),
            3,
            FeedbackMode::Predicted,
        ) {
            Err(Error::ForecastDiverged { step }) => assert_eq!(step, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn horizon_one_block_forecast_equals_walk_forward() {
        let sc = scaler();
        let actual: Vec<f64> = (0..50)
            .map(|i| (i as f64 * 0.3).sin() * 4.0 + 5.0)
            .collect();
        let model = Model::new(ModelSpec::new(ModelKind::Lstm, 3, 1, 1), 4).unwrap();
        let inp = input(&[1.0, 2.0, 3.0], &actual, &sc);
        let a = walk_forward(&model, &inp, 50, FeedbackMode::Predicted).unwrap();
        let b = multi_step_forecast(&model, &inp, 50).unwrap();
        assert_eq!(a.predicted, b.predicted);
        assert_eq!(a.rmse.to_bits(), b.rmse.to_bits());
    }

    #[test]
    fn block_forecast_truncates_and_holds() {
        let sc = scaler();
        let model = Echo {
            window: 2,
            horizon: 3,
            shift: 0.0,
        };
        let rep = multi_step_forecast(&model, &input(&[1.0, 6.0], &[0.0; 7], &sc), 7).unwrap();
        assert_eq!(rep.len(), 7);
        assert!(rep.predicted.iter().all(|p| (p - 6.0).abs() < 1e-12));
        assert_eq!(rep.horizon, 3);
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&[0.0], &[1.0, 2.0]).is_err());
        let p = Tensor::from_slice(&[3], &[0.3, -1.0, 2.0]).unwrap();
        let a = Tensor::from_slice(&[3], &[0.1, 0.5, 2.5]).unwrap();
        let r = rmse(p.data(), a.data()).unwrap();
        assert!((r * r - mse_loss(&p, &a).unwrap()).abs() < 1e-15);
    }

    fn report_from(actual: Vec<f64>, predicted: Vec<f64>) -> ForecastReport {
        let rmse = rmse(&predicted, &actual).unwrap();
        ForecastReport {
            times: (0..actual.len()).map(|i| i as f64).collect(),
            predicted,
            actual,
            rmse,
            feedback_mode: FeedbackMode::Predicted,
            horizon: 1,
            seed: None,
            events: None,
            wall_time: Duration::ZERO,
        }
    }

    fn spikes(len: usize, at: &[usize]) -> Vec<f64> {
        let mut v = vec![0.0; len];
        for &i in at {
            v[i] = 10.0;
        }
        v
    }

    #[test]
    fn identical_series_all_hits() {
        let s = spikes(60, &[10, 30, 45]);
        let out = event_outcomes(&report_from(s.clone(), s), 5.0, 5.0);
        assert_eq!((out.hits, out.misses, out.false_alarms), (3, 0, 0));
    }

    #[test]
    fn flat_prediction_misses_everything() {
        let out = event_outcomes(&report_from(spikes(60, &[10, 30]), vec![0.0; 60]), 5.0, 5.0);
        assert_eq!((out.hits, out.misses, out.false_alarms), (0, 2, 0));
    }

    #[test]
    fn matching_window_boundary() {
        let actual = spikes(60, &[20]);
        let at_edge = event_outcomes(&report_from(actual.clone(), spikes(60, &[25])), 5.0, 5.0);
        assert_eq!(
            (at_edge.hits, at_edge.misses, at_edge.false_alarms),
            (1, 0, 0)
        );
        let early_edge = event_outcomes(&report_from(actual.clone(), spikes(60, &[15])), 5.0, 5.0);
        assert_eq!(early_edge.hits, 1);
        let outside = event_outcomes(&report_from(actual, spikes(60, &[26])), 5.0, 5.0);
        assert_eq!(
            (outside.hits, outside.misses, outside.false_alarms),
            (0, 1, 1)
        );
    }

    #[test]
    fn report_outputs() {
        let mut rep = report_from(vec![1.0, 2.0, 3.5], vec![1.5, 2.0, 3.0]);
        rep.annotate_events(100.0, 5.0);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,actual,predicted\n"));
        let json = rep.summary_json().unwrap();
        assert_eq!(json["n_steps"], 3);
        assert_eq!(json["feedback_mode"], "predicted");
        assert!(json.get("wall_time").is_none());
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 2.0], &[5.0, 5.0]), 0.0);
    }

    #[test]
    fn training_records_one_loss_per_epoch() {
        let series: Vec<f64> = (0..40).map(|n| (0.3 * n as f64).sin()).collect();
        let ds = frame_supervised(&series, 2, 1).unwrap();
        let mut model = Model::new(ModelSpec::new(ModelKind::Mlp, 2, 1, 1), 1).unwrap();
        let cfg = TrainConfig {
            epochs: 7,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let history = train(&mut model, &ds, &cfg).unwrap();
        assert_eq!(history.len(), 7);

        let zero = TrainConfig { epochs: 0, ..cfg };
        assert!(train(&mut model, &ds, &zero).is_err());
        let wrong = frame_supervised(&series, 3, 1).unwrap();
        assert!(train(&mut model, &wrong, &cfg).is_err());
    }

    #[test]
    fn training_is_seed_deterministic() {
        let series: Vec<f64> = (0..80).map(|n| (0.2 * n as f64).cos()).collect();
        let ds = frame_supervised(&series, 1, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            seed: 9,
            ..TrainConfig::default()
        };
        let run = || {
            let mut m = Model::new(ModelSpec::new(ModelKind::Lstm, 1, 1, 1), 9).unwrap();
            let h = train(&mut m, &ds, &cfg).unwrap();
            (h, m)
        };
        let (h1, m1) = run();
        let (h2, m2) = run();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn two_step_window_learns_a_sine() {
        // With two inputs the sine recurrence x[n+1] = 2cos(0.1)x[n] - x[n-1]
        // is a function of the window, so a small MLP can follow it.
        let series: Vec<f64> = (0..1200).map(|n| (0.1 * n as f64).sin()).collect();
        let (train_s, test_s) = crate::dataset::split(&series, 1000, 200).unwrap();
        let sc = fit_scaler(&train_s, -1.0, 1.0).unwrap();
        let ds = frame_supervised(&sc.transform(&train_s), 2, 1).unwrap();
        let mut spec = ModelSpec::new(ModelKind::Mlp, 2, 1, 1);
        spec.architecture = crate::models::Architecture::Mlp { hidden: vec![8, 8] };
        let mut model = Model::new(spec, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 150,
            batch_size: 32,
            seed: 1,
            ..TrainConfig::default()
        };
        train(&mut model, &ds, &cfg).unwrap();
        let inp = ForecastInput {
            history: &train_s,
            actual: &test_s,
            scaler: &sc,
            parameter: None,
            t_start: 1000.0,
            dt: 1.0,
        };
        let rep = walk_forward(&model, &inp, 200, FeedbackMode::Actual).unwrap();
        assert!(rep.rmse < 0.05, "teacher-forced rmse {}", rep.rmse);
    }
}
