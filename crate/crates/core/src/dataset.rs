//! Turning a sampled series into normalized supervised pairs.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::fmt_f64;
use crate::{Error, Result};

/// Contiguous prefix/suffix split: the first `n_train` values, then the
/// `n_test` values that follow them.
pub fn split(series: &[f64], n_train: usize, n_test: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let required = n_train + n_test;
    if required > series.len() {
        return Err(Error::domain(format!(
            "split needs {required} samples ({n_train} train + {n_test} test), only {} available",
            series.len()
        )));
    }
    Ok((
        series[..n_train].to_vec(),
        series[n_train..required].to_vec(),
    ))
}

/// Affine rescaling of `[x_min, x_max]` onto `[lo, hi]`. Values outside the
/// fitted range are extrapolated, never clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub x_min: f64,
    pub x_max: f64,
    pub lo: f64,
    pub hi: f64,
}

impl MinMaxScaler {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn fit(series: &[f64], lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::domain(format!(
                "target range needs hi > lo, got [{lo}, {hi}]"
            )));
        }
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in series {
            if !x.is_finite() {
                return Err(Error::domain("cannot fit a scaler on non-finite values"));
            }
            x_min = x_min.min(x);
            x_max = x_max.max(x);
        }
        if x_max <= x_min {
            return Err(Error::domain(format!(
                "degenerate range: series needs at least two distinct values (min = max = {x_min})"
            )));
        }
        Ok(MinMaxScaler {
            x_min,
            x_max,
            lo,
            hi,
        })
    }

    #[inline]
    pub fn scale(&self, x: f64) -> f64 {
        self.lo + (x - self.x_min) * (self.hi - self.lo) / (self.x_max - self.x_min)
    }

    #[inline]
    pub fn unscale(&self, y: f64) -> f64 {
        self.x_min + (y - self.lo) * (self.x_max - self.x_min) / (self.hi - self.lo)
    }

    pub fn transform(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&x| self.scale(x)).collect()
    }

    pub fn inverse_transform(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&y| self.unscale(y)).collect()
    }
}

/// Fit on the training series with the default `[-1, 1]` target range.
pub fn fit_scaler(series: &[f64], lo: f64, hi: f64) -> Result<MinMaxScaler> {
    MinMaxScaler::fit(series, lo, hi)
}

/// Sliding-window input/target pairs.
///
/// `inputs` is row-major `(pairs, window_len, num_features)`; `targets` is
/// `(pairs, horizon)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedDataset {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub window_len: usize,
    pub horizon: usize,
    pub num_features: usize,
}

impl SupervisedDataset {
    pub fn len(&self) -> usize {
        self.targets.len() / self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Values per input row (`window_len * num_features`).
    pub fn input_width(&self) -> usize {
        self.window_len * self.num_features
    }

    pub fn input(&self, i: usize) -> &[f64] {
        let w = self.input_width();
        &self.inputs[i * w..(i + 1) * w]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.horizon..(i + 1) * self.horizon]
    }

    /// Recovers the framed series from the first feature channel.
    pub fn unframe(&self) -> Vec<f64> {
        let n = self.len();
        if n == 0 {
            return Vec::new();
        }
        let mut series: Vec<f64> = (0..n).map(|i| self.input(i)[0]).collect();
        let last = self.input(n - 1);
        series.extend((1..self.window_len).map(|s| last[s * self.num_features]));
        series.extend_from_slice(self.target(n - 1));
        series
    }

    /// Keeps only the first `n` pairs.
    pub fn truncated(&self, n: usize) -> SupervisedDataset {
        let n = n.min(self.len());
        SupervisedDataset {
            inputs: self.inputs[..n * self.input_width()].to_vec(),
            targets: self.targets[..n * self.horizon].to_vec(),
            ..*self
        }
    }

    /// One row per pair, columns `in_0..in_{w·f-1},out_0..out_{h-1}`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (0..self.input_width())
            .map(|k| format!("in_{k}"))
            .chain((0..self.horizon).map(|k| format!("out_{k}")))
            .collect();
        w.write_record(&header)?;
        for i in 0..self.len() {
            let row: Vec<String> = self
                .input(i)
                .iter()
                .chain(self.target(i))
                .map(|&v| fmt_f64(v))
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, num_features: usize) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = r.headers()?.clone();
        let n_in = headers.iter().filter(|h| h.starts_with("in_")).count();
        let horizon = headers.iter().filter(|h| h.starts_with("out_")).count();
        if n_in == 0 || horizon == 0 || n_in + horizon != headers.len() {
            return Err(Error::domain(format!(
                "unrecognized dataset header {headers:?}"
            )));
        }
        if num_features == 0 || n_in % num_features != 0 {
            return Err(Error::domain(format!(
                "{n_in} input columns do not divide into {num_features} features"
            )));
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for record in r.records() {
            let record = record?;
            for (k, field) in record.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|e| Error::domain(format!("bad value {field:?}: {e}")))?;
                if k < n_in {
                    inputs.push(v);
                } else {
                    targets.push(v);
                }
            }
        }
        Ok(SupervisedDataset {
            inputs,
            targets,
            window_len: n_in / num_features,
            horizon,
            num_features,
        })
    }
}

/// Stride-1 sliding window: pair `i` maps `series[i..i+window_len]` to the
/// `horizon` values immediately after it.
pub fn frame_supervised(
    series: &[f64],
    window_len: usize,
    horizon: usize,
) -> Result<SupervisedDataset> {
    if window_len == 0 || horizon == 0 {
        return Err(Error::domain("window_len and horizon must be at least 1"));
    }
    if series.len() < window_len + horizon {
        return Err(Error::domain(format!(
            "series of length {} is too short for window {window_len} + horizon {horizon}",
            series.len()
        )));
    }
    let pairs = series.len() - window_len - horizon + 1;
    let mut inputs = Vec::with_capacity(pairs * window_len);
    let mut targets = Vec::with_capacity(pairs * horizon);
    for i in 0..pairs {
        inputs.extend_from_slice(&series[i..i + window_len]);
        targets.extend_from_slice(&series[i + window_len..i + window_len + horizon]);
    }
    Ok(SupervisedDataset {
        inputs,
        targets,
        window_len,
        horizon,
        num_features: 1,
    })
}

/// Appends a constant second feature to every input step.
pub fn augment_with_parameter(
    dataset: &SupervisedDataset,
    value: f64,
) -> Result<SupervisedDataset> {
    if dataset.num_features != 1 {
        return Err(Error::domain(format!(
            "dataset already has {} features; augmentation expects 1",
            dataset.num_features
        )));
    }
    let inputs = dataset.inputs.iter().flat_map(|&x| [x, value]).collect();
    Ok(SupervisedDataset {
        inputs,
        targets: dataset.targets.clone(),
        num_features: 2,
        ..*dataset
    })
}

/// How the drive strength is encoded when used as an input feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ParameterEncoding {
    /// A single training regime: the value is fed as is.
    Raw,
    /// Several training regimes: min-max over the training values.
    Scaled(MinMaxScaler),
}

impl ParameterEncoding {
    pub fn fit(training_values: &[f64]) -> Result<Self> {
        let first = *training_values
            .first()
            .ok_or_else(|| Error::domain("no training parameter values"))?;
        if training_values.iter().all(|&v| v == first) {
            Ok(ParameterEncoding::Raw)
        } else {
            Ok(ParameterEncoding::Scaled(MinMaxScaler::fit(
                training_values,
                -1.0,
                1.0,
            )?))
        }
    }

    pub fn encode(&self, value: f64) -> f64 {
        match self {
            ParameterEncoding::Raw => value,
            ParameterEncoding::Scaled(s) => s.scale(value),
        }
    }
}
