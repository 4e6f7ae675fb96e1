//! Python bindings: simulation, peak statistics, scaling, framing, and
//! model training and forecasting.

use eeforecast::dataset::{self, MinMaxScaler};
use eeforecast::dynamics::{self, Observable, State};
use eeforecast::forecast::{self, FeedbackMode, ForecastInput, TrainConfig};
use eeforecast::models::{self, ModelKind, ModelSpec};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: eeforecast::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "SystemParams", skip_from_py_object)]
#[derive(Clone)]
struct PySystemParams {
    inner: dynamics::SystemParams,
}

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (epsilon=0.05, lam=0.5, omega0_sq=0.25, rotation0_sq=6.7, omega_p=1.0, damping=0.2))]
    fn new(
        epsilon: f64,
        lam: f64,
        omega0_sq: f64,
        rotation0_sq: f64,
        omega_p: f64,
        damping: f64,
    ) -> PyResult<Self> {
        let inner = dynamics::SystemParams {
            lambda: lam,
            omega0_sq,
            rotation0_sq,
            omega_p,
            damping,
            epsilon,
        };
        inner.validate().map_err(err)?;
        Ok(PySystemParams { inner })
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    fn energy(&self, x: f64, v: f64) -> f64 {
        self.inner.energy(x, v)
    }

    fn rhs(&self, x: f64, v: f64, t: f64) -> PyResult<(f64, f64)> {
        dynamics::eom_rhs(&State::new(x, v, t), &self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "Trajectory")]
struct PyTrajectory {
    inner: dynamics::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn t(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.t).collect()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.series(Observable::Position)
    }

    #[getter]
    fn v(&self) -> Vec<f64> {
        self.inner.series(Observable::Velocity)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Local maxima of `x` at integrator resolution as `(t, x)` pairs.
    fn peaks(&self) -> PyResult<Vec<(f64, f64)>> {
        Ok(self
            .inner
            .peaks(Observable::Position)
            .map_err(err)?
            .iter()
            .map(|p| (p.t, p.x))
            .collect())
    }

    /// Mean, population std and 4-sigma threshold of the peak heights, plus
    /// the number of peaks above the threshold.
    fn peak_statistics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let peaks = self.inner.peaks(Observable::Position).map_err(err)?;
        stats_dict(py, &peaks)
    }

    fn save_csv(&self, path: &str) -> PyResult<()> {
        self.inner.save_csv(path).map_err(err)
    }
}

fn stats_dict<'py>(py: Python<'py>, peaks: &[dynamics::Peak]) -> PyResult<Bound<'py, PyDict>> {
    let st = dynamics::peak_statistics(peaks).map_err(err)?;
    let (events, _) = dynamics::classify_extremes(peaks, st.threshold);
    let d = PyDict::new(py);
    d.set_item("peaks", peaks.len())?;
    d.set_item("mean", st.mean_peak)?;
    d.set_item("std", st.std_peak)?;
    d.set_item("threshold", st.threshold)?;
    d.set_item("extreme_events", events)?;
    Ok(d)
}

/// RK4 integration; samples every `sample_interval` after `transient`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (params, t_end, x0=0.1, v0=0.1, dt=0.01, sample_interval=1.0, transient=1000.0))]
fn integrate(
    py: Python<'_>,
    params: &PySystemParams,
    t_end: f64,
    x0: f64,
    v0: f64,
    dt: f64,
    sample_interval: f64,
    transient: f64,
) -> PyResult<PyTrajectory> {
    let p = params.inner;
    let inner = py
        .detach(|| {
            dynamics::integrate(
                &p,
                &State::new(x0, v0, 0.0),
                t_end,
                dt,
                sample_interval,
                transient,
            )
        })
        .map_err(err)?;
    Ok(PyTrajectory { inner })
}

/// Peak statistics of a uniformly sampled series.
#[pyfunction]
#[pyo3(signature = (values, t0=0.0, dt=1.0))]
fn peak_statistics<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    t0: f64,
    dt: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let peaks = dynamics::detect_peaks(&values, t0, dt).map_err(err)?;
    stats_dict(py, &peaks)
}

#[pyclass(name = "MinMaxScaler", skip_from_py_object)]
#[derive(Clone)]
struct PyScaler {
    inner: MinMaxScaler,
}

#[pymethods]
impl PyScaler {
    #[staticmethod]
    #[pyo3(signature = (series, lo=-1.0, hi=1.0))]
    fn fit(series: Vec<f64>, lo: f64, hi: f64) -> PyResult<Self> {
        Ok(PyScaler {
            inner: dataset::fit_scaler(&series, lo, hi).map_err(err)?,
        })
    }

    #[getter]
    fn x_min(&self) -> f64 {
        self.inner.x_min
    }

    #[getter]
    fn x_max(&self) -> f64 {
        self.inner.x_max
    }

    fn transform(&self, values: Vec<f64>) -> Vec<f64> {
        self.inner.transform(&values)
    }

    fn inverse_transform(&self, values: Vec<f64>) -> Vec<f64> {
        self.inner.inverse_transform(&values)
    }
}

type Rows = Vec<Vec<f64>>;

/// Stride-1 sliding window; returns `(inputs, targets)` as lists of rows.
#[pyfunction]
#[pyo3(signature = (series, window_len=1, horizon=1))]
fn frame_supervised(series: Vec<f64>, window_len: usize, horizon: usize) -> PyResult<(Rows, Rows)> {
    let ds = dataset::frame_supervised(&series, window_len, horizon).map_err(err)?;
    Ok((
        (0..ds.len()).map(|i| ds.input(i).to_vec()).collect(),
        (0..ds.len()).map(|i| ds.target(i).to_vec()).collect(),
    ))
}

#[pyfunction]
fn rmse(predicted: Vec<f64>, actual: Vec<f64>) -> PyResult<f64> {
    forecast::rmse(&predicted, &actual).map_err(err)
}

#[pyclass(name = "ForecastReport")]
struct PyReport {
    inner: forecast::ForecastReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn rmse(&self) -> f64 {
        self.inner.rmse
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn predicted(&self) -> Vec<f64> {
        self.inner.predicted.clone()
    }

    #[getter]
    fn actual(&self) -> Vec<f64> {
        self.inner.actual.clone()
    }

    fn correlation(&self) -> f64 {
        self.inner.correlation()
    }

    /// `(hits, misses, false_alarms)` for events above `threshold`.
    #[pyo3(signature = (threshold, window=forecast::DEFAULT_MATCH_WINDOW))]
    fn event_outcomes(&self, threshold: f64, window: f64) -> (usize, usize, usize) {
        let o = forecast::event_outcomes(&self.inner, threshold, window);
        (o.hits, o.misses, o.false_alarms)
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| PyValueError::new_err(e.to_string()))?;
        self.inner.write_csv(file).map_err(err)
    }
}

#[pyclass(name = "Model")]
struct PyModel {
    inner: models::Model,
}

#[pymethods]
impl PyModel {
    /// `kind` is `"mlp"`, `"cnn"` or `"lstm"` with the default architecture.
    #[new]
    #[pyo3(signature = (kind, window_len=1, horizon=1, num_features=1, seed=1))]
    fn new(
        kind: &str,
        window_len: usize,
        horizon: usize,
        num_features: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let kind: ModelKind = kind.parse().map_err(err)?;
        let spec = ModelSpec::new(kind, window_len, horizon, num_features);
        Ok(PyModel {
            inner: models::Model::new(spec, seed).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyModel {
            inner: models::Model::load(path).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.spec.kind().to_string()
    }

    fn parameter_count(&self) -> usize {
        self.inner.parameter_count()
    }

    /// Trains on an already normalized series; returns per-epoch losses.
    #[pyo3(signature = (series, epochs=250, batch_size=64, seed=1))]
    fn train(
        &mut self,
        py: Python<'_>,
        series: Vec<f64>,
        epochs: usize,
        batch_size: usize,
        seed: u64,
    ) -> PyResult<Vec<f64>> {
        let spec = &self.inner.spec;
        if spec.num_features != 1 {
            return Err(PyValueError::new_err(
                "train() supports single-feature models only",
            ));
        }
        let ds = dataset::frame_supervised(&series, spec.window_len, spec.horizon).map_err(err)?;
        let cfg = TrainConfig {
            epochs,
            batch_size,
            seed,
            ..TrainConfig::default()
        };
        let model = &mut self.inner;
        py.detach(|| forecast::train(model, &ds, &cfg)).map_err(err)
    }

    /// One forward pass on a flat `(window_len * num_features)` window.
    fn predict(&self, window: Vec<f64>) -> PyResult<Vec<f64>> {
        use forecast::Predictor;
        self.inner.predict_window(&window).map_err(err)
    }

    /// Walk-forward (or block, for horizon > 1) forecast of `len(actual)`
    /// raw values following the raw `history`.
    #[pyo3(signature = (history, actual, scaler, feedback="predicted", t_start=0.0, dt=1.0))]
    fn forecast(
        &self,
        history: Vec<f64>,
        actual: Vec<f64>,
        scaler: &PyScaler,
        feedback: &str,
        t_start: f64,
        dt: f64,
    ) -> PyResult<PyReport> {
        let mode: FeedbackMode = feedback.parse().map_err(err)?;
        let input = ForecastInput {
            history: &history,
            actual: &actual,
            scaler: &scaler.inner,
            parameter: None,
            t_start,
            dt,
        };
        let inner = if self.inner.spec.horizon > 1 {
            forecast::multi_step_forecast(&self.inner, &input, actual.len())
        } else {
            forecast::walk_forward(&self.inner, &input, actual.len(), mode)
        }
        .map_err(err)?;
        Ok(PyReport { inner })
    }
}

#[pymodule]
fn eeforecast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyScaler>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(peak_statistics, m)?)?;
    m.add_function(wrap_pyfunction!(frame_supervised, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    Ok(())
}
