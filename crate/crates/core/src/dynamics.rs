//! The parametrically driven oscillator on a rotating parabolic wire:
//!
//! ```text
//! (1 + λx²)ẍ + λxẋ² + ω₀²x − Ω₀²[2ε cos ω_p t + ½ε²(1 + cos 2ω_p t)]x + αẋ = 0
//! ```
//!
//! Trajectories are advanced with fixed-step RK4. Peak statistics are taken
//! on the integrator-resolution series, and an extreme event is any peak above
//! `⟨x⟩ + 4σ_x`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Any state component beyond this magnitude is treated as a blow-up.
pub const OVERFLOW_GUARD: f64 = 1e8;

/// Multiplier on the peak standard deviation in the extreme-event threshold.
pub const THRESHOLD_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Curvature λ of the parabola `z = √λ x²`.
    pub lambda: f64,
    /// Squared natural frequency ω₀².
    pub omega0_sq: f64,
    /// Squared base angular velocity Ω₀² of the rotating wire.
    pub rotation0_sq: f64,
    /// Drive frequency ω_p.
    pub omega_p: f64,
    /// Linear damping coefficient α.
    pub damping: f64,
    /// Drive strength ε (the bifurcation parameter).
    pub epsilon: f64,
}

impl SystemParams {
    /// Reference parameter set with the given drive strength.
    pub fn reference(epsilon: f64) -> Self {
        SystemParams {
            lambda: 0.5,
            omega0_sq: 0.25,
            rotation0_sq: 6.7,
            omega_p: 1.0,
            damping: 0.2,
            epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda,
            self.omega0_sq,
            self.rotation0_sq,
            self.omega_p,
            self.damping,
            self.epsilon,
        ];
        if all.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("system parameters must be finite"));
        }
        if self.lambda <= 0.0 {
            return Err(Error::domain(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.omega_p <= 0.0 {
            return Err(Error::domain(format!(
                "omega_p must be > 0, got {}",
                self.omega_p
            )));
        }
        if self.damping < 0.0 {
            return Err(Error::domain(format!(
                "damping must be >= 0, got {}",
                self.damping
            )));
        }
        if self.epsilon < 0.0 {
            return Err(Error::domain(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Conserved quantity of the undriven, undamped system.
    pub fn energy(&self, x: f64, v: f64) -> f64 {
        0.5 * (1.0 + self.lambda * x * x) * v * v + 0.5 * self.omega0_sq * x * x
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams::reference(0.05)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub v: f64,
    pub t: f64,
}

impl State {
    pub fn new(x: f64, v: f64, t: f64) -> Self {
        State { x, v, t }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite() && self.t.is_finite()
    }
}

/// Right-hand side of the first-order system: returns `(ẋ, v̇)`.
pub fn eom_rhs(state: &State, params: &SystemParams) -> Result<(f64, f64)> {
    if !state.is_finite() {
        return Err(Error::domain(format!("non-finite state {state:?}")));
    }
    Ok(rhs(state.x, state.v, state.t, params))
}

#[inline]
fn rhs(x: f64, v: f64, t: f64, p: &SystemParams) -> (f64, f64) {
    let phase = p.omega_p * t;
    let drive =
        2.0 * p.epsilon * phase.cos() + 0.5 * p.epsilon * p.epsilon * (1.0 + (2.0 * phase).cos());
    let force = p.lambda * x * v * v + p.omega0_sq * x - p.rotation0_sq * drive * x + p.damping * v;
    (v, -force / (1.0 + p.lambda * x * x))
}

#[inline]
fn rk4_step(x: f64, v: f64, t: f64, dt: f64, p: &SystemParams) -> (f64, f64) {
    let half = 0.5 * dt;
    let (k1x, k1v) = rhs(x, v, t, p);
    let (k2x, k2v) = rhs(x + half * k1x, v + half * k1v, t + half, p);
    let (k3x, k3v) = rhs(x + half * k2x, v + half * k2v, t + half, p);
    let (k4x, k4v) = rhs(x + dt * k3x, v + dt * k3v, t + dt, p);
    (
        x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )
}

/// Which state component peaks and events are measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    #[default]
    Position,
    Velocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

/// Integrator-resolution record of the post-transient motion.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FineSeries {
    pub t0: f64,
    pub dt: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl FineSeries {
    pub fn component(&self, observable: Observable) -> &[f64] {
        match observable {
            Observable::Position => &self.x,
            Observable::Velocity => &self.v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Stored samples at uniform `sample_interval` spacing.
    pub samples: Vec<Sample>,
    pub dt_integrate: f64,
    pub sample_interval: f64,
    pub transient_discarded: f64,
    /// Every integrator step after the transient.
    pub fine: FineSeries,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn series(&self, observable: Observable) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| match observable {
                Observable::Position => s.x,
                Observable::Velocity => s.v,
            })
            .collect()
    }

    /// Peaks of the chosen component at integrator resolution. Falls back to
    /// the stored samples for trajectories loaded without a fine series.
    pub fn peaks(&self, observable: Observable) -> Result<Vec<Peak>> {
        if self.fine.x.is_empty() {
            let values = self.series(observable);
            let t0 = self.samples.first().map_or(0.0, |s| s.t);
            detect_peaks(&values, t0, self.sample_interval)
        } else {
            detect_peaks(self.fine.component(observable), self.fine.t0, self.fine.dt)
        }
    }

    /// CSV with header `t,x,v`, 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "x", "v"])?;
        for s in &self.samples {
            w.write_record([fmt_f64(s.t), fmt_f64(s.x), fmt_f64(s.v)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Loads stored samples; the fine series is left empty. Lines starting
    /// with `#` are skipped.
    pub fn read_csv<R: Read>(reader: R, dt_integrate: f64, transient: f64) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "x", "v"] {
            return Err(Error::domain(format!(
                "trajectory CSV must have header t,x,v, found {headers:?}"
            )));
        }
        let mut samples = Vec::new();
        for record in r.deserialize() {
            let (t, x, v): (f64, f64, f64) = record?;
            samples.push(Sample { t, x, v });
        }
        let sample_interval = match samples.as_slice() {
            [a, b, ..] => b.t - a.t,
            _ => 1.0,
        };
        Ok(Trajectory {
            samples,
            dt_integrate,
            sample_interval,
            transient_discarded: transient,
            fine: FineSeries::default(),
        })
    }
}

pub(crate) fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Classical fixed-step RK4 from `ic` up to `t_end`.
///
/// A sample is stored every `sample_interval` once the elapsed time exceeds
/// `transient`; every post-transient integrator step also goes into the fine
/// series.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn integrate(
    params: &SystemParams,
    ic: &State,
    t_end: f64,
    dt: f64,
    sample_interval: f64,
    transient: f64,
) -> Result<Trajectory> {
    params.validate()?;
    if !ic.is_finite() {
        return Err(Error::domain(format!(
            "non-finite initial condition {ic:?}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("dt must be positive, got {dt}")));
    }
    let ratio = sample_interval / dt;
    let stride = ratio.round();
    if stride < 1.0 || (ratio - stride).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::domain(format!(
            "sample_interval {sample_interval} is not a positive integer multiple of dt {dt}"
        )));
    }
    let stride = stride as u64;
    if !(transient >= 0.0) || !(t_end - ic.t > transient) {
        return Err(Error::domain(format!(
            "need t_end - t0 > transient >= 0 (t0 = {}, t_end = {t_end}, transient = {transient})",
            ic.t
        )));
    }

    let n_steps = ((t_end - ic.t) / dt).round() as u64;
    let transient_steps = (transient / dt).round() as u64;
    let fine_len = (n_steps - transient_steps.min(n_steps)) as usize;
    let mut fine = FineSeries {
        t0: ic.t + (transient_steps + 1) as f64 * dt,
        dt,
        x: Vec::with_capacity(fine_len),
        v: Vec::with_capacity(fine_len),
    };
    let mut samples = Vec::with_capacity(fine_len / stride as usize + 1);

    let (mut x, mut v) = (ic.x, ic.v);
    for step in 1..=n_steps {
        // Time is rebuilt from the step index so it never accumulates rounding.
        let t_prev = ic.t + (step - 1) as f64 * dt;
        (x, v) = rk4_step(x, v, t_prev, dt, params);
        let t = ic.t + step as f64 * dt;
        if !(x.abs() <= OVERFLOW_GUARD && v.abs() <= OVERFLOW_GUARD) {
            return Err(Error::Divergence {
                t,
                x: x.abs(),
                v: v.abs(),
            });
        }
        if step > transient_steps {
            fine.x.push(x);
            fine.v.push(v);
            if step % stride == 0 {
                samples.push(Sample { t, x, v });
            }
        }
    }

    Ok(Trajectory {
        samples,
        dt_integrate: dt,
        sample_interval,
        transient_discarded: transient,
        fine,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub t: f64,
    pub x: f64,
}

/// Strict local maxima of a uniformly spaced series.
///
/// A plateau counts as one maximum when it rises into and falls out of the
/// flat run; it is reported at the first index of the run.
pub fn detect_peaks(values: &[f64], t0: f64, dt: f64) -> Result<Vec<Peak>> {
    if values.len() < 3 {
        return Err(Error::domain(format!(
            "peak detection needs at least 3 samples, got {}",
            values.len()
        )));
    }
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < values.len() {
        if values[i - 1] < values[i] {
            let mut j = i + 1;
            while j < values.len() && values[j] == values[i] {
                j += 1;
            }
            if j < values.len() && values[j] < values[i] {
                peaks.push(Peak {
                    t: t0 + i as f64 * dt,
                    x: values[i],
                });
            }
            i = j;
        } else {
            i += 1;
        }
    }
    Ok(peaks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakStatistics {
    pub peaks: Vec<Peak>,
    pub mean_peak: f64,
    /// Population standard deviation of peak amplitudes.
    pub std_peak: f64,
    pub threshold: f64,
}

pub fn peak_statistics(peaks: &[Peak]) -> Result<PeakStatistics> {
    if peaks.is_empty() {
        return Err(Error::domain("peak statistics need at least one peak"));
    }
    let n = peaks.len() as f64;
    let mean = peaks.iter().map(|p| p.x).sum::<f64>() / n;
    let var = peaks.iter().map(|p| (p.x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(PeakStatistics {
        peaks: peaks.to_vec(),
        mean_peak: mean,
        std_peak: std,
        threshold: mean + THRESHOLD_SIGMAS * std,
    })
}

/// Peaks strictly above `threshold`.
pub fn classify_extremes(peaks: &[Peak], threshold: f64) -> (usize, Vec<Peak>) {
    let events: Vec<Peak> = peaks.iter().copied().filter(|p| p.x > threshold).collect();
    (events.len(), events)
}
