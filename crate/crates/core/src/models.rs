//! The three forecasting architectures as layer stacks.
//!
//! * MLP: flatten → dense(8)+ReLU → dense(8)+ReLU → dense(horizon)
//! * CNN: conv1d(64, k=1)+ReLU → maxpool(2) → flatten → dense(50)+ReLU → dense(horizon)
//! * LSTM: lstm(32, sequences) → lstm(32) → dense(horizon)
//!
//! Output layers are linear. Every model consumes `(batch, window_len,
//! num_features)` inputs and emits `(batch, horizon)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::neuralcore::{
    Activation, Checkpoint, Conv1d, Dense, Layer, Lstm, MaxPool1d, Network, Tensor,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mlp,
    Cnn,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Mlp, ModelKind::Cnn, ModelKind::Lstm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Cnn => "cnn",
            ModelKind::Lstm => "lstm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(ModelKind::Mlp),
            "cnn" => Ok(ModelKind::Cnn),
            "lstm" => Ok(ModelKind::Lstm),
            other => Err(Error::domain(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Mlp {
        hidden: Vec<usize>,
    },
    Cnn {
        filters: usize,
        kernel: usize,
        pool: usize,
        dense: usize,
    },
    Lstm {
        /// Units per stacked layer.
        units: Vec<usize>,
    },
}

impl Architecture {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Mlp => Architecture::Mlp { hidden: vec![8, 8] },
            ModelKind::Cnn => Architecture::Cnn {
                filters: 64,
                kernel: 1,
                pool: 2,
                dense: 50,
            },
            ModelKind::Lstm => Architecture::Lstm {
                units: vec![32, 32],
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Architecture::Mlp { .. } => ModelKind::Mlp,
            Architecture::Cnn { .. } => ModelKind::Cnn,
            Architecture::Lstm { .. } => ModelKind::Lstm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub window_len: usize,
    pub horizon: usize,
    pub num_features: usize,
    pub architecture: Architecture,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, window_len: usize, horizon: usize, num_features: usize) -> Self {
        ModelSpec {
            window_len,
            horizon,
            num_features,
            architecture: Architecture::default_for(kind),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.architecture.kind()
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.horizon == 0 || self.num_features == 0 {
            return Err(Error::domain(
                "window_len, horizon and num_features must be at least 1",
            ));
        }
        let sizes_ok = match &self.architecture {
            Architecture::Mlp { hidden } => !hidden.is_empty() && hidden.iter().all(|&h| h >= 1),
            Architecture::Cnn {
                filters,
                kernel,
                pool,
                dense,
            } => *filters >= 1 && *kernel >= 1 && *pool >= 1 && *dense >= 1,
            Architecture::Lstm { units } => !units.is_empty() && units.iter().all(|&u| u >= 1),
        };
        if !sizes_ok {
            return Err(Error::domain(format!(
                "invalid layer sizes in {:?}",
                self.architecture
            )));
        }
        Ok(())
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_kind(spec: &ModelSpec, kind: ModelKind) -> Result<()> {
    spec.validate()?;
    if spec.kind() != kind {
        return Err(Error::domain(format!(
            "spec describes a {}, not a {kind}",
            spec.kind()
        )));
    }
    Ok(())
}

pub fn build_mlp(spec: &ModelSpec, seed: u64) -> Result<Network> {
    check_kind(spec, ModelKind::Mlp)?;
    let Architecture::Mlp { hidden } = &spec.architecture else {
        unreachable!()
    };
    let mut rng = rng_for(seed);
    let mut layers = vec![Layer::Flatten];
    let mut width = spec.window_len * spec.num_features;
    for &h in hidden {
        layers.push(Layer::Dense(Dense::glorot(width, h, &mut rng)));
        layers.push(Layer::Activation(Activation::Relu));
        width = h;
    }
    layers.push(Layer::Dense(Dense::glorot(width, spec.horizon, &mut rng)));
    Ok(Network::new(layers))
}

pub fn build_cnn(spec: &ModelSpec, seed: u64) -> Result<Network> {
    check_kind(spec, ModelKind::Cnn)?;
    let Architecture::Cnn {
        filters,
        kernel,
        pool,
        dense,
    } = spec.architecture
    else {
        unreachable!()
    };
    if kernel > spec.window_len {
        return Err(Error::shape(format!(
            "kernel {kernel} is longer than the input window {}",
            spec.window_len
        )));
    }
    let mut rng = rng_for(seed);
    let conv_len = spec.window_len - kernel + 1;
    let flat = conv_len.div_ceil(pool) * filters;
    Ok(Network::new(vec![
        Layer::Conv1d(Conv1d::glorot(spec.num_features, filters, kernel, &mut rng)),
        Layer::Activation(Activation::Relu),
        Layer::MaxPool1d(MaxPool1d { pool }),
        Layer::Flatten,
        Layer::Dense(Dense::glorot(flat, dense, &mut rng)),
        Layer::Activation(Activation::Relu),
        Layer::Dense(Dense::glorot(dense, spec.horizon, &mut rng)),
    ]))
}

pub fn build_lstm(spec: &ModelSpec, seed: u64) -> Result<Network> {
    check_kind(spec, ModelKind::Lstm)?;
    let Architecture::Lstm { units } = &spec.architecture else {
        unreachable!()
    };
    let mut rng = rng_for(seed);
    let mut layers = Vec::new();
    let mut width = spec.num_features;
    for (i, &u) in units.iter().enumerate() {
        let last = i + 1 == units.len();
        layers.push(Layer::Lstm(Lstm::glorot(width, u, !last, &mut rng)));
        width = u;
    }
    layers.push(Layer::Dense(Dense::glorot(width, spec.horizon, &mut rng)));
    Ok(Network::new(layers))
}

pub fn build(spec: &ModelSpec, seed: u64) -> Result<Network> {
    match spec.kind() {
        ModelKind::Mlp => build_mlp(spec, seed),
        ModelKind::Cnn => build_cnn(spec, seed),
        ModelKind::Lstm => build_lstm(spec, seed),
    }
}

/// A network together with the spec it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub network: Network,
}

#[derive(Serialize, Deserialize)]
struct SavedModel {
    spec: ModelSpec,
    weights: Checkpoint,
}

impl Model {
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        let network = build(&spec, seed)?;
        Ok(Model { spec, network })
    }

    pub fn parameter_count(&self) -> usize {
        self.network.parameter_count()
    }

    /// Forward pass on `(batch, window_len, num_features)`; output is
    /// `(batch, horizon)` in normalized units.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor> {
        let expected = [self.spec.window_len, self.spec.num_features];
        if input.ndim() != 3 || input.shape()[1..] != expected {
            return Err(Error::shape(format!(
                "model expects (batch, {}, {}) input, got {:?}",
                expected[0],
                expected[1],
                input.shape()
            )));
        }
        let out = self.network.forward(input)?;
        debug_assert_eq!(out.shape(), [input.dim(0), self.spec.horizon]);
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let saved = SavedModel {
            spec: self.spec.clone(),
            weights: Checkpoint::from_network(&self.network),
        };
        std::fs::write(path, serde_json::to_vec(&saved)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let saved: SavedModel = serde_json::from_slice(&std::fs::read(path)?)?;
        let mut network = build(&saved.spec, 0)?;
        saved.weights.load_into(&mut network)?;
        Ok(Model {
            spec: saved.spec,
            network,
        })
    }
}

/// Convenience wrapper over [`Model::predict`].
pub fn predict(model: &Model, input: &Tensor) -> Result<Tensor> {
    model.predict(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(
        kind: ModelKind,
        arch: Architecture,
        window: usize,
        horizon: usize,
        features: usize,
    ) -> usize {
        let spec = ModelSpec {
            window_len: window,
            horizon,
            num_features: features,
            architecture: arch,
        };
        assert_eq!(spec.kind(), kind);
        Model::new(spec, 0).unwrap().parameter_count()
    }

    #[test]
    fn default_parameter_counts() {
        assert_eq!(
            Model::new(ModelSpec::new(ModelKind::Mlp, 1, 1, 1), 0)
                .unwrap()
                .parameter_count(),
            97
        );
        assert_eq!(
            Model::new(ModelSpec::new(ModelKind::Cnn, 1, 1, 1), 0)
                .unwrap()
                .parameter_count(),
            3429
        );
        let lstm = Model::new(ModelSpec::new(ModelKind::Lstm, 1, 1, 1), 0).unwrap();
        let first: usize = lstm.network.layers[0]
            .params()
            .iter()
            .map(|(_, t)| t.len())
            .sum();
        assert_eq!(first, 4352);
        assert_eq!(
            lstm.parameter_count(),
            4352 + 4 * (32 * 32 + 32 * 32 + 32) + 33
        );
    }

    #[test]
    fn parameter_conditioned_lstm_only_grows_first_kernel() {
        let lstm = Model::new(ModelSpec::new(ModelKind::Lstm, 1, 1, 2), 0).unwrap();
        let first: usize = lstm.network.layers[0]
            .params()
            .iter()
            .map(|(_, t)| t.len())
            .sum();
        assert_eq!(first, 4480);
    }

    #[test]
    fn sweep_counts_follow_closed_form() {
        for h2 in 1..=64 {
            let n = count(
                ModelKind::Mlp,
                Architecture::Mlp {
                    hidden: vec![8, h2],
                },
                1,
                1,
                1,
            );
            assert_eq!(n, (8 + 8) + (8 * h2 + h2) + (h2 + 1));
        }
        assert_eq!(
            count(
                ModelKind::Mlp,
                Architecture::Mlp { hidden: vec![8] },
                1,
                1,
                1
            ),
            16 + 9
        );
        for filters in [1, 8, 32, 64, 128] {
            let arch = Architecture::Cnn {
                filters,
                kernel: 2,
                pool: 2,
                dense: 50,
            };
            // window 5, kernel 2 -> 4 positions -> 2 after pooling.
            let expected = (2 * filters + filters) + (2 * filters * 50 + 50) + 51;
            assert_eq!(count(ModelKind::Cnn, arch, 5, 1, 1), expected);
        }
        for units in [1, 4, 16, 32, 64] {
            let expected = 4 * (units + units * units + units) + units + 1;
            assert_eq!(
                count(
                    ModelKind::Lstm,
                    Architecture::Lstm { units: vec![units] },
                    1,
                    1,
                    1
                ),
                expected
            );
            let second = 4 * (32 * units + units * units + units);
            assert_eq!(
                count(
                    ModelKind::Lstm,
                    Architecture::Lstm {
                        units: vec![32, units]
                    },
                    1,
                    1,
                    1
                ),
                4352 + second + units + 1
            );
        }
    }

    #[test]
    fn kernel_longer_than_window_rejected() {
        let mut spec = ModelSpec::new(ModelKind::Cnn, 1, 1, 1);
        spec.architecture = Architecture::Cnn {
            filters: 4,
            kernel: 2,
            pool: 2,
            dense: 5,
        };
        assert!(matches!(Model::new(spec, 0), Err(Error::Shape(_))));
    }

    #[test]
    fn default_models_emit_horizon_values() {
        for kind in ModelKind::ALL {
            for (window, horizon) in [(1, 1), (1, 5), (5, 3)] {
                let model = Model::new(ModelSpec::new(kind, window, horizon, 1), 3).unwrap();
                let x = Tensor::filled(&[4, window, 1], 0.3);
                assert_eq!(model.predict(&x).unwrap().shape(), &[4, horizon]);
                assert!(model.predict(&Tensor::zeros(&[4, window, 2])).is_err());
            }
        }
    }

    #[test]
    fn zeroed_networks() {
        let mut lstm = Model::new(ModelSpec::new(ModelKind::Lstm, 3, 1, 1), 1).unwrap();
        lstm.network
            .parameters_mut()
            .into_iter()
            .for_each(|t| t.data_mut().fill(0.0));
        let x = Tensor::from_slice(&[1, 3, 1], &[0.5, -0.9, 0.1]).unwrap();
        assert_eq!(lstm.predict(&x).unwrap().data(), &[0.0]);

        let mut mlp = Model::new(ModelSpec::new(ModelKind::Mlp, 1, 2, 1), 1).unwrap();
        let params = mlp.network.parameters_mut();
        let n = params.len();
        for (i, t) in params.into_iter().enumerate() {
            let fill = if i == n - 1 { 0.75 } else { 0.0 };
            t.data_mut().fill(fill);
        }
        let x = Tensor::from_slice(&[1, 1, 1], &[0.4]).unwrap();
        assert_eq!(mlp.predict(&x).unwrap().data(), &[0.75, 0.75]);
    }

    #[test]
    fn same_seed_same_weights() {
        let spec = ModelSpec::new(ModelKind::Lstm, 1, 1, 1);
        assert_eq!(
            Model::new(spec.clone(), 5).unwrap(),
            Model::new(spec.clone(), 5).unwrap()
        );
        assert_ne!(
            Model::new(spec.clone(), 5).unwrap(),
            Model::new(spec, 6).unwrap()
        );
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ModelSpec::new(ModelKind::Cnn, 5, 2, 1);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"cnn\""));
        assert_eq!(serde_json::from_str::<ModelSpec>(&text).unwrap(), spec);
    }
}
