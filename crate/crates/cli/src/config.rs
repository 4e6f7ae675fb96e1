//! Experiment configuration (TOML) and its content hash.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use eeforecast::dynamics::{Observable, State, SystemParams};
use eeforecast::forecast::{FeedbackMode, TrainConfig, DEFAULT_MATCH_WINDOW};
use eeforecast::models::{Architecture, ModelKind, ModelSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub lambda: f64,
    pub omega0_sq: f64,
    pub rotation0_sq: f64,
    pub omega_p: f64,
    pub damping: f64,
    pub epsilons: Vec<f64>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let p = SystemParams::default();
        SystemConfig {
            lambda: p.lambda,
            omega0_sq: p.omega0_sq,
            rotation0_sq: p.rotation0_sq,
            omega_p: p.omega_p,
            damping: p.damping,
            epsilons: vec![0.05, 0.061, 0.081, 0.112],
        }
    }
}

impl SystemConfig {
    pub fn params(&self, epsilon: f64) -> SystemParams {
        SystemParams {
            lambda: self.lambda,
            omega0_sq: self.omega0_sq,
            rotation0_sq: self.rotation0_sq,
            omega_p: self.omega_p,
            damping: self.damping,
            epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub sample_interval: f64,
    pub transient: f64,
    /// Initial `(x, v)` at `t = 0`.
    pub initial: [f64; 2],
    pub observable: Observable,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 0.01,
            sample_interval: 1.0,
            transient: 1000.0,
            initial: [0.1, 0.1],
            observable: Observable::Position,
        }
    }
}

impl IntegratorConfig {
    pub fn initial_state(&self) -> State {
        State::new(self.initial[0], self.initial[1], 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub window_len: usize,
    pub horizon: usize,
    pub scale_lo: f64,
    pub scale_hi: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            n_train: 18000,
            n_test: 2000,
            window_len: 1,
            horizon: 1,
            scale_lo: -1.0,
            scale_hi: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub mlp: Architecture,
    pub cnn: Architecture,
    pub lstm: Architecture,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        ModelsConfig {
            mlp: Architecture::default_for(ModelKind::Mlp),
            cnn: Architecture::default_for(ModelKind::Cnn),
            lstm: Architecture::default_for(ModelKind::Lstm),
        }
    }
}

impl ModelsConfig {
    pub fn architecture(&self, kind: ModelKind) -> &Architecture {
        match kind {
            ModelKind::Mlp => &self.mlp,
            ModelKind::Cnn => &self.cnn,
            ModelKind::Lstm => &self.lstm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    pub feedback: FeedbackMode,
    pub match_window: f64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            feedback: FeedbackMode::Predicted,
            match_window: DEFAULT_MATCH_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamSwitchConfig {
    /// `(train ε, test ε)` pairs.
    pub pairs: Vec<[f64; 2]>,
    pub model: Architecture,
}

impl Default for ParamSwitchConfig {
    fn default() -> Self {
        ParamSwitchConfig {
            pairs: vec![[0.05, 0.061], [0.081, 0.112]],
            model: Architecture::default_for(ModelKind::Lstm),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub epsilons: Vec<f64>,
    /// Width of the second MLP hidden layer; the first stays at 8.
    pub mlp_neurons: Vec<usize>,
    pub cnn_filters: Vec<usize>,
    pub cnn_window: usize,
    pub cnn_kernel: usize,
    pub lstm_units_1layer: Vec<usize>,
    /// Width of the second LSTM layer; the first stays at 32.
    pub lstm_units_2layer: Vec<usize>,
    /// Training pairs taken from the end of the training split.
    pub data_size: Vec<usize>,
    pub multi_step: Vec<usize>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            epsilons: vec![0.05, 0.081],
            mlp_neurons: vec![1, 2, 4, 8, 16, 32, 64],
            cnn_filters: vec![8, 16, 32, 64, 128],
            cnn_window: 5,
            cnn_kernel: 2,
            lstm_units_1layer: vec![8, 16, 32, 64],
            lstm_units_2layer: vec![8, 16, 32, 64],
            data_size: vec![2000, 4000, 6000, 8000, 10000, 12000, 14000, 16000, 18000],
            multi_step: vec![2, 3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub system: SystemConfig,
    pub integrator: IntegratorConfig,
    pub data: DataConfig,
    pub models: ModelsConfig,
    pub train: TrainConfig,
    pub forecast: ForecastConfig,
    pub param_switch: ParamSwitchConfig,
    pub ablation: AblationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: vec![1, 2, 3],
            out_dir: PathBuf::from("results"),
            system: SystemConfig::default(),
            integrator: IntegratorConfig::default(),
            data: DataConfig::default(),
            models: ModelsConfig::default(),
            train: TrainConfig::default(),
            forecast: ForecastConfig::default(),
            param_switch: ParamSwitchConfig::default(),
            ablation: AblationConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        if self.system.epsilons.is_empty() {
            return bad("system.epsilons is empty".into());
        }
        for &eps in self.system.epsilons.iter().chain(&self.ablation.epsilons) {
            self.system
                .params(eps)
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if self.data.n_train == 0 || self.data.n_test == 0 {
            return bad("data.n_train and data.n_test must be positive".into());
        }
        self.train
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        for kind in ModelKind::ALL {
            let arch = self.models.architecture(kind);
            if arch.kind() != kind {
                return bad(format!("models.{kind} has kind {}", arch.kind()));
            }
            self.model_spec(kind, 1)
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if self.param_switch.model.kind() != ModelKind::Lstm {
            return bad("param_switch.model must be an LSTM".into());
        }
        Ok(())
    }

    /// Total integration time: the transient plus every stored sample.
    pub fn t_end(&self) -> f64 {
        self.integrator.transient
            + (self.data.n_train + self.data.n_test) as f64 * self.integrator.sample_interval
    }

    pub fn model_spec(&self, kind: ModelKind, num_features: usize) -> ModelSpec {
        ModelSpec {
            window_len: self.data.window_len,
            horizon: self.data.horizon,
            num_features,
            architecture: self.models.architecture(kind).clone(),
        }
    }

    /// SHA-256 over the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        let mut hex = String::with_capacity(64);
        for b in Sha256::digest(&bytes) {
            write!(hex, "{b:02x}").unwrap();
        }
        hex
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = ExperimentConfig::from_toml("seeds = [7]\n[train]\nepochs = 3\n").unwrap();
        assert_eq!(cfg.seeds, vec![7]);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.batch_size, 64);
        assert_eq!(cfg.data.n_train, 18000);
        assert_eq!(cfg.t_end(), 21000.0);
    }

    #[test]
    fn hash_tracks_content_not_output_dir() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.out_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seeds = vec![1, 2];
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_toml("[train]\nepochs = 0\n").is_err());
        assert!(ExperimentConfig::from_toml("seeds = []\n").is_err());
        assert!(ExperimentConfig::from_toml("[system]\nepsilons = [-0.1]\n").is_err());
        assert!(
            ExperimentConfig::from_toml("[models.mlp]\nkind = \"lstm\"\nunits = [4]\n").is_err()
        );
        assert!(ExperimentConfig::from_toml("typo = 1\n").is_err());
    }
}
