//! Weight checkpoints: a JSON manifest of named arrays with their shapes.
//!
//! ```json
//! {"format":"eeforecast-weights/1","arrays":[{"name":"0.dense.w","shape":[8,1],"data":[...]}]}
//! ```
//!
//! Values are written in shortest round-trip form, so loading reproduces the
//! weights bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Network, Tensor};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "eeforecast-weights/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub arrays: Vec<NamedArray>,
}

impl Checkpoint {
    pub fn from_network(net: &Network) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            arrays: net
                .parameters()
                .into_iter()
                .map(|(name, t)| NamedArray {
                    name,
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                })
                .collect(),
        }
    }

    /// Overwrites the weights of a network with the same architecture.
    pub fn load_into(&self, net: &mut Network) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::domain(format!(
                "unknown checkpoint format {:?}",
                self.format
            )));
        }
        let names: Vec<String> = net.parameters().into_iter().map(|(n, _)| n).collect();
        if names.len() != self.arrays.len() {
            return Err(Error::shape(format!(
                "checkpoint has {} arrays, network has {}",
                self.arrays.len(),
                names.len()
            )));
        }
        for ((name, param), array) in names.iter().zip(net.parameters_mut()).zip(&self.arrays) {
            if *name != array.name || param.shape() != array.shape.as_slice() {
                return Err(Error::shape(format!(
                    "checkpoint array {} {:?} does not match parameter {name} {:?}",
                    array.name,
                    array.shape,
                    param.shape()
                )));
            }
            *param = Tensor::new(array.shape.clone(), array.data.clone())?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}
