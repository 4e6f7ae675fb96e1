//! Minimal differentiable building blocks for the forecasting networks.
//!
//! Everything runs in `f64` on the CPU. Layers exchange row-major [`Tensor`]s
//! whose leading axis is the batch. A training forward pass returns per-layer
//! caches that the backward pass consumes to produce exact gradients,
//! including backpropagation through time for LSTM layers.

mod activation;
mod adam;
mod checkpoint;
mod layers;
mod linalg;
mod lstm;
mod network;
mod tensor;

pub use activation::{apply_activation, Activation};
pub use adam::{adam_update, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, NamedArray};
pub use layers::{conv1d_forward, dense_forward, maxpool1d, Conv1d, Dense, Layer, MaxPool1d};
pub use lstm::{lstm_cell, lstm_layer_forward, Lstm};
pub use network::{mse_loss, BackwardPass, Gradients, Network};
pub use tensor::Tensor;
