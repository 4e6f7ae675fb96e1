//! Simulation of a parametrically driven non-polynomial oscillator and
//! from-scratch neural forecasters (MLP, 1-D CNN, LSTM) for predicting its
//! chaotic time series and the emergence of extreme events.
//!
//! The crate is organised bottom-up:
//!
//! * [`dynamics`]: equation of motion, RK4 integration, peaks and the
//!   extreme-event threshold.
//! * [`dataset`]: train/test split, min-max scaling, supervised framing.
//! * [`neuralcore`]: tensors, layers, reverse-mode gradients, Adam.
//! * [`models`]: the three forecasting architectures and their variants.
//! * [`forecast`]: training loop, walk-forward and multi-step forecasting,
//!   RMSE and event-matching metrics.

pub mod dataset;
pub mod dynamics;
mod error;
pub mod forecast;
pub mod models;
pub mod neuralcore;

pub use error::{Error, Result};
