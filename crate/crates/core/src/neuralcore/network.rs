use super::layers::{Cache, Layer};
use super::Tensor;
use crate::{Error, Result};

/// A sequential stack of layers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    pub layers: Vec<Layer>,
}

/// Parameter gradients flattened in [`Network::parameters`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Tensor>);

impl Gradients {
    pub fn tensors(&self) -> &[Tensor] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackwardPass {
    pub loss: f64,
    pub grads: Gradients,
    pub input_grad: Tensor,
}

/// Mean of squared differences over all elements.
pub fn mse_loss(pred: &Tensor, actual: &Tensor) -> Result<f64> {
    if pred.shape() != actual.shape() {
        return Err(Error::shape(format!(
            "prediction {:?} and target {:?} differ in shape",
            pred.shape(),
            actual.shape()
        )));
    }
    if pred.is_empty() {
        return Err(Error::shape("mse of empty arrays"));
    }
    let sum: f64 = pred
        .data()
        .iter()
        .zip(actual.data())
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(sum / pred.len() as f64)
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Self {
        Network { layers }
    }

    /// Named parameters (`"{layer}.{kind}.{name}"`) in a fixed order.
    pub fn parameters(&self) -> Vec<(String, &Tensor)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, layer)| {
                let kind = layer.kind();
                layer
                    .params()
                    .into_iter()
                    .map(move |(name, t)| (format!("{i}.{kind}.{name}"), t))
            })
            .collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.params_mut())
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|(_, t)| t.len()).sum()
    }

    /// Inference pass; the input's leading axis is the batch.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.forward(&x)?;
        }
        Ok(x)
    }

    fn forward_train(&self, input: &Tensor) -> Result<(Tensor, Vec<Cache>)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for layer in &self.layers {
            let (y, cache) = layer.forward_train(x)?;
            caches.push(cache);
            x = y;
        }
        Ok((x, caches))
    }

    /// Batch MSE and its exact gradient with respect to every parameter.
    pub fn loss_and_gradients(
        &self,
        inputs: &Tensor,
        targets: &Tensor,
    ) -> Result<(f64, Gradients)> {
        let pass = self.backward(inputs, targets)?;
        Ok((pass.loss, pass.grads))
    }

    /// Forward pass, batch MSE, then reverse-mode gradients for every
    /// parameter and for the input.
    pub fn backward(&self, inputs: &Tensor, targets: &Tensor) -> Result<BackwardPass> {
        let (pred, caches) = self.forward_train(inputs)?;
        let loss = mse_loss(&pred, targets)?;
        let scale = 2.0 / pred.len() as f64;
        let grad_data = pred
            .data()
            .iter()
            .zip(targets.data())
            .map(|(p, a)| scale * (p - a))
            .collect();
        let mut grad = Tensor::new(pred.shape().to_vec(), grad_data)?;

        let mut per_layer: Vec<Vec<Tensor>> = Vec::with_capacity(self.layers.len());
        for (i, (layer, cache)) in self.layers.iter().zip(&caches).enumerate().rev() {
            let (grad_in, params) = layer.backward(cache, &grad)?;
            if let Some(bad) = params.iter().position(|g| !g.all_finite()) {
                let name = layer.params()[bad].0;
                return Err(Error::NonFinite {
                    context: format!("gradient of layer {i} ({}) parameter {name}", layer.kind()),
                });
            }
            per_layer.push(params);
            grad = grad_in;
        }
        per_layer.reverse();
        Ok(BackwardPass {
            loss,
            grads: Gradients(per_layer.into_iter().flatten().collect()),
            input_grad: grad,
        })
    }
}
