use rand::Rng;

use super::activation::Activation;
use super::linalg::{add_row_sums, gemm, MatRef};
use super::lstm::{Lstm, LstmCache};
use super::Tensor;
use crate::{Error, Result};

/// Uniform Glorot initialization over `[-limit, limit]`.
pub(crate) fn glorot<R: Rng>(
    rng: &mut R,
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-limit..=limit)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape product matches length")
}

/// Fully connected layer `y = W·x + b`, `W` shaped `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            w: Tensor::zeros(&[outputs, inputs]),
            b: Tensor::zeros(&[outputs]),
        }
    }

    pub fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Dense {
            w: glorot(rng, &[outputs, inputs], inputs, outputs),
            b: Tensor::zeros(&[outputs]),
        }
    }

    pub fn from_params(w: Tensor, b: Tensor) -> Result<Self> {
        if w.ndim() != 2 || b.shape() != [w.dim(0)] {
            return Err(Error::shape(format!(
                "dense weights {:?} and bias {:?} are inconsistent",
                w.shape(),
                b.shape()
            )));
        }
        Ok(Dense { w, b })
    }

    pub fn inputs(&self) -> usize {
        self.w.dim(1)
    }

    pub fn outputs(&self) -> usize {
        self.w.dim(0)
    }

    fn forward_batch(&self, x: &Tensor) -> Result<Tensor> {
        x.expect_ndim(2, "dense layer")?;
        let (batch, n_in) = (x.dim(0), x.dim(1));
        if n_in != self.inputs() {
            return Err(Error::shape(format!(
                "dense layer expects {} inputs, got {n_in}",
                self.inputs()
            )));
        }
        let n_out = self.outputs();
        let mut out = Vec::with_capacity(batch * n_out);
        for _ in 0..batch {
            out.extend_from_slice(self.b.data());
        }
        gemm(
            MatRef::new(x.data(), batch, n_in),
            MatRef::new(self.w.data(), n_out, n_in).t(),
            1.0,
            &mut out,
        );
        Tensor::new(vec![batch, n_out], out)
    }

    fn backward(&self, x: &Tensor, grad_out: &Tensor) -> (Tensor, Vec<Tensor>) {
        let (batch, n_in, n_out) = (x.dim(0), self.inputs(), self.outputs());
        let g = MatRef::new(grad_out.data(), batch, n_out);
        let mut dw = vec![0.0; n_out * n_in];
        gemm(g.t(), MatRef::new(x.data(), batch, n_in), 0.0, &mut dw);
        let mut db = vec![0.0; n_out];
        add_row_sums(grad_out.data(), n_out, &mut db);
        let mut dx = vec![0.0; batch * n_in];
        gemm(g, MatRef::new(self.w.data(), n_out, n_in), 0.0, &mut dx);
        (
            Tensor::new(vec![batch, n_in], dx).unwrap(),
            vec![
                Tensor::new(vec![n_out, n_in], dw).unwrap(),
                Tensor::new(vec![n_out], db).unwrap(),
            ],
        )
    }
}

/// Affine map of a single vector `(in)` or a batch `(batch, in)`.
pub fn dense_forward(params: &Dense, y_prev: &Tensor) -> Result<Tensor> {
    if y_prev.ndim() == 1 {
        let x = y_prev.clone().reshape(&[1, y_prev.len()])?;
        let out = params.forward_batch(&x)?;
        let n = out.len();
        out.reshape(&[n])
    } else {
        params.forward_batch(y_prev)
    }
}

/// Valid 1-D convolution, stride 1, `W` shaped `(filters, kernel, in_channels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub w: Tensor,
    pub b: Tensor,
}

impl Conv1d {
    pub fn zeros(in_channels: usize, filters: usize, kernel: usize) -> Self {
        Conv1d {
            w: Tensor::zeros(&[filters, kernel, in_channels]),
            b: Tensor::zeros(&[filters]),
        }
    }

    pub fn glorot<R: Rng>(in_channels: usize, filters: usize, kernel: usize, rng: &mut R) -> Self {
        Conv1d {
            w: glorot(
                rng,
                &[filters, kernel, in_channels],
                kernel * in_channels,
                kernel * filters,
            ),
            b: Tensor::zeros(&[filters]),
        }
    }

    pub fn from_params(w: Tensor, b: Tensor) -> Result<Self> {
        if w.ndim() != 3 || b.shape() != [w.dim(0)] {
            return Err(Error::shape(format!(
                "conv1d weights {:?} and bias {:?} are inconsistent",
                w.shape(),
                b.shape()
            )));
        }
        Ok(Conv1d { w, b })
    }

    pub fn filters(&self) -> usize {
        self.w.dim(0)
    }

    pub fn kernel(&self) -> usize {
        self.w.dim(1)
    }

    pub fn in_channels(&self) -> usize {
        self.w.dim(2)
    }

    fn check_input(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        x.expect_ndim(3, "conv1d layer")?;
        let (batch, len, ch) = (x.dim(0), x.dim(1), x.dim(2));
        if ch != self.in_channels() {
            return Err(Error::shape(format!(
                "conv1d expects {} channels, got {ch}",
                self.in_channels()
            )));
        }
        if len < self.kernel() {
            return Err(Error::shape(format!(
                "conv1d input of length {len} is shorter than kernel {}",
                self.kernel()
            )));
        }
        Ok((batch, len, ch))
    }

    fn forward_batch(&self, x: &Tensor) -> Result<Tensor> {
        let (batch, len, ch) = self.check_input(x)?;
        let (k, f) = (self.kernel(), self.filters());
        let positions = len - k + 1;
        let mut out = Vec::with_capacity(batch * positions * f);
        for _ in 0..batch * positions {
            out.extend_from_slice(self.b.data());
        }
        let w = MatRef::new(self.w.data(), f, k * ch).t();
        for (b, out_b) in out.chunks_exact_mut(positions * f).enumerate() {
            // Consecutive windows overlap: row p starts `ch` values after row p-1.
            let x_b = &x.data()[b * len * ch..(b + 1) * len * ch];
            gemm(MatRef::strided(x_b, positions, k * ch, ch), w, 1.0, out_b);
        }
        Tensor::new(vec![batch, positions, f], out)
    }

    fn backward(&self, x: &Tensor, grad_out: &Tensor) -> (Tensor, Vec<Tensor>) {
        let (batch, len, ch) = (x.dim(0), x.dim(1), x.dim(2));
        let (k, f) = (self.kernel(), self.filters());
        let positions = len - k + 1;
        let mut dw = vec![0.0; f * k * ch];
        let mut db = vec![0.0; f];
        let mut dx = vec![0.0; batch * len * ch];
        let mut scratch = vec![0.0; positions * k * ch];
        let w = MatRef::new(self.w.data(), f, k * ch);
        for b in 0..batch {
            let x_b = &x.data()[b * len * ch..(b + 1) * len * ch];
            let g_b = &grad_out.data()[b * positions * f..(b + 1) * positions * f];
            let g = MatRef::new(g_b, positions, f);
            gemm(
                g.t(),
                MatRef::strided(x_b, positions, k * ch, ch),
                1.0,
                &mut dw,
            );
            add_row_sums(g_b, f, &mut db);
            gemm(g, w, 0.0, &mut scratch);
            let dx_b = &mut dx[b * len * ch..(b + 1) * len * ch];
            for (p, row) in scratch.chunks_exact(k * ch).enumerate() {
                for (d, v) in dx_b[p * ch..p * ch + k * ch].iter_mut().zip(row) {
                    *d += v;
                }
            }
        }
        (
            Tensor::new(vec![batch, len, ch], dx).unwrap(),
            vec![
                Tensor::new(vec![f, k, ch], dw).unwrap(),
                Tensor::new(vec![f], db).unwrap(),
            ],
        )
    }
}

/// Convolves a single `(len, channels)` sequence or a `(batch, len, channels)` batch.
pub fn conv1d_forward(params: &Conv1d, input: &Tensor) -> Result<Tensor> {
    if input.ndim() == 2 {
        let x = input.clone().reshape(&[1, input.dim(0), input.dim(1)])?;
        let out = params.forward_batch(&x)?;
        let shape = [out.dim(1), out.dim(2)];
        out.reshape(&shape)
    } else {
        params.forward_batch(input)
    }
}

/// Non-overlapping max pooling along the sequence axis. A trailing partial
/// window is pooled over the values it has.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool1d {
    pub pool: usize,
}

impl MaxPool1d {
    /// Output plus, per output element, the flat index of the input it came from.
    fn forward_batch(&self, x: &Tensor) -> Result<(Tensor, Vec<usize>)> {
        x.expect_ndim(3, "max-pool layer")?;
        if self.pool == 0 {
            return Err(Error::shape("pool size must be at least 1"));
        }
        let (batch, len, ch) = (x.dim(0), x.dim(1), x.dim(2));
        let out_len = len.div_ceil(self.pool);
        let mut out = Vec::with_capacity(batch * out_len * ch);
        let mut argmax = Vec::with_capacity(out.capacity());
        let data = x.data();
        for b in 0..batch {
            for w in 0..out_len {
                let start = w * self.pool;
                let end = (start + self.pool).min(len);
                for c in 0..ch {
                    let mut best = b * len * ch + start * ch + c;
                    for p in start + 1..end {
                        let idx = b * len * ch + p * ch + c;
                        // Strict comparison keeps the lowest index on ties.
                        if data[idx] > data[best] {
                            best = idx;
                        }
                    }
                    out.push(data[best]);
                    argmax.push(best);
                }
            }
        }
        Ok((Tensor::new(vec![batch, out_len, ch], out)?, argmax))
    }
}

/// Pools a single `(len, channels)` sequence or a `(batch, len, channels)` batch.
pub fn maxpool1d(input: &Tensor, pool: usize) -> Result<Tensor> {
    let layer = MaxPool1d { pool };
    if input.ndim() == 2 {
        let x = input.clone().reshape(&[1, input.dim(0), input.dim(1)])?;
        let (out, _) = layer.forward_batch(&x)?;
        let shape = [out.dim(1), out.dim(2)];
        out.reshape(&shape)
    } else {
        Ok(layer.forward_batch(input)?.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Conv1d(Conv1d),
    MaxPool1d(MaxPool1d),
    /// Collapses everything after the batch axis.
    Flatten,
    Activation(Activation),
    Lstm(Lstm),
}

/// What a layer keeps from a training forward pass.
pub(crate) enum Cache {
    Input(Tensor),
    Pool {
        in_shape: Vec<usize>,
        argmax: Vec<usize>,
    },
    Flatten {
        in_shape: Vec<usize>,
    },
    Activation {
        z: Tensor,
        y: Tensor,
    },
    Lstm(LstmCache),
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv1d(_) => "conv1d",
            Layer::MaxPool1d(_) => "maxpool1d",
            Layer::Flatten => "flatten",
            Layer::Activation(a) => a.name(),
            Layer::Lstm(_) => "lstm",
        }
    }

    /// Parameter arrays with their local names, in a fixed order.
    pub fn params(&self) -> Vec<(&'static str, &Tensor)> {
        match self {
            Layer::Dense(d) => vec![("w", &d.w), ("b", &d.b)],
            Layer::Conv1d(c) => vec![("w", &c.w), ("b", &c.b)],
            Layer::Lstm(l) => vec![("w", &l.w), ("u", &l.u), ("b", &l.b)],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Dense(d) => vec![&mut d.w, &mut d.b],
            Layer::Conv1d(c) => vec![&mut c.w, &mut c.b],
            Layer::Lstm(l) => vec![&mut l.w, &mut l.u, &mut l.b],
            _ => Vec::new(),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Dense(d) => d.forward_batch(x),
            Layer::Conv1d(c) => c.forward_batch(x),
            Layer::MaxPool1d(p) => Ok(p.forward_batch(x)?.0),
            Layer::Flatten => flatten(x.clone()),
            Layer::Activation(a) => Ok(super::apply_activation(*a, x)),
            Layer::Lstm(l) => l.forward_batch(x),
        }
    }

    pub(crate) fn forward_train(&self, x: Tensor) -> Result<(Tensor, Cache)> {
        Ok(match self {
            Layer::Dense(d) => (d.forward_batch(&x)?, Cache::Input(x)),
            Layer::Conv1d(c) => (c.forward_batch(&x)?, Cache::Input(x)),
            Layer::MaxPool1d(p) => {
                let (y, argmax) = p.forward_batch(&x)?;
                (
                    y,
                    Cache::Pool {
                        in_shape: x.shape().to_vec(),
                        argmax,
                    },
                )
            }
            Layer::Flatten => {
                let in_shape = x.shape().to_vec();
                (flatten(x)?, Cache::Flatten { in_shape })
            }
            Layer::Activation(a) => {
                let y = super::apply_activation(*a, &x);
                (y.clone(), Cache::Activation { z: x, y })
            }
            Layer::Lstm(l) => {
                let (y, cache) = l.forward_train(&x)?;
                (y, Cache::Lstm(cache))
            }
        })
    }

    /// Gradient with respect to the layer input, plus parameter gradients in
    /// the order of [`Layer::params`].
    pub(crate) fn backward(
        &self,
        cache: &Cache,
        grad_out: &Tensor,
    ) -> Result<(Tensor, Vec<Tensor>)> {
        Ok(match (self, cache) {
            (Layer::Dense(d), Cache::Input(x)) => d.backward(x, grad_out),
            (Layer::Conv1d(c), Cache::Input(x)) => c.backward(x, grad_out),
            (Layer::MaxPool1d(_), Cache::Pool { in_shape, argmax }) => {
                let mut dx = Tensor::zeros(in_shape);
                let d = dx.data_mut();
                for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
                    d[idx] += g;
                }
                (dx, Vec::new())
            }
            (Layer::Flatten, Cache::Flatten { in_shape }) => {
                (grad_out.clone().reshape(in_shape)?, Vec::new())
            }
            (Layer::Activation(a), Cache::Activation { z, y }) => {
                let data = grad_out
                    .data()
                    .iter()
                    .zip(z.data().iter().zip(y.data()))
                    .map(|(&g, (&zv, &yv))| g * a.derivative(zv, yv))
                    .collect();
                (Tensor::new(z.shape().to_vec(), data)?, Vec::new())
            }
            (Layer::Lstm(l), Cache::Lstm(c)) => l.backward(c, grad_out),
            _ => {
                return Err(Error::shape(format!(
                    "cache does not belong to a {} layer",
                    self.kind()
                )))
            }
        })
    }
}

fn flatten(x: Tensor) -> Result<Tensor> {
    if x.ndim() == 0 {
        return Err(Error::shape("cannot flatten a scalar"));
    }
    let batch = x.dim(0);
    let rest = x.len() / batch.max(1);
    x.reshape(&[batch, rest])
}
