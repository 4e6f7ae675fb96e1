use rand::Rng;

use super::activation::sigmoid;
use super::layers::glorot;
use super::linalg::{add_row_sums, gemm, MatRef};
use super::Tensor;
use crate::{Error, Result};

/// LSTM layer with gate order `[input, forget, candidate, output]`.
///
/// `w` is the input kernel `(4·units, in)`, `u` the recurrent kernel
/// `(4·units, units)`, `b` the bias `(4·units)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
    pub return_sequences: bool,
}

pub(crate) struct LstmCache {
    x: Tensor,
    /// Activated gates per step, `(batch, 4·units)`.
    gates: Vec<Vec<f64>>,
    /// Cell states `c_0..c_T`.
    c: Vec<Vec<f64>>,
    /// Hidden states `h_0..h_T`.
    h: Vec<Vec<f64>>,
    tanh_c: Vec<Vec<f64>>,
}

impl Lstm {
    pub fn zeros(inputs: usize, units: usize, return_sequences: bool) -> Self {
        Lstm {
            w: Tensor::zeros(&[4 * units, inputs]),
            u: Tensor::zeros(&[4 * units, units]),
            b: Tensor::zeros(&[4 * units]),
            return_sequences,
        }
    }

    /// Glorot-uniform kernels, zero bias except a forget-gate bias of one.
    pub fn glorot<R: Rng>(
        inputs: usize,
        units: usize,
        return_sequences: bool,
        rng: &mut R,
    ) -> Self {
        let w = glorot(rng, &[4 * units, inputs], inputs, 4 * units);
        let u = glorot(rng, &[4 * units, units], units, 4 * units);
        let mut b = Tensor::zeros(&[4 * units]);
        b.data_mut()[units..2 * units].fill(1.0);
        Lstm {
            w,
            u,
            b,
            return_sequences,
        }
    }

    pub fn from_params(w: Tensor, u: Tensor, b: Tensor, return_sequences: bool) -> Result<Self> {
        let ok = w.ndim() == 2
            && w.dim(0).is_multiple_of(4)
            && u.shape() == [w.dim(0), w.dim(0) / 4]
            && b.shape() == [w.dim(0)];
        if !ok {
            return Err(Error::shape(format!(
                "lstm kernels {:?}, {:?} and bias {:?} are inconsistent",
                w.shape(),
                u.shape(),
                b.shape()
            )));
        }
        Ok(Lstm {
            w,
            u,
            b,
            return_sequences,
        })
    }

    pub fn units(&self) -> usize {
        self.u.dim(1)
    }

    pub fn inputs(&self) -> usize {
        self.w.dim(1)
    }

    /// One step for a batch: returns `(h, c, activated gates)`.
    fn step(
        &self,
        x_t: MatRef<'_>,
        h_prev: &[f64],
        c_prev: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let batch = x_t.rows;
        let units = self.units();
        let g4 = 4 * units;
        let mut z = Vec::with_capacity(batch * g4);
        for _ in 0..batch {
            z.extend_from_slice(self.b.data());
        }
        gemm(
            x_t,
            MatRef::new(self.w.data(), g4, self.inputs()).t(),
            1.0,
            &mut z,
        );
        gemm(
            MatRef::new(h_prev, batch, units),
            MatRef::new(self.u.data(), g4, units).t(),
            1.0,
            &mut z,
        );
        let mut h = vec![0.0; batch * units];
        let mut c = vec![0.0; batch * units];
        let mut tanh_c = vec![0.0; batch * units];
        for r in 0..batch {
            let zr = &mut z[r * g4..(r + 1) * g4];
            for j in 0..units {
                let i_g = sigmoid(zr[j]);
                let f_g = sigmoid(zr[units + j]);
                let g_g = zr[2 * units + j].tanh();
                let o_g = sigmoid(zr[3 * units + j]);
                zr[j] = i_g;
                zr[units + j] = f_g;
                zr[2 * units + j] = g_g;
                zr[3 * units + j] = o_g;
                let k = r * units + j;
                c[k] = f_g * c_prev[k] + i_g * g_g;
                tanh_c[k] = c[k].tanh();
                h[k] = o_g * tanh_c[k];
            }
        }
        (h, c, z, tanh_c)
    }

    fn check_input(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        x.expect_ndim(3, "lstm layer")?;
        let (batch, steps, features) = (x.dim(0), x.dim(1), x.dim(2));
        if steps == 0 {
            return Err(Error::shape("lstm layer needs at least one time step"));
        }
        if features != self.inputs() {
            return Err(Error::shape(format!(
                "lstm layer expects {} features, got {features}",
                self.inputs()
            )));
        }
        Ok((batch, steps, features))
    }

    fn run(
        &self,
        x: &Tensor,
        return_sequences: bool,
        keep: bool,
    ) -> Result<(Tensor, Option<LstmCache>)> {
        let (batch, steps, features) = self.check_input(x)?;
        let units = self.units();
        let mut h = vec![0.0; batch * units];
        let mut c = vec![0.0; batch * units];
        let mut seq_out = if return_sequences {
            vec![0.0; batch * steps * units]
        } else {
            Vec::new()
        };
        let mut cache = keep.then(|| LstmCache {
            x: x.clone(),
            gates: Vec::with_capacity(steps),
            c: vec![c.clone()],
            h: vec![h.clone()],
            tanh_c: Vec::with_capacity(steps),
        });
        for t in 0..steps {
            let x_t = MatRef::strided(&x.data()[t * features..], batch, features, steps * features);
            let (h_new, c_new, gates, tanh_c) = self.step(x_t, &h, &c);
            if return_sequences {
                for r in 0..batch {
                    let dst = (r * steps + t) * units;
                    seq_out[dst..dst + units].copy_from_slice(&h_new[r * units..(r + 1) * units]);
                }
            }
            if let Some(cache) = cache.as_mut() {
                cache.gates.push(gates);
                cache.tanh_c.push(tanh_c);
                cache.c.push(c_new.clone());
                cache.h.push(h_new.clone());
            }
            h = h_new;
            c = c_new;
        }
        let out = if return_sequences {
            Tensor::new(vec![batch, steps, units], seq_out)?
        } else {
            Tensor::new(vec![batch, units], h)?
        };
        Ok((out, cache))
    }

    pub(crate) fn forward_batch(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.run(x, self.return_sequences, false)?.0)
    }

    pub(crate) fn forward_train(&self, x: &Tensor) -> Result<(Tensor, LstmCache)> {
        let (out, cache) = self.run(x, self.return_sequences, true)?;
        Ok((out, cache.expect("cache requested")))
    }

    /// Backpropagation through time over every step of the cached pass.
    pub(crate) fn backward(&self, cache: &LstmCache, grad_out: &Tensor) -> (Tensor, Vec<Tensor>) {
        let x = &cache.x;
        let (batch, steps, features) = (x.dim(0), x.dim(1), x.dim(2));
        let units = self.units();
        let g4 = 4 * units;
        let w = MatRef::new(self.w.data(), g4, features);
        let u = MatRef::new(self.u.data(), g4, units);

        let mut dw = vec![0.0; g4 * features];
        let mut du = vec![0.0; g4 * units];
        let mut db = vec![0.0; g4];
        let mut dx = vec![0.0; batch * steps * features];
        let mut dh_next = vec![0.0; batch * units];
        let mut dc_next = vec![0.0; batch * units];
        let mut dz = vec![0.0; batch * g4];
        let mut dx_t = vec![0.0; batch * features];

        for t in (0..steps).rev() {
            let gates = &cache.gates[t];
            let c_prev = &cache.c[t];
            let tanh_c = &cache.tanh_c[t];
            for r in 0..batch {
                for j in 0..units {
                    let k = r * units + j;
                    let upstream = if self.return_sequences {
                        grad_out.data()[(r * steps + t) * units + j]
                    } else if t == steps - 1 {
                        grad_out.data()[k]
                    } else {
                        0.0
                    };
                    let dh = dh_next[k] + upstream;
                    let gr = &gates[r * g4..(r + 1) * g4];
                    let (i_g, f_g, g_g, o_g) =
                        (gr[j], gr[units + j], gr[2 * units + j], gr[3 * units + j]);
                    let d_o = dh * tanh_c[k];
                    let dc = dc_next[k] + dh * o_g * (1.0 - tanh_c[k] * tanh_c[k]);
                    let d_i = dc * g_g;
                    let d_g = dc * i_g;
                    let d_f = dc * c_prev[k];
                    dc_next[k] = dc * f_g;
                    let dzr = &mut dz[r * g4..(r + 1) * g4];
                    dzr[j] = d_i * i_g * (1.0 - i_g);
                    dzr[units + j] = d_f * f_g * (1.0 - f_g);
                    dzr[2 * units + j] = d_g * (1.0 - g_g * g_g);
                    dzr[3 * units + j] = d_o * o_g * (1.0 - o_g);
                }
            }
            let dzm = MatRef::new(&dz, batch, g4);
            let x_t = MatRef::strided(&x.data()[t * features..], batch, features, steps * features);
            gemm(dzm.t(), x_t, 1.0, &mut dw);
            gemm(
                dzm.t(),
                MatRef::new(&cache.h[t], batch, units),
                1.0,
                &mut du,
            );
            add_row_sums(&dz, g4, &mut db);
            gemm(dzm, w, 0.0, &mut dx_t);
            for r in 0..batch {
                let dst = (r * steps + t) * features;
                dx[dst..dst + features].copy_from_slice(&dx_t[r * features..(r + 1) * features]);
            }
            gemm(dzm, u, 0.0, &mut dh_next);
        }
        (
            Tensor::new(vec![batch, steps, features], dx).unwrap(),
            vec![
                Tensor::new(vec![g4, features], dw).unwrap(),
                Tensor::new(vec![g4, units], du).unwrap(),
                Tensor::new(vec![g4], db).unwrap(),
            ],
        )
    }
}

fn as_batch(t: &Tensor, width: usize, what: &str) -> Result<(usize, Vec<f64>)> {
    match t.shape() {
        [n] if *n == width => Ok((1, t.data().to_vec())),
        [b, n] if *n == width => Ok((*b, t.data().to_vec())),
        s => Err(Error::shape(format!(
            "{what} expects width {width}, got shape {s:?}"
        ))),
    }
}

/// A single LSTM step. Accepts vectors or `(batch, ·)` matrices and returns
/// `(h, c)` in the shape of `h_prev`.
pub fn lstm_cell(
    x_t: &Tensor,
    h_prev: &Tensor,
    c_prev: &Tensor,
    params: &Lstm,
) -> Result<(Tensor, Tensor)> {
    let units = params.units();
    let (bx, x) = as_batch(x_t, params.inputs(), "lstm cell input")?;
    let (bh, h) = as_batch(h_prev, units, "lstm hidden state")?;
    let (bc, c) = as_batch(c_prev, units, "lstm cell state")?;
    if bx != bh || bh != bc {
        return Err(Error::shape(format!(
            "batch sizes differ: x {bx}, h {bh}, c {bc}"
        )));
    }
    let (h, c, _, _) = params.step(MatRef::new(&x, bx, params.inputs()), &h, &c);
    let shape = h_prev.shape().to_vec();
    Ok((Tensor::new(shape.clone(), h)?, Tensor::new(shape, c)?))
}

/// Runs the layer over a `(steps, features)` sequence (or a batch of them)
/// from zero initial state.
pub fn lstm_layer_forward(
    params: &Lstm,
    sequence: &Tensor,
    return_sequences: bool,
) -> Result<Tensor> {
    if sequence.ndim() == 2 {
        let x = sequence
            .clone()
            .reshape(&[1, sequence.dim(0), sequence.dim(1)])?;
        let (out, _) = params.run(&x, return_sequences, false)?;
        let shape: Vec<usize> = out.shape()[1..].to_vec();
        out.reshape(&shape)
    } else {
        Ok(params.run(sequence, return_sequences, false)?.0)
    }
}
