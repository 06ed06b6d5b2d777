//! Feed-forward network with exact backpropagation.
//!
//! Each hidden layer applies dense -> batch norm (optional) -> activation
//! -> inverted dropout (train mode only). Batch norm keeps running
//! statistics with momentum 0.9 for inference; dropout scales surviving
//! activations by 1/(1-rate) so inference is a plain forward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::num::{real, Real};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
    pub dropout_rate: f64,
    pub batch_norm: bool,
}

impl LayerSpec {
    pub fn dense(units: usize, activation: Activation) -> Self {
        Self { units, activation, dropout_rate: 0.0, batch_norm: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub spec: LayerSpec,
    /// fan_in × units
    pub weights: Matrix<T>,
    pub biases: Vec<T>,
    pub bn: Option<BatchNormParams<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel<T> {
    pub input_dim: usize,
    pub layers: Vec<Layer<T>>,
    pub mode: Mode,
}

struct BnCache<T> {
    centered: Matrix<T>,
    xhat: Matrix<T>,
    inv_std: Vec<T>,
}

struct LayerCache<T> {
    input: Matrix<T>,
    bn: Option<BnCache<T>>,
    pre_activation: Matrix<T>,
    activated: Matrix<T>,
    /// 0 or 1/(1-rate) per element
    dropout_mask: Option<Matrix<T>>,
}

pub struct ForwardCache<T> {
    layers: Vec<LayerCache<T>>,
    rows: usize,
    mode: Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients<T> {
    pub weights: Matrix<T>,
    pub biases: Vec<T>,
    pub gamma: Option<Vec<T>>,
    pub beta: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<T> {
    pub layers: Vec<LayerGradients<T>>,
}

fn activate<T: Real>(a: Activation, x: T) -> T {
    match a {
        Activation::Relu => {
            if x > T::zero() {
                x
            } else {
                T::zero()
            }
        }
        Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
        Activation::Tanh => x.tanh(),
        Activation::Linear => x,
    }
}

/// Derivative in terms of pre-activation `x` and activated value `y`.
fn activate_grad<T: Real>(a: Activation, x: T, y: T) -> T {
    match a {
        Activation::Relu => {
            if x > T::zero() {
                T::one()
            } else {
                T::zero()
            }
        }
        Activation::Sigmoid => y * (T::one() - y),
        Activation::Tanh => T::one() - y * y,
        Activation::Linear => T::one(),
    }
}

pub fn init_params<T: Real>(specs: &[LayerSpec], input_dim: usize, seed: u64) -> NetworkModel<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(specs.len());
    let mut fan_in = input_dim;
    for spec in specs {
        let fan_out = spec.units;
        // He-uniform for relu, Xavier-uniform otherwise
        let limit = match spec.activation {
            Activation::Relu => (6.0 / fan_in as f64).sqrt(),
            _ => (6.0 / (fan_in + fan_out) as f64).sqrt(),
        };
        let mut weights = Matrix::zeros(fan_in, fan_out);
        for w in weights.data_mut() {
            *w = real((rng.gen::<f64>() * 2.0 - 1.0) * limit);
        }
        let bn = spec.batch_norm.then(|| BatchNormParams {
            gamma: vec![T::one(); fan_out],
            beta: vec![T::zero(); fan_out],
            running_mean: vec![T::zero(); fan_out],
            running_var: vec![T::one(); fan_out],
        });
        layers.push(Layer { spec: spec.clone(), weights, biases: vec![T::zero(); fan_out], bn });
        fan_in = fan_out;
    }
    NetworkModel { input_dim, layers, mode: Mode::Train }
}

impl<T: Real> NetworkModel<T> {
    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, |l| l.spec.units)
    }

    pub fn forward(
        &mut self,
        batch: &Matrix<T>,
        rng: &mut ChaCha8Rng,
        mode: Mode,
    ) -> Result<(Matrix<T>, ForwardCache<T>)> {
        if batch.cols() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "batch has {} columns, model expects {}",
                batch.cols(),
                self.input_dim
            )));
        }
        if mode == Mode::Train && batch.rows() < 2 && self.layers.iter().any(|l| l.bn.is_some()) {
            return Err(Error::DegenerateBatch);
        }
        let n = batch.rows();
        let n_t = real::<T>(n as f64);
        let eps = real::<T>(BN_EPS);
        let momentum = real::<T>(BN_MOMENTUM);
        let mut current = batch.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in self.layers.iter_mut() {
            let input = current;
            let units = layer.spec.units;
            let mut z = input.matmul(&layer.weights);
            for i in 0..n {
                for (v, &b) in z.row_mut(i).iter_mut().zip(&layer.biases) {
                    *v += b;
                }
            }
            let bn_cache = if let Some(bn) = layer.bn.as_mut() {
                let mut centered = Matrix::zeros(n, units);
                let mut xhat = Matrix::zeros(n, units);
                let mut inv_std = vec![T::zero(); units];
                match mode {
                    Mode::Train => {
                        let mut mean = vec![T::zero(); units];
                        for i in 0..n {
                            for (m, &v) in mean.iter_mut().zip(z.row(i)) {
                                *m += v;
                            }
                        }
                        for m in mean.iter_mut() {
                            *m /= n_t;
                        }
                        let mut var = vec![T::zero(); units];
                        for i in 0..n {
                            for j in 0..units {
                                let c = z[(i, j)] - mean[j];
                                centered[(i, j)] = c;
                                var[j] += c * c;
                            }
                        }
                        for v in var.iter_mut() {
                            *v /= n_t;
                        }
                        for j in 0..units {
                            inv_std[j] = T::one() / (var[j] + eps).sqrt();
                        }
                        for i in 0..n {
                            for j in 0..units {
                                let h = centered[(i, j)] * inv_std[j];
                                xhat[(i, j)] = h;
                                z[(i, j)] = bn.gamma[j] * h + bn.beta[j];
                            }
                        }
                        for j in 0..units {
                            bn.running_mean[j] =
                                momentum * bn.running_mean[j] + (T::one() - momentum) * mean[j];
                            bn.running_var[j] =
                                momentum * bn.running_var[j] + (T::one() - momentum) * var[j];
                        }
                    }
                    Mode::Infer => {
                        for j in 0..units {
                            inv_std[j] = T::one() / (bn.running_var[j] + eps).sqrt();
                        }
                        for i in 0..n {
                            for j in 0..units {
                                let c = z[(i, j)] - bn.running_mean[j];
                                centered[(i, j)] = c;
                                let h = c * inv_std[j];
                                xhat[(i, j)] = h;
                                z[(i, j)] = bn.gamma[j] * h + bn.beta[j];
                            }
                        }
                    }
                }
                Some(BnCache { centered, xhat, inv_std })
            } else {
                None
            };
            let pre_activation = z;
            let mut activated = pre_activation.map(|x| activate(layer.spec.activation, x));
            let dropout_mask = if mode == Mode::Train && layer.spec.dropout_rate > 0.0 {
                let keep = 1.0 - layer.spec.dropout_rate;
                let scale = real::<T>(1.0 / keep);
                let mut mask = Matrix::zeros(n, units);
                for m in mask.data_mut() {
                    *m = if rng.gen::<f64>() < keep { scale } else { T::zero() };
                }
                for (a, &m) in activated.data_mut().iter_mut().zip(mask.data()) {
                    *a = *a * m;
                }
                Some(mask)
            } else {
                None
            };
            current = activated.clone();
            caches.push(LayerCache { input, bn: bn_cache, pre_activation, activated, dropout_mask });
        }
        Ok((current, ForwardCache { layers: caches, rows: n, mode }))
    }

    pub fn backward(&self, cache: &ForwardCache<T>, loss_grad: &Matrix<T>) -> Result<GradientSet<T>> {
        if cache.layers.len() != self.layers.len()
            || loss_grad.rows() != cache.rows
            || loss_grad.cols() != self.output_dim()
        {
            return Err(Error::StaleCache);
        }
        let n = cache.rows;
        let n_t = real::<T>(n as f64);
        let mut grads: Vec<LayerGradients<T>> = Vec::with_capacity(self.layers.len());
        let mut upstream = loss_grad.clone();
        for (layer, lc) in self.layers.iter().zip(&cache.layers).rev() {
            if lc.input.cols() != layer.weights.rows() || lc.activated.cols() != layer.spec.units {
                return Err(Error::StaleCache);
            }
            let units = layer.spec.units;
            // dropout
            if let Some(mask) = &lc.dropout_mask {
                for (g, &m) in upstream.data_mut().iter_mut().zip(mask.data()) {
                    *g = *g * m;
                }
            }
            // activation: note activated carries the dropout scaling, so
            // recompute the raw activation for the derivative
            let mut dz = upstream;
            for (g, (&x, _)) in dz
                .data_mut()
                .iter_mut()
                .zip(lc.pre_activation.data().iter().zip(lc.activated.data()))
            {
                let y = activate(layer.spec.activation, x);
                *g = *g * activate_grad(layer.spec.activation, x, y);
            }
            // batch norm
            let (dz, dgamma, dbeta) = if let Some(bn) = &layer.bn {
                let bc = lc.bn.as_ref().ok_or(Error::StaleCache)?;
                let mut dgamma = vec![T::zero(); units];
                let mut dbeta = vec![T::zero(); units];
                let mut dxhat = Matrix::zeros(n, units);
                for i in 0..n {
                    for j in 0..units {
                        let dy = dz[(i, j)];
                        dgamma[j] += dy * bc.xhat[(i, j)];
                        dbeta[j] += dy;
                        dxhat[(i, j)] = dy * bn.gamma[j];
                    }
                }
                let mut out = Matrix::zeros(n, units);
                match cache.mode {
                    Mode::Train => {
                        // full batch-statistics chain rule
                        for j in 0..units {
                            let inv = bc.inv_std[j];
                            let mut sum_dxhat = T::zero();
                            let mut sum_dxhat_c = T::zero();
                            for i in 0..n {
                                sum_dxhat += dxhat[(i, j)];
                                sum_dxhat_c += dxhat[(i, j)] * bc.centered[(i, j)];
                            }
                            let dvar = sum_dxhat_c * (-real::<T>(0.5)) * inv * inv * inv;
                            let dmean = -inv * sum_dxhat;
                            for i in 0..n {
                                out[(i, j)] = dxhat[(i, j)] * inv
                                    + dvar * real::<T>(2.0) * bc.centered[(i, j)] / n_t
                                    + dmean / n_t;
                            }
                        }
                    }
                    Mode::Infer => {
                        // running statistics are constants
                        for j in 0..units {
                            for i in 0..n {
                                out[(i, j)] = dxhat[(i, j)] * bc.inv_std[j];
                            }
                        }
                    }
                }
                (out, Some(dgamma), Some(dbeta))
            } else {
                (dz, None, None)
            };
            // dense
            let dw = lc.input.t_matmul(&dz);
            let mut db = vec![T::zero(); units];
            for i in 0..n {
                for (b, &g) in db.iter_mut().zip(dz.row(i)) {
                    *b += g;
                }
            }
            upstream = dz.matmul_t(&layer.weights);
            grads.push(LayerGradients { weights: dw, biases: db, gamma: dgamma, beta: dbeta });
        }
        grads.reverse();
        Ok(GradientSet { layers: grads })
    }

    /// Trainable parameters (weights, biases, gamma, beta) flattened in
    /// layer order. Running statistics are not trainable.
    pub fn flatten_params(&self) -> Vec<T> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.data());
            out.extend_from_slice(&layer.biases);
            if let Some(bn) = &layer.bn {
                out.extend_from_slice(&bn.gamma);
                out.extend_from_slice(&bn.beta);
            }
        }
        out
    }

    pub fn set_params(&mut self, flat: &[T]) -> Result<()> {
        let expected: usize = self
            .layers
            .iter()
            .map(|l| {
                l.weights.data().len()
                    + l.biases.len()
                    + l.bn.as_ref().map_or(0, |b| b.gamma.len() + b.beta.len())
            })
            .sum();
        if flat.len() != expected {
            return Err(Error::LengthMismatch { expected, got: flat.len() });
        }
        let mut pos = 0;
        for layer in self.layers.iter_mut() {
            let wlen = layer.weights.data().len();
            layer.weights.data_mut().copy_from_slice(&flat[pos..pos + wlen]);
            pos += wlen;
            let blen = layer.biases.len();
            layer.biases.copy_from_slice(&flat[pos..pos + blen]);
            pos += blen;
            if let Some(bn) = layer.bn.as_mut() {
                let glen = bn.gamma.len();
                bn.gamma.copy_from_slice(&flat[pos..pos + glen]);
                pos += glen;
                bn.beta.copy_from_slice(&flat[pos..pos + glen]);
                pos += glen;
            }
        }
        Ok(())
    }

    /// Sum of squared dense weights (biases, gamma, beta excluded).
    pub fn weight_sq_norm(&self) -> T {
        self.layers
            .iter()
            .map(|l| l.weights.data().iter().map(|&w| w * w).sum::<T>())
            .sum()
    }
}

impl<T: Real> GradientSet<T> {
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.data());
            out.extend_from_slice(&layer.biases);
            if let Some(g) = &layer.gamma {
                out.extend_from_slice(g);
            }
            if let Some(b) = &layer.beta {
                out.extend_from_slice(b);
            }
        }
        out
    }

    /// Adds 2λW to the weight gradients (l2 penalty on weights only).
    pub fn add_l2(&mut self, model: &NetworkModel<T>, lambda: T) {
        let two = real::<T>(2.0);
        for (g, layer) in self.layers.iter_mut().zip(&model.layers) {
            for (gw, &w) in g.weights.data_mut().iter_mut().zip(layer.weights.data()) {
                *gw += two * lambda * w;
            }
        }
    }
}

pub fn mse_loss<T: Real>(pred: &Matrix<T>, target: &Matrix<T>) -> Result<(T, Matrix<T>)> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::LengthMismatch { expected: target.rows(), got: pred.rows() });
    }
    let n = real::<T>((pred.rows() * pred.cols().max(1)) as f64);
    let mut grad = pred.clone();
    let mut value = T::zero();
    for (g, (&p, &t)) in grad
        .data_mut()
        .iter_mut()
        .zip(pred.data().iter().zip(target.data()))
    {
        let d = p - t;
        value += d * d;
        *g = real::<T>(2.0) * d / n;
    }
    Ok((value / n, grad))
}

/// Row-wise numerically stable softmax.
pub fn softmax<T: Real>(scores: &Matrix<T>) -> Matrix<T> {
    let mut out = scores.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean negative log-likelihood over probability rows; the gradient is
/// returned with respect to the pre-softmax scores in the fused
/// (prob - target)/n form.
pub fn cross_entropy_loss<T: Real>(
    probabilities: &Matrix<T>,
    one_hot: &Matrix<T>,
) -> Result<(T, Matrix<T>)> {
    if probabilities.rows() != one_hot.rows() || probabilities.cols() != one_hot.cols() {
        return Err(Error::LengthMismatch { expected: one_hot.rows(), got: probabilities.rows() });
    }
    let tol = real::<T>(1e-9);
    for i in 0..probabilities.rows() {
        let sum: T = probabilities.row(i).iter().copied().sum();
        if (sum - T::one()).abs() > tol {
            return Err(Error::InvalidDistribution(format!("row {i} sums to {sum}")));
        }
    }
    let n = real::<T>(probabilities.rows() as f64);
    let floor = T::min_positive_value();
    let mut value = T::zero();
    let mut grad = probabilities.clone();
    for (g, (&p, &t)) in grad
        .data_mut()
        .iter_mut()
        .zip(probabilities.data().iter().zip(one_hot.data()))
    {
        if t > T::zero() {
            value -= t * p.max(floor).ln();
        }
        *g = (p - t) / n;
    }
    Ok((value / n, grad))
}
