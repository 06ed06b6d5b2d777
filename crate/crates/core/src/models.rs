//! The two estimators: a single-hidden-layer sky classifier trained with
//! L-BFGS, and a five-hidden-layer GHI regressor trained with SGD-Nesterov.
//! Also the evaluation metrics and the k-fold cross-validation harness.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{fit_scaler, StandardScaler};
use crate::matrix::Matrix;
use crate::neuralnet::{
    cross_entropy_loss, init_params, mse_loss, softmax, Activation, LayerSpec, Mode, NetworkModel,
};
use crate::num::{real, to_f64, Real};
use crate::optim::{lbfgs_minimize, LbfgsConfig, SgdNesterov};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkyClass {
    Clear = 0,
    Cloudy = 1,
}

impl SkyClass {
    pub fn from_index(i: usize) -> SkyClass {
        if i == 0 {
            SkyClass::Clear
        } else {
            SkyClass::Cloudy
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SkyClass::Clear => "clear",
            SkyClass::Cloudy => "cloudy",
        }
    }

    pub fn parse(s: &str) -> Option<SkyClass> {
        match s {
            "clear" => Some(SkyClass::Clear),
            "cloudy" => Some(SkyClass::Cloudy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifierConfig<T> {
    pub input_dim: usize,
    pub hidden_units: usize,
    pub l2: T,
    pub lbfgs: LbfgsConfig<T>,
}

impl<T: Real> Default for ClassifierConfig<T> {
    fn default() -> Self {
        Self { input_dim: 64, hidden_units: 27, l2: real(0.01), lbfgs: LbfgsConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct RegressorConfig<T> {
    pub input_dim: usize,
    pub hidden_units: Vec<usize>,
    pub dropout_rates: Vec<f64>,
    pub batch_norm: bool,
    pub learning_rate: T,
    pub momentum: T,
    pub epochs: usize,
    pub batch_size: usize,
}

impl<T: Real> Default for RegressorConfig<T> {
    fn default() -> Self {
        Self {
            input_dim: 256,
            hidden_units: vec![256, 128, 128, 64, 37],
            dropout_rates: vec![0.5, 0.5, 0.5, 0.5, 0.3],
            batch_norm: true,
            learning_rate: real(0.01),
            momentum: real(0.9),
            // small batches matter here: with heavy dropout the network is
            // update-count-limited, and large batches stall well short of
            // the achievable fit
            epochs: 60,
            batch_size: 32,
        }
    }
}

fn classifier_specs<T: Real>(config: &ClassifierConfig<T>) -> Vec<LayerSpec> {
    vec![
        LayerSpec::dense(config.hidden_units, Activation::Sigmoid),
        LayerSpec::dense(2, Activation::Linear),
    ]
}

fn one_hot<T: Real>(labels: &[SkyClass]) -> Matrix<T> {
    let mut m = Matrix::zeros(labels.len(), 2);
    for (i, &l) in labels.iter().enumerate() {
        m[(i, l as usize)] = T::one();
    }
    m
}

/// Full-batch L-BFGS on cross-entropy plus an l2 penalty on the weights.
pub fn train_classifier<T: Real>(
    features: &Matrix<T>,
    labels: &[SkyClass],
    config: &ClassifierConfig<T>,
    seed: u64,
) -> Result<NetworkModel<T>> {
    if features.rows() != labels.len() {
        return Err(Error::LengthMismatch { expected: features.rows(), got: labels.len() });
    }
    if features.rows() < 2 {
        return Err(Error::TooFewRows { need: 2, got: features.rows() });
    }
    let has_clear = labels.iter().any(|&l| l == SkyClass::Clear);
    let has_cloudy = labels.iter().any(|&l| l == SkyClass::Cloudy);
    if !has_clear || !has_cloudy {
        return Err(Error::SingleClassData);
    }
    let targets = one_hot::<T>(labels);
    let mut model = init_params::<T>(&classifier_specs(config), config.input_dim, seed);
    let init = model.flatten_params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objective = |params: &[T]| -> (T, Vec<T>) {
        model.set_params(params).expect("congruent parameter vector");
        let (scores, cache) = model
            .forward(features, &mut rng, Mode::Infer)
            .expect("forward on training batch");
        let probs = softmax(&scores);
        let (loss, lgrad) = cross_entropy_loss(&probs, &targets).expect("valid distributions");
        let mut grads = model.backward(&cache, &lgrad).expect("fresh cache");
        grads.add_l2(&model, config.l2);
        let value = loss + config.l2 * model.weight_sq_norm();
        (value, grads.flatten())
    };
    let outcome = lbfgs_minimize(objective, init, &config.lbfgs)?;
    model.set_params(&outcome.params)?;
    model.mode = Mode::Infer;
    Ok(model)
}

/// Probabilities for one standardized PCNP row; the label is the argmax
/// with ties resolved to clear.
pub fn classify<T: Real>(model: &NetworkModel<T>, row: &[T]) -> Result<(SkyClass, [T; 2])> {
    let probs = classify_batch(model, &Matrix::from_rows(&[row.to_vec()]))?;
    Ok(probs.into_iter().next().unwrap())
}

pub fn classify_batch<T: Real>(
    model: &NetworkModel<T>,
    rows: &Matrix<T>,
) -> Result<Vec<(SkyClass, [T; 2])>> {
    if model.mode != Mode::Infer {
        return Err(Error::UntrainedModel);
    }
    let mut scratch = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (scores, _) = scratch.forward(rows, &mut rng, Mode::Infer)?;
    let probs = softmax(&scores);
    Ok((0..probs.rows())
        .map(|i| {
            let p = [probs[(i, 0)], probs[(i, 1)]];
            let label = if p[1] > p[0] { SkyClass::Cloudy } else { SkyClass::Clear };
            (label, p)
        })
        .collect())
}

fn regressor_specs<T: Real>(config: &RegressorConfig<T>) -> Vec<LayerSpec> {
    let mut specs: Vec<LayerSpec> = config
        .hidden_units
        .iter()
        .zip(&config.dropout_rates)
        .map(|(&units, &rate)| LayerSpec {
            units,
            activation: Activation::Relu,
            dropout_rate: rate,
            batch_norm: config.batch_norm,
        })
        .collect();
    specs.push(LayerSpec::dense(1, Activation::Linear));
    specs
}

/// Mini-batch SGD with Nesterov momentum on mean squared error. The
/// returned model is in inference mode.
pub fn train_regressor<T: Real>(
    features: &Matrix<T>,
    targets: &[T],
    config: &RegressorConfig<T>,
    seed: u64,
) -> Result<NetworkModel<T>> {
    if features.rows() != targets.len() {
        return Err(Error::LengthMismatch { expected: features.rows(), got: targets.len() });
    }
    if features.rows() < 2 * config.batch_size {
        return Err(Error::InsufficientData(format!(
            "regressor needs at least {} rows, got {}",
            2 * config.batch_size,
            features.rows()
        )));
    }
    assert_eq!(config.hidden_units.len(), config.dropout_rates.len(), "config layer mismatch");
    // train against standardized targets for stable step sizes, then fold
    // the affine back into the (linear, norm-free) output layer
    let n_t = real::<T>(targets.len() as f64);
    let t_mean = targets.iter().copied().sum::<T>() / n_t;
    let t_var = targets.iter().map(|&t| (t - t_mean) * (t - t_mean)).sum::<T>() / n_t;
    let t_std = t_var.sqrt();
    let t_scale = if t_std > T::zero() { t_std } else { T::one() };
    let scaled_targets: Vec<T> = targets.iter().map(|&t| (t - t_mean) / t_scale).collect();
    let mut model = init_params::<T>(&regressor_specs(config), config.input_dim, seed);
    let mut flat = model.flatten_params();
    let mut opt = SgdNesterov::new(config.learning_rate, config.momentum, flat.len());
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut order: Vec<usize> = (0..features.rows()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                // train-mode batch norm needs at least two rows
                continue;
            }
            let mut batch = Matrix::zeros(chunk.len(), features.cols());
            let mut target = Matrix::zeros(chunk.len(), 1);
            for (bi, &i) in chunk.iter().enumerate() {
                batch.row_mut(bi).copy_from_slice(features.row(i));
                target[(bi, 0)] = scaled_targets[i];
            }
            opt.step(&mut flat, |lookahead| {
                model.set_params(lookahead).expect("congruent parameter vector");
                let (pred, cache) = model
                    .forward(&batch, &mut dropout_rng, Mode::Train)
                    .expect("forward on training batch");
                let (_, lgrad) = mse_loss(&pred, &target).expect("shape-matched loss");
                model.backward(&cache, &lgrad).expect("fresh cache").flatten()
            })?;
        }
    }
    model.set_params(&flat)?;
    let out_layer = model.layers.last_mut().expect("output layer");
    for w in out_layer.weights.data_mut() {
        *w *= t_scale;
    }
    for b in out_layer.biases.iter_mut() {
        *b = *b * t_scale + t_mean;
    }
    model.mode = Mode::Infer;
    Ok(model)
}

/// GHI estimate for one standardized PCNP row, clamped at the physical
/// floor of 0.
pub fn estimate_ghi<T: Real>(model: &NetworkModel<T>, row: &[T]) -> Result<T> {
    Ok(estimate_batch(model, &Matrix::from_rows(&[row.to_vec()]))?[0])
}

pub fn estimate_batch<T: Real>(model: &NetworkModel<T>, rows: &Matrix<T>) -> Result<Vec<T>> {
    if model.mode != Mode::Infer {
        return Err(Error::UntrainedModel);
    }
    let mut scratch = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (pred, _) = scratch.forward(rows, &mut rng, Mode::Infer)?;
    Ok((0..pred.rows()).map(|i| pred[(i, 0)].max(T::zero())).collect())
}

/// Fraction of exact label matches.
pub fn accuracy(predictions: &[SkyClass], labels: &[SkyClass]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), got: predictions.len() });
    }
    if predictions.is_empty() {
        return Err(Error::EmptySet);
    }
    let hits = predictions.iter().zip(labels).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// 1 - SS_res / SS_tot, with SS_tot about the target mean.
pub fn r2_score<T: Real>(pred: &[T], target: &[T]) -> Result<T> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch { expected: target.len(), got: pred.len() });
    }
    if target.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = real::<T>(target.len() as f64);
    let mean = target.iter().copied().sum::<T>() / n;
    let ss_tot: T = target.iter().map(|&t| (t - mean) * (t - mean)).sum();
    if ss_tot <= T::zero() {
        return Err(Error::ZeroVariance);
    }
    let ss_res: T = pred.iter().zip(target).map(|(&p, &t)| (p - t) * (p - t)).sum();
    Ok(T::one() - ss_res / ss_tot)
}

pub fn mae<T: Real>(pred: &[T], target: &[T]) -> Result<T> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch { expected: target.len(), got: pred.len() });
    }
    if target.is_empty() {
        return Err(Error::EmptySet);
    }
    let sum: T = pred.iter().zip(target).map(|(&p, &t)| (p - t).abs()).sum();
    Ok(sum / real(target.len() as f64))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FoldMetrics {
    pub accuracy: Option<f64>,
    pub r2: Option<f64>,
    pub mae: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub folds: Vec<FoldMetrics>,
    pub mean: FoldMetrics,
    pub std: FoldMetrics,
}

fn aggregate(values: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return (None, None);
    }
    let n = present.len() as f64;
    let mean = present.iter().sum::<f64>() / n;
    let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

impl EvalReport {
    fn from_folds(folds: Vec<FoldMetrics>) -> Self {
        let (acc_m, acc_s) = aggregate(&folds.iter().map(|f| f.accuracy).collect::<Vec<_>>());
        let (r2_m, r2_s) = aggregate(&folds.iter().map(|f| f.r2).collect::<Vec<_>>());
        let (mae_m, mae_s) = aggregate(&folds.iter().map(|f| f.mae).collect::<Vec<_>>());
        EvalReport {
            folds,
            mean: FoldMetrics { accuracy: acc_m, r2: r2_m, mae: mae_m },
            std: FoldMetrics { accuracy: acc_s, r2: r2_s, mae: mae_s },
        }
    }

    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        let mut out = String::from("fold,accuracy,r2,mae\n");
        for (i, f) in self.folds.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{}\n",
                cell(f.accuracy),
                cell(f.r2),
                cell(f.mae)
            ));
        }
        out.push_str(&format!(
            "mean,{},{},{}\n",
            cell(self.mean.accuracy),
            cell(self.mean.r2),
            cell(self.mean.mae)
        ));
        out.push_str(&format!(
            "std,{},{},{}\n",
            cell(self.std.accuracy),
            cell(self.std.r2),
            cell(self.std.mae)
        ));
        out
    }
}

/// Seeded shuffle followed by k contiguous validation folds whose sizes
/// differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || n < k {
        return Err(Error::TooFewRows { need: k.max(1), got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        folds.push(order[pos..pos + size].to_vec());
        pos += size;
    }
    Ok(folds)
}

/// K-fold cross validation over raw (unscaled) features. A fresh scaler
/// is fitted on each fold's training portion only, so validation rows
/// never influence the standardization.
pub fn kfold_cv<T, Tgt, M>(
    features: &Matrix<T>,
    targets: &[Tgt],
    k: usize,
    seed: u64,
    mut train_fn: impl FnMut(&Matrix<T>, &[Tgt], u64) -> Result<M>,
    mut eval_fn: impl FnMut(&M, &Matrix<T>, &[Tgt]) -> Result<FoldMetrics>,
) -> Result<EvalReport>
where
    T: Real,
    Tgt: Clone,
{
    if features.rows() != targets.len() {
        return Err(Error::LengthMismatch { expected: features.rows(), got: targets.len() });
    }
    let folds = kfold_indices(features.rows(), k, seed)?;
    let mut metrics = Vec::with_capacity(k);
    for (fold_idx, val_idx) in folds.iter().enumerate() {
        let in_val = {
            let mut mark = vec![false; features.rows()];
            for &i in val_idx {
                mark[i] = true;
            }
            mark
        };
        let train_idx: Vec<usize> = (0..features.rows()).filter(|&i| !in_val[i]).collect();
        let gather = |idx: &[usize]| -> (Matrix<T>, Vec<Tgt>) {
            let mut m = Matrix::zeros(idx.len(), features.cols());
            let mut t = Vec::with_capacity(idx.len());
            for (bi, &i) in idx.iter().enumerate() {
                m.row_mut(bi).copy_from_slice(features.row(i));
                t.push(targets[i].clone());
            }
            (m, t)
        };
        let (train_x_raw, train_y) = gather(&train_idx);
        let (val_x_raw, val_y) = gather(val_idx);
        let scaler = fit_scaler(&train_x_raw)?;
        let train_x = scaler.transform(&train_x_raw)?;
        let val_x = scaler.transform(&val_x_raw)?;
        let model = train_fn(&train_x, &train_y, seed.wrapping_add(fold_idx as u64))?;
        metrics.push(eval_fn(&model, &val_x, &val_y)?);
    }
    Ok(EvalReport::from_folds(metrics))
}

/// Seeded train/test split returning (train, test) index sets.
pub fn train_test_split(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let cut = ((n as f64) * train_fraction).round() as usize;
    let cut = cut.min(n);
    let test = order.split_off(cut);
    (order, test)
}

/// Standardizes with the given scaler and converts to f64 predictions;
/// helper shared by the CLI and the evaluation harness.
pub fn scaled_estimates<T: Real>(
    model: &NetworkModel<T>,
    scaler: &StandardScaler<T>,
    raw_rows: &Matrix<T>,
) -> Result<Vec<f64>> {
    let rows = scaler.transform(raw_rows)?;
    Ok(estimate_batch(model, &rows)?.into_iter().map(to_f64).collect())
}
