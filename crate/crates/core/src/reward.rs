//! Win-rate predictors used as the search reward: a finished draft's feature
//! vector goes in, Radiant's win probability comes out.
//!
//! Three model kinds are supported: a majority-class constant, logistic
//! regression, and a one-hidden-layer network (ReLU hidden units, sigmoid
//! output). Training is plain mini-batch gradient descent on binary
//! cross-entropy with an L2 penalty on weights, and is deterministic for a
//! given seed.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::MatchDataset;
use crate::draft::{DraftState, FeatureVector, HeroId, Team};
use crate::error::{Error, Result};
use crate::metrics;
use crate::rng;

pub const MODEL_FORMAT: &str = "herodraft-reward-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Anything that scores a finished line-up with Radiant's win probability.
pub trait WinPredictor: Send + Sync {
    fn n_features(&self) -> usize;

    /// Radiant's win probability, in `[0, 1]`.
    fn win_probability(&self, radiant: &[HeroId], dire: &[HeroId]) -> f64;

    /// Scores a draft state after checking the pool size.
    fn evaluate(&self, state: &DraftState) -> Result<f64> {
        if state.n_heroes() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                actual: state.n_heroes(),
            });
        }
        Ok(self.win_probability(&state.picks(Team::Radiant), &state.picks(Team::Dire)))
    }
}

impl<T: WinPredictor + ?Sized> WinPredictor for &T {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn win_probability(&self, radiant: &[HeroId], dire: &[HeroId]) -> f64 {
        (**self).win_probability(radiant, dire)
    }
}

impl<T: WinPredictor + ?Sized> WinPredictor for std::sync::Arc<T> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn win_probability(&self, radiant: &[HeroId], dire: &[HeroId]) -> f64 {
        (**self).win_probability(radiant, dire)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    MajorityClass,
    LogisticRegression,
    NeuralNet,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" | "majority" | "majority_class" => Ok(ModelKind::MajorityClass),
            "lr" | "logistic" | "logistic_regression" => Ok(ModelKind::LogisticRegression),
            "nn" | "neural_net" => Ok(ModelKind::NeuralNet),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_penalty: f64,
    /// Share of the input held out to report validation metrics.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_units: 64,
            learning_rate: 0.01,
            epochs: 20,
            batch_size: 256,
            l2_penalty: 0.0,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self, kind: ModelKind) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if kind == ModelKind::NeuralNet && self.hidden_units == 0 {
            return bad("hidden_units must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.l2_penalty.is_finite() && self.l2_penalty >= 0.0) {
            return bad("l2_penalty must be non-negative");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// `None` when the evaluation data holds a single class.
    pub auc: Option<f64>,
    pub n_samples: usize,
}

impl EvalReport {
    pub fn auc(&self) -> Result<f64> {
        self.auc.ok_or(Error::UndefinedAuc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub config: TrainConfig,
    pub dataset_fingerprint: String,
    pub n_train: usize,
    pub n_validation: usize,
    pub validation: Option<EvalReport>,
    /// Full training-set loss (cross-entropy plus penalty) after each epoch.
    pub epoch_losses: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
enum Params {
    Constant {
        probability: f64,
    },
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    /// `hidden_weights` is row-major by input feature: the weights of
    /// feature `i` are `hidden_weights[i * hidden .. (i + 1) * hidden]`.
    Mlp {
        hidden: usize,
        hidden_weights: Vec<f64>,
        hidden_bias: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardModel {
    n_features: usize,
    params: Params,
    metadata: Option<TrainingMetadata>,
}

/// Nonzero features of one sample.
type SparseRow = Vec<(usize, f64)>;

fn sparse(features: &FeatureVector) -> SparseRow {
    features
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect()
}

fn lineup_row(radiant: &[HeroId], dire: &[HeroId]) -> SparseRow {
    radiant
        .iter()
        .map(|h| (h.index(), 1.0))
        .chain(dire.iter().map(|h| (h.index(), -1.0)))
        .collect()
}

fn binary_cross_entropy(p: f64, y: f64) -> f64 {
    const EPS: f64 = 1e-15;
    let p = p.clamp(EPS, 1.0 - EPS);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

impl RewardModel {
    pub fn majority_class(n_features: usize, probability: f64) -> Self {
        RewardModel {
            n_features,
            params: Params::Constant { probability },
            metadata: None,
        }
    }

    pub fn logistic(weights: Vec<f64>, bias: f64) -> Self {
        RewardModel {
            n_features: weights.len(),
            params: Params::Linear { weights, bias },
            metadata: None,
        }
    }

    /// Builds a network from explicit parameters; `hidden_weights` is laid
    /// out feature-major (`n_features * hidden`).
    pub fn neural_net(
        n_features: usize,
        hidden_weights: Vec<f64>,
        hidden_bias: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: f64,
    ) -> Result<Self> {
        let hidden = hidden_bias.len();
        if hidden == 0
            || output_weights.len() != hidden
            || hidden_weights.len() != n_features * hidden
        {
            return Err(Error::ModelFormat(format!(
                "inconsistent network shapes for {n_features} features and {hidden} hidden units"
            )));
        }
        Ok(RewardModel {
            n_features,
            params: Params::Mlp {
                hidden,
                hidden_weights,
                hidden_bias,
                output_weights,
                output_bias,
            },
            metadata: None,
        })
    }

    /// Untrained model with seeded uniform `±1/sqrt(fan_in)` weights.
    pub fn initialized(kind: ModelKind, n_features: usize, hidden_units: usize, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let mut uniform = |fan_in: usize, count: usize| -> Vec<f64> {
            let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
            (0..count).map(|_| rng.gen_range(-bound..=bound)).collect()
        };
        match kind {
            ModelKind::MajorityClass => Self::majority_class(n_features, 0.5),
            ModelKind::LogisticRegression => Self::logistic(uniform(n_features, n_features), 0.0),
            ModelKind::NeuralNet => {
                let hidden_weights = uniform(n_features, n_features * hidden_units);
                let hidden_bias = uniform(n_features, hidden_units);
                let output_weights = uniform(hidden_units, hidden_units);
                let output_bias = uniform(hidden_units, 1)[0];
                Self::neural_net(
                    n_features,
                    hidden_weights,
                    hidden_bias,
                    output_weights,
                    output_bias,
                )
                .expect("shapes are consistent by construction")
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.params {
            Params::Constant { .. } => ModelKind::MajorityClass,
            Params::Linear { .. } => ModelKind::LogisticRegression,
            Params::Mlp { .. } => ModelKind::NeuralNet,
        }
    }

    pub fn hidden_units(&self) -> Option<usize> {
        match self.params {
            Params::Mlp { hidden, .. } => Some(hidden),
            _ => None,
        }
    }

    pub fn metadata(&self) -> Option<&TrainingMetadata> {
        self.metadata.as_ref()
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<f64> {
        if features.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                actual: features.len(),
            });
        }
        Ok(self.probability_row(&sparse(features)))
    }

    fn logit_row(&self, row: &[(usize, f64)]) -> f64 {
        match &self.params {
            Params::Constant { probability } => {
                let p = probability.clamp(1e-300, 1.0 - 1e-16);
                (p / (1.0 - p)).ln()
            }
            Params::Linear { weights, bias } => {
                bias + row.iter().map(|&(i, x)| weights[i] * x).sum::<f64>()
            }
            Params::Mlp {
                hidden,
                hidden_weights,
                hidden_bias,
                output_weights,
                output_bias,
            } => {
                let mut pre = hidden_bias.clone();
                for &(i, x) in row {
                    let w = &hidden_weights[i * hidden..(i + 1) * hidden];
                    for (p, wij) in pre.iter_mut().zip(w) {
                        *p += wij * x;
                    }
                }
                output_bias
                    + pre
                        .iter()
                        .zip(output_weights)
                        .map(|(p, v)| p.max(0.0) * v)
                        .sum::<f64>()
            }
        }
    }

    fn probability_row(&self, row: &[(usize, f64)]) -> f64 {
        match &self.params {
            Params::Constant { probability } => *probability,
            _ => sigmoid(self.logit_row(row)),
        }
    }

    pub fn evaluate_dataset(&self, dataset: &MatchDataset) -> Result<EvalReport> {
        evaluate(self, dataset)
    }

    /// Flattened trainable parameters: weights first, then biases, in a
    /// fixed order (LR: weights, bias; NN: hidden weights, hidden biases,
    /// output weights, output bias).
    pub fn parameters(&self) -> Vec<f64> {
        match &self.params {
            Params::Constant { probability } => vec![*probability],
            Params::Linear { weights, bias } => {
                let mut v = weights.clone();
                v.push(*bias);
                v
            }
            Params::Mlp {
                hidden_weights,
                hidden_bias,
                output_weights,
                output_bias,
                ..
            } => {
                let mut v = hidden_weights.clone();
                v.extend_from_slice(hidden_bias);
                v.extend_from_slice(output_weights);
                v.push(*output_bias);
                v
            }
        }
    }

    pub fn set_parameters(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.parameters().len() {
            return Err(Error::Dimension {
                expected: self.parameters().len(),
                actual: flat.len(),
            });
        }
        match &mut self.params {
            Params::Constant { probability } => *probability = flat[0],
            Params::Linear { weights, bias } => {
                let n = weights.len();
                weights.copy_from_slice(&flat[..n]);
                *bias = flat[n];
            }
            Params::Mlp {
                hidden_weights,
                hidden_bias,
                output_weights,
                output_bias,
                ..
            } => {
                let (a, rest) = flat.split_at(hidden_weights.len());
                let (b, rest) = rest.split_at(hidden_bias.len());
                let (c, rest) = rest.split_at(output_weights.len());
                hidden_weights.copy_from_slice(a);
                hidden_bias.copy_from_slice(b);
                output_weights.copy_from_slice(c);
                *output_bias = rest[0];
            }
        }
        Ok(())
    }

    /// Mean cross-entropy over `samples` plus `l2 / 2 * |weights|^2`.
    pub fn loss(&self, samples: &[(FeatureVector, bool)], l2: f64) -> Result<f64> {
        let rows = self.rows(samples)?;
        Ok(self.loss_rows(&rows, l2))
    }

    /// Loss and its analytic gradient with respect to [`parameters`](Self::parameters).
    pub fn loss_and_gradient(
        &self,
        samples: &[(FeatureVector, bool)],
        l2: f64,
    ) -> Result<(f64, Vec<f64>)> {
        let rows = self.rows(samples)?;
        let refs: Vec<&(SparseRow, f64)> = rows.iter().collect();
        let mut grad = Gradient::zeros(self);
        self.accumulate(&refs, &mut grad);
        let mut flat = grad.flatten(self, refs.len(), l2);
        if let Params::Constant { .. } = self.params {
            flat = vec![0.0];
        }
        Ok((self.loss_rows(&rows, l2), flat))
    }

    fn rows(&self, samples: &[(FeatureVector, bool)]) -> Result<Vec<(SparseRow, f64)>> {
        samples
            .iter()
            .map(|(x, y)| {
                if x.len() != self.n_features {
                    Err(Error::Dimension {
                        expected: self.n_features,
                        actual: x.len(),
                    })
                } else {
                    Ok((sparse(x), if *y { 1.0 } else { 0.0 }))
                }
            })
            .collect()
    }

    fn loss_rows(&self, rows: &[(SparseRow, f64)], l2: f64) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let ce = rows
            .iter()
            .map(|(x, y)| binary_cross_entropy(self.probability_row(x), *y))
            .sum::<f64>()
            / rows.len() as f64;
        ce + 0.5 * l2 * self.weight_norm_sq()
    }

    fn weight_norm_sq(&self) -> f64 {
        match &self.params {
            Params::Constant { .. } => 0.0,
            Params::Linear { weights, .. } => weights.iter().map(|w| w * w).sum(),
            Params::Mlp {
                hidden_weights,
                output_weights,
                ..
            } => hidden_weights
                .iter()
                .chain(output_weights)
                .map(|w| w * w)
                .sum(),
        }
    }

    /// Adds the unpenalized cross-entropy gradient summed over `batch`.
    fn accumulate(&self, batch: &[&(SparseRow, f64)], grad: &mut Gradient) {
        match (&self.params, grad) {
            (Params::Constant { .. }, _) => {}
            (
                Params::Linear { weights, bias },
                Gradient::Linear {
                    weights: gw,
                    bias: gb,
                },
            ) => {
                for (x, y) in batch.iter().map(|r| (&r.0, r.1)) {
                    let z = bias + x.iter().map(|&(i, v)| weights[i] * v).sum::<f64>();
                    let dz = sigmoid(z) - y;
                    for &(i, v) in x {
                        gw[i] += dz * v;
                    }
                    *gb += dz;
                }
            }
            (
                Params::Mlp {
                    hidden,
                    hidden_weights,
                    hidden_bias,
                    output_weights,
                    output_bias,
                },
                Gradient::Mlp {
                    hidden_weights: g_hw,
                    hidden_bias: g_hb,
                    output_weights: g_ow,
                    output_bias: g_ob,
                },
            ) => {
                let h = *hidden;
                let mut pre = vec![0.0; h];
                let mut delta = vec![0.0; h];
                for (x, y) in batch.iter().map(|r| (&r.0, r.1)) {
                    pre.copy_from_slice(hidden_bias);
                    for &(i, v) in x {
                        for (p, w) in pre.iter_mut().zip(&hidden_weights[i * h..(i + 1) * h]) {
                            *p += w * v;
                        }
                    }
                    let z = output_bias
                        + pre
                            .iter()
                            .zip(output_weights)
                            .map(|(p, v)| p.max(0.0) * v)
                            .sum::<f64>();
                    let dz = sigmoid(z) - y;
                    *g_ob += dz;
                    for j in 0..h {
                        let active = pre[j] > 0.0;
                        g_ow[j] += dz * pre[j].max(0.0);
                        delta[j] = if active { dz * output_weights[j] } else { 0.0 };
                        g_hb[j] += delta[j];
                    }
                    for &(i, v) in x {
                        for (g, d) in g_hw[i * h..(i + 1) * h].iter_mut().zip(&delta) {
                            *g += d * v;
                        }
                    }
                }
            }
            _ => unreachable!("gradient shape always matches the model"),
        }
    }

    /// One gradient-descent update from a summed gradient over `n` samples.
    fn descend(&mut self, grad: &Gradient, n: usize, lr: f64, l2: f64) {
        let scale = 1.0 / n as f64;
        match (&mut self.params, grad) {
            (
                Params::Linear { weights, bias },
                Gradient::Linear {
                    weights: gw,
                    bias: gb,
                },
            ) => {
                for (w, g) in weights.iter_mut().zip(gw) {
                    *w -= lr * (g * scale + l2 * *w);
                }
                *bias -= lr * gb * scale;
            }
            (
                Params::Mlp {
                    hidden_weights,
                    hidden_bias,
                    output_weights,
                    output_bias,
                    ..
                },
                Gradient::Mlp {
                    hidden_weights: g_hw,
                    hidden_bias: g_hb,
                    output_weights: g_ow,
                    output_bias: g_ob,
                },
            ) => {
                for (w, g) in hidden_weights.iter_mut().zip(g_hw) {
                    *w -= lr * (g * scale + l2 * *w);
                }
                for (w, g) in output_weights.iter_mut().zip(g_ow) {
                    *w -= lr * (g * scale + l2 * *w);
                }
                for (b, g) in hidden_bias.iter_mut().zip(g_hb) {
                    *b -= lr * g * scale;
                }
                *output_bias -= lr * g_ob * scale;
            }
            _ => {}
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::ModelFormat(format!("unreadable model file: {e}")))?;
        file.into_model()
    }
}

impl WinPredictor for RewardModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn win_probability(&self, radiant: &[HeroId], dire: &[HeroId]) -> f64 {
        self.probability_row(&lineup_row(radiant, dire))
    }
}

enum Gradient {
    None,
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    Mlp {
        hidden_weights: Vec<f64>,
        hidden_bias: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: f64,
    },
}

impl Gradient {
    fn zeros(model: &RewardModel) -> Self {
        match &model.params {
            Params::Constant { .. } => Gradient::None,
            Params::Linear { weights, .. } => Gradient::Linear {
                weights: vec![0.0; weights.len()],
                bias: 0.0,
            },
            Params::Mlp {
                hidden_weights,
                hidden_bias,
                ..
            } => Gradient::Mlp {
                hidden_weights: vec![0.0; hidden_weights.len()],
                hidden_bias: vec![0.0; hidden_bias.len()],
                output_weights: vec![0.0; hidden_bias.len()],
                output_bias: 0.0,
            },
        }
    }

    fn reset(&mut self) {
        match self {
            Gradient::None => {}
            Gradient::Linear { weights, bias } => {
                weights.fill(0.0);
                *bias = 0.0;
            }
            Gradient::Mlp {
                hidden_weights,
                hidden_bias,
                output_weights,
                output_bias,
            } => {
                hidden_weights.fill(0.0);
                hidden_bias.fill(0.0);
                output_weights.fill(0.0);
                *output_bias = 0.0;
            }
        }
    }

    /// Mean gradient including the penalty term, in parameter order.
    fn flatten(&self, model: &RewardModel, n: usize, l2: f64) -> Vec<f64> {
        let scale = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        match (self, &model.params) {
            (Gradient::Linear { weights, bias }, Params::Linear { weights: w, .. }) => {
                let mut v: Vec<f64> = weights
                    .iter()
                    .zip(w)
                    .map(|(g, w)| g * scale + l2 * w)
                    .collect();
                v.push(bias * scale);
                v
            }
            (
                Gradient::Mlp {
                    hidden_weights,
                    hidden_bias,
                    output_weights,
                    output_bias,
                },
                Params::Mlp {
                    hidden_weights: hw,
                    output_weights: ow,
                    ..
                },
            ) => {
                let mut v: Vec<f64> = hidden_weights
                    .iter()
                    .zip(hw)
                    .map(|(g, w)| g * scale + l2 * w)
                    .collect();
                v.extend(hidden_bias.iter().map(|g| g * scale));
                v.extend(
                    output_weights
                        .iter()
                        .zip(ow)
                        .map(|(g, w)| g * scale + l2 * w),
                );
                v.push(output_bias * scale);
                v
            }
            _ => Vec::new(),
        }
    }
}

fn dataset_rows(dataset: &MatchDataset) -> Vec<(SparseRow, f64)> {
    dataset
        .records()
        .iter()
        .map(|r| {
            (
                lineup_row(&r.radiant, &r.dire),
                if r.radiant_win { 1.0 } else { 0.0 },
            )
        })
        .collect()
}

/// Trains a model of `kind` on `dataset`.
///
/// A seeded `validation_fraction` of the records is held out and only used
/// for the validation report stored in the model's metadata.
pub fn train(dataset: &MatchDataset, kind: ModelKind, config: &TrainConfig) -> Result<RewardModel> {
    if dataset.is_empty() {
        return Err(Error::data("cannot train on an empty dataset"));
    }
    config.validate(kind)?;
    let (train_set, validation_set) = dataset.split(
        config.validation_fraction,
        rng::derive_seed(config.seed, &[1]),
    )?;
    if train_set.is_empty() {
        return Err(Error::data("validation split leaves no training records"));
    }
    let n = dataset.n_heroes();
    let rows = dataset_rows(&train_set);

    let mut model = match kind {
        ModelKind::MajorityClass => RewardModel::majority_class(n, train_set.radiant_win_rate()),
        _ => RewardModel::initialized(
            kind,
            n,
            config.hidden_units,
            rng::derive_seed(config.seed, &[2]),
        ),
    };

    let mut epoch_losses = Vec::new();
    if kind != ModelKind::MajorityClass {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut shuffle_rng = rng::seeded(rng::derive_seed(config.seed, &[3]));
        let mut grad = Gradient::zeros(&model);
        let mut batch: Vec<&(SparseRow, f64)> = Vec::with_capacity(config.batch_size);
        for _ in 0..config.epochs {
            order.shuffle(&mut shuffle_rng);
            for chunk in order.chunks(config.batch_size) {
                batch.clear();
                batch.extend(chunk.iter().map(|&i| &rows[i]));
                grad.reset();
                model.accumulate(&batch, &mut grad);
                model.descend(&grad, batch.len(), config.learning_rate, config.l2_penalty);
            }
            epoch_losses.push(model.loss_rows(&rows, config.l2_penalty));
        }
    } else {
        epoch_losses.push(model.loss_rows(&rows, 0.0));
    }

    let validation = if validation_set.is_empty() {
        None
    } else {
        Some(evaluate(&model, &validation_set)?)
    };
    model.metadata = Some(TrainingMetadata {
        config: config.clone(),
        dataset_fingerprint: dataset.fingerprint(),
        n_train: train_set.len(),
        n_validation: validation_set.len(),
        validation,
        epoch_losses,
    });
    Ok(model)
}

/// Accuracy at the 0.5 threshold and rank-statistic AUC.
pub fn evaluate(model: &dyn WinPredictor, dataset: &MatchDataset) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::data("cannot evaluate on an empty dataset"));
    }
    if model.n_features() != dataset.n_heroes() {
        return Err(Error::Dimension {
            expected: model.n_features(),
            actual: dataset.n_heroes(),
        });
    }
    let scores: Vec<f64> = dataset
        .records()
        .iter()
        .map(|r| model.win_probability(&r.radiant, &r.dire))
        .collect();
    let labels: Vec<bool> = dataset.records().iter().map(|r| r.radiant_win).collect();
    Ok(EvalReport {
        accuracy: metrics::accuracy(&scores, &labels),
        auc: metrics::auc(&scores, &labels).ok(),
        n_samples: scores.len(),
    })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    format_version: u32,
    kind: ModelKind,
    n_features: usize,
    #[serde(default)]
    hidden_units: Option<usize>,
    /// MC: `[p]`; LR: feature weights; NN: hidden weights, feature-major.
    #[serde(default)]
    weights: Vec<f64>,
    #[serde(default)]
    biases: Vec<f64>,
    #[serde(default)]
    output_weights: Vec<f64>,
    #[serde(default)]
    output_bias: Option<f64>,
    #[serde(default)]
    training: Option<TrainingMetadata>,
}

impl From<&RewardModel> for ModelFile {
    fn from(m: &RewardModel) -> Self {
        let mut file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            format_version: MODEL_FORMAT_VERSION,
            kind: m.kind(),
            n_features: m.n_features,
            hidden_units: m.hidden_units(),
            weights: Vec::new(),
            biases: Vec::new(),
            output_weights: Vec::new(),
            output_bias: None,
            training: m.metadata.clone(),
        };
        match &m.params {
            Params::Constant { probability } => file.weights = vec![*probability],
            Params::Linear { weights, bias } => {
                file.weights = weights.clone();
                file.biases = vec![*bias];
            }
            Params::Mlp {
                hidden_weights,
                hidden_bias,
                output_weights,
                output_bias,
                ..
            } => {
                file.weights = hidden_weights.clone();
                file.biases = hidden_bias.clone();
                file.output_weights = output_weights.clone();
                file.output_bias = Some(*output_bias);
            }
        }
        file
    }
}

impl ModelFile {
    fn into_model(self) -> Result<RewardModel> {
        if self.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!(
                "unexpected format tag `{}`",
                self.format
            )));
        }
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format_version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        let n = self.n_features;
        let shape_error =
            |what: &str| Err(Error::ModelFormat(format!("{what} has the wrong length")));
        let mut model = match self.kind {
            ModelKind::MajorityClass => {
                if self.weights.len() != 1 {
                    return shape_error("constant probability");
                }
                RewardModel::majority_class(n, self.weights[0])
            }
            ModelKind::LogisticRegression => {
                if self.weights.len() != n {
                    return shape_error("weights");
                }
                if self.biases.len() != 1 {
                    return shape_error("biases");
                }
                RewardModel::logistic(self.weights, self.biases[0])
            }
            ModelKind::NeuralNet => {
                let h = self
                    .hidden_units
                    .ok_or_else(|| Error::ModelFormat("neural net without hidden_units".into()))?;
                if self.biases.len() != h || self.output_weights.len() != h {
                    return shape_error("hidden layer");
                }
                let ob = self
                    .output_bias
                    .ok_or_else(|| Error::ModelFormat("neural net without output_bias".into()))?;
                RewardModel::neural_net(n, self.weights, self.biases, self.output_weights, ob)?
            }
        };
        if model.parameters().iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelFormat("non-finite parameter".into()));
        }
        model.metadata = self.training;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_logistic_is_half() {
        let m = RewardModel::logistic(vec![0.0; 4], 0.0);
        let x = FeatureVector::new(vec![1.0, -1.0, 0.0, 1.0]);
        assert_eq!(m.predict(&x).unwrap(), 0.5);
    }

    #[test]
    fn logistic_hand_checked() {
        let m = RewardModel::logistic(vec![1.0, -1.0], 0.0);
        let p = m.predict(&FeatureVector::new(vec![1.0, -1.0])).unwrap();
        // sigmoid(2)
        assert!((p - 0.880_797_077_977_882_3).abs() < 1e-12);
    }

    #[test]
    fn majority_class_is_constant() {
        let m = RewardModel::majority_class(3, 0.5375);
        for x in [[1.0, -1.0, 0.0], [0.0, 0.0, 0.0], [-1.0, 1.0, 1.0]] {
            assert_eq!(m.predict(&FeatureVector::new(x.to_vec())).unwrap(), 0.5375);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = RewardModel::initialized(ModelKind::NeuralNet, 111, 4, 1);
        let err = m.predict(&FeatureVector::new(vec![0.0; 20])).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 111,
                actual: 20
            }
        ));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_files() {
        let m = RewardModel::logistic(vec![0.25, -0.5], 0.1);
        let text = m.to_json().unwrap();
        let wrong_version = text.replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(
            RewardModel::from_json(&wrong_version),
            Err(Error::ModelFormat(_))
        ));
        let wrong_magic = text.replace(MODEL_FORMAT, "something-else");
        assert!(matches!(
            RewardModel::from_json(&wrong_magic),
            Err(Error::ModelFormat(_))
        ));
        assert!(matches!(
            RewardModel::from_json("{not json"),
            Err(Error::ModelFormat(_))
        ));
    }
}
