//! Binary maximum-entropy (logistic regression) classifier on standardized
//! features.

use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use crate::error::{Error, Result};
use crate::nncore::{sigmoid, Adam, AdamState, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxEntModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Training-set feature means.
    pub mean: Vec<f64>,
    /// Training-set feature standard deviations, 1 where a feature is
    /// constant.
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntConfig {
    pub lr: f64,
    pub epochs: usize,
}

impl Default for MaxEntConfig {
    fn default() -> Self {
        MaxEntConfig {
            lr: 0.05,
            epochs: 200,
        }
    }
}

impl MaxEntModel {
    /// Untrained model over `dim` features: zero weights and identity
    /// standardization.
    pub fn zeros(dim: usize) -> Self {
        MaxEntModel {
            weights: vec![0.0; dim],
            bias: 0.0,
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn logit_standardized(&self, z: &[f64]) -> f64 {
        self.weights.iter().zip(z).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// `σ(w · standardize(x) + b)`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!(
                "maxent expects {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(sigmoid(self.logit_standardized(&self.standardize(x))))
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.mean)
            .chain(&self.std)
            .chain(std::iter::once(&self.bias))
            .all(|v| v.is_finite())
    }
}

pub fn score_maxent(model: &MaxEntModel, fv: &FeatureVector) -> Result<f64> {
    model.score(fv.as_slice())
}

/// Fits weights and bias by full-batch Adam on the mean cross-entropy.
///
/// Fails when the labels contain a single class or the rows differ in width.
pub fn train_maxent(rows: &[Vec<f64>], labels: &[u8], cfg: &MaxEntConfig) -> Result<MaxEntModel> {
    if rows.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature rows for {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Shape("feature rows of different widths".into()));
    }

    let n = rows.len() as f64;
    let mut model = MaxEntModel::zeros(dim);
    for k in 0..dim {
        let mean = rows.iter().map(|r| r[k]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
        model.mean[k] = mean;
        model.std[k] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let z: Vec<Vec<f64>> = rows.iter().map(|r| model.standardize(r)).collect();

    let mut params = vec![Tensor::<f64>::zeros(&[dim]), Tensor::zeros(&[1])];
    let mut grads = vec![Tensor::<f64>::zeros(&[dim]), Tensor::zeros(&[1])];
    let mut state = AdamState::new(&params);
    let adam = Adam::with_lr(cfg.lr);
    for _ in 0..cfg.epochs {
        model.weights.copy_from_slice(params[0].data());
        model.bias = params[1].data()[0];
        let mut gw = vec![0.0; dim];
        let mut gb = 0.0;
        for (x, &y) in z.iter().zip(labels) {
            let d = sigmoid(model.logit_standardized(x)) - f64::from(y);
            for (g, v) in gw.iter_mut().zip(x) {
                *g += d * v;
            }
            gb += d;
        }
        for (g, v) in grads[0].data_mut().iter_mut().zip(&gw) {
            *g = v / n;
        }
        grads[1].data_mut()[0] = gb / n;
        adam.step(&mut params, &mut state, &grads)?;
    }
    model.weights.copy_from_slice(params[0].data());
    model.bias = params[1].data()[0];
    if !model.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(model)
}
