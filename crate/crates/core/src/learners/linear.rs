use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Standardizer, TrainError};

const BATCH: usize = 32;

/// Multinomial logistic regression trained by minibatch gradient descent;
/// one resource unit is one pass over the training rows.
#[derive(Debug, Clone)]
pub(crate) struct LogisticRegression {
    scaler: Standardizer,
    /// `n_classes` rows of `d + 1` weights, bias last.
    weights: Vec<Vec<f64>>,
}

impl LogisticRegression {
    pub(crate) fn fit(
        data: &Dataset,
        epochs: usize,
        learning_rate: f64,
        l2: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, TrainError> {
        let scaler = Standardizer::fit(&data.features);
        let x = scaler.apply_matrix(&data.features);
        let labels = data.labels().expect("classification data");
        let (n, d, k) = (x.rows(), x.cols(), data.n_classes());
        let mut weights = vec![vec![0.0; d + 1]; k];
        let mut order: Vec<usize> = (0..n).collect();
        let mut grad = vec![vec![0.0; d + 1]; k];
        for _ in 0..epochs {
            order.shuffle(rng);
            for batch in order.chunks(BATCH) {
                grad.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
                for &i in batch {
                    let xi = x.row(i);
                    let p = softmax_scores(&weights, xi);
                    for (c, g) in grad.iter_mut().enumerate() {
                        let err = p[c] - f64::from(u8::from(labels[i] == c));
                        for (gj, xj) in g.iter_mut().zip(xi) {
                            *gj += err * xj;
                        }
                        g[d] += err;
                    }
                }
                let m = batch.len() as f64;
                for (w, g) in weights.iter_mut().zip(&grad) {
                    for j in 0..=d {
                        let reg = if j < d { l2 * w[j] } else { 0.0 };
                        w[j] -= learning_rate * (g[j] / m + reg);
                    }
                }
            }
        }
        if weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(TrainError::Diverged("logistic regression weights"));
        }
        Ok(Self { scaler, weights })
    }

    pub(crate) fn proba(&self, x: &[f64]) -> Vec<f64> {
        softmax_scores(&self.weights, &self.scaler.apply(x))
    }
}

fn softmax_scores(weights: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let logits: Vec<f64> = weights
        .iter()
        .map(|w| w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d])
        .collect();
    softmax(&logits)
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// L2-regularized least squares by minibatch gradient descent on
/// standardized features and target.
#[derive(Debug, Clone)]
pub(crate) struct RidgeRegression {
    scaler: Standardizer,
    weights: Vec<f64>,
    bias: f64,
    y_mean: f64,
    y_scale: f64,
}

impl RidgeRegression {
    pub(crate) fn fit(
        data: &Dataset,
        epochs: usize,
        learning_rate: f64,
        l2: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, TrainError> {
        let scaler = Standardizer::fit(&data.features);
        let x = scaler.apply_matrix(&data.features);
        let y = data.values().expect("regression data");
        let n = y.len();
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let y_scale = if sd > 1e-12 { sd } else { 1.0 };
        let d = x.cols();
        let mut weights = vec![0.0; d];
        let mut bias = 0.0;
        let mut order: Vec<usize> = (0..n).collect();
        let mut grad = vec![0.0; d];
        for _ in 0..epochs {
            order.shuffle(rng);
            for batch in order.chunks(BATCH) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let mut grad_b = 0.0;
                for &i in batch {
                    let xi = x.row(i);
                    let target = (y[i] - y_mean) / y_scale;
                    let pred = weights.iter().zip(xi).map(|(w, v)| w * v).sum::<f64>() + bias;
                    let err = pred - target;
                    for (g, v) in grad.iter_mut().zip(xi) {
                        *g += err * v;
                    }
                    grad_b += err;
                }
                let m = batch.len() as f64;
                for (w, g) in weights.iter_mut().zip(&grad) {
                    *w -= learning_rate * (g / m + l2 * *w);
                }
                bias -= learning_rate * grad_b / m;
            }
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(TrainError::Diverged("ridge weights"));
        }
        Ok(Self {
            scaler,
            weights,
            bias,
            y_mean,
            y_scale,
        })
    }

    pub(crate) fn predict_one(&self, x: &[f64]) -> f64 {
        let z = self.scaler.apply(x);
        let s = self.weights.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        self.y_mean + self.y_scale * s
    }
}
