//! L1-regularized logistic regression trained by stochastic proximal
//! gradient, used as the trip-label classification baseline.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lasso::{dot, soft_threshold};
use super::BaselineError;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l1_strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig {
    pub epochs: usize,
    /// Initial step size; step `k` uses `learning_rate / (1 + k / n)`.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 4,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

/// Trained model plus the full-batch penalized loss after each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub epoch_losses: Vec<f64>,
}

/// `1 / (1 + e^{-z})` without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^{z})`, stable for large `|z|`.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn margin(&self, x: &[f64]) -> Result<f64, BaselineError> {
        if x.len() != self.weights.len() {
            return Err(BaselineError::DimensionMismatch {
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }

    /// Mean negative log-likelihood over a labeled set (no penalty).
    pub fn log_loss(&self, rows: &[Vec<f64>], labels: &[bool]) -> Result<f64, BaselineError> {
        let mut total = 0.0;
        for (x, &y) in rows.iter().zip(labels) {
            let z = self.margin(x)?;
            total += if y { softplus(-z) } else { softplus(z) };
        }
        Ok(total / rows.len().max(1) as f64)
    }

    fn penalized_loss(&self, rows: &[Vec<f64>], labels: &[bool]) -> Result<f64, BaselineError> {
        Ok(self.log_loss(rows, labels)? + self.l1_strength * self.weights.iter().map(|w| w.abs()).sum::<f64>())
    }
}

/// Probability of the drowsy class, `sigmoid(wᵀx + b)`.
pub fn logistic_score(model: &LogisticModel, x: &[f64]) -> Result<f64, BaselineError> {
    model.margin(x).map(sigmoid)
}

/// Fits the model on samples whose labels were broadcast from their trips.
/// The bias is never penalized.
pub fn logistic_train(
    rows: &[Vec<f64>],
    labels: &[bool],
    l1_strength: f64,
    config: &LogisticConfig,
) -> Result<LogisticFit, BaselineError> {
    if rows.len() != labels.len() {
        return Err(BaselineError::DimensionMismatch {
            expected: rows.len(),
            found: labels.len(),
        });
    }
    if !labels.iter().any(|&y| y) || labels.iter().all(|&y| y) {
        return Err(BaselineError::SingleClassData);
    }
    if !(l1_strength >= 0.0) || !(config.learning_rate > 0.0) {
        return Err(BaselineError::InvalidParameter(
            "l1 strength must be >= 0 and learning rate > 0".into(),
        ));
    }
    let dim = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(BaselineError::DimensionMismatch {
            expected: dim,
            found: r.len(),
        });
    }

    let mut model = LogisticModel {
        weights: vec![0.0; dim],
        bias: 0.0,
        l1_strength,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let n = rows.len() as f64;
    let mut step = 0u64;
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = config.learning_rate / (1.0 + step as f64 / n);
            let x = &rows[i];
            let g = sigmoid(dot(&model.weights, x) + model.bias) - f64::from(u8::from(labels[i]));
            for (w, xi) in model.weights.iter_mut().zip(x) {
                *w = soft_threshold(*w - eta * g * xi, eta * l1_strength);
            }
            model.bias -= eta * g;
            step += 1;
        }
        epoch_losses.push(model.penalized_loss(rows, labels)?);
    }
    Ok(LogisticFit { model, epoch_losses })
}
