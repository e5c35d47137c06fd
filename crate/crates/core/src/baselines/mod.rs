//! Comparison methods: Lasso, L1 logistic regression on broadcast trip
//! labels, and the summed anomaly score.

pub mod lasso;
pub mod logistic;

use thiserror::Error;

use crate::features::anomaly::{anomaly_scores, AnomalyModel};

pub use lasso::{lasso_fit, soft_threshold, LassoFit, LassoProblem};
pub use logistic::{logistic_score, logistic_train, sigmoid, LogisticConfig, LogisticFit, LogisticModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("problem has no samples")]
    EmptyProblem,
    #[error("lasso did not converge in {sweeps} sweeps")]
    NotConverged { sweeps: usize, weights: Vec<f64> },
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Sum of per-channel anomaly scores, used directly as a drowsiness score.
pub fn anomaly_baseline_score(x_raw: &[f64], model: &AnomalyModel) -> f64 {
    anomaly_scores(x_raw, model).iter().sum()
}
