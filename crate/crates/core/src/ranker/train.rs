//! The stochastic training loop: draw a within-trip pair, take the
//! regularized hinge subgradient, hand it to the optimizer.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::TripLabel;
use crate::features::TripFeatures;

use super::objective::{empirical_loss, subsampled_loss, LossMode};
use super::optim::{Optimizer, OptimizerState};
use super::sampling::PairSampler;
use super::{subgradient_into, LinearModel, RankerError};

pub const DEFAULT_LAMBDA_GRID: [f64; 4] = [0.0, 1e-4, 1e-3, 1e-2];

/// Offset mixed into the seed of the loss-monitoring stream so it never
/// aliases the training stream.
const LOG_STREAM: u64 = 0x6c6f_6773_7472_6561;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: u64,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub min_time_gap: f64,
    /// Record the subsampled loss every this many updates; 0 disables logging.
    pub loss_report_every: u64,
    /// Pair draws per logged loss estimate.
    pub loss_report_pairs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 200_000,
            seed: 0,
            optimizer: Optimizer::sgd(0.01, 1e-4),
            min_time_gap: 0.0,
            loss_report_every: 10_000,
            loss_report_pairs: 2_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), RankerError> {
        if self.iterations == 0 {
            return Err(RankerError::InvalidConfig("iterations must be >= 1".into()));
        }
        if !(self.min_time_gap >= 0.0) {
            return Err(RankerError::InvalidConfig("min_time_gap must be >= 0".into()));
        }
        if self.loss_report_every > 0 && self.loss_report_pairs == 0 {
            return Err(RankerError::InvalidConfig("loss_report_pairs must be >= 1".into()));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub step: u64,
    pub subsampled_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LinearModel,
    /// Subsampled empirical loss at step 0, every `loss_report_every` steps,
    /// and after the final step.
    pub log: Vec<LogEntry>,
    pub steps: u64,
}

/// Learns `θ` from the drowsy trips in `trips` (other trips are ignored),
/// starting at `θ = 0`. Deterministic given `config.seed`.
pub fn train(trips: &[TripFeatures], feature_names: &[String], config: &TrainConfig, lambda: f64) -> Result<TrainOutcome, RankerError> {
    config.validate()?;
    if !(lambda >= 0.0) {
        return Err(RankerError::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    let drowsy: Vec<TripFeatures> = trips
        .iter()
        .filter(|t| t.label == TripLabel::Drowsy)
        .cloned()
        .collect();
    if drowsy.is_empty() {
        return Err(RankerError::NoDrowsyTrips);
    }
    let dim = feature_names.len();
    for tf in &drowsy {
        if let Some(v) = tf.vectors.iter().find(|v| v.len() != dim) {
            return Err(RankerError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    let sampler = PairSampler::new(&drowsy, config.min_time_gap)?;
    let mut model = LinearModel::zeros(feature_names.to_vec(), lambda);
    let mut state = OptimizerState::new(dim, &config.optimizer);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut grad = vec![0.0; dim];
    let mut log = Vec::new();

    // the same pairs are re-drawn at every report so estimates are comparable
    let log_loss = |model: &LinearModel| {
        let mut lrng = ChaCha8Rng::seed_from_u64(config.seed ^ LOG_STREAM);
        subsampled_loss(model, &sampler, config.loss_report_pairs, &mut lrng)
    };
    if config.loss_report_every > 0 {
        log.push(LogEntry {
            step: 0,
            subsampled_loss: log_loss(&model),
        });
    }

    for step in 1..=config.iterations {
        let d = sampler.sample(&mut rng);
        let tf = &drowsy[d.trip];
        let sign = if tf.times[d.t] > tf.times[d.u] { 1.0 } else { -1.0 };
        subgradient_into(&model.theta, lambda, sign, &tf.vectors[d.t], &tf.vectors[d.u], &mut grad);
        state.apply(&config.optimizer, &mut model.theta, &grad);
        if config.loss_report_every > 0 && (step % config.loss_report_every == 0 || step == config.iterations) {
            log.push(LogEntry {
                step,
                subsampled_loss: log_loss(&model),
            });
        }
    }

    Ok(TrainOutcome {
        model,
        log,
        steps: state.step(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSelection {
    pub lambda: f64,
    /// `(λ, mean held-out loss)` for every grid value, in grid order.
    pub scores: Vec<(f64, f64)>,
}

/// Chooses λ by k-fold cross-validation over the drowsy trips, scoring each
/// candidate by the mean held-out exact empirical loss. Ties keep the
/// earlier grid value. A single-value grid, or fewer than two drowsy trips,
/// returns the first grid value without training.
pub fn select_lambda(
    trips: &[TripFeatures],
    feature_names: &[String],
    config: &TrainConfig,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<LambdaSelection, RankerError> {
    let first = *grid
        .first()
        .ok_or_else(|| RankerError::InvalidConfig("empty lambda grid".into()))?;
    let mut drowsy: Vec<&TripFeatures> = trips.iter().filter(|t| t.label == TripLabel::Drowsy).collect();
    let k = folds.min(drowsy.len());
    if grid.len() == 1 || k < 2 {
        return Ok(LambdaSelection {
            lambda: first,
            scores: Vec::new(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    drowsy.shuffle(&mut rng);
    let assignments: Vec<usize> = (0..drowsy.len()).map(|i| i % k).collect();

    let mut scores = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let mut total = 0.0;
        for fold in 0..k {
            let (held, kept): (Vec<_>, Vec<_>) = drowsy.iter().zip(&assignments).partition(|(_, &a)| a == fold);
            let fit_set: Vec<TripFeatures> = kept.into_iter().map(|(t, _)| (*t).clone()).collect();
            let val_set: Vec<TripFeatures> = held.into_iter().map(|(t, _)| (*t).clone()).collect();
            let inner = TrainConfig {
                seed: config.seed.wrapping_add(fold as u64),
                loss_report_every: 0,
                ..config.clone()
            };
            let out = train(&fit_set, feature_names, &inner, lambda)?;
            total += empirical_loss(&out.model, &val_set, LossMode::Exact, &mut rng)?;
        }
        scores.push((lambda, total / k as f64));
    }
    let best = scores
        .iter()
        .fold(scores[0], |best, &s| if s.1 < best.1 { s } else { best });
    Ok(LambdaSelection { lambda: best.0, scores })
}
