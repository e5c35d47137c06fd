//! Learns a per-second drowsiness score from trips that are only labeled
//! drowsy or normal as a whole, by ranking later samples of drowsy trips
//! above earlier ones.
//!
//! The pieces are usable on their own: [`data`] loads trips, [`features`]
//! turns frames into vectors, [`ranker`] trains the linear scorer,
//! [`baselines`] holds the comparison methods, [`eval`] runs ROC/AUC and
//! cross-validation, and [`synth`] generates labeled synthetic trips.

pub mod baselines;
pub mod cli;
pub mod data;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod ranker;
pub mod synth;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] data::DataError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Ranker(#[from] ranker::RankerError),
    #[error(transparent)]
    Baseline(#[from] baselines::BaselineError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
