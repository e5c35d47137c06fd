//! Trip-level and sample-level ROC/AUC, stratified folds, cross-validation.

pub mod cv;
pub mod export;
pub mod folds;
pub mod roc;

use thiserror::Error;

use crate::data::TripLabel;

pub use cv::{cross_validate, CvConfig, EvalReport, FoldFitLog, FoldResult, Method};
pub use export::{export_report, export_roc_csv, read_report, read_roc_csv, ReportRow};
pub use folds::{stratified_kfold, FoldSpec};
pub use roc::{average_curves, roc_auc, RocCurve, RocPoint};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("both classes must be present to compute an ROC curve")]
    SingleClassLabels,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
    #[error("trip {0} has no scored samples")]
    EmptyTrip(String),
    #[error("trip {0} has no per-timestamp truth; sample-level AUC needs a truth column")]
    MissingTimestampTruth(String),
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("k = {k} exceeds the number of drowsy ({n_drowsy}) or normal ({n_normal}) trips")]
    KTooLarge { k: usize, n_drowsy: usize, n_normal: usize },
    #[error("malformed report or curve file at line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-sample scores of one trip, with the trip's label and optional truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTrip {
    pub trip_id: String,
    pub label: TripLabel,
    pub scores: Vec<f64>,
    pub truth: Option<Vec<bool>>,
}

/// The maximum sample score of each trip, in input order.
pub fn trip_max_scores(trips: &[ScoredTrip]) -> Result<Vec<f64>, EvalError> {
    trips
        .iter()
        .map(|t| {
            t.scores
                .iter()
                .copied()
                .reduce(f64::max)
                .ok_or_else(|| EvalError::EmptyTrip(t.trip_id.clone()))
        })
        .collect()
}

pub fn roc1(trips: &[ScoredTrip]) -> Result<RocCurve, EvalError> {
    let maxima = trip_max_scores(trips)?;
    let labels: Vec<bool> = trips.iter().map(|t| t.label.is_drowsy()).collect();
    roc_auc(&maxima, &labels)
}

pub fn roc2(trips: &[ScoredTrip]) -> Result<RocCurve, EvalError> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for t in trips {
        let truth = t
            .truth
            .as_ref()
            .ok_or_else(|| EvalError::MissingTimestampTruth(t.trip_id.clone()))?;
        if truth.len() != t.scores.len() {
            return Err(EvalError::LengthMismatch {
                scores: t.scores.len(),
                labels: truth.len(),
            });
        }
        scores.extend_from_slice(&t.scores);
        labels.extend_from_slice(truth);
    }
    roc_auc(&scores, &labels)
}

/// Trip-level AUC: each trip is scored by its maximum sample score.
pub fn auc1(trips: &[ScoredTrip]) -> Result<f64, EvalError> {
    roc1(trips).map(|c| c.auc)
}

/// Sample-level AUC against per-timestamp truth.
pub fn auc2(trips: &[ScoredTrip]) -> Result<f64, EvalError> {
    roc2(trips).map(|c| c.auc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(id: &str, label: TripLabel, scores: &[f64], truth: Option<&[bool]>) -> ScoredTrip {
        ScoredTrip {
            trip_id: id.into(),
            label,
            scores: scores.to_vec(),
            truth: truth.map(<[bool]>::to_vec),
        }
    }

    #[test]
    fn max_scores() {
        let trips = [
            st("a", TripLabel::Drowsy, &[0.1, 0.9, 0.4], None),
            st("b", TripLabel::Normal, &[0.3], None),
        ];
        assert_eq!(trip_max_scores(&trips).unwrap(), vec![0.9, 0.3]);
        let empty = [st("e", TripLabel::Normal, &[], None)];
        assert!(matches!(trip_max_scores(&empty), Err(EvalError::EmptyTrip(_))));
    }

    #[test]
    fn one_high_sample_per_drowsy_trip() {
        let trips = [
            st("d1", TripLabel::Drowsy, &[0.0, 5.0, 0.0], None),
            st("d2", TripLabel::Drowsy, &[4.0, 0.0], None),
            st("n1", TripLabel::Normal, &[1.0, 0.5], None),
            st("n2", TripLabel::Normal, &[0.2, 2.0], None),
        ];
        assert_eq!(auc1(&trips).unwrap(), 1.0);
    }

    #[test]
    fn constant_scores_give_half() {
        let trips = [
            st("d", TripLabel::Drowsy, &[1.0, 1.0], Some(&[false, true])),
            st("n", TripLabel::Normal, &[1.0, 1.0], Some(&[false, false])),
        ];
        assert_eq!(auc1(&trips).unwrap(), 0.5);
        assert_eq!(auc2(&trips).unwrap(), 0.5);
    }

    #[test]
    fn auc2_requires_truth() {
        let trips = [
            st("d", TripLabel::Drowsy, &[1.0, 2.0], None),
            st("n", TripLabel::Normal, &[0.0], None),
        ];
        assert!(matches!(auc2(&trips), Err(EvalError::MissingTimestampTruth(_))));
    }
}
