//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use drowsyrank::data::TripLabel;
use drowsyrank::features::TripFeatures;
use drowsyrank::ranker::LinearModel;
use nalgebra::{DMatrix, DVector};

/// AUC by counting every positive/negative pair, ties worth one half.
pub fn pair_count_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Mean over trips of the mean hinge over all ordered pairs `t != u`.
pub fn brute_force_loss(model: &LinearModel, trips: &[TripFeatures]) -> f64 {
    let f = |x: &Vec<f64>| x.iter().zip(&model.theta).map(|(a, b)| a * b).sum::<f64>();
    let mut per_trip = Vec::new();
    for tf in trips {
        let n = tf.vectors.len();
        if n < 2 {
            continue;
        }
        let mut total = 0.0;
        let mut count = 0.0;
        for t in 0..n {
            for u in 0..n {
                if t == u {
                    continue;
                }
                let sign = if tf.times[t] > tf.times[u] { 1.0 } else { -1.0 };
                total += (1.0 - sign * (f(&tf.vectors[t]) - f(&tf.vectors[u]))).max(0.0);
                count += 1.0;
            }
        }
        per_trip.push(total / count);
    }
    per_trip.iter().sum::<f64>() / per_trip.len() as f64
}

/// Ordinary least squares through the normal equations.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = rows.len();
    let p = rows[0].len();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let y = DVector::from_column_slice(y);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;
    xtx.cholesky().expect("well-conditioned design").solve(&xty).iter().copied().collect()
}

pub fn trip_features(id: &str, vectors: Vec<Vec<f64>>) -> TripFeatures {
    let n = vectors.len();
    TripFeatures {
        trip_id: id.into(),
        label: TripLabel::Drowsy,
        times: (1..=n).map(|k| k as f64).collect(),
        vectors,
        raw: vec![[0.0; 6]; n],
        truth: None,
    }
}
