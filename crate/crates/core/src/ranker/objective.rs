use rand::Rng;

use crate::features::TripFeatures;

use super::sampling::PairSampler;
use super::{dot, hinge, LinearModel, RankerError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossMode {
    /// Every unordered pair of every trip.
    Exact,
    /// Monte Carlo over `pairs` draws from the pair sampler.
    Subsample { pairs: usize, min_time_gap: f64 },
}

/// Mean over trips of the mean hinge loss over within-trip pairs (no
/// regularizer). Trips with fewer than two samples carry no pairs and are
/// skipped.
pub fn empirical_loss<R: Rng + ?Sized>(
    model: &LinearModel,
    trips: &[TripFeatures],
    mode: LossMode,
    rng: &mut R,
) -> Result<f64, RankerError> {
    for tf in trips {
        if let Some(v) = tf.vectors.iter().find(|v| v.len() != model.dim()) {
            return Err(RankerError::DimensionMismatch {
                expected: model.dim(),
                found: v.len(),
            });
        }
    }
    match mode {
        LossMode::Exact => exact_loss(model, trips),
        LossMode::Subsample { pairs, min_time_gap } => {
            if pairs == 0 {
                return Err(RankerError::InvalidConfig("subsample needs at least one pair".into()));
            }
            let sampler = PairSampler::new(trips, min_time_gap)?;
            Ok(subsampled_loss(model, &sampler, pairs, rng))
        }
    }
}

fn exact_loss(model: &LinearModel, trips: &[TripFeatures]) -> Result<f64, RankerError> {
    let mut total = 0.0;
    let mut used = 0usize;
    for tf in trips.iter().filter(|tf| tf.len() >= 2) {
        let scores: Vec<f64> = tf.vectors.iter().map(|v| dot(&model.theta, v)).collect();
        let mut sum = 0.0;
        let n = scores.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let sign = if tf.times[i] > tf.times[j] { 1.0 } else { -1.0 };
                sum += hinge(sign, scores[i], scores[j]);
            }
        }
        total += sum / (n * (n - 1) / 2) as f64;
        used += 1;
    }
    if used == 0 {
        return Err(RankerError::NoValidPair);
    }
    Ok(total / used as f64)
}

pub(crate) fn subsampled_loss<R: Rng + ?Sized>(model: &LinearModel, sampler: &PairSampler<'_>, pairs: usize, rng: &mut R) -> f64 {
    let trips = sampler.trips();
    let mut sum = 0.0;
    for _ in 0..pairs {
        let d = sampler.sample(rng);
        let tf = &trips[d.trip];
        let sign = if tf.times[d.t] > tf.times[d.u] { 1.0 } else { -1.0 };
        sum += hinge(sign, dot(&model.theta, &tf.vectors[d.t]), dot(&model.theta, &tf.vectors[d.u]));
    }
    sum / pairs as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TripLabel;
    use crate::ranker::pair_loss;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tf(vectors: Vec<Vec<f64>>) -> TripFeatures {
        let n = vectors.len();
        TripFeatures {
            trip_id: "a".into(),
            label: TripLabel::Drowsy,
            times: (0..n).map(|i| i as f64).collect(),
            vectors,
            raw: vec![[0.0; 6]; n],
            truth: None,
        }
    }

    fn model(theta: &[f64]) -> LinearModel {
        LinearModel {
            theta: theta.to_vec(),
            lambda: 0.0,
            feature_names: (0..theta.len()).map(|i| format!("f{i}")).collect(),
        }
    }

    #[test]
    fn zero_theta_gives_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trips = vec![tf(vec![vec![1.0], vec![2.0], vec![-4.0]])];
        assert_eq!(empirical_loss(&model(&[0.0]), &trips, LossMode::Exact, &mut rng).unwrap(), 1.0);
        let sub = LossMode::Subsample {
            pairs: 100,
            min_time_gap: 0.0,
        };
        assert_eq!(empirical_loss(&model(&[0.0]), &trips, sub, &mut rng).unwrap(), 1.0);
    }

    #[test]
    fn ordered_pair_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trips = vec![tf(vec![vec![0.0], vec![1.5]])];
        assert_eq!(empirical_loss(&model(&[1.0]), &trips, LossMode::Exact, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn two_trips_match_hand_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = tf(vec![vec![0.0], vec![0.5], vec![3.0]]);
        let b = tf(vec![vec![1.0], vec![0.0], vec![0.2]]);
        let m = model(&[1.0]);
        // oracle: average pair_loss per trip, then across trips
        let mut per_trip = Vec::new();
        for t in [&a, &b] {
            let mut s = 0.0;
            for i in 0..3 {
                for j in (i + 1)..3 {
                    s += pair_loss(&m, &t.vectors[i], t.times[i], &t.vectors[j], t.times[j]).unwrap();
                }
            }
            per_trip.push(s / 3.0);
        }
        let expected = (per_trip[0] + per_trip[1]) / 2.0;
        // a: 0.5, 0, 0 -> 1/6 ; b: 2, 1.8, 0.8 -> 4.6/3
        assert!((expected - (0.5 / 3.0 + 4.6 / 3.0) / 2.0).abs() < 1e-12);
        let got = empirical_loss(&m, &[a, b], LossMode::Exact, &mut rng).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn no_pairs_is_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trips = vec![tf(vec![vec![1.0]])];
        assert!(matches!(
            empirical_loss(&model(&[1.0]), &trips, LossMode::Exact, &mut rng),
            Err(RankerError::NoValidPair)
        ));
    }
}
