use rand::Rng;

use crate::features::TripFeatures;

use super::RankerError;

/// Rejection attempts inside one trip before falling back to enumerating
/// its valid pairs.
const REJECTION_TRIES: usize = 32;

/// Two distinct sample indices drawn from one trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairDraw {
    pub trip: usize,
    pub t: usize,
    pub u: usize,
}

/// Draws within-trip sample pairs: a trip uniformly among those admitting at
/// least one pair at least `min_time_gap` apart, then an ordered pair
/// uniformly among that trip's valid pairs.
#[derive(Debug, Clone)]
pub struct PairSampler<'a> {
    trips: &'a [TripFeatures],
    eligible: Vec<usize>,
    min_time_gap: f64,
}

impl<'a> PairSampler<'a> {
    pub fn new(trips: &'a [TripFeatures], min_time_gap: f64) -> Result<Self, RankerError> {
        if !(min_time_gap >= 0.0) {
            return Err(RankerError::InvalidConfig(format!("min_time_gap must be >= 0, got {min_time_gap}")));
        }
        let eligible: Vec<usize> = trips
            .iter()
            .enumerate()
            .filter(|(_, tf)| {
                tf.times.len() >= 2 && tf.times[tf.times.len() - 1] - tf.times[0] >= min_time_gap
            })
            .map(|(i, _)| i)
            .collect();
        if eligible.is_empty() {
            return Err(RankerError::NoValidPair);
        }
        Ok(Self {
            trips,
            eligible,
            min_time_gap,
        })
    }

    pub fn trips(&self) -> &'a [TripFeatures] {
        self.trips
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PairDraw {
        let trip = self.eligible[rng.random_range(0..self.eligible.len())];
        let times = &self.trips[trip].times;
        let n = times.len();
        for _ in 0..REJECTION_TRIES {
            let t = rng.random_range(0..n);
            let mut u = rng.random_range(0..n - 1);
            if u >= t {
                u += 1;
            }
            if (times[t] - times[u]).abs() >= self.min_time_gap {
                return PairDraw { trip, t, u };
            }
        }
        let (t, u) = enumerate_pick(times, self.min_time_gap, rng);
        PairDraw { trip, t, u }
    }
}

/// Uniform pick among all ordered valid pairs of a sorted time axis.
fn enumerate_pick<R: Rng + ?Sized>(times: &[f64], gap: f64, rng: &mut R) -> (usize, usize) {
    let n = times.len();
    if gap == 0.0 {
        let t = rng.random_range(0..n);
        let u = rng.random_range(0..n - 1);
        return (t, if u >= t { u + 1 } else { u });
    }
    // for index i, valid partners are [0, lo_i) ∪ [hi_i, n)
    let bounds: Vec<(usize, usize)> = times
        .iter()
        .map(|&ti| {
            let lo = times.partition_point(|&x| x <= ti - gap);
            let hi = times.partition_point(|&x| x < ti + gap);
            (lo, hi)
        })
        .collect();
    let total: usize = bounds.iter().map(|&(lo, hi)| lo + (n - hi)).sum();
    let mut r = rng.random_range(0..total);
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        let c = lo + (n - hi);
        if r < c {
            return (i, if r < lo { r } else { hi + (r - lo) });
        }
        r -= c;
    }
    unreachable!("pair index within total count")
}

pub fn sample_pair<R: Rng + ?Sized>(rng: &mut R, drowsy_trips: &[TripFeatures], min_time_gap: f64) -> Result<PairDraw, RankerError> {
    Ok(PairSampler::new(drowsy_trips, min_time_gap)?.sample(rng))
}
