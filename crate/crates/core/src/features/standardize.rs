use super::FeatureError;

pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature affine scaling to zero mean and unit (population) variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self, FeatureError> {
        if mean.len() != std.len() {
            return Err(FeatureError::DimensionMismatch {
                expected: mean.len(),
                found: std.len(),
            });
        }
        if std.iter().any(|&s| !(s >= STD_FLOOR) || !s.is_finite()) || mean.iter().any(|m| !m.is_finite()) {
            return Err(FeatureError::InvalidParameter("standard deviations must be finite and >= 1e-8".into()));
        }
        Ok(Self { mean, std })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_one(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }
}

pub fn fit_standardizer<'a, I>(vectors: I) -> Result<Standardizer, FeatureError>
where
    I: IntoIterator<Item = &'a [f64]>,
    I::IntoIter: Clone,
{
    let it = vectors.into_iter();
    let mut count = 0usize;
    let mut dim = None;
    let mut first: Vec<f64> = Vec::new();
    let mut sum: Vec<f64> = Vec::new();
    let mut constant: Vec<bool> = Vec::new();
    for v in it.clone() {
        match dim {
            None => {
                dim = Some(v.len());
                first = v.to_vec();
                sum = vec![0.0; v.len()];
                constant = vec![true; v.len()];
            }
            Some(d) if d != v.len() => {
                return Err(FeatureError::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                })
            }
            _ => {}
        }
        for (j, &x) in v.iter().enumerate() {
            sum[j] += x;
            constant[j] &= x == first[j];
        }
        count += 1;
    }
    if count < 2 {
        return Err(FeatureError::InsufficientSamples { needed: 2, found: count });
    }
    let n = count as f64;
    // exact value for constant columns so they map to 0 exactly
    let mean: Vec<f64> = sum
        .iter()
        .zip(&constant)
        .zip(&first)
        .map(|((s, &c), &f)| if c { f } else { s / n })
        .collect();
    let mut sq = vec![0.0; mean.len()];
    for v in it {
        for (j, &x) in v.iter().enumerate() {
            sq[j] += (x - mean[j]).powi(2);
        }
    }
    let std = sq.iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
    Standardizer::new(mean, std)
}

pub fn apply_standardizer(vectors: &mut [Vec<f64>], s: &Standardizer) {
    for v in vectors {
        s.apply_one(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fit(rows: &[Vec<f64>]) -> Standardizer {
        fit_standardizer(rows.iter().map(Vec::as_slice)).unwrap()
    }

    fn col_stats(rows: &[Vec<f64>], j: usize) -> (f64, f64) {
        let n = rows.len() as f64;
        let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let v = rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
        (m, v.sqrt())
    }

    #[test]
    fn zero_mean_unit_std_on_fit_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut rows: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![rng.random_range(-3.0..10.0), rng.random_range(100.0..101.0) * 5.0])
            .collect();
        let s = fit(&rows);
        apply_standardizer(&mut rows, &s);
        for j in 0..2 {
            let (m, sd) = col_stats(&rows, j);
            assert_abs_diff_eq!(m, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(sd, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let mut rows = vec![vec![0.1, 1.0], vec![0.1, 2.0], vec![0.1, 4.0]];
        let s = fit(&rows);
        assert_eq!(s.std()[0], STD_FLOOR);
        apply_standardizer(&mut rows, &s);
        assert!(rows.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn held_out_vector() {
        let s = Standardizer::new(vec![3.0, 0.0], vec![2.0, 1.0]).unwrap();
        let mut x = vec![5.0, 7.0];
        s.apply_one(&mut x);
        assert_eq!(x, vec![1.0, 7.0]);
    }

    #[test]
    fn refit_on_standardized_is_near_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rows: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..5).map(|j| rng.random_range(-1.0..1.0) * (j + 1) as f64 + j as f64).collect())
            .collect();
        let s = fit(&rows);
        apply_standardizer(&mut rows, &s);
        let before = rows.clone();
        let s2 = fit(&rows);
        apply_standardizer(&mut rows, &s2);
        for (a, b) in before.iter().flatten().zip(rows.iter().flatten()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn needs_two_vectors() {
        let rows = vec![vec![1.0]];
        assert!(fit_standardizer(rows.iter().map(Vec::as_slice)).is_err());
    }
}
