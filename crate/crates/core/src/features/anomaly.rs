//! Sparse Gaussian graphical model over the raw channels and the
//! per-channel anomaly score it induces.
//!
//! The precision matrix is estimated by neighborhood selection: each
//! channel is Lasso-regressed on the others (in standardized units), the
//! regressions are turned into precision rows, and the two estimates of
//! every off-diagonal entry are averaged.

use std::f64::consts::PI;

use crate::baselines::lasso::{lasso_fit, LassoProblem};

use super::FeatureError;

/// Floor applied to residual variances (raw units).
pub const VARIANCE_FLOOR: f64 = 1e-8;
/// Default L1 strength for the neighborhood regressions.
pub const DEFAULT_ALPHA: f64 = 0.1;

const LASSO_TOL: f64 = 1e-10;
const LASSO_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateKind {
    /// The channel never changes in the fitting data.
    Constant,
    /// The channel is (almost) perfectly explained by the others.
    ZeroResidual,
}

/// Recorded when a channel's residual variance hit the floor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegenerateData {
    pub channel: String,
    pub kind: DegenerateKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyModel {
    mu: Vec<f64>,
    precision: Vec<Vec<f64>>,
    channel_names: Vec<String>,
    warnings: Vec<DegenerateData>,
}

impl AnomalyModel {
    /// Builds a model from explicit parameters, checking symmetry (to 1e-10)
    /// and a strictly positive diagonal.
    pub fn new(mu: Vec<f64>, precision: Vec<Vec<f64>>, channel_names: Vec<String>) -> Result<Self, FeatureError> {
        let p = mu.len();
        if precision.len() != p || precision.iter().any(|r| r.len() != p) || channel_names.len() != p {
            return Err(FeatureError::InvalidModel("shape mismatch".into()));
        }
        for i in 0..p {
            if !(precision[i][i] > 0.0) {
                return Err(FeatureError::InvalidModel(format!("diagonal entry {i} is not positive")));
            }
            for j in 0..i {
                if (precision[i][j] - precision[j][i]).abs() > 1e-10 {
                    return Err(FeatureError::InvalidModel(format!("precision not symmetric at ({i},{j})")));
                }
            }
        }
        if mu.iter().chain(precision.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(FeatureError::InvalidModel("non-finite parameter".into()));
        }
        Ok(Self {
            mu,
            precision,
            channel_names,
            warnings: Vec::new(),
        })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn precision(&self) -> &[Vec<f64>] {
        &self.precision
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn warnings(&self) -> &[DegenerateData] {
        &self.warnings
    }

    pub fn n_channels(&self) -> usize {
        self.mu.len()
    }
}

/// Fits the model on rows of raw channel values from normal driving.
pub fn fit_anomaly_model(samples: &[Vec<f64>], channel_names: &[String], alpha: f64) -> Result<AnomalyModel, FeatureError> {
    let p = channel_names.len();
    if !(alpha >= 0.0) {
        return Err(FeatureError::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
    }
    if samples.len() < 2 * p {
        return Err(FeatureError::InsufficientSamples {
            needed: 2 * p,
            found: samples.len(),
        });
    }
    if let Some(r) = samples.iter().find(|r| r.len() != p) {
        return Err(FeatureError::DimensionMismatch {
            expected: p,
            found: r.len(),
        });
    }
    let n = samples.len() as f64;

    let mut mu = vec![0.0; p];
    let mut scale = vec![1.0; p];
    let mut warnings = Vec::new();
    for j in 0..p {
        let first = samples[0][j];
        if samples.iter().all(|r| r[j] == first) {
            mu[j] = first;
            warnings.push(DegenerateData {
                channel: channel_names[j].clone(),
                kind: DegenerateKind::Constant,
            });
            continue;
        }
        mu[j] = samples.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = samples.iter().map(|r| (r[j] - mu[j]).powi(2)).sum::<f64>() / n;
        scale[j] = var.sqrt().max(f64::MIN_POSITIVE);
    }
    let z: Vec<Vec<f64>> = (0..p)
        .map(|j| samples.iter().map(|r| (r[j] - mu[j]) / scale[j]).collect())
        .collect();

    // raw[i][j]: precision row i from regressing channel i on the others
    let mut raw = vec![vec![0.0; p]; p];
    for i in 0..p {
        let others: Vec<usize> = (0..p).filter(|&j| j != i).collect();
        let columns = others.iter().map(|&j| z[j].clone()).collect();
        let problem = LassoProblem::from_columns(columns, z[i].clone(), alpha)
            .map_err(|e| FeatureError::InvalidParameter(e.to_string()))?;
        let fit = lasso_fit(&problem, LASSO_TOL, LASSO_MAX_SWEEPS);
        let resid = problem.residual(&fit.weights);
        let resid_var_std = resid.iter().map(|r| r * r).sum::<f64>() / n;
        let resid_var = resid_var_std * scale[i] * scale[i];
        if resid_var < VARIANCE_FLOOR && !warnings.iter().any(|w: &DegenerateData| w.channel == channel_names[i]) {
            warnings.push(DegenerateData {
                channel: channel_names[i].clone(),
                kind: DegenerateKind::ZeroResidual,
            });
        }
        let diag = 1.0 / resid_var.max(VARIANCE_FLOOR);
        raw[i][i] = diag;
        for (&j, &beta) in others.iter().zip(&fit.weights) {
            // x_i - mu_i ≈ Σ_j beta·(s_i/s_j)·(x_j - mu_j)
            raw[i][j] = -diag * beta * scale[i] / scale[j];
        }
    }
    let mut precision = raw.clone();
    for i in 0..p {
        for j in 0..i {
            let avg = 0.5 * (raw[i][j] + raw[j][i]);
            precision[i][j] = avg;
            precision[j][i] = avg;
        }
    }

    let mut model = AnomalyModel::new(mu, precision, channel_names.to_vec())?;
    model.warnings = warnings;
    Ok(model)
}

/// Per-channel negative log conditional density of `x` under the model:
/// `½·ln(2π/λᵢᵢ) + (λᵢᵢ/2)·(xᵢ − μ̂ᵢ)²` where `μ̂ᵢ` is the conditional mean of
/// channel `i` given the rest.
pub fn anomaly_scores(x: &[f64], model: &AnomalyModel) -> Vec<f64> {
    let p = model.n_channels();
    debug_assert_eq!(x.len(), p);
    let centered: Vec<f64> = x.iter().zip(&model.mu).map(|(a, m)| a - m).collect();
    (0..p)
        .map(|i| {
            let lii = model.precision[i][i];
            // λᵢᵢ·(xᵢ − μ̂ᵢ) = Σⱼ λᵢⱼ·(xⱼ − μⱼ)
            let weighted: f64 = model.precision[i].iter().zip(&centered).map(|(l, c)| l * c).sum();
            0.5 * (2.0 * PI / lii).ln() + weighted * weighted / (2.0 * lii)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("c{i}")).collect()
    }

    fn identity(p: usize, mu: Vec<f64>) -> AnomalyModel {
        let mut prec = vec![vec![0.0; p]; p];
        for (i, r) in prec.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        AnomalyModel::new(mu, prec, names(p)).unwrap()
    }

    #[test]
    fn independent_channels_give_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..10_000)
            .map(|_| (0..4).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let m = fit_anomaly_model(&rows, &names(4), 1.0).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(m.precision()[i][i], 1.0, epsilon = 0.05);
            for j in 0..4 {
                if i != j {
                    assert!(m.precision()[i][j].abs() < 0.05);
                }
            }
        }
        assert!(m.warnings().is_empty());
    }

    #[test]
    fn default_alpha_on_correlated_pair_is_sparse_but_linked() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..5000)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                let c: f64 = StandardNormal.sample(&mut rng);
                vec![a, a + 0.3 * b, c]
            })
            .collect();
        let m = fit_anomaly_model(&rows, &names(3), DEFAULT_ALPHA).unwrap();
        assert!(m.precision()[0][1] < -0.5);
        assert_eq!(m.precision()[0][2], 0.0);
        assert_eq!(m.precision()[1][2], 0.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.precision()[i][j] - m.precision()[j][i]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn perfectly_correlated_channels_hit_floor() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64 + 1.0]).collect();
        let m = fit_anomaly_model(&rows, &names(2), 0.0).unwrap();
        assert!(m.warnings().iter().any(|w| w.kind == DegenerateKind::ZeroResidual));
        assert!(m.precision().iter().enumerate().all(|(i, r)| r[i] > 0.0 && r[i].is_finite()));
    }

    #[test]
    fn constant_channel_warns() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![StandardNormal.sample(&mut rng), 9.8, StandardNormal.sample(&mut rng)])
            .collect();
        let m = fit_anomaly_model(&rows, &names(3), DEFAULT_ALPHA).unwrap();
        assert_eq!(
            m.warnings(),
            &[DegenerateData {
                channel: "c1".into(),
                kind: DegenerateKind::Constant
            }]
        );
        assert_eq!(m.mu()[1], 9.8);
        assert_eq!(m.precision()[1][1], 1.0 / VARIANCE_FLOOR);
    }

    #[test]
    fn too_few_samples() {
        let rows = vec![vec![0.0, 1.0]; 3];
        assert!(matches!(
            fit_anomaly_model(&rows, &names(2), 0.1),
            Err(FeatureError::InsufficientSamples { needed: 4, found: 3 })
        ));
    }

    #[test]
    fn score_at_mean_and_unit_offset() {
        let m = identity(6, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let base = 0.5 * (2.0 * PI).ln();
        for s in anomaly_scores(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &m) {
            assert_abs_diff_eq!(s, base, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(base, 0.9189, epsilon = 1e-4);
        let s = anomaly_scores(&[2.0, 2.0, 3.0, 4.0, 5.0, 6.0], &m);
        assert_abs_diff_eq!(s[0], base + 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], base, epsilon = 1e-15);
    }

    #[test]
    fn correlated_model_conforming_vs_violating() {
        let m = AnomalyModel::new(
            vec![0.0, 0.0],
            vec![vec![2.0, -1.0], vec![-1.0, 2.0]],
            names(2),
        )
        .unwrap();
        // conditional mean of each channel is half the other; variance 1/2
        let c = anomaly_scores(&[1.0, 1.0], &m);
        let v = anomaly_scores(&[1.0, -1.0], &m);
        let base = 0.5 * PI.ln();
        assert_abs_diff_eq!(c[0], base + 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(v[0], base + 2.25, epsilon = 1e-14);
        assert!(v[0] > c[0] && v[1] > c[1]);
    }

    #[test]
    fn rejects_asymmetric_precision() {
        assert!(AnomalyModel::new(vec![0.0, 0.0], vec![vec![1.0, 0.1], vec![0.2, 1.0]], names(2)).is_err());
        assert!(AnomalyModel::new(vec![0.0], vec![vec![0.0]], names(1)).is_err());
    }
}
