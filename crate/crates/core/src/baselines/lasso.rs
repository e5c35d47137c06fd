//! Cyclic coordinate descent for the Lasso.
//!
//! Minimizes `(1/2n)·‖y − Xw‖² + alpha·‖w‖₁`. There is no intercept: callers
//! center the design and response first.

use super::BaselineError;

/// A dense Lasso problem stored column-major.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    n: usize,
    columns: Vec<Vec<f64>>,
    response: Vec<f64>,
    alpha: f64,
}

impl LassoProblem {
    /// Builds a problem from row-major samples.
    pub fn from_rows(rows: &[Vec<f64>], response: Vec<f64>, alpha: f64) -> Result<Self, BaselineError> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(BaselineError::DimensionMismatch {
                expected: p,
                found: rows.iter().map(Vec::len).find(|&l| l != p).unwrap_or(0),
            });
        }
        let columns = (0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        if n != response.len() {
            return Err(BaselineError::DimensionMismatch {
                expected: n,
                found: response.len(),
            });
        }
        Self::from_columns(columns, response, alpha)
    }

    pub fn from_columns(columns: Vec<Vec<f64>>, response: Vec<f64>, alpha: f64) -> Result<Self, BaselineError> {
        let n = response.len();
        if n == 0 {
            return Err(BaselineError::EmptyProblem);
        }
        if !(alpha >= 0.0) {
            return Err(BaselineError::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(BaselineError::DimensionMismatch {
                expected: n,
                found: c.len(),
            });
        }
        Ok(Self {
            n,
            columns,
            response,
            alpha,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn residual(&self, w: &[f64]) -> Vec<f64> {
        let mut r = self.response.clone();
        for (col, &wj) in self.columns.iter().zip(w) {
            if wj != 0.0 {
                for (ri, xi) in r.iter_mut().zip(col) {
                    *ri -= xi * wj;
                }
            }
        }
        r
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        let r = self.residual(w);
        let rss: f64 = r.iter().map(|v| v * v).sum();
        rss / (2.0 * self.n as f64) + self.alpha * w.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Largest violation of the Lasso optimality conditions at `w`.
    pub fn kkt_residual(&self, w: &[f64]) -> f64 {
        let r = self.residual(w);
        let n = self.n as f64;
        self.columns
            .iter()
            .zip(w)
            .map(|(col, &wj)| {
                let grad = -dot(col, &r) / n;
                if wj == 0.0 {
                    (grad.abs() - self.alpha).max(0.0)
                } else {
                    (grad + self.alpha * wj.signum()).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// Smallest alpha for which the solution is identically zero.
    pub fn alpha_max(&self) -> f64 {
        let n = self.n as f64;
        self.columns
            .iter()
            .map(|c| (dot(c, &self.response) / n).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub weights: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// Objective value after each sweep.
    pub objective_trace: Vec<f64>,
}

impl LassoFit {
    /// Turns an unconverged fit into [`BaselineError::NotConverged`].
    pub fn require_converged(self) -> Result<Self, BaselineError> {
        if self.converged {
            Ok(self)
        } else {
            Err(BaselineError::NotConverged {
                sweeps: self.sweeps,
                weights: self.weights,
            })
        }
    }
}

pub fn soft_threshold(x: f64, threshold: f64) -> f64 {
    if x > threshold {
        x - threshold
    } else if x < -threshold {
        x + threshold
    } else {
        0.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs cyclic coordinate descent until the largest coordinate change of a
/// sweep drops below `tol`, or `max_sweeps` sweeps have run. An unconverged
/// run still returns its last iterate with `converged = false`.
pub fn lasso_fit(problem: &LassoProblem, tol: f64, max_sweeps: usize) -> LassoFit {
    let n = problem.n as f64;
    let p = problem.n_features();
    let col_sq: Vec<f64> = problem.columns.iter().map(|c| dot(c, c) / n).collect();
    let mut w = vec![0.0; p];
    let mut r = problem.response.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = &problem.columns[j];
            let old = w[j];
            let rho = dot(col, &r) / n + col_sq[j] * old;
            let new = soft_threshold(rho, problem.alpha) / col_sq[j];
            let delta = new - old;
            if delta != 0.0 {
                for (ri, xi) in r.iter_mut().zip(col) {
                    *ri -= xi * delta;
                }
                w[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        let rss: f64 = r.iter().map(|v| v * v).sum();
        trace.push(rss / (2.0 * n) + problem.alpha * w.iter().map(|v| v.abs()).sum::<f64>());
        if max_change < tol {
            converged = true;
            break;
        }
    }

    let kkt_residual = problem.kkt_residual(&w);
    LassoFit {
        weights: w,
        sweeps,
        converged,
        kkt_residual,
        objective_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-1.0, 1.0), 0.0);
    }

    #[test]
    fn orthonormal_design_closed_form() {
        // columns with Xᵀx/n = I
        let n = 4.0f64;
        let s = n.sqrt();
        let cols = vec![vec![s, 0.0, 0.0, 0.0], vec![0.0, s, 0.0, 0.0], vec![0.0, 0.0, s, 0.0]];
        let y = vec![3.0, -0.4, 1.0, 7.0];
        let alpha = 0.3;
        let prob = LassoProblem::from_columns(cols.clone(), y.clone(), alpha).unwrap();
        let fit = lasso_fit(&prob, 1e-12, 100);
        assert!(fit.converged);
        for (j, col) in cols.iter().enumerate() {
            let expect = soft_threshold(dot(col, &y) / n, alpha);
            assert_abs_diff_eq!(fit.weights[j], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn full_shrinkage_above_alpha_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let probe = LassoProblem::from_rows(&rows, y.clone(), 0.0).unwrap();
        let prob = LassoProblem::from_rows(&rows, y, probe.alpha_max()).unwrap();
        let fit = lasso_fit(&prob, 1e-12, 100);
        assert!(fit.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] - 2.0 * r[3] + rng.random_range(-0.1..0.1)).collect();
        let prob = LassoProblem::from_rows(&rows, y, 0.01).unwrap();
        let fit = lasso_fit(&prob, 1e-12, 500);
        let start = prob.objective(&[0.0; 8]);
        let mut prev = start;
        for &o in &fit.objective_trace {
            assert!(o <= prev + 1e-15, "{o} > {prev}");
            prev = o;
        }
    }

    #[test]
    fn not_converged_flag() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let prob = LassoProblem::from_rows(&rows, y, 0.0).unwrap();
        let fit = lasso_fit(&prob, 0.0, 2);
        assert!(!fit.converged);
        assert_eq!(fit.sweeps, 2);
        assert!(matches!(
            fit.require_converged(),
            Err(BaselineError::NotConverged { sweeps: 2, .. })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(LassoProblem::from_columns(vec![], vec![], 0.1).is_err());
        assert!(LassoProblem::from_columns(vec![vec![1.0]], vec![1.0], -1.0).is_err());
        assert!(LassoProblem::from_columns(vec![vec![1.0, 2.0]], vec![1.0], 0.0).is_err());
    }
}
