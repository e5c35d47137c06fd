//! The external update rule applied to each stochastic subgradient.

use super::RankerError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    /// `θ ← θ − η_k·G` with `η_k = learning_rate / (1 + decay·k)`.
    Sgd { learning_rate: f64, decay: f64 },
    /// Adam with bias-corrected moment estimates.
    Adam {
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl Optimizer {
    pub fn adam(learning_rate: f64) -> Self {
        Optimizer::Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn sgd(learning_rate: f64, decay: f64) -> Self {
        Optimizer::Sgd { learning_rate, decay }
    }

    pub fn validate(&self) -> Result<(), RankerError> {
        let ok = match *self {
            Optimizer::Sgd { learning_rate, decay } => learning_rate > 0.0 && decay >= 0.0,
            Optimizer::Adam {
                learning_rate,
                beta1,
                beta2,
                epsilon,
            } => {
                learning_rate > 0.0
                    && beta1 > 0.0
                    && beta1 < 1.0
                    && beta2 > 0.0
                    && beta2 < 1.0
                    && epsilon > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(RankerError::InvalidConfig(format!("invalid optimizer settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(dim: usize, optimizer: &Optimizer) -> Self {
        let moments = if matches!(optimizer, Optimizer::Adam { .. }) { dim } else { 0 };
        Self {
            step: 0,
            m: vec![0.0; moments],
            v: vec![0.0; moments],
        }
    }

    /// Number of updates applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub fn apply(&mut self, optimizer: &Optimizer, theta: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(theta.len(), grad.len());
        match *optimizer {
            Optimizer::Sgd { learning_rate, decay } => {
                let eta = learning_rate / (1.0 + decay * self.step as f64);
                for (w, g) in theta.iter_mut().zip(grad) {
                    *w -= eta * g;
                }
            }
            Optimizer::Adam {
                learning_rate,
                beta1,
                beta2,
                epsilon,
            } => {
                if self.m.len() != theta.len() {
                    self.m = vec![0.0; theta.len()];
                    self.v = vec![0.0; theta.len()];
                }
                let k = (self.step + 1) as i32;
                let c1 = 1.0 - beta1.powi(k);
                let c2 = 1.0 - beta2.powi(k);
                for j in 0..theta.len() {
                    let g = grad[j];
                    self.m[j] = beta1 * self.m[j] + (1.0 - beta1) * g;
                    self.v[j] = beta2 * self.v[j] + (1.0 - beta2) * g * g;
                    let m_hat = self.m[j] / c1;
                    let v_hat = self.v[j] / c2;
                    theta[j] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
        }
        self.step += 1;
    }
}

pub fn optimizer_step(state: &mut OptimizerState, theta: &mut [f64], gradient: &[f64], optimizer: &Optimizer) {
    state.apply(optimizer, theta, gradient);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sgd_step() {
        let opt = Optimizer::sgd(0.1, 0.0);
        let mut st = OptimizerState::new(2, &opt);
        let mut theta = vec![1.0, 1.0];
        optimizer_step(&mut st, &mut theta, &[10.0, 0.0], &opt);
        assert_abs_diff_eq!(theta[0], 0.0, epsilon = 1e-15);
        assert_eq!(theta[1], 1.0);
        assert_eq!(st.step(), 1);
    }

    #[test]
    fn sgd_decay_schedule() {
        let opt = Optimizer::sgd(1.0, 1.0);
        let mut st = OptimizerState::new(1, &opt);
        let mut theta = vec![0.0];
        optimizer_step(&mut st, &mut theta, &[1.0], &opt); // eta 1
        optimizer_step(&mut st, &mut theta, &[1.0], &opt); // eta 1/2
        assert_abs_diff_eq!(theta[0], -1.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_theta() {
        for opt in [Optimizer::sgd(0.3, 0.1), Optimizer::adam(0.3)] {
            let mut st = OptimizerState::new(3, &opt);
            let mut theta = vec![1.0, -2.0, 0.5];
            optimizer_step(&mut st, &mut theta, &[0.0; 3], &opt);
            assert_eq!(theta, vec![1.0, -2.0, 0.5]);
        }
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        // k = 1: m̂ = g, v̂ = g², step = lr·g/(|g| + eps)
        for g in [3.7, -0.02, 1e4] {
            let opt = Optimizer::adam(0.01);
            let mut st = OptimizerState::new(2, &opt);
            let mut theta = vec![0.5, 0.5];
            optimizer_step(&mut st, &mut theta, &[g, 0.0], &opt);
            let expected = 0.5 - 0.01 * g / (g.abs() + 1e-8);
            assert_abs_diff_eq!(theta[0], expected, epsilon = 1e-15);
            assert_abs_diff_eq!(theta[0], 0.5 - 0.01 * g.signum(), epsilon = 1e-8);
            assert_eq!(theta[1], 0.5);
        }
    }

    #[test]
    fn validation() {
        assert!(Optimizer::sgd(0.0, 0.0).validate().is_err());
        assert!(Optimizer::Adam {
            learning_rate: 0.1,
            beta1: 1.0,
            beta2: 0.9,
            epsilon: 1e-8
        }
        .validate()
        .is_err());
        assert!(Optimizer::adam(0.1).validate().is_ok());
    }
}
