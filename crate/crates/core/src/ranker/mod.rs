//! Linear drowsiness scorer learned from within-trip time order.
//!
//! For two samples of the same drowsy trip the later one should score at
//! least 1 higher than the earlier one; violations are penalized by the
//! hinge `max(0, 1 − sgn(t − u)·(f(x_t) − f(x_u)))` plus `λ·‖θ‖²`.

pub mod objective;
pub mod optim;
pub mod sampling;
pub mod train;

use std::cmp::Ordering;
use std::io::{self, BufRead, Write};

use thiserror::Error;

pub use objective::{empirical_loss, LossMode};
pub use optim::{optimizer_step, Optimizer, OptimizerState};
pub use sampling::{sample_pair, PairDraw, PairSampler};
pub use train::{select_lambda, train, LambdaSelection, LogEntry, TrainConfig, TrainOutcome, DEFAULT_LAMBDA_GRID};

pub const MODEL_TAG: &str = "drowsyrank-model v1";

#[derive(Debug, Error)]
pub enum RankerError {
    #[error("dimension mismatch: model has {expected} weights, vector has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("pair timestamps are equal ({0})")]
    EqualTimestamps(f64),
    #[error("no drowsy trip has a valid sample pair (need >= 2 samples spanning at least min_time_gap)")]
    NoValidPair,
    #[error("training needs at least one drowsy trip")]
    NoDrowsyTrips,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub theta: Vec<f64>,
    pub lambda: f64,
    pub feature_names: Vec<String>,
}

impl LinearModel {
    pub fn zeros(feature_names: Vec<String>, lambda: f64) -> Self {
        Self {
            theta: vec![0.0; feature_names.len()],
            lambda,
            feature_names,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), RankerError> {
        if x.len() == self.theta.len() {
            Ok(())
        } else {
            Err(RankerError::DimensionMismatch {
                expected: self.theta.len(),
                found: x.len(),
            })
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn time_sign(t: f64, u: f64) -> Result<f64, RankerError> {
    match t.partial_cmp(&u) {
        Some(Ordering::Greater) => Ok(1.0),
        Some(Ordering::Less) => Ok(-1.0),
        _ => Err(RankerError::EqualTimestamps(t)),
    }
}

/// `θᵀx`.
pub fn score(model: &LinearModel, x: &[f64]) -> Result<f64, RankerError> {
    model.check_dim(x)?;
    Ok(dot(&model.theta, x))
}

#[inline]
pub(crate) fn hinge(sign: f64, score_t: f64, score_u: f64) -> f64 {
    (1.0 - sign * (score_t - score_u)).max(0.0)
}

pub fn pair_loss(model: &LinearModel, x_t: &[f64], t: f64, x_u: &[f64], u: f64) -> Result<f64, RankerError> {
    let sign = time_sign(t, u)?;
    Ok(hinge(sign, score(model, x_t)?, score(model, x_u)?))
}

/// Writes the subgradient of `pair_loss + λ‖θ‖²` into `out`. At the kink the
/// hinge contributes nothing.
pub(crate) fn subgradient_into(theta: &[f64], lambda: f64, sign: f64, x_t: &[f64], x_u: &[f64], out: &mut [f64]) {
    let active = hinge(sign, dot(theta, x_t), dot(theta, x_u)) > 0.0;
    for j in 0..theta.len() {
        let mut g = 2.0 * lambda * theta[j];
        if active {
            g -= sign * (x_t[j] - x_u[j]);
        }
        out[j] = g;
    }
}

pub fn pair_subgradient(model: &LinearModel, x_t: &[f64], t: f64, x_u: &[f64], u: f64) -> Result<Vec<f64>, RankerError> {
    let sign = time_sign(t, u)?;
    model.check_dim(x_t)?;
    model.check_dim(x_u)?;
    let mut g = vec![0.0; model.dim()];
    subgradient_into(&model.theta, model.lambda, sign, x_t, x_u, &mut g);
    Ok(g)
}

/// Features ranked by absolute weight, largest first; ties broken by name.
pub fn report_weights(model: &LinearModel) -> Vec<(String, f64)> {
    let mut rows: Vec<(String, f64)> = model
        .feature_names
        .iter()
        .cloned()
        .zip(model.theta.iter().copied())
        .collect();
    rows.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
    rows
}

pub fn write_model<W: Write>(model: &LinearModel, mut w: W) -> Result<(), RankerError> {
    writeln!(w, "{MODEL_TAG}")?;
    writeln!(w, "D={} lambda={}", model.dim(), model.lambda)?;
    for (name, weight) in model.feature_names.iter().zip(&model.theta) {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(RankerError::InvalidConfig(format!("feature name `{name}` must be non-empty without whitespace")));
        }
        writeln!(w, "{name} {weight}")?;
    }
    Ok(())
}

fn format_err(line: usize, reason: impl Into<String>) -> RankerError {
    RankerError::Format {
        line,
        reason: reason.into(),
    }
}

/// Parses `key=value` tokens of a header line.
pub(crate) fn header_fields(line: &str, line_no: usize, keys: &[&str]) -> Result<Vec<String>, RankerError> {
    let mut out = vec![None; keys.len()];
    for tok in line.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| format_err(line_no, format!("expected key=value, found `{tok}`")))?;
        match keys.iter().position(|&key| key == k) {
            Some(i) => out[i] = Some(v.to_string()),
            None => return Err(format_err(line_no, format!("unknown key `{k}`"))),
        }
    }
    out.into_iter()
        .zip(keys)
        .map(|(v, k)| v.ok_or_else(|| format_err(line_no, format!("missing `{k}=`"))))
        .collect()
}

pub(crate) fn parse_f64(s: &str, line: usize) -> Result<f64, RankerError> {
    s.parse::<f64>()
        .map_err(|_| format_err(line, format!("`{s}` is not a number")))
}

/// Reads `D` `<name> <weight>` lines following a header.
pub(crate) fn read_weight_lines<I>(lines: &mut I, dim: usize, first_line: usize) -> Result<(Vec<String>, Vec<f64>), RankerError>
where
    I: Iterator<Item = io::Result<String>>,
{
    let mut names = Vec::with_capacity(dim);
    let mut weights = Vec::with_capacity(dim);
    for k in 0..dim {
        let line_no = first_line + k;
        let line = lines
            .next()
            .ok_or_else(|| format_err(line_no, "unexpected end of file"))??;
        let (name, w) = line
            .trim_end()
            .rsplit_once(' ')
            .ok_or_else(|| format_err(line_no, "expected `<name> <weight>`"))?;
        names.push(name.to_string());
        weights.push(parse_f64(w, line_no)?);
    }
    Ok((names, weights))
}

pub fn read_model<R: BufRead>(r: R) -> Result<LinearModel, RankerError> {
    let mut lines = r.lines();
    let tag = lines.next().ok_or_else(|| format_err(1, "empty file"))??;
    if tag.trim_end() != MODEL_TAG {
        return Err(format_err(1, format!("expected `{MODEL_TAG}`")));
    }
    let header = lines.next().ok_or_else(|| format_err(2, "missing header"))??;
    let fields = header_fields(&header, 2, &["D", "lambda"])?;
    let dim: usize = fields[0]
        .parse()
        .map_err(|_| format_err(2, "D is not an integer"))?;
    let lambda = parse_f64(&fields[1], 2)?;
    let (feature_names, theta) = read_weight_lines(&mut lines, dim, 3)?;
    if !(lambda >= 0.0) || theta.iter().any(|w| !w.is_finite()) {
        return Err(format_err(2, "lambda must be >= 0 and weights finite"));
    }
    Ok(LinearModel {
        theta,
        lambda,
        feature_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model(theta: &[f64], lambda: f64) -> LinearModel {
        LinearModel {
            theta: theta.to_vec(),
            lambda,
            feature_names: (0..theta.len()).map(|i| format!("f{i}")).collect(),
        }
    }

    #[test]
    fn score_examples() {
        assert_eq!(score(&model(&[1.0, 0.0], 0.0), &[2.0, 7.0]).unwrap(), 2.0);
        assert_eq!(score(&model(&[0.0, 0.0], 0.0), &[-3.0, 9.0]).unwrap(), 0.0);
        assert_eq!(score(&model(&[0.5, -0.5], 0.0), &[4.0, 2.0]).unwrap(), 1.0);
        assert!(matches!(
            score(&model(&[1.0], 0.0), &[1.0, 2.0]),
            Err(RankerError::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn pair_loss_examples() {
        let m = model(&[1.0, 0.0], 0.0);
        assert_eq!(pair_loss(&m, &[2.0, 0.0], 10.0, &[0.5, 0.0], 3.0).unwrap(), 0.0);
        assert_abs_diff_eq!(pair_loss(&m, &[0.3, 0.0], 5.0, &[0.5, 0.0], 2.0).unwrap(), 1.2, epsilon = 1e-15);
        let zero = model(&[0.0, 0.0], 0.0);
        assert_eq!(pair_loss(&zero, &[5.0, 1.0], 1.0, &[-2.0, 4.0], 7.0).unwrap(), 1.0);
        assert!(matches!(
            pair_loss(&m, &[0.0, 0.0], 1.0, &[0.0, 0.0], 1.0),
            Err(RankerError::EqualTimestamps(_))
        ));
    }

    #[test]
    fn subgradient_examples() {
        // violated margin, t > u
        let m = model(&[0.0, 0.0], 0.0);
        let g = pair_subgradient(&m, &[1.0, 2.0], 5.0, &[0.5, -1.0], 1.0).unwrap();
        assert_eq!(g, vec![-0.5, -3.0]);
        // satisfied margin
        let m = model(&[1.0, 0.0], 0.0);
        let g = pair_subgradient(&m, &[3.0, 0.0], 5.0, &[0.0, 0.0], 1.0).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        // satisfied margin, pure regularizer
        let m = model(&[1.0, -2.0], 0.5);
        let g = pair_subgradient(&m, &[10.0, 0.0], 5.0, &[0.0, 0.0], 1.0).unwrap();
        assert_eq!(g, vec![1.0, -2.0]);
    }

    #[test]
    fn kink_takes_regularizer_only() {
        let m = model(&[1.0], 0.25);
        // margin exactly 1
        let g = pair_subgradient(&m, &[1.0], 2.0, &[0.0], 1.0).unwrap();
        assert_eq!(pair_loss(&m, &[1.0], 2.0, &[0.0], 1.0).unwrap(), 0.0);
        assert_eq!(g, vec![0.5]);
    }

    #[test]
    fn report_orders_by_magnitude() {
        let m = LinearModel {
            theta: vec![0.073, -0.047, 0.0],
            lambda: 0.0,
            feature_names: vec!["X-jerk".into(), "Y-acceleration".into(), "speed".into()],
        };
        let r = report_weights(&m);
        assert_eq!(r[0].0, "X-jerk");
        assert_eq!(r[1], ("Y-acceleration".to_string(), -0.047));
        assert_eq!(r[2].0, "speed");

        let m = LinearModel {
            theta: vec![0.0; 3],
            lambda: 0.0,
            feature_names: vec!["c".into(), "a".into(), "b".into()],
        };
        let names: Vec<_> = report_weights(&m).into_iter().map(|r| r.0).collect();
        assert_eq!(names, vec!["a", "b", "c"]);

        let r = report_weights(&model(&[-5.0, 1.0], 0.0));
        assert_eq!(r[0], ("f0".to_string(), -5.0));
    }

    #[test]
    fn model_file_round_trip() {
        let m = LinearModel {
            theta: vec![0.1 + 0.2, -1e-300, 12345.678901234567],
            lambda: 1e-3,
            feature_names: vec!["X-jerk".into(), "speed(t-1)".into(), "direction-anomaly".into()],
        };
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("drowsyrank-model v1\nD=3 lambda=0.001\nX-jerk "));
        assert_eq!(read_model(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn model_file_errors() {
        assert!(read_model("nope\n".as_bytes()).is_err());
        assert!(read_model("drowsyrank-model v1\nD=2 lambda=0\na 1\n".as_bytes()).is_err());
        assert!(read_model("drowsyrank-model v1\nD=1 lambda=x\na 1\n".as_bytes()).is_err());
        let bad = LinearModel {
            theta: vec![1.0],
            lambda: 0.0,
            feature_names: vec!["has space".into()],
        };
        assert!(write_model(&bad, Vec::new()).is_err());
    }
}
