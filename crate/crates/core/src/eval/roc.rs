use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve from `(0, 0)` at threshold `+inf` down to `(1, 1)`, one point
/// per distinct score.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// Trapezoidal area under the stored points.
    pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
        points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }

    /// TPR at a given FPR, interpolating linearly between stored points.
    /// On a vertical segment the highest TPR is returned.
    pub fn tpr_at(&self, fpr: f64) -> f64 {
        let pts = &self.points;
        let mut best: Option<f64> = None;
        for p in pts.iter().filter(|p| p.fpr == fpr) {
            best = Some(best.map_or(p.tpr, |b: f64| b.max(p.tpr)));
        }
        if let Some(b) = best {
            return b;
        }
        for w in pts.windows(2) {
            if w[0].fpr < fpr && fpr < w[1].fpr {
                let s = (fpr - w[0].fpr) / (w[1].fpr - w[0].fpr);
                return w[0].tpr + s * (w[1].tpr - w[0].tpr);
            }
        }
        if fpr <= 0.0 {
            0.0
        } else {
            1.0
        }
    }
}

/// ROC curve and AUC with ties grouped at a single threshold. The AUC
/// equals `(#{pos > neg} + ½·#{pos = neg}) / (n_pos·n_neg)`.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(&s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(s));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClassLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the area in units of (1/n_neg)·(1/n_pos), kept in integers
    let mut area2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let thr = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == thr {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += u128::from(fp - fp0) * u128::from(tp + tp0);
        points.push(RocPoint {
            threshold: thr,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    let auc = area2 as f64 / (2.0 * n_pos as f64 * n_neg as f64);
    Ok(RocCurve { points, auc })
}

/// Vertical average of several curves on an even FPR grid of `grid` points.
/// Averaged points carry a NaN threshold.
pub fn average_curves(curves: &[RocCurve], grid: usize) -> RocCurve {
    let grid = grid.max(2);
    let points: Vec<RocPoint> = (0..grid)
        .map(|g| {
            let fpr = g as f64 / (grid - 1) as f64;
            let tpr = if curves.is_empty() {
                fpr
            } else {
                curves.iter().map(|c| c.tpr_at(fpr)).sum::<f64>() / curves.len() as f64
            };
            RocPoint {
                threshold: f64::NAN,
                fpr,
                tpr,
            }
        })
        .collect();
    let auc = RocCurve::trapezoid_area(&points);
    RocCurve { points, auc }
}
