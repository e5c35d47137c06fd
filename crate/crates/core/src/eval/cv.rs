use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{anomaly_baseline_score, logistic_score, logistic_train, LogisticConfig, LogisticModel};
use crate::data::{Dataset, Trip, TripLabel};
use crate::features::{fit_anomaly_model, frame_channels, raw_channel_names, raw_rows, FeatureConfig, TripFeatures};
use crate::pipeline::FeaturePipeline;
use crate::ranker::{score, select_lambda, train, LinearModel, TrainConfig, DEFAULT_LAMBDA_GRID};
use crate::Error;

use super::{auc1, auc2, average_curves, roc1, roc2, stratified_kfold, FoldSpec, RocCurve, ScoredTrip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Proposed,
    Logistic,
    Anomaly,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::Logistic, Method::Anomaly];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Logistic => "logistic",
            Method::Anomaly => "anomaly",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposed" => Ok(Method::Proposed),
            "logistic" => Ok(Method::Logistic),
            "anomaly" => Ok(Method::Anomaly),
            other => Err(format!("unknown method `{other}` (expected proposed, logistic or anomaly)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    pub features: FeatureConfig,
    pub anomaly_alpha: f64,
    pub train: TrainConfig,
    pub lambda_grid: Vec<f64>,
    /// Inner folds used to pick λ (ranker) or the L1 strength (logistic).
    pub inner_folds: usize,
    pub logistic: LogisticConfig,
    pub l1_grid: Vec<f64>,
    /// Folds run concurrently on this many threads; 1 runs them in order.
    pub jobs: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k: 11,
            seed: 0,
            features: FeatureConfig::default(),
            anomaly_alpha: crate::features::anomaly::DEFAULT_ALPHA,
            train: TrainConfig::default(),
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            inner_folds: 3,
            logistic: LogisticConfig::default(),
            l1_grid: vec![1e-4, 1e-3, 1e-2],
            jobs: 1,
        }
    }
}

impl CvConfig {
    /// One `key=value` per line, for the report header.
    pub fn echo(&self) -> String {
        let f = &self.features;
        let join = |g: &[f64]| g.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
        [
            format!("k={}", self.k),
            format!("seed={}", self.seed),
            format!(
                "features=lag:{} derivatives:{} anomaly:{} standardize:{}",
                f.include_lag, f.include_derivatives, f.include_anomaly, f.standardize
            ),
            format!("anomaly_alpha={}", self.anomaly_alpha),
            format!("iterations={}", self.train.iterations),
            format!("optimizer={:?}", self.train.optimizer),
            format!("min_time_gap={}", self.train.min_time_gap),
            format!("lambda_grid={}", join(&self.lambda_grid)),
            format!("inner_folds={}", self.inner_folds),
            format!(
                "logistic_epochs={} logistic_lr={}",
                self.logistic.epochs, self.logistic.learning_rate
            ),
            format!("l1_grid={}", join(&self.l1_grid)),
        ]
        .join("\n")
    }
}

/// Trip ids each fitted component of a fold was allowed to see.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FoldFitLog {
    pub test_ids: Vec<String>,
    pub anomaly_trip_ids: Vec<String>,
    pub standardizer_trip_ids: Vec<String>,
    pub model_trip_ids: Vec<String>,
}

impl FoldFitLog {
    /// True when no test trip was used to fit anything.
    pub fn is_clean(&self) -> bool {
        let test: HashSet<&String> = self.test_ids.iter().collect();
        self.anomaly_trip_ids
            .iter()
            .chain(&self.standardizer_trip_ids)
            .chain(&self.model_trip_ids)
            .all(|id| !test.contains(id))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub auc1: f64,
    pub auc2: Option<f64>,
    /// λ for the ranker, L1 strength for logistic regression.
    pub hyperparameter: Option<f64>,
    pub fit_log: FoldFitLog,
    pub test_scores: Vec<ScoredTrip>,
    pub ranker: Option<LinearModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: Method,
    pub folds: Vec<FoldResult>,
    pub mean_auc1: f64,
    pub mean_auc2: Option<f64>,
    pub fold_spec: FoldSpec,
    pub config_echo: String,
}

impl EvalReport {
    fn from_folds(method: Method, folds: Vec<FoldResult>, fold_spec: FoldSpec, config_echo: String) -> Self {
        let n = folds.len() as f64;
        let mean_auc1 = folds.iter().map(|f| f.auc1).sum::<f64>() / n;
        let mean_auc2 = folds
            .iter()
            .map(|f| f.auc2)
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.iter().sum::<f64>() / n);
        Self {
            method,
            folds,
            mean_auc1,
            mean_auc2,
            fold_spec,
            config_echo,
        }
    }

    /// Trip-level ROC averaged vertically over folds.
    pub fn roc1_curve(&self, grid: usize) -> Result<RocCurve, Error> {
        let curves = self
            .folds
            .iter()
            .map(|f| roc1(&f.test_scores))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(average_curves(&curves, grid))
    }

    /// Sample-level ROC averaged vertically over folds.
    pub fn roc2_curve(&self, grid: usize) -> Result<RocCurve, Error> {
        let curves = self
            .folds
            .iter()
            .map(|f| roc2(&f.test_scores))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(average_curves(&curves, grid))
    }
}

fn ids<'a>(trips: impl IntoIterator<Item = &'a Trip>) -> Vec<String> {
    trips.into_iter().map(|t| t.id.clone()).collect()
}

fn scored(tf: &TripFeatures, f: impl Fn(&[f64]) -> f64) -> ScoredTrip {
    ScoredTrip {
        trip_id: tf.trip_id.clone(),
        label: tf.label,
        scores: tf.vectors.iter().map(|v| f(v)).collect(),
        truth: tf.truth.clone(),
    }
}

/// Runs `method` under stratified k-fold cross-validation. Fold `i` is
/// seeded with `config.seed + i`; results are ordered by fold index
/// whatever `config.jobs` is.
pub fn cross_validate(dataset: &Dataset, method: Method, config: &CvConfig) -> Result<EvalReport, Error> {
    let spec = stratified_kfold(dataset, config.k, config.seed)?;
    let run = |fold: usize| run_fold(dataset, method, config, &spec, fold);
    let folds: Vec<FoldResult> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| (0..spec.k).into_par_iter().map(run).collect::<Result<_, _>>())?
    } else {
        (0..spec.k).map(run).collect::<Result<_, _>>()?
    };
    Ok(EvalReport::from_folds(method, folds, spec, config.echo()))
}

fn run_fold(dataset: &Dataset, method: Method, config: &CvConfig, spec: &FoldSpec, fold: usize) -> Result<FoldResult, Error> {
    let fold_seed = config.seed.wrapping_add(fold as u64);
    let test_set = spec.test_set(fold);
    let (test, train_trips): (Vec<Trip>, Vec<Trip>) = dataset
        .trips()
        .iter()
        .cloned()
        .partition(|t| test_set.contains(t.id.as_str()));
    let mut log = FoldFitLog {
        test_ids: ids(&test),
        ..Default::default()
    };
    let mut hyperparameter = None;
    let mut ranker = None;

    let test_scores: Vec<ScoredTrip> = match method {
        Method::Anomaly => {
            let normals: Vec<&Trip> = train_trips.iter().filter(|t| t.label == TripLabel::Normal).collect();
            log.anomaly_trip_ids = ids(normals.iter().copied());
            let model = fit_anomaly_model(&raw_rows(normals), &raw_channel_names(), config.anomaly_alpha)?;
            test.iter()
                .map(|t| ScoredTrip {
                    trip_id: t.id.clone(),
                    label: t.label,
                    scores: t.frames[1..]
                        .iter()
                        .map(|f| anomaly_baseline_score(&frame_channels(f), &model))
                        .collect(),
                    truth: t.truth.as_ref().map(|v| v[1..].to_vec()),
                })
                .collect()
        }
        Method::Proposed => {
            let (pipeline, plog) = FeaturePipeline::fit(&train_trips, config.features, config.anomaly_alpha)?;
            log.anomaly_trip_ids = plog.anomaly_trip_ids;
            log.standardizer_trip_ids = plog.standardizer_trip_ids;
            let drowsy: Vec<Trip> = train_trips.iter().filter(|t| t.label == TripLabel::Drowsy).cloned().collect();
            log.model_trip_ids = ids(&drowsy);
            let feats = pipeline.transform_all(&drowsy)?;
            let names = pipeline.names();
            let tcfg = TrainConfig {
                seed: fold_seed,
                loss_report_every: 0,
                ..config.train.clone()
            };
            let sel = select_lambda(&feats, &names, &tcfg, &config.lambda_grid, config.inner_folds, fold_seed)?;
            let model = train(&feats, &names, &tcfg, sel.lambda)?.model;
            hyperparameter = Some(sel.lambda);
            let scores: Vec<ScoredTrip> = pipeline
                .transform_all(&test)?
                .iter()
                .map(|tf| scored(tf, |v| score(&model, v).unwrap_or(f64::NAN)))
                .collect();
            ranker = Some(model);
            scores
        }
        Method::Logistic => {
            let (pipeline, plog) = FeaturePipeline::fit(&train_trips, config.features, config.anomaly_alpha)?;
            log.anomaly_trip_ids = plog.anomaly_trip_ids;
            log.standardizer_trip_ids = plog.standardizer_trip_ids;
            log.model_trip_ids = ids(&train_trips);
            let feats = pipeline.transform_all(&train_trips)?;
            let lcfg = LogisticConfig {
                seed: fold_seed,
                ..config.logistic.clone()
            };
            let (l1, model) = fit_logistic_with_selection(&feats, &lcfg, &config.l1_grid, config.inner_folds, fold_seed)?;
            hyperparameter = Some(l1);
            pipeline
                .transform_all(&test)?
                .iter()
                .map(|tf| scored(tf, |v| logistic_score(&model, v).unwrap_or(f64::NAN)))
                .collect()
        }
    };

    let auc1 = auc1(&test_scores)?;
    let auc2 = if test_scores.iter().all(|t| t.truth.is_some()) {
        Some(auc2(&test_scores)?)
    } else {
        None
    };
    Ok(FoldResult {
        fold,
        auc1,
        auc2,
        hyperparameter,
        fit_log: log,
        test_scores,
        ranker,
    })
}

fn broadcast(trips: &[&TripFeatures]) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for tf in trips {
        rows.extend(tf.vectors.iter().cloned());
        labels.extend(std::iter::repeat_n(tf.label.is_drowsy(), tf.len()));
    }
    (rows, labels)
}

/// Picks the L1 strength by held-out log-loss over trip-stratified inner
/// folds, then refits on every trip. Ties keep the earlier grid value.
pub fn fit_logistic_with_selection(
    trips: &[TripFeatures],
    config: &LogisticConfig,
    grid: &[f64],
    inner_folds: usize,
    seed: u64,
) -> Result<(f64, LogisticModel), Error> {
    let first = *grid
        .first()
        .ok_or_else(|| Error::Config("empty L1 grid".into()))?;
    let all: Vec<&TripFeatures> = trips.iter().collect();
    let n_drowsy = trips.iter().filter(|t| t.label.is_drowsy()).count();
    let k = inner_folds.min(n_drowsy).min(trips.len() - n_drowsy);
    let mut best = first;
    if grid.len() > 1 && k >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut assignment = vec![0usize; trips.len()];
        for drowsy in [true, false] {
            let mut idx: Vec<usize> = (0..trips.len()).filter(|&i| trips[i].label.is_drowsy() == drowsy).collect();
            idx.shuffle(&mut rng);
            for (j, i) in idx.into_iter().enumerate() {
                assignment[i] = j % k;
            }
        }
        let mut best_loss = f64::INFINITY;
        for &l1 in grid {
            let mut total = 0.0;
            for fold in 0..k {
                let (held, kept): (Vec<_>, Vec<_>) = all.iter().enumerate().partition(|(i, _)| assignment[*i] == fold);
                let kept: Vec<&TripFeatures> = kept.into_iter().map(|(_, t)| *t).collect();
                let held: Vec<&TripFeatures> = held.into_iter().map(|(_, t)| *t).collect();
                let (rows, labels) = broadcast(&kept);
                let fit = logistic_train(&rows, &labels, l1, config)?;
                let (vrows, vlabels) = broadcast(&held);
                total += fit.model.log_loss(&vrows, &vlabels)?;
            }
            let loss = total / k as f64;
            if loss < best_loss {
                best_loss = loss;
                best = l1;
            }
        }
    }
    let (rows, labels) = broadcast(&all);
    let fit = logistic_train(&rows, &labels, best, config)?;
    Ok((best, fit.model))
}
