//! Fitted feature transform: anomaly model and standardizer learned on a
//! training split, applied unchanged to any later trip.

use std::io::{self, BufRead, Write};

use crate::data::{Trip, TripLabel};
use crate::features::{
    apply_standardizer, featurize, fit_anomaly_model, fit_standardizer, raw_channel_names, raw_rows, AnomalyModel,
    FeatureConfig, FeatureError, Standardizer, TripFeatures,
};
use crate::ranker::{header_fields, parse_f64, RankerError};

pub const PIPELINE_TAG: &str = "drowsyrank-pipeline v1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePipeline {
    pub config: FeatureConfig,
    pub anomaly: Option<AnomalyModel>,
    pub standardizer: Option<Standardizer>,
}

/// Which training trips each fitted component saw.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FitLog {
    pub anomaly_trip_ids: Vec<String>,
    pub standardizer_trip_ids: Vec<String>,
}

impl FeaturePipeline {
    /// Fits the anomaly model on the normal trips of `train` and the
    /// standardizer on the features of every trip in `train`.
    pub fn fit(train: &[Trip], config: FeatureConfig, alpha: f64) -> Result<(Self, FitLog), FeatureError> {
        config.validate()?;
        let mut log = FitLog::default();
        let anomaly = if config.include_anomaly {
            let normals: Vec<&Trip> = train.iter().filter(|t| t.label == TripLabel::Normal).collect();
            log.anomaly_trip_ids = normals.iter().map(|t| t.id.clone()).collect();
            Some(fit_anomaly_model(&raw_rows(normals), &raw_channel_names(), alpha)?)
        } else {
            None
        };
        let mut pipeline = Self {
            config,
            anomaly,
            standardizer: None,
        };
        if config.standardize {
            let unscaled = train
                .iter()
                .filter(|t| t.frames.len() >= 2)
                .map(|t| featurize(t, pipeline.anomaly.as_ref(), &config))
                .collect::<Result<Vec<_>, _>>()?;
            log.standardizer_trip_ids = unscaled.iter().map(|t| t.trip_id.clone()).collect();
            pipeline.standardizer = Some(fit_standardizer(
                unscaled.iter().flat_map(|t| t.vectors.iter().map(Vec::as_slice)),
            )?);
        }
        Ok((pipeline, log))
    }

    pub fn names(&self) -> Vec<String> {
        self.config.names()
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    pub fn transform(&self, trip: &Trip) -> Result<TripFeatures, FeatureError> {
        let mut tf = featurize(trip, self.anomaly.as_ref(), &self.config)?;
        if let Some(s) = &self.standardizer {
            apply_standardizer(&mut tf.vectors, s);
        }
        Ok(tf)
    }

    pub fn transform_all(&self, trips: &[Trip]) -> Result<Vec<TripFeatures>, FeatureError> {
        trips.iter().map(|t| self.transform(t)).collect()
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_pipeline<W: Write>(p: &FeaturePipeline, mut w: W) -> io::Result<()> {
    let c = &p.config;
    writeln!(w, "{PIPELINE_TAG}")?;
    writeln!(
        w,
        "lag={} derivatives={} anomaly={} standardize={}",
        u8::from(c.include_lag),
        u8::from(c.include_derivatives),
        u8::from(c.include_anomaly),
        u8::from(c.standardize)
    )?;
    if let Some(m) = &p.anomaly {
        writeln!(w, "channels {}", m.channel_names().join(" "))?;
        writeln!(w, "mu {}", join(m.mu()))?;
        for row in m.precision() {
            writeln!(w, "precision {}", join(row))?;
        }
    }
    if let Some(s) = &p.standardizer {
        for ((name, m), sd) in p.names().iter().zip(s.mean()).zip(s.std()) {
            writeln!(w, "feature {name} {m} {sd}")?;
        }
    }
    Ok(())
}

fn bad(line: usize, reason: impl Into<String>) -> RankerError {
    RankerError::Format {
        line,
        reason: reason.into(),
    }
}

fn parse_flag(s: &str, line: usize) -> Result<bool, RankerError> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(bad(line, format!("flag `{s}` must be 0 or 1"))),
    }
}

pub fn read_pipeline<R: BufRead>(r: R) -> Result<FeaturePipeline, RankerError> {
    let lines: Vec<String> = r.lines().collect::<Result<_, _>>()?;
    let mut it = lines.iter().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    match it.next() {
        Some((_, PIPELINE_TAG)) => {}
        _ => return Err(bad(1, format!("expected `{PIPELINE_TAG}`"))),
    }
    let (ln, header) = it.next().ok_or_else(|| bad(2, "missing header"))?;
    let f = header_fields(header, ln, &["lag", "derivatives", "anomaly", "standardize"])?;
    let config = FeatureConfig {
        include_lag: parse_flag(&f[0], ln)?,
        include_derivatives: parse_flag(&f[1], ln)?,
        include_anomaly: parse_flag(&f[2], ln)?,
        standardize: parse_flag(&f[3], ln)?,
    };
    let nums = |rest: &str, ln: usize| -> Result<Vec<f64>, RankerError> {
        rest.split_whitespace().map(|s| parse_f64(s, ln)).collect()
    };

    let mut anomaly = None;
    if config.include_anomaly {
        let (ln, l) = it.next().ok_or_else(|| bad(3, "missing channels"))?;
        let names: Vec<String> = l
            .strip_prefix("channels ")
            .ok_or_else(|| bad(ln, "expected `channels`"))?
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let (ln, l) = it.next().ok_or_else(|| bad(ln + 1, "missing mu"))?;
        let mu = nums(l.strip_prefix("mu ").ok_or_else(|| bad(ln, "expected `mu`"))?, ln)?;
        let mut precision = Vec::with_capacity(names.len());
        for _ in 0..names.len() {
            let (ln, l) = it.next().ok_or_else(|| bad(ln + 1, "missing precision row"))?;
            precision.push(nums(l.strip_prefix("precision ").ok_or_else(|| bad(ln, "expected `precision`"))?, ln)?);
        }
        anomaly = Some(AnomalyModel::new(mu, precision, names).map_err(|e| bad(ln, e.to_string()))?);
    }
    let mut standardizer = None;
    if config.standardize {
        let expected = config.names();
        let mut mean = Vec::with_capacity(expected.len());
        let mut std = Vec::with_capacity(expected.len());
        for name in &expected {
            let (ln, l) = it.next().ok_or_else(|| bad(0, "missing feature line"))?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            match parts.as_slice() {
                ["feature", n, m, s] if n == name => {
                    mean.push(parse_f64(m, ln)?);
                    std.push(parse_f64(s, ln)?);
                }
                _ => return Err(bad(ln, format!("expected `feature {name} <mean> <std>`"))),
            }
        }
        standardizer = Some(Standardizer::new(mean, std).map_err(|e| bad(0, e.to_string()))?);
    }
    Ok(FeaturePipeline {
        config,
        anomaly,
        standardizer,
    })
}
