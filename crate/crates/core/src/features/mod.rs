//! Per-timestamp feature vectors built from raw telemetry.
//!
//! With every group enabled a vector holds, in order: the six raw channels
//! at `t` and at `t−1` (12), their backward time derivatives (6), and one
//! anomaly score per raw channel (6), so `D = 24`.

pub mod anomaly;
pub mod standardize;

use std::io::{self, Write};

use thiserror::Error;

use crate::data::{SensorFrame, Trip, TripLabel};

pub use anomaly::{anomaly_scores, fit_anomaly_model, AnomalyModel, DegenerateData, DegenerateKind};
pub use standardize::{apply_standardizer, fit_standardizer, Standardizer};

pub const N_RAW: usize = 6;

pub const RAW_NAMES: [&str; N_RAW] = [
    "X-acceleration",
    "Y-acceleration",
    "Z-acceleration",
    "acceleration-magnitude",
    "speed",
    "direction",
];

pub const DERIVATIVE_NAMES: [&str; N_RAW] = [
    "X-jerk",
    "Y-jerk",
    "Z-jerk",
    "magnitude-derivative",
    "speed-derivative",
    "direction-derivative",
];

const DIRECTION: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("trip `{0}` has fewer than 2 frames")]
    TripTooShort(String),
    #[error("need at least {needed} samples, found {found}")]
    InsufficientSamples { needed: usize, found: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no feature group enabled")]
    NoFeatureGroups,
    #[error("anomaly features requested but no anomaly model was fitted")]
    MissingAnomalyModel,
    #[error("invalid anomaly model: {0}")]
    InvalidModel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub include_lag: bool,
    pub include_derivatives: bool,
    pub include_anomaly: bool,
    pub standardize: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            include_lag: true,
            include_derivatives: true,
            include_anomaly: true,
            standardize: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.include_lag || self.include_derivatives || self.include_anomaly {
            Ok(())
        } else {
            Err(FeatureError::NoFeatureGroups)
        }
    }

    pub fn dim(&self) -> usize {
        2 * N_RAW * usize::from(self.include_lag)
            + N_RAW * usize::from(self.include_derivatives)
            + N_RAW * usize::from(self.include_anomaly)
    }

    /// Feature names in vector order.
    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        if self.include_lag {
            names.extend(RAW_NAMES.iter().map(|s| s.to_string()));
            names.extend(RAW_NAMES.iter().map(|s| format!("{s}(t-1)")));
        }
        if self.include_derivatives {
            names.extend(DERIVATIVE_NAMES.iter().map(|s| s.to_string()));
        }
        if self.include_anomaly {
            names.extend(RAW_NAMES.iter().map(|s| format!("{s}-anomaly")));
        }
        names
    }
}

/// The six raw channels of one frame: `(ax, ay, az, |a|, speed, direction)`.
pub fn frame_channels(f: &SensorFrame) -> [f64; N_RAW] {
    let mag = (f.ax * f.ax + f.ay * f.ay + f.az * f.az).sqrt();
    [f.ax, f.ay, f.az, mag, f.speed, f.direction]
}

/// Raw channels at `t` followed by the same channels at `t−1`.
pub fn raw_channels(frame: &SensorFrame, prev: &SensorFrame) -> [f64; 2 * N_RAW] {
    let mut out = [0.0; 2 * N_RAW];
    out[..N_RAW].copy_from_slice(&frame_channels(frame));
    out[N_RAW..].copy_from_slice(&frame_channels(prev));
    out
}

/// Heading change from `from` to `to` along the shortest arc, in `(−180, 180]`.
pub fn heading_delta(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Backward finite differences of the raw channels; the first frame gets zeros.
pub fn derivatives(frames: &[SensorFrame]) -> Vec<[f64; N_RAW]> {
    let mut out = Vec::with_capacity(frames.len());
    if frames.is_empty() {
        return out;
    }
    out.push([0.0; N_RAW]);
    for w in frames.windows(2) {
        let (prev, cur) = (frame_channels(&w[0]), frame_channels(&w[1]));
        let dt = w[1].t - w[0].t;
        let mut d = [0.0; N_RAW];
        for c in 0..N_RAW {
            let delta = if c == DIRECTION {
                heading_delta(prev[c], cur[c])
            } else {
                cur[c] - prev[c]
            };
            d[c] = delta / dt;
        }
        out.push(d);
    }
    out
}

/// Feature vectors of one trip. Row `k` corresponds to frame `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripFeatures {
    pub trip_id: String,
    pub label: TripLabel,
    pub times: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Raw channels at each row's timestamp, for raw-signal scorers.
    pub raw: Vec<[f64; N_RAW]>,
    pub truth: Option<Vec<bool>>,
}

impl TripFeatures {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn featurize(trip: &Trip, model: Option<&AnomalyModel>, config: &FeatureConfig) -> Result<TripFeatures, FeatureError> {
    config.validate()?;
    if trip.frames.len() < 2 {
        return Err(FeatureError::TripTooShort(trip.id.clone()));
    }
    let model = match (config.include_anomaly, model) {
        (true, None) => return Err(FeatureError::MissingAnomalyModel),
        (true, Some(m)) if m.n_channels() != N_RAW => {
            return Err(FeatureError::DimensionMismatch {
                expected: N_RAW,
                found: m.n_channels(),
            })
        }
        (_, m) => m,
    };
    let derivs = if config.include_derivatives {
        derivatives(&trip.frames)
    } else {
        Vec::new()
    };
    let d = config.dim();
    let n = trip.frames.len() - 1;
    let mut vectors = Vec::with_capacity(n);
    let mut raw = Vec::with_capacity(n);
    for k in 1..trip.frames.len() {
        let both = raw_channels(&trip.frames[k], &trip.frames[k - 1]);
        let mut current = [0.0; N_RAW];
        current.copy_from_slice(&both[..N_RAW]);
        let mut v = Vec::with_capacity(d);
        if config.include_lag {
            v.extend_from_slice(&both);
        }
        if config.include_derivatives {
            v.extend_from_slice(&derivs[k]);
        }
        if config.include_anomaly {
            if let Some(m) = model {
                v.extend(anomaly_scores(&current, m));
            }
        }
        vectors.push(v);
        raw.push(current);
    }
    Ok(TripFeatures {
        trip_id: trip.id.clone(),
        label: trip.label,
        times: trip.frames[1..].iter().map(|f| f.t).collect(),
        vectors,
        raw,
        truth: trip.truth.as_ref().map(|t| t[1..].to_vec()),
    })
}

/// Raw channel rows of every frame in the given trips, for anomaly fitting.
pub fn raw_rows<'a>(trips: impl IntoIterator<Item = &'a Trip>) -> Vec<Vec<f64>> {
    trips
        .into_iter()
        .flat_map(|t| t.frames.iter().map(|f| frame_channels(f).to_vec()))
        .collect()
}

pub fn raw_channel_names() -> Vec<String> {
    RAW_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Writes `trip_id,t,<names…>` rows for every featurized trip.
pub fn write_feature_csv<W: Write>(names: &[String], trips: &[TripFeatures], mut w: W) -> io::Result<()> {
    writeln!(w, "trip_id,t,{}", names.join(","))?;
    for tf in trips {
        for (t, v) in tf.times.iter().zip(&tf.vectors) {
            write!(w, "{},{}", tf.trip_id, t)?;
            for x in v {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
