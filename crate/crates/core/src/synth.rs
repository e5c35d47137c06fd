//! Seeded synthetic trips with a planted, linearly rising drowsiness level.
//!
//! Every trip shares the same nuisance structure: a per-trip speed regime and
//! road roughness, potholes, turns and braking. Drowsy trips also carry
//! effects whose strength follows the latent `d(τ)`: heavier longitudinal
//! noise, lateral swerves with heading wobble, and throttle creeps (ax rises
//! slowly over several seconds, then drops back in one step).

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

use crate::data::{write_manifest, write_trip_file, Dataset, SensorFrame, Trip, TripLabel};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Euler-discretized Ornstein-Uhlenbeck parameters at 1 Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    pub rate: f64,
    pub volatility: f64,
}

impl OuParams {
    pub const fn new(rate: f64, volatility: f64) -> Self {
        Self { rate, volatility }
    }

    fn valid(&self) -> bool {
        self.rate > 0.0 && self.rate <= 1.0 && self.volatility >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseNoise {
    pub ax: OuParams,
    pub ay: OuParams,
    pub az: OuParams,
    pub speed: OuParams,
    /// Noise on the yaw rate (deg/s); heading integrates it.
    pub yaw_rate: OuParams,
}

impl Default for BaseNoise {
    fn default() -> Self {
        Self {
            ax: OuParams::new(0.74, 0.2),
            ay: OuParams::new(0.5, 0.2),
            az: OuParams::new(0.8, 0.12),
            speed: OuParams::new(0.2, 0.3),
            yaw_rate: OuParams::new(0.3, 0.8),
        }
    }
}

/// Driving context of one trip: speed regime, road roughness and how often
/// the driver turns or brakes. All ranges are inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadProfile {
    pub speed: (f64, f64),
    pub roughness: (f64, f64),
    /// Turns per minute.
    pub turn_rate: f64,
    /// Braking manoeuvres per minute.
    pub brake_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_drowsy: usize,
    pub n_normal: usize,
    /// Inclusive range of trip lengths in seconds (one frame per second).
    pub trip_len_range: (usize, usize),
    pub seed: u64,
    pub base_noise: BaseNoise,
    /// Latent level reached at the end of a drowsy trip; the level is
    /// capped at 1.
    pub drift_amplitude: f64,
    /// Swerves per minute at full drowsiness.
    pub swerve_rate_max: f64,
    /// Throttle creeps per minute at full drowsiness.
    pub creep_rate_max: f64,
    /// Peak lateral acceleration of lane weaving at full drowsiness.
    pub weave_amplitude: f64,
    /// Range of the ax change across one throttle creep (m/s²).
    pub creep_span: (f64, f64),
    /// Potholes per minute, in every trip.
    pub pothole_rate: f64,
    /// Largest mount pitch and roll, degrees; drawn per trip.
    pub mount_tilt_max: f64,
    pub highway: RoadProfile,
    pub city: RoadProfile,
    /// Probability that a drowsy trip is a highway trip.
    pub highway_share_drowsy: f64,
    /// Probability that a normal trip is a highway trip.
    pub highway_share_normal: f64,
    pub truth_threshold: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_drowsy: 12,
            n_normal: 90,
            trip_len_range: (600, 1800),
            seed: 42,
            base_noise: BaseNoise::default(),
            drift_amplitude: 1.0,
            swerve_rate_max: 3.0,
            creep_rate_max: 1.8,
            weave_amplitude: 2.5,
            creep_span: (1.25, 5.5),
            pothole_rate: 0.62,
            mount_tilt_max: 2.3,
            highway: RoadProfile {
                speed: (24.0, 32.0),
                roughness: (0.6, 1.0),
                turn_rate: 0.2,
                brake_rate: 0.2,
            },
            city: RoadProfile {
                speed: (8.0, 16.0),
                roughness: (1.0, 1.8),
                turn_rate: 1.8,
                brake_rate: 1.8,
            },
            highway_share_drowsy: 0.71,
            highway_share_normal: 0.4,
            truth_threshold: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.into()));
        let (lo, hi) = self.trip_len_range;
        if lo < 2 || lo > hi {
            return bad("trip_len_range must satisfy 2 <= min <= max");
        }
        if !(self.drift_amplitude >= 0.0) {
            return bad("drift_amplitude must be >= 0");
        }
        if !(self.truth_threshold > 0.0 && self.truth_threshold < 1.0) {
            return bad("truth_threshold must lie in (0, 1)");
        }
        let (h, c) = (&self.highway, &self.city);
        for r in [
            self.swerve_rate_max,
            self.creep_rate_max,
            self.pothole_rate,
            self.weave_amplitude,
            self.mount_tilt_max,
            h.turn_rate,
            h.brake_rate,
            c.turn_rate,
            c.brake_rate,
        ] {
            if !(r >= 0.0 && r.is_finite()) {
                return bad("event rates and amplitudes must be finite and >= 0");
            }
        }
        for (lo, hi) in [self.creep_span, h.speed, h.roughness, c.speed, c.roughness] {
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return bad("ranges must satisfy 0 <= min <= max");
            }
        }
        for p in [self.highway_share_drowsy, self.highway_share_normal] {
            if !(0.0..=1.0).contains(&p) {
                return bad("highway shares must lie in [0, 1]");
            }
        }
        let n = &self.base_noise;
        if ![n.ax, n.ay, n.az, n.speed, n.yaw_rate].iter().all(OuParams::valid) {
            return bad("OU rates must lie in (0, 1] and volatilities be >= 0");
        }
        Ok(())
    }

    /// `key=value` lines recording every parameter.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let n = &self.base_noise;
        let _ = writeln!(s, "n_drowsy={}", self.n_drowsy);
        let _ = writeln!(s, "n_normal={}", self.n_normal);
        let _ = writeln!(s, "trip_len_min={}", self.trip_len_range.0);
        let _ = writeln!(s, "trip_len_max={}", self.trip_len_range.1);
        let _ = writeln!(s, "seed={}", self.seed);
        for (name, p) in [("ax", n.ax), ("ay", n.ay), ("az", n.az), ("speed", n.speed), ("yaw_rate", n.yaw_rate)] {
            let _ = writeln!(s, "ou_{name}_rate={}", p.rate);
            let _ = writeln!(s, "ou_{name}_volatility={}", p.volatility);
        }
        let _ = writeln!(s, "drift_amplitude={}", self.drift_amplitude);
        let _ = writeln!(s, "swerve_rate_max={}", self.swerve_rate_max);
        let _ = writeln!(s, "creep_rate_max={}", self.creep_rate_max);
        let _ = writeln!(s, "weave_amplitude={}", self.weave_amplitude);
        let _ = writeln!(s, "creep_span_min={}", self.creep_span.0);
        let _ = writeln!(s, "creep_span_max={}", self.creep_span.1);
        let _ = writeln!(s, "pothole_rate={}", self.pothole_rate);
        let _ = writeln!(s, "mount_tilt_max={}", self.mount_tilt_max);
        for (name, r) in [("highway", &self.highway), ("city", &self.city)] {
            let _ = writeln!(s, "{name}_speed={}..{}", r.speed.0, r.speed.1);
            let _ = writeln!(s, "{name}_roughness={}..{}", r.roughness.0, r.roughness.1);
            let _ = writeln!(s, "{name}_turn_rate={}", r.turn_rate);
            let _ = writeln!(s, "{name}_brake_rate={}", r.brake_rate);
        }
        let _ = writeln!(s, "highway_share_drowsy={}", self.highway_share_drowsy);
        let _ = writeln!(s, "highway_share_normal={}", self.highway_share_normal);
        let _ = writeln!(s, "truth_threshold={}", self.truth_threshold);
        s
    }
}

/// Sensor orientation relative to the vehicle: pitch then roll, radians.
#[derive(Debug, Clone, Copy)]
struct Mount {
    pitch: f64,
    roll: f64,
}

impl Mount {
    fn random<R: Rng + ?Sized>(rng: &mut R, max_deg: f64) -> Self {
        let mut angle = || if max_deg > 0.0 { rng.random_range(-max_deg..=max_deg).to_radians() } else { 0.0 };
        Self {
            pitch: angle(),
            roll: angle(),
        }
    }

    fn apply(&self, ax: f64, ay: f64, az: f64) -> (f64, f64, f64) {
        let (sp, cp) = self.pitch.sin_cos();
        let (sr, cr) = self.roll.sin_cos();
        let x = cp * ax - sp * az;
        let z = sp * ax + cp * az;
        (x, cr * ay + sr * z, -sr * ay + cr * z)
    }
}

/// Latent drowsiness per frame and the derived binary truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub level: Vec<f64>,
    pub label: Vec<bool>,
}

/// `d(τ) = min(1, amplitude·τ/n)` for drowsy trips, zero otherwise.
pub fn latent_levels(label: TripLabel, n: usize, amplitude: f64) -> Vec<f64> {
    match label {
        TripLabel::Normal => vec![0.0; n],
        TripLabel::Drowsy => (0..n).map(|k| (amplitude * k as f64 / n as f64).min(1.0)).collect(),
    }
}

fn ou_step(x: f64, mean: f64, p: OuParams, scale: f64, z: f64) -> f64 {
    x + p.rate * (mean - x) + p.volatility * scale * z
}

fn poisson_count<R: Rng + ?Sized>(rng: &mut R, rate_per_min: f64) -> u64 {
    let lambda = rate_per_min / 60.0;
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Generates one trip of `n` frames with its latent level and truth.
pub fn generate_trip_with_truth<R: Rng + ?Sized>(
    rng: &mut R,
    id: &str,
    label: TripLabel,
    n: usize,
    config: &SynthConfig,
) -> (Trip, SynthTruth) {
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let noise = &config.base_noise;
    let level = latent_levels(label, n, config.drift_amplitude);

    // per-trip nuisances
    let share = match label {
        TripLabel::Drowsy => config.highway_share_drowsy,
        TripLabel::Normal => config.highway_share_normal,
    };
    let road = if rng.random_bool(share) { &config.highway } else { &config.city };
    let speed_mean: f64 = rng.random_range(road.speed.0..=road.speed.1);
    let mount = Mount::random(rng, config.mount_tilt_max);
    let weave_period: f64 = rng.random_range(6.0..14.0);
    let weave_phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let roughness: f64 = rng.random_range(road.roughness.0..=road.roughness.1);
    let mut heading: f64 = rng.random_range(0.0..360.0);

    let mut ax_extra = vec![0.0; n];
    let mut ay_extra = vec![0.0; n];
    let mut az_extra = vec![0.0; n];
    let mut turn = vec![0.0; n];

    let sign = |rng: &mut R| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let half_sine = |j: usize, len: usize| (std::f64::consts::PI * (j as f64 + 0.5) / len as f64).sin();
    for k in 0..n {
        let d = level[k];
        if d > 0.0 {
            ay_extra[k] += config.weave_amplitude
                * d
                * (std::f64::consts::TAU * k as f64 / weave_period + weave_phase).sin();
            // swerve: short lateral pulse
            for _ in 0..poisson_count(rng, d * config.swerve_rate_max) {
                let len = rng.random_range(3..=6usize);
                let amp = rng.random_range(1.5..3.0) * sign(rng);
                for j in 0..len.min(n - k) {
                    ay_extra[k + j] += amp * half_sine(j, len);
                }
            }
            // throttle creep: ax climbs slowly, then a short brake stab
            for _ in 0..poisson_count(rng, d * config.creep_rate_max) {
                let len = rng.random_range(6..=12usize);
                let span = rng.random_range(config.creep_span.0..=config.creep_span.1);
                let stab_len = rng.random_range(1..=2usize);
                let stab = rng.random_range(2.0..4.0);
                for j in 0..(len + stab_len).min(n - k) {
                    ax_extra[k + j] += if j < len { span * ((j as f64 + 0.5) / len as f64 - 0.5) } else { -stab };
                }
            }
        }
        for _ in 0..poisson_count(rng, config.pothole_rate) {
            az_extra[k] += rng.random_range(3.0..6.0) * sign(rng);
        }
        // ordinary manoeuvres, same rate in every trip
        for _ in 0..poisson_count(rng, road.turn_rate) {
            let len = rng.random_range(5..=12usize);
            let amp = rng.random_range(1.0..3.5) * sign(rng);
            for j in 0..len.min(n - k) {
                turn[k + j] += amp * half_sine(j, len);
            }
        }
        for _ in 0..poisson_count(rng, road.brake_rate) {
            let len = rng.random_range(4..=10usize);
            let amp = rng.random_range(1.0..3.5);
            for j in 0..len.min(n - k) {
                ax_extra[k + j] -= amp * half_sine(j, len);
            }
        }
    }

    let (mut ax, mut ay, mut az) = (0.0, 0.0, 9.81);
    let mut speed = speed_mean;
    let mut yaw_rate = 0.0;
    let mut frames = Vec::with_capacity(n);
    for k in 0..n {
        let d = level[k];
        let z: [f64; 5] = std::array::from_fn(|_| std_normal.sample(rng));
        if k > 0 {
            ax = ou_step(ax, 0.0, noise.ax, 1.0 + 2.0 * d, z[0]);
            ay = ou_step(ay, 0.0, noise.ay, 1.0, z[1]);
            az = ou_step(az, 9.81, noise.az, roughness, z[2]);
            speed = ou_step(speed, speed_mean, noise.speed, 1.0, z[3]);
            yaw_rate = ou_step(yaw_rate, 0.0, noise.yaw_rate, 1.0, z[4]);
        }
        let ax_k = ax + ax_extra[k];
        let ay_k = ay + ay_extra[k] + turn[k];
        let v = speed.max(0.5);
        // lateral acceleration turns the car: ω = a_y / v
        let wobble = ((ay_extra[k] + turn[k]) / v).to_degrees();
        if k > 0 {
            heading = (heading + yaw_rate + wobble).rem_euclid(360.0);
            if heading >= 360.0 {
                heading = 0.0;
            }
        }
        let (sx, sy, sz) = mount.apply(ax_k, ay_k, az + az_extra[k]);
        frames.push(SensorFrame::new(k as f64, sx, sy, sz, v, heading));
    }
    let truth_label: Vec<bool> = level.iter().map(|&d| d >= config.truth_threshold).collect();
    let trip = Trip {
        id: id.to_string(),
        label,
        frames,
        truth: Some(truth_label.clone()),
    };
    (
        trip,
        SynthTruth {
            level,
            label: truth_label,
        },
    )
}

/// Generates one trip with a length drawn uniformly from the configured range.
pub fn generate_trip<R: Rng + ?Sized>(rng: &mut R, id: &str, label: TripLabel, config: &SynthConfig) -> Trip {
    let (lo, hi) = config.trip_len_range;
    let n = rng.random_range(lo..=hi);
    generate_trip_with_truth(rng, id, label, n, config).0
}

pub fn trip_id(label: TripLabel, index: usize) -> String {
    format!("{}_{index:03}", label.as_str())
}

/// Builds every trip in memory. Each trip draws from its own generator
/// seeded by the master stream, drowsy trips first.
pub fn generate_trips(config: &SynthConfig) -> Result<Dataset, SynthError> {
    config.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let plan: Vec<(TripLabel, usize)> = (0..config.n_drowsy)
        .map(|i| (TripLabel::Drowsy, i))
        .chain((0..config.n_normal).map(|i| (TripLabel::Normal, i)))
        .collect();
    let seeds: Vec<u64> = plan.iter().map(|_| master.next_u64()).collect();
    let trips = plan
        .iter()
        .zip(seeds)
        .map(|(&(label, i), s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            generate_trip(&mut rng, &trip_id(label, i), label, config)
        })
        .collect();
    Dataset::new(trips).map_err(|e| SynthError::InvalidConfig(e.to_string()))
}

/// Writes `trips/<id>.csv`, `manifest.csv` and `synth-config.txt` under
/// `out` and returns the dataset.
pub fn generate_dataset(config: &SynthConfig, out: &Path) -> Result<Dataset, SynthError> {
    let dataset = generate_trips(config)?;
    fs::create_dir_all(out.join("trips"))?;
    let mut entries = Vec::with_capacity(dataset.len());
    for trip in dataset.trips() {
        let rel = format!("trips/{}.csv", trip.id);
        write_trip_file(trip, &out.join(&rel))?;
        entries.push((rel, trip.label));
    }
    let mut manifest = io::BufWriter::new(fs::File::create(out.join("manifest.csv"))?);
    write_manifest(&entries, &mut manifest)?;
    manifest.flush()?;
    fs::write(out.join("synth-config.txt"), config.echo())?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate_trip;

    fn small(n_drowsy: usize, n_normal: usize, len: usize) -> SynthConfig {
        SynthConfig {
            n_drowsy,
            n_normal,
            trip_len_range: (len, len),
            ..Default::default()
        }
    }

    #[test]
    fn normal_truth_all_false() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (trip, truth) = generate_trip_with_truth(&mut rng, "n", TripLabel::Normal, 200, &SynthConfig::default());
        assert!(trip.truth.unwrap().iter().all(|&b| !b));
        assert!(truth.level.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn drowsy_truth_splits_in_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (trip, truth) = generate_trip_with_truth(&mut rng, "d", TripLabel::Drowsy, 600, &SynthConfig::default());
        let t = trip.truth.unwrap();
        assert!(t[..300].iter().all(|&b| !b));
        assert!(t[300..].iter().all(|&b| b));
        assert!(truth.level.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fixed_length_and_valid() {
        let ds = generate_trips(&small(2, 3, 300)).unwrap();
        assert_eq!(ds.len(), 5);
        for t in ds.trips() {
            assert_eq!(t.frames.len(), 300);
            assert!(validate_trip(t).is_empty(), "{:?}", validate_trip(t));
        }
    }

    #[test]
    fn no_drowsy_trips() {
        let ds = generate_trips(&small(0, 4, 50)).unwrap();
        assert_eq!(ds.n_drowsy(), 0);
        assert_eq!(ds.n_normal(), 4);
    }

    #[test]
    fn config_validation() {
        let mut c = SynthConfig::default();
        c.trip_len_range = (10, 5);
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.truth_threshold = 1.0;
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.drift_amplitude = -0.1;
        assert!(c.validate().is_err());
    }
}
