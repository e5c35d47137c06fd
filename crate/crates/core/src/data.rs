//! Trips, weak labels and the on-disk trip / manifest formats.
//!
//! A trip file is a CSV with header `t,ax,ay,az,speed,direction` and an
//! optional trailing `truth` column (0/1). A manifest lists one
//! `<relative-path>,<drowsy|normal>` entry per line; paths are resolved
//! relative to the manifest's directory and `#` lines are comments.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

pub const TRIP_COLUMNS: [&str; 6] = ["t", "ax", "ay", "az", "speed", "direction"];
pub const TRUTH_COLUMN: &str = "truth";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: line {line}: malformed row: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("{path}: line {line}: timestamp {t} does not increase")]
    NonMonotoneTime { path: PathBuf, line: u64, t: f64 },
    #[error("{path}: trip has no frames")]
    EmptyTrip { path: PathBuf },
    #[error("{path}: header must be `t,ax,ay,az,speed,direction[,truth]`, found `{found}`")]
    BadHeader { path: PathBuf, found: String },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("duplicate trip id `{0}`")]
    DuplicateTripId(String),
    #[error("{path}: line {line}: unknown label `{token}` (expected drowsy or normal)")]
    UnknownLabelToken {
        path: PathBuf,
        line: usize,
        token: String,
    },
    #[error("trip `{id}` is invalid: {violation}")]
    InvalidTrip { id: String, violation: Violation },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One row of 1 Hz telemetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    /// Seconds since trip start.
    pub t: f64,
    /// Longitudinal acceleration, m/s².
    pub ax: f64,
    /// Lateral acceleration, m/s².
    pub ay: f64,
    /// Vertical acceleration, m/s².
    pub az: f64,
    /// m/s, non-negative.
    pub speed: f64,
    /// Heading in degrees, `[0, 360)`.
    pub direction: f64,
}

impl SensorFrame {
    pub fn new(t: f64, ax: f64, ay: f64, az: f64, speed: f64, direction: f64) -> Self {
        Self {
            t,
            ax,
            ay,
            az,
            speed,
            direction,
        }
    }

    fn values(&self) -> [f64; 6] {
        [self.t, self.ax, self.ay, self.az, self.speed, self.direction]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TripLabel {
    Drowsy,
    Normal,
}

impl TripLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            TripLabel::Drowsy => "drowsy",
            TripLabel::Normal => "normal",
        }
    }

    pub fn is_drowsy(&self) -> bool {
        matches!(self, TripLabel::Drowsy)
    }
}

impl fmt::Display for TripLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TripLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "drowsy" => Ok(TripLabel::Drowsy),
            "normal" => Ok(TripLabel::Normal),
            other => Err(other.to_string()),
        }
    }
}

/// A weakly labeled trip. `truth` carries per-frame drowsiness and only
/// exists for synthetic data.
#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub id: String,
    pub label: TripLabel,
    pub frames: Vec<SensorFrame>,
    pub truth: Option<Vec<bool>>,
}

impl Trip {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    NonEmpty,
    Finite,
    SpeedNonNegative,
    DirectionRange,
    StrictlyIncreasingTime,
    TruthLength,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::NonEmpty => "frames non-empty",
            Rule::Finite => "all values finite",
            Rule::SpeedNonNegative => "speed >= 0",
            Rule::DirectionRange => "direction in [0, 360)",
            Rule::StrictlyIncreasingTime => "timestamps strictly increasing",
            Rule::TruthLength => "one truth entry per frame",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    /// Offending frame, when the rule is frame-local.
    pub frame: Option<usize>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frame {
            Some(k) => write!(f, "frame {k}: {}", self.rule),
            None => write!(f, "{}", self.rule),
        }
    }
}

/// Checks every trip invariant; an empty result means the trip is valid.
pub fn validate_trip(trip: &Trip) -> Vec<Violation> {
    let mut out = Vec::new();
    if trip.frames.is_empty() {
        out.push(Violation {
            frame: None,
            rule: Rule::NonEmpty,
        });
    }
    for (k, fr) in trip.frames.iter().enumerate() {
        let at = |rule| Violation {
            frame: Some(k),
            rule,
        };
        if fr.values().iter().any(|v| !v.is_finite()) {
            out.push(at(Rule::Finite));
            continue;
        }
        if fr.speed < 0.0 {
            out.push(at(Rule::SpeedNonNegative));
        }
        if !(0.0..360.0).contains(&fr.direction) {
            out.push(at(Rule::DirectionRange));
        }
        if k > 0 && fr.t <= trip.frames[k - 1].t {
            out.push(at(Rule::StrictlyIncreasingTime));
        }
    }
    if let Some(truth) = &trip.truth {
        if truth.len() != trip.frames.len() {
            out.push(Violation {
                frame: None,
                rule: Rule::TruthLength,
            });
        }
    }
    out
}

fn trip_id_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Parses one trip CSV. The trip id is the file stem.
pub fn parse_trip_csv(path: &Path, label: TripLabel) -> Result<Trip, DataError> {
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => DataError::MissingFile(path.to_path_buf()),
        _ => DataError::Io(e),
    })?;
    let mut trip = read_trip_csv(file, path)?;
    trip.id = trip_id_from_path(path);
    trip.label = label;
    Ok(trip)
}

/// Parses trip CSV content from any reader; `origin` is only used in errors.
/// The returned trip has an empty id and a `Normal` label.
pub fn read_trip_csv<R: io::Read>(reader: R, origin: &Path) -> Result<Trip, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let malformed = |line: u64, reason: String| DataError::MalformedRow {
        path: origin.to_path_buf(),
        line,
        reason,
    };

    let header = rdr.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let has_truth = match names.as_slice() {
        [] | [""] => {
            return Err(DataError::EmptyTrip {
                path: origin.to_path_buf(),
            })
        }
        n if n == TRIP_COLUMNS => false,
        n if n.len() == 7 && n[..6] == TRIP_COLUMNS && n[6] == TRUTH_COLUMN => true,
        _ => {
            return Err(DataError::BadHeader {
                path: origin.to_path_buf(),
                found: names.join(","),
            })
        }
    };
    let width = if has_truth { 7 } else { 6 };

    let mut frames = Vec::new();
    let mut truth = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != width {
            return Err(malformed(
                line,
                format!("expected {width} columns, found {}", record.len()),
            ));
        }
        let mut v = [0.0; 6];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = record[i]
                .parse::<f64>()
                .map_err(|_| malformed(line, format!("`{}` is not a number", &record[i])))?;
        }
        let frame = SensorFrame::new(v[0], v[1], v[2], v[3], v[4], v[5]);
        if let Some(prev) = frames.last() {
            let prev: &SensorFrame = prev;
            if frame.t <= prev.t {
                return Err(DataError::NonMonotoneTime {
                    path: origin.to_path_buf(),
                    line,
                    t: frame.t,
                });
            }
        }
        if has_truth {
            truth.push(match &record[6] {
                "0" => false,
                "1" => true,
                other => return Err(malformed(line, format!("truth `{other}` is not 0/1"))),
            });
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(DataError::EmptyTrip {
            path: origin.to_path_buf(),
        });
    }
    Ok(Trip {
        id: String::new(),
        label: TripLabel::Normal,
        frames,
        truth: has_truth.then_some(truth),
    })
}

/// Writes a trip in the trip CSV format. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_trip_csv<W: Write>(trip: &Trip, mut w: W) -> io::Result<()> {
    let mut header = TRIP_COLUMNS.join(",");
    if trip.truth.is_some() {
        header.push(',');
        header.push_str(TRUTH_COLUMN);
    }
    writeln!(w, "{header}")?;
    for (k, f) in trip.frames.iter().enumerate() {
        write!(
            w,
            "{},{},{},{},{},{}",
            f.t, f.ax, f.ay, f.az, f.speed, f.direction
        )?;
        if let Some(truth) = &trip.truth {
            write!(w, ",{}", u8::from(truth[k]))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_trip_file(trip: &Trip, path: &Path) -> io::Result<()> {
    let f = fs::File::create(path)?;
    let mut w = io::BufWriter::new(f);
    write_trip_csv(trip, &mut w)?;
    w.flush()
}

/// A collection of uniquely named trips. Label counts are derived from the
/// trips themselves and cannot drift.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    trips: Vec<Trip>,
}

impl Dataset {
    pub fn new(trips: Vec<Trip>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for t in &trips {
            if !seen.insert(t.id.as_str()) {
                return Err(DataError::DuplicateTripId(t.id.clone()));
            }
        }
        Ok(Self { trips })
    }

    pub fn trips(&self) -> &[Trip] {
        &self.trips
    }

    pub fn into_trips(self) -> Vec<Trip> {
        self.trips
    }

    pub fn len(&self) -> usize {
        self.trips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trips.is_empty()
    }

    pub fn n_drowsy(&self) -> usize {
        self.trips.iter().filter(|t| t.label.is_drowsy()).count()
    }

    pub fn n_normal(&self) -> usize {
        self.len() - self.n_drowsy()
    }

    pub fn has_truth(&self) -> bool {
        !self.trips.is_empty() && self.trips.iter().all(|t| t.truth.is_some())
    }

    pub fn get(&self, id: &str) -> Option<&Trip> {
        self.trips.iter().find(|t| t.id == id)
    }

    /// Sub-dataset holding the given ids, in dataset order.
    pub fn subset(&self, ids: &HashSet<&str>) -> Dataset {
        Dataset {
            trips: self
                .trips
                .iter()
                .filter(|t| ids.contains(t.id.as_str()))
                .cloned()
                .collect(),
        }
    }

    /// Validates every trip, failing on the first violation found.
    pub fn validate(&self) -> Result<(), DataError> {
        for t in &self.trips {
            if let Some(v) = validate_trip(t).into_iter().next() {
                return Err(DataError::InvalidTrip {
                    id: t.id.clone(),
                    violation: v,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: TripLabel,
}

/// Reads manifest entries without loading the trips.
pub fn read_manifest_entries(path: &Path) -> Result<Vec<ManifestEntry>, DataError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => DataError::MissingFile(path.to_path_buf()),
        _ => DataError::Io(e),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (file, token) = line.rsplit_once(',').ok_or_else(|| DataError::UnknownLabelToken {
            path: path.to_path_buf(),
            line: i + 1,
            token: String::new(),
        })?;
        let label = token
            .parse::<TripLabel>()
            .map_err(|token| DataError::UnknownLabelToken {
                path: path.to_path_buf(),
                line: i + 1,
                token,
            })?;
        entries.push(ManifestEntry {
            path: base.join(file.trim()),
            label,
        });
    }
    Ok(entries)
}

/// Loads every trip listed in a manifest, preserving manifest order.
pub fn parse_manifest(path: &Path) -> Result<Dataset, DataError> {
    let entries = read_manifest_entries(path)?;
    let mut seen = HashSet::new();
    let mut trips = Vec::with_capacity(entries.len());
    for e in &entries {
        let id = trip_id_from_path(&e.path);
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateTripId(id));
        }
        if !e.path.is_file() {
            return Err(DataError::MissingFile(e.path.clone()));
        }
        trips.push(parse_trip_csv(&e.path, e.label)?);
    }
    Dataset::new(trips)
}

/// Writes a manifest whose entries are paths relative to the manifest.
pub fn write_manifest<W: Write>(entries: &[(String, TripLabel)], mut w: W) -> io::Result<()> {
    for (file, label) in entries {
        writeln!(w, "{file},{label}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: f64) -> SensorFrame {
        SensorFrame::new(t, 0.1, 0.0, 9.8, 10.0, 90.0)
    }

    fn trip(frames: Vec<SensorFrame>) -> Trip {
        Trip {
            id: "a".into(),
            label: TripLabel::Normal,
            frames,
            truth: None,
        }
    }

    fn parse_str(s: &str) -> Result<Trip, DataError> {
        read_trip_csv(s.as_bytes(), Path::new("mem.csv"))
    }

    #[test]
    fn parses_two_frames() {
        let trip =
            parse_str("t,ax,ay,az,speed,direction\n0,0.1,0.0,9.8,10.0,90.0\n1,0.2,0.0,9.8,10.5,90.0")
                .unwrap();
        assert_eq!(trip.frames.len(), 2);
        assert_eq!(trip.frames[0].t, 0.0);
        assert_eq!(trip.frames[1].t, 1.0);
        assert_eq!(trip.frames[1].ax, 0.2);
        assert_eq!(trip.frames[1].speed, 10.5);
        assert!(trip.truth.is_none());
    }

    #[test]
    fn repeated_timestamp_reports_line() {
        let err = parse_str(
            "t,ax,ay,az,speed,direction\n0,0,0,9.8,1,0\n1,0,0,9.8,1,0\n1,0,0,9.8,1,0\n",
        )
        .unwrap_err();
        match err {
            DataError::NonMonotoneTime { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn empty_body_is_empty_trip() {
        assert!(matches!(
            parse_str("t,ax,ay,az,speed,direction\n"),
            Err(DataError::EmptyTrip { .. })
        ));
        assert!(matches!(parse_str(""), Err(DataError::EmptyTrip { .. })));
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(
            parse_str("t,ax,ay,az,speed,direction\n0,1,2\n"),
            Err(DataError::MalformedRow { line: 2, .. })
        ));
        assert!(matches!(
            parse_str("t,ax,ay,az,speed,direction\n0,x,0,0,0,0\n"),
            Err(DataError::MalformedRow { line: 2, .. })
        ));
        assert!(matches!(
            parse_str("t,ax,ay,az,speed,direction,truth\n0,0,0,0,0,0,2\n"),
            Err(DataError::MalformedRow { .. })
        ));
        assert!(matches!(
            parse_str("time,ax,ay,az,speed,direction\n0,0,0,0,0,0\n"),
            Err(DataError::BadHeader { .. })
        ));
    }

    #[test]
    fn truth_column() {
        let trip = parse_str("t,ax,ay,az,speed,direction,truth\n0,0,0,9.8,1,0,0\n1,0,0,9.8,1,0,1\n")
            .unwrap();
        assert_eq!(trip.truth, Some(vec![false, true]));
    }

    #[test]
    fn write_then_read_is_exact() {
        let mut t = trip(vec![
            SensorFrame::new(0.0, 0.1 + 0.2, -1e-17, 9.80665, 13.333333333333334, 359.99),
            SensorFrame::new(1.5, f64::MIN_POSITIVE, 2.0, 9.8, 0.0, 0.0),
        ]);
        t.truth = Some(vec![false, true]);
        let mut buf = Vec::new();
        write_trip_csv(&t, &mut buf).unwrap();
        let back = read_trip_csv(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back.frames, t.frames);
        assert_eq!(back.truth, t.truth);
    }

    #[test]
    fn validate_well_formed() {
        let t = trip(vec![frame(0.0), frame(1.0), frame(2.0)]);
        assert!(validate_trip(&t).is_empty());
    }

    #[test]
    fn validate_negative_speed() {
        let mut t = trip(vec![frame(0.0), frame(1.0), frame(2.0)]);
        t.frames[1].speed = -1.0;
        assert_eq!(
            validate_trip(&t),
            vec![Violation {
                frame: Some(1),
                rule: Rule::SpeedNonNegative
            }]
        );
    }

    #[test]
    fn validate_direction_360() {
        let mut t = trip(vec![frame(0.0), frame(1.0)]);
        t.frames[0].direction = 360.0;
        assert_eq!(
            validate_trip(&t),
            vec![Violation {
                frame: Some(0),
                rule: Rule::DirectionRange
            }]
        );
    }

    #[test]
    fn validate_other_rules() {
        let mut t = trip(vec![frame(0.0), frame(0.0)]);
        t.frames[0].ax = f64::NAN;
        t.truth = Some(vec![true]);
        let v = validate_trip(&t);
        assert!(v.contains(&Violation {
            frame: Some(0),
            rule: Rule::Finite
        }));
        assert!(v.contains(&Violation {
            frame: Some(1),
            rule: Rule::StrictlyIncreasingTime
        }));
        assert!(v.contains(&Violation {
            frame: None,
            rule: Rule::TruthLength
        }));
        assert_eq!(
            validate_trip(&trip(vec![])),
            vec![Violation {
                frame: None,
                rule: Rule::NonEmpty
            }]
        );
    }

    #[test]
    fn dataset_rejects_duplicate_ids() {
        let a = trip(vec![frame(0.0)]);
        assert!(matches!(
            Dataset::new(vec![a.clone(), a]),
            Err(DataError::DuplicateTripId(_))
        ));
    }

    #[test]
    fn label_tokens() {
        assert_eq!("drowsy".parse::<TripLabel>(), Ok(TripLabel::Drowsy));
        assert_eq!(" normal ".parse::<TripLabel>(), Ok(TripLabel::Normal));
        assert!("sleepy".parse::<TripLabel>().is_err());
    }
}
