//! C ABI over the drowsyrank scorer.
//!
//! Every fallible call returns a [`DrStatus`]; on failure a description is
//! kept per thread and can be copied out with [`dr_last_error_message`].
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use drowsyrank::data::{validate_trip, SensorFrame, Trip, TripLabel};
use drowsyrank::eval::{roc_auc, EvalError};
use drowsyrank::features::FeatureError;
use drowsyrank::pipeline::{read_pipeline, FeaturePipeline};
use drowsyrank::ranker::{self, read_model, LinearModel, RankerError};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    DimensionMismatch = 5,
    InvalidArgument = 6,
    BufferTooSmall = 7,
    IndexOutOfRange = 8,
    Panic = 9,
}

/// One sensor sample. `direction` is a heading in degrees, `[0, 360)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrFrame {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub speed: f64,
    pub direction: f64,
}

/// A linear model over already-standardized feature vectors.
pub struct DrModel {
    model: LinearModel,
}

/// A model together with the feature pipeline it was trained with; scores
/// raw frames.
pub struct DrScorer {
    model: LinearModel,
    pipeline: FeaturePipeline,
}

type Failure = (DrStatus, String);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DrStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (DrStatus::Ok, String::new()),
        Ok(Err(e)) => e,
        Err(_) => (DrStatus::Panic, "internal panic".to_string()),
    };
    set_last_error(&msg);
    status
}

fn null(what: &str) -> Failure {
    (DrStatus::NullPointer, format!("{what} is null"))
}

fn ranker_failure(e: RankerError) -> Failure {
    let status = match &e {
        RankerError::DimensionMismatch { .. } => DrStatus::DimensionMismatch,
        RankerError::Format { .. } => DrStatus::Format,
        RankerError::Io(_) => DrStatus::Io,
        _ => DrStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn feature_failure(e: FeatureError) -> Failure {
    let status = match &e {
        FeatureError::DimensionMismatch { .. } => DrStatus::DimensionMismatch,
        _ => DrStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn eval_failure(e: EvalError) -> Failure {
    (DrStatus::InvalidArgument, e.to_string())
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| (DrStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn open(path: &PathBuf) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| (DrStatus::Io, format!("opening {}: {e}", path.display())))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the buffer size needed for the
/// whole message, terminator included. The message is empty after a
/// successful call.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = (bytes.len() - 1).min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model file written by `drowsyrank train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dr_model_load(path: *const c_char, out: *mut *mut DrModel) -> DrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = path_arg(path, "path")?;
        let model = read_model(open(&path)?).map_err(ranker_failure)?;
        *out = Box::into_raw(Box::new(DrModel { model }));
        Ok(())
    })
}

/// Builds a model from `dim` weights; features are named `f0`, `f1`, ...
///
/// # Safety
/// `theta` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dr_model_from_weights(theta: *const f64, dim: usize, out: *mut *mut DrModel) -> DrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let theta = slice_arg(theta, dim, "theta")?;
        if dim == 0 {
            return Err((DrStatus::InvalidArgument, "a model needs at least one weight".into()));
        }
        if let Some(w) = theta.iter().find(|w| !w.is_finite()) {
            return Err((DrStatus::InvalidArgument, format!("weight {w} is not finite")));
        }
        let mut model = LinearModel::zeros((0..dim).map(|i| format!("f{i}")).collect(), 0.0);
        model.theta.copy_from_slice(theta);
        *out = Box::into_raw(Box::new(DrModel { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dr_model_free(model: *mut DrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of weights; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dr_model_dim(model: *const DrModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.dim())
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dr_model_weight(model: *const DrModel, index: usize, out: *mut f64) -> DrStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.model;
        let out = out_arg(out, "out")?;
        *out = *m.theta.get(index).ok_or_else(|| out_of_range(index, m.dim()))?;
        Ok(())
    })
}

fn out_of_range(index: usize, dim: usize) -> Failure {
    (DrStatus::IndexOutOfRange, format!("index {index} out of range for {dim} features"))
}

/// Copies the name of feature `index` into `buf` as a NUL-terminated
/// string. `needed` (optional) receives the size required; when `len` is
/// smaller nothing is written and `DR_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `model` must be a live handle; `buf` must point to `len` writable bytes;
/// `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn dr_model_feature_name(
    model: *const DrModel,
    index: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> DrStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.model;
        let name = m.feature_names.get(index).ok_or_else(|| out_of_range(index, m.dim()))?;
        let size = name.len() + 1;
        if let Some(n) = needed.as_mut() {
            *n = size;
        }
        if len < size {
            return Err((DrStatus::BufferTooSmall, format!("feature name needs {size} bytes, got {len}")));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(name.as_ptr().cast::<c_char>(), buf, name.len());
        *buf.add(name.len()) = 0;
        Ok(())
    })
}

/// `θᵀx` for one standardized feature vector of length `len`.
///
/// # Safety
/// `model` must be a live handle; `x` must point to `len` doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn dr_model_score(model: *const DrModel, x: *const f64, len: usize, out: *mut f64) -> DrStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.model;
        let x = slice_arg(x, len, "x")?;
        *out_arg(out, "out")? = ranker::score(m, x).map_err(ranker_failure)?;
        Ok(())
    })
}

/// Hinge loss of one ordered pair (without the penalty term). Equal
/// timestamps are rejected.
///
/// # Safety
/// `model` must be a live handle; `x_t` and `x_u` must point to `len`
/// doubles each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dr_pair_loss(
    model: *const DrModel,
    x_t: *const f64,
    t: f64,
    x_u: *const f64,
    u: f64,
    len: usize,
    out: *mut f64,
) -> DrStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.model;
        let x_t = slice_arg(x_t, len, "x_t")?;
        let x_u = slice_arg(x_u, len, "x_u")?;
        *out_arg(out, "out")? = ranker::pair_loss(m, x_t, t, x_u, u).map_err(ranker_failure)?;
        Ok(())
    })
}

/// Area under the ROC curve of `n` scores against 0/1 labels (any nonzero
/// byte is positive). Ties earn half credit.
///
/// # Safety
/// `scores` and `labels` must point to `n` elements each; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn dr_roc_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> DrStatus {
    guard(|| {
        let scores = slice_arg(scores, n, "scores")?;
        let labels: Vec<bool> = slice_arg(labels, n, "labels")?.iter().map(|&b| b != 0).collect();
        *out_arg(out, "out")? = roc_auc(scores, &labels).map_err(eval_failure)?.auc;
        Ok(())
    })
}

/// Loads a model and the pipeline file saved next to it by `drowsyrank
/// train`.
///
/// # Safety
/// Both paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dr_scorer_load(
    model_path: *const c_char,
    pipeline_path: *const c_char,
    out: *mut *mut DrScorer,
) -> DrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let mp = path_arg(model_path, "model_path")?;
        let pp = path_arg(pipeline_path, "pipeline_path")?;
        let model = read_model(open(&mp)?).map_err(ranker_failure)?;
        let pipeline = read_pipeline(open(&pp)?).map_err(ranker_failure)?;
        if pipeline.dim() != model.dim() {
            return Err((
                DrStatus::DimensionMismatch,
                format!("pipeline produces {} features, model has {}", pipeline.dim(), model.dim()),
            ));
        }
        *out = Box::into_raw(Box::new(DrScorer { model, pipeline }));
        Ok(())
    })
}

/// # Safety
/// `scorer` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dr_scorer_free(scorer: *mut DrScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}

/// Feature dimension; 0 for a null handle.
///
/// # Safety
/// `scorer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dr_scorer_dim(scorer: *const DrScorer) -> usize {
    scorer.as_ref().map_or(0, |s| s.model.dim())
}

/// Scores a trip of `n >= 2` frames. The first frame has no predecessor,
/// so `n - 1` scores are written to `out` (for frames 1..n); `out_len` must
/// be at least `n - 1`.
///
/// # Safety
/// `scorer` must be a live handle; `frames` must point to `n` frames; `out`
/// must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dr_scorer_score_trip(
    scorer: *const DrScorer,
    frames: *const DrFrame,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> DrStatus {
    guard(|| {
        let s = scorer.as_ref().ok_or_else(|| null("scorer"))?;
        let frames = slice_arg(frames, n, "frames")?;
        if n < 2 {
            return Err((DrStatus::InvalidArgument, "a trip needs at least 2 frames".into()));
        }
        if out_len < n - 1 {
            return Err((DrStatus::BufferTooSmall, format!("need {} output slots, got {out_len}", n - 1)));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let trip = Trip {
            id: "ffi".into(),
            label: TripLabel::Normal,
            frames: frames
                .iter()
                .map(|f| SensorFrame::new(f.t, f.ax, f.ay, f.az, f.speed, f.direction))
                .collect(),
            truth: None,
        };
        if let Some(v) = validate_trip(&trip).first() {
            return Err((DrStatus::InvalidArgument, format!("invalid trip: {v}")));
        }
        let feats = s.pipeline.transform(&trip).map_err(feature_failure)?;
        let out = slice::from_raw_parts_mut(out, n - 1);
        for (o, x) in out.iter_mut().zip(&feats.vectors) {
            *o = ranker::score(&s.model, x).map_err(ranker_failure)?;
        }
        Ok(())
    })
}
