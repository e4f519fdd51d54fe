//! C bindings for the evaluation engine.
//!
//! Objects cross the boundary as opaque handles created by `ale_*_new`-style
//! constructors and released with the matching `ale_*_free`. Every fallible
//! call returns an [`AleStatus`]; on failure a message is kept per thread
//! and can be read with [`ale_last_error_message`].
//!
//! Strings are NUL-terminated UTF-8. Strings returned through out-pointers
//! are owned by the caller and released with [`ale_string_free`]; strings
//! returned directly borrow from their handle and live as long as it does.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ale_core::ahp::{self, AhpError, PairwiseMatrix, WeightVector};
use ale_core::io::{self, SnapshotFormat};
use ale_core::pipeline::{self, ScoreRequest};
use ale_core::scoring::{self, ScoredRanking, Snapshot, YearMonth};
use chrono::NaiveDate;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InvalidMatrix = 4,
    ParseError = 5,
    DomainError = 6,
    OutOfRange = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AleFormat {
    Csv = 0,
    AlmJson = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AleConsistency {
    pub lambda_max: f64,
    pub ci: f64,
    pub cr: f64,
    pub ri: f64,
    pub iterations: u32,
    pub converged: bool,
    /// `cr` is at or below the warning threshold.
    pub acceptable: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AleRankedRow {
    pub rank: u32,
    pub score: f64,
}

pub struct AleMatrix(PairwiseMatrix);

pub struct AleWeights {
    inner: WeightVector,
    labels: Vec<CString>,
}

pub struct AleSnapshot(Snapshot);

pub struct AleRanking {
    inner: ScoredRanking,
    dois: Vec<CString>,
}

impl AleWeights {
    fn new(inner: WeightVector) -> Self {
        let labels = inner.labels().iter().map(|l| cstring(l)).collect();
        Self { inner, labels }
    }
}

impl AleRanking {
    fn new(inner: ScoredRanking) -> Self {
        let dois = inner.rows.iter().map(|r| cstring(&r.doi)).collect();
        Self { inner, dois }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn cstring(s: &str) -> CString {
    CString::new(s.replace('\0', " ")).expect("interior NULs removed")
}

fn set_error(msg: impl std::fmt::Display) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(cstring(&msg.to_string())));
}

struct Failure(AleStatus, String);

impl From<AhpError> for Failure {
    fn from(e: AhpError) -> Self {
        let status = match e {
            AhpError::Invalid(_) => AleStatus::InvalidMatrix,
            AhpError::UnknownPhase(_) => AleStatus::OutOfRange,
            _ => AleStatus::DomainError,
        };
        Failure(status, e.to_string())
    }
}

impl From<ale_core::Error> for Failure {
    fn from(e: ale_core::Error) -> Self {
        match e {
            ale_core::Error::Ahp(e) => e.into(),
            ale_core::Error::Pipeline(e) => Failure(AleStatus::ParseError, e.to_string()),
            ale_core::Error::Request(m) => Failure(AleStatus::InvalidArgument, m),
            other => Failure(AleStatus::DomainError, other.to_string()),
        }
    }
}

impl From<io::PipelineError> for Failure {
    fn from(e: io::PipelineError) -> Self {
        Failure(AleStatus::ParseError, e.to_string())
    }
}

impl From<scoring::ScoringError> for Failure {
    fn from(e: scoring::ScoringError) -> Self {
        Failure(AleStatus::DomainError, e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AleStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AleStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AleStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(AleStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AleStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn into_handle<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Engine version; static storage.
#[no_mangle]
pub extern "C" fn ale_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message for the most recent failure on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ale_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ale_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a matrix document (`n`, `labels`, and `upper` or `full`). Scale
/// and reciprocity are checked by [`ale_weights_compute`].
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_matrix` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ale_matrix_from_json(json: *const c_char, out_matrix: *mut *mut AleMatrix) -> AleStatus {
    guard(|| {
        let slot = out(out_matrix, "out_matrix")?;
        let m: PairwiseMatrix = str_arg(json, "json")?.parse()?;
        *slot = into_handle(AleMatrix(m));
        Ok(())
    })
}

/// Builds an `n`×`n` matrix from its `n(n-1)/2` upper-triangle judgments,
/// row-major; the lower triangle is filled with reciprocals.
///
/// # Safety
/// `labels` must hold `n` strings and `upper` `n(n-1)/2` values.
#[no_mangle]
pub unsafe extern "C" fn ale_matrix_from_upper(
    n: usize,
    labels: *const *const c_char,
    upper: *const f64,
    out_matrix: *mut *mut AleMatrix,
) -> AleStatus {
    guard(|| {
        let slot = out(out_matrix, "out_matrix")?;
        if labels.is_null() || upper.is_null() {
            return Err(null("labels or upper"));
        }
        let names = std::slice::from_raw_parts(labels, n)
            .iter()
            .map(|&p| str_arg(p, "label").map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        let values = std::slice::from_raw_parts(upper, n * n.saturating_sub(1) / 2);
        let m = PairwiseMatrix::from_upper(names, values)?;
        *slot = into_handle(AleMatrix(m));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ale_matrix_free(m: *mut AleMatrix) {
    free_handle(m)
}

/// Principal-eigenvector weights and consistency. `out_consistency` may be
/// null.
///
/// # Safety
/// `m` must be a live matrix handle; `out_weights` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ale_weights_compute(
    m: *const AleMatrix,
    out_weights: *mut *mut AleWeights,
    out_consistency: *mut AleConsistency,
) -> AleStatus {
    guard(|| {
        let m = handle(m, "matrix")?;
        let slot = out(out_weights, "out_weights")?;
        let report = ahp::validate_matrix(&m.0)?;
        if !report.ok {
            return Err(AhpError::Invalid(report).into());
        }
        let (weights, c) = ahp::evaluate(&m.0)?;
        if let Some(dst) = out_consistency.as_mut() {
            *dst = AleConsistency {
                lambda_max: c.lambda_max,
                ci: c.ci,
                cr: c.cr,
                ri: c.ri,
                iterations: c.iterations as u32,
                converged: c.converged,
                acceptable: c.is_acceptable(),
            };
        }
        *slot = into_handle(AleWeights::new(weights));
        Ok(())
    })
}

/// Shipped weights for phase 1 to 4.
///
/// # Safety
/// `out_weights` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ale_weights_preset(phase: u8, out_weights: *mut *mut AleWeights) -> AleStatus {
    guard(|| {
        let slot = out(out_weights, "out_weights")?;
        *slot = into_handle(AleWeights::new(ahp::preset_weights(phase)?));
        Ok(())
    })
}

/// # Safety
/// `w` must be null or a live weights handle.
#[no_mangle]
pub unsafe extern "C" fn ale_weights_len(w: *const AleWeights) -> usize {
    w.as_ref().map_or(0, |w| w.inner.len())
}

/// # Safety
/// `w` must be a live weights handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ale_weights_get(w: *const AleWeights, index: usize, out_value: *mut f64) -> AleStatus {
    guard(|| {
        let w = handle(w, "weights")?;
        let slot = out(out_value, "out_value")?;
        *slot = *w
            .inner
            .values()
            .get(index)
            .ok_or_else(|| Failure(AleStatus::OutOfRange, format!("index {index} out of range")))?;
        Ok(())
    })
}

/// Criterion label at `index`, or null when out of range. Borrowed from `w`.
///
/// # Safety
/// `w` must be null or a live weights handle.
#[no_mangle]
pub unsafe extern "C" fn ale_weights_label(w: *const AleWeights, index: usize) -> *const c_char {
    w.as_ref()
        .and_then(|w| w.labels.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// # Safety
/// `w` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ale_weights_free(w: *mut AleWeights) {
    free_handle(w)
}

/// Parses snapshot text in the given format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out_snapshot` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ale_snapshot_parse(
    text: *const c_char,
    format: AleFormat,
    out_snapshot: *mut *mut AleSnapshot,
) -> AleStatus {
    guard(|| {
        let slot = out(out_snapshot, "out_snapshot")?;
        let format = match format {
            AleFormat::Csv => SnapshotFormat::Csv,
            AleFormat::AlmJson => SnapshotFormat::AlmJson,
        };
        let s = io::parse_snapshot_str(str_arg(text, "text")?, format)?;
        *slot = into_handle(AleSnapshot(s));
        Ok(())
    })
}

/// Reads a `.csv` or `.json` snapshot file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_snapshot` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ale_snapshot_load(path: *const c_char, out_snapshot: *mut *mut AleSnapshot) -> AleStatus {
    guard(|| {
        let slot = out(out_snapshot, "out_snapshot")?;
        let s = io::parse_snapshot(std::path::Path::new(str_arg(path, "path")?), None)?;
        *slot = into_handle(AleSnapshot(s));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a live snapshot handle.
#[no_mangle]
pub unsafe extern "C" fn ale_snapshot_len(s: *const AleSnapshot) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `s` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ale_snapshot_free(s: *mut AleSnapshot) {
    free_handle(s)
}

/// Scores a snapshot.
///
/// Give either `as_of` (`YYYY-MM-DD`, phase derived from the articles'
/// publication month) or a `phase` from 1 to 4; pass null and 0 to score at
/// the snapshot's own date. `matrix` may be null to use the shipped weights.
///
/// # Safety
/// `snapshot` must be live; `matrix` null or live; `out_ranking` writable.
#[no_mangle]
pub unsafe extern "C" fn ale_score(
    snapshot: *const AleSnapshot,
    as_of: *const c_char,
    phase: u8,
    matrix: *const AleMatrix,
    out_ranking: *mut *mut AleRanking,
) -> AleStatus {
    guard(|| {
        let s = handle(snapshot, "snapshot")?;
        let slot = out(out_ranking, "out_ranking")?;
        let as_of = if as_of.is_null() {
            None
        } else {
            let text = str_arg(as_of, "as_of")?;
            Some(
                text.parse::<NaiveDate>()
                    .map_err(|_| Failure(AleStatus::InvalidArgument, format!("as_of {text:?} is not YYYY-MM-DD")))?,
            )
        };
        let request = ScoreRequest {
            as_of,
            phase: (phase != 0).then_some(phase),
            matrix_override: matrix.as_ref().map(|m| m.0.clone()),
            ..Default::default()
        };
        let ranking = pipeline::score(&s.0, &request)?;
        *slot = into_handle(AleRanking::new(ranking));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live ranking handle.
#[no_mangle]
pub unsafe extern "C" fn ale_ranking_len(r: *const AleRanking) -> usize {
    r.as_ref().map_or(0, |r| r.inner.len())
}

/// Phase used for scoring, or 0 when none was recorded.
///
/// # Safety
/// `r` must be null or a live ranking handle.
#[no_mangle]
pub unsafe extern "C" fn ale_ranking_phase(r: *const AleRanking) -> u8 {
    r.as_ref().and_then(|r| r.inner.phase).unwrap_or(0)
}

/// Row `index` in rank order.
///
/// # Safety
/// `r` must be a live ranking handle; `out_row` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ale_ranking_row(r: *const AleRanking, index: usize, out_row: *mut AleRankedRow) -> AleStatus {
    guard(|| {
        let r = handle(r, "ranking")?;
        let slot = out(out_row, "out_row")?;
        let row = r
            .inner
            .rows
            .get(index)
            .ok_or_else(|| Failure(AleStatus::OutOfRange, format!("index {index} out of range")))?;
        *slot = AleRankedRow {
            rank: row.rank as u32,
            score: row.score,
        };
        Ok(())
    })
}

/// DOI of row `index`, or null when out of range. Borrowed from `r`.
///
/// # Safety
/// `r` must be null or a live ranking handle.
#[no_mangle]
pub unsafe extern "C" fn ale_ranking_doi(r: *const AleRanking, index: usize) -> *const c_char {
    r.as_ref()
        .and_then(|r| r.dois.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// The full ranking as JSON, the same shape the CLI and service emit.
/// Release with `ale_string_free`.
///
/// # Safety
/// `r` must be a live ranking handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ale_ranking_to_json(r: *const AleRanking, out_json: *mut *mut c_char) -> AleStatus {
    guard(|| {
        let r = handle(r, "ranking")?;
        let slot = out(out_json, "out_json")?;
        let text = serde_json::to_string(&r.inner).map_err(|e| Failure(AleStatus::DomainError, e.to_string()))?;
        *slot = cstring(&text).into_raw();
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ale_ranking_free(r: *mut AleRanking) {
    free_handle(r)
}

/// Min-max normalizes `len` values from `values` into `out_values`; a
/// constant column maps to zeros.
///
/// # Safety
/// `values` and `out_values` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ale_normalize_column(values: *const f64, len: usize, out_values: *mut f64) -> AleStatus {
    guard(|| {
        if values.is_null() || out_values.is_null() {
            return Err(null("values or out_values"));
        }
        let input = std::slice::from_raw_parts(values, len);
        let normalized = scoring::normalize_column(input)?;
        std::slice::from_raw_parts_mut(out_values, len).copy_from_slice(&normalized);
        Ok(())
    })
}

/// Phase (1 to 4) of an article published in `year`-`month` as of the
/// `YYYY-MM-DD` date, under the default schedule.
///
/// # Safety
/// `as_of` must be a NUL-terminated string; `out_phase` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ale_determine_phase(year: i32, month: u32, as_of: *const c_char, out_phase: *mut u8) -> AleStatus {
    guard(|| {
        let slot = out(out_phase, "out_phase")?;
        let text = str_arg(as_of, "as_of")?;
        let date: NaiveDate = text
            .parse()
            .map_err(|_| Failure(AleStatus::InvalidArgument, format!("as_of {text:?} is not YYYY-MM-DD")))?;
        let month = YearMonth::new(year, month)?;
        *slot = scoring::determine_phase(month, date, &scoring::PhaseSchedule::default())?;
        Ok(())
    })
}
