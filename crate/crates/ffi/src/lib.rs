//! C ABI over `mmi-lab`.
//!
//! Every fallible call returns an [`MmiStatus`]; on failure the message is
//! kept per thread and can be fetched with [`mmi_last_error_message`].
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `_free` function. Mode indices are 0-based; pair tables
//! are written in `(0,0), (0,1), ..., (n-1,n-1)` order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mmi_lab::mmi::{coincidence_classical, coincidence_quantum, Normalization, TransferMatrix};
use mmi_lab::stats::{
    hpd_interval, poisson_mc_similarity, random_baseline, similarity, BaselineReference,
    BaselineSampling, SimilarityResult,
};
use mmi_lab::tagstream::{extract_coincidences, PairingOptions, TimeTagStream};
use mmi_lab::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    IndexOutOfRange = 3,
    InvalidMatrix = 4,
    Format = 5,
    Data = 6,
    BufferTooSmall = 7,
    Io = 8,
    Panic = 9,
}

/// Which coincidence table to compute (passed as `uint32_t`).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmiTable {
    Quantum = 0,
    Classical = 1,
    /// `V * Quantum + (1 - V) * Classical`.
    Mixture = 2,
}

/// How random distributions are drawn (passed as `uint32_t`).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmiSampling {
    Simplex = 0,
    Cube = 1,
}

/// Summary of a Monte-Carlo similarity distribution. `raw` is NaN when the
/// input has no unresampled similarity.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MmiSimilarity {
    pub mode: f64,
    pub hpd_low: f64,
    pub hpd_high: f64,
    pub mean: f64,
    pub raw: f64,
    pub n_trials: u64,
}

pub struct MmiMatrix(TransferMatrix);

pub struct MmiStream(TimeTagStream);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> MmiStatus {
    match err {
        Error::IndexOutOfRange { .. } => MmiStatus::IndexOutOfRange,
        Error::InvalidMatrix(_) => MmiStatus::InvalidMatrix,
        Error::Format(_) | Error::NonMonotonic { .. } | Error::Json(_) => MmiStatus::Format,
        Error::Io(_) => MmiStatus::Io,
        Error::SameInput(_)
        | Error::InvalidParameter { .. }
        | Error::LengthMismatch(..)
        | Error::Config(_) => MmiStatus::InvalidArgument,
        _ => MmiStatus::Data,
    }
}

struct Failure(MmiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: MmiStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, recording its error and containing panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MmiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MmiStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MmiStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(MmiStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out_ref<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut()
        .ok_or_else(|| fail(MmiStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref()
        .ok_or_else(|| fail(MmiStatus::NullPointer, format!("{name} is null")))
}

unsafe fn c_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(fail(MmiStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(MmiStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn write_out(values: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if len < values.len() {
        return Err(fail(
            MmiStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", values.len()),
        ));
    }
    if out.is_null() {
        return Err(fail(MmiStatus::NullPointer, "out is null"));
    }
    // SAFETY: caller guarantees `out` has room for `len >= values.len()` doubles.
    unsafe { std::ptr::copy_nonoverlapping(values.as_ptr(), out, values.len()) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mmi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mmi_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Number of unordered output pairs for `n_modes` outputs.
#[no_mangle]
pub extern "C" fn mmi_pair_count(n_modes: usize) -> usize {
    n_modes * (n_modes + 1) / 2
}

/// The characterized 4x4 chip shipped with the library.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn mmi_matrix_measured_chip(out: *mut *mut MmiMatrix) -> MmiStatus {
    guard(|| {
        *out_ref(out, "out")? = Box::into_raw(Box::new(MmiMatrix(TransferMatrix::measured_chip())));
        Ok(())
    })
}

/// Parses a matrix from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn mmi_matrix_from_json(
    json: *const c_char,
    out: *mut *mut MmiMatrix,
) -> MmiStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let m = TransferMatrix::from_json(c_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(MmiMatrix(m)));
        Ok(())
    })
}

/// Builds a matrix from row-major real and imaginary parts (`n_modes^2`
/// values each), where entry `[i * n_modes + k]` maps input `i` to output `k`.
///
/// # Safety
/// `re` and `im` must each hold `n_modes * n_modes` doubles; `out` valid for
/// one pointer write.
#[no_mangle]
pub unsafe extern "C" fn mmi_matrix_from_parts(
    n_modes: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut MmiMatrix,
) -> MmiStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let n2 = n_modes
            .checked_mul(n_modes)
            .ok_or_else(|| fail(MmiStatus::InvalidArgument, "n_modes too large"))?;
        let (re, im) = (slice(re, n2, "re")?, slice(im, n2, "im")?);
        let rows = (0..n_modes)
            .map(|i| {
                (0..n_modes)
                    .map(|k| Complex64::new(re[i * n_modes + k], im[i * n_modes + k]))
                    .collect()
            })
            .collect();
        *out = Box::into_raw(Box::new(MmiMatrix(TransferMatrix::new(rows)?)));
        Ok(())
    })
}

/// # Safety
/// `matrix` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mmi_matrix_n_modes(matrix: *const MmiMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.0.n_modes())
}

/// # Safety
/// `matrix` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mmi_matrix_free(matrix: *mut MmiMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Coincidence table for photons entering inputs `i` and `j`, written to
/// `out` in pair order. `visibility` is only used by the mixture, which is
/// always renormalized.
///
/// # Safety
/// `matrix` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mmi_coincidence_table(
    matrix: *const MmiMatrix,
    i: usize,
    j: usize,
    table: u32,
    renormalize: bool,
    visibility: f64,
    out: *mut f64,
    len: usize,
) -> MmiStatus {
    guard(|| {
        let m = &handle(matrix, "matrix")?.0;
        let norm = if renormalize {
            Normalization::Renormalized
        } else {
            Normalization::Raw
        };
        let dist = match table {
            t if t == MmiTable::Quantum as u32 => coincidence_quantum(m, i, j, norm)?,
            t if t == MmiTable::Classical as u32 => coincidence_classical(m, i, j, norm)?,
            t if t == MmiTable::Mixture as u32 => {
                mmi_lab::mmi::coincidence_mixture(m, i, j, visibility)?
            }
            other => {
                return Err(fail(
                    MmiStatus::InvalidArgument,
                    format!("unknown table {other}"),
                ))
            }
        };
        write_out(dist.values(), out, len)
    })
}

/// Normalized classical fidelity of two non-negative vectors.
///
/// # Safety
/// `p` and `q` must each hold `len` doubles; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mmi_similarity(
    p: *const f64,
    q: *const f64,
    len: usize,
    out: *mut f64,
) -> MmiStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = similarity(slice(p, len, "p")?, slice(q, len, "q")?)?;
        Ok(())
    })
}

fn summarize(r: &SimilarityResult) -> MmiSimilarity {
    MmiSimilarity {
        mode: r.mode,
        hpd_low: r.hpd68.0,
        hpd_high: r.hpd68.1,
        mean: r.mean,
        raw: r.raw.unwrap_or(f64::NAN),
        n_trials: r.n_trials as u64,
    }
}

/// Similarity distribution of Poisson-resampled `counts` against `theory`.
///
/// # Safety
/// `counts` and `theory` must each hold `len` doubles; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mmi_poisson_mc_similarity(
    counts: *const f64,
    theory: *const f64,
    len: usize,
    trials: usize,
    seed: u64,
    out: *mut MmiSimilarity,
) -> MmiStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let r = poisson_mc_similarity(
            slice(counts, len, "counts")?,
            slice(theory, len, "theory")?,
            trials,
            seed,
        )?;
        *out = summarize(&r);
        Ok(())
    })
}

/// Similarity distribution of random `dims`-dimensional distributions against
/// `theory`, or against a second random distribution when `theory` is null.
/// With `exceed_from` finite, `exceedance` receives the fraction of samples
/// at or above it.
///
/// # Safety
/// `theory` must be null or hold `dims` doubles; `out` valid for one write;
/// `exceedance` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mmi_random_baseline(
    theory: *const f64,
    dims: usize,
    sampling: u32,
    trials: usize,
    seed: u64,
    exceed_from: f64,
    out: *mut MmiSimilarity,
    exceedance: *mut f64,
) -> MmiStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let reference = if theory.is_null() {
            BaselineReference::Random
        } else {
            BaselineReference::Theory(slice(theory, dims, "theory")?.to_vec())
        };
        let sampling = match sampling {
            s if s == MmiSampling::Simplex as u32 => BaselineSampling::Simplex,
            s if s == MmiSampling::Cube as u32 => BaselineSampling::Cube,
            other => {
                return Err(fail(
                    MmiStatus::InvalidArgument,
                    format!("unknown sampling {other}"),
                ))
            }
        };
        let r = random_baseline(&reference, dims, sampling, trials, seed)?;
        if let Some(e) = exceedance.as_mut() {
            *e = if exceed_from.is_finite() {
                mmi_lab::stats::exceedance_probability(&r, (exceed_from, exceed_from))?
            } else {
                f64::NAN
            };
        }
        *out = summarize(&r);
        Ok(())
    })
}

/// Shortest interval holding `mass` of `samples` (any order).
///
/// # Safety
/// `samples` must hold `len` doubles; `low` and `high` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mmi_hpd_interval(
    samples: *const f64,
    len: usize,
    mass: f64,
    low: *mut f64,
    high: *mut f64,
) -> MmiStatus {
    guard(|| {
        let (low, high) = (out_ref(low, "low")?, out_ref(high, "high")?);
        let mut sorted = slice(samples, len, "samples")?.to_vec();
        if sorted.iter().any(|x| x.is_nan()) {
            return Err(fail(MmiStatus::InvalidArgument, "samples contain NaN"));
        }
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = hpd_interval(&sorted, mass).ok_or_else(|| {
            fail(
                MmiStatus::InvalidArgument,
                "empty samples or mass outside (0, 1]",
            )
        })?;
        *low = lo;
        *high = hi;
        Ok(())
    })
}

/// Reads a binary or CSV time-tag file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn mmi_stream_read(
    path: *const c_char,
    out: *mut *mut MmiStream,
) -> MmiStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let s = TimeTagStream::read(Path::new(c_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(MmiStream(s)));
        Ok(())
    })
}

/// Parses a binary time-tag payload.
///
/// # Safety
/// `bytes` must hold `len` bytes; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn mmi_stream_parse(
    bytes: *const u8,
    len: usize,
    out: *mut *mut MmiStream,
) -> MmiStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let s = TimeTagStream::parse_bytes(slice(bytes, len, "bytes")?)?;
        *out = Box::into_raw(Box::new(MmiStream(s)));
        Ok(())
    })
}

/// # Safety
/// `stream` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mmi_stream_len(stream: *const MmiStream) -> usize {
    stream.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `stream` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mmi_stream_n_channels(stream: *const MmiStream) -> u16 {
    stream.as_ref().map_or(0, |s| s.0.n_channels())
}

/// # Safety
/// `stream` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mmi_stream_free(stream: *mut MmiStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Pairs detections within `window` ns (after an offset of `offset_cycles`
/// duty cycles) and writes per-pair counts in pair order for the stream's
/// channels. `n_events` receives the number of coincidences.
///
/// # Safety
/// `stream` must be a live handle; `counts` must hold `len` doubles;
/// `n_events` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mmi_extract_coincidences(
    stream: *const MmiStream,
    window: f64,
    offset_cycles: u32,
    duty_cycle: f64,
    counts: *mut f64,
    len: usize,
    n_events: *mut u64,
) -> MmiStatus {
    guard(|| {
        let s = &handle(stream, "stream")?.0;
        let options = if offset_cycles == 0 {
            PairingOptions::simultaneous(window)
        } else {
            PairingOptions::offset(window, offset_cycles, duty_cycle)
        };
        let set = extract_coincidences(s, options)?;
        write_out(set.counts.values(), counts, len)?;
        if let Some(n) = n_events.as_mut() {
            *n = set.events.len() as u64;
        }
        Ok(())
    })
}
