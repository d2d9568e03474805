//! C ABI over `laxgrid`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`LaxgridStatus`]; on failure [`laxgrid_last_error`] describes it until
//! the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use laxgrid::cli::{run, ExperimentConfig};
use laxgrid::lax::{cyclicize, grid_for, lax_approximate, LaxMode};
use laxgrid::spectral::spectral_type;
use laxgrid::{CellPermutation, Error, MeasureMap, Sampling};

/// Status codes. `0` is success; the rest name the failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaxgridStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    BufferTooSmall = 3,
    Panic = 4,
    CapacityExceeded = 10,
    GridMismatch = 11,
    NoCycle = 12,
    DomainError = 13,
    NotExact = 14,
    NoPerfectMatching = 15,
    NotCyclic = 16,
    OddOrder = 17,
    NotCoprime = 18,
    TooSmall = 19,
    CycleTooShort = 20,
    EqualSizeInfeasible = 21,
    NotAPartition = 22,
    UnsupportedGeometry = 23,
    GapTooSmall = 24,
    PathsIntersect = 25,
    PointsOnBoundary = 26,
    InvalidArgument = 27,
    ConfigError = 28,
    IoError = 29,
}

impl From<&Error> for LaxgridStatus {
    fn from(e: &Error) -> Self {
        use LaxgridStatus as S;
        match e {
            Error::CapacityExceeded { .. } => S::CapacityExceeded,
            Error::GridMismatch(_) => S::GridMismatch,
            Error::NoCycle { .. } => S::NoCycle,
            Error::DomainError(_) => S::DomainError,
            Error::NotExact => S::NotExact,
            Error::NoPerfectMatching { .. } => S::NoPerfectMatching,
            Error::NotCyclic { .. } => S::NotCyclic,
            Error::OddOrder(_) => S::OddOrder,
            Error::NotCoprime(..) => S::NotCoprime,
            Error::TooSmall { .. } => S::TooSmall,
            Error::CycleTooShort { .. } => S::CycleTooShort,
            Error::EqualSizeInfeasible => S::EqualSizeInfeasible,
            Error::NotAPartition(_) => S::NotAPartition,
            Error::UnsupportedGeometry(_) => S::UnsupportedGeometry,
            Error::GapTooSmall { .. } => S::GapTooSmall,
            Error::PathsIntersect(..) => S::PathsIntersect,
            Error::PointsOnBoundary(_) => S::PointsOnBoundary,
            Error::InvalidArgument(_) => S::InvalidArgument,
            Error::ConfigError(_) => S::ConfigError,
            Error::IoError(_) => S::IoError,
        }
    }
}

/// Overlap sampling passed to [`laxgrid_lax_approximate`].
pub const LAXGRID_SAMPLING_EXACT: u32 = 0;

/// Lax modes.
pub const LAXGRID_MODE_PLAIN: u32 = 0;
pub const LAXGRID_MODE_CYCLIC: u32 = 1;
pub const LAXGRID_MODE_BICYCLIC: u32 = 2;

/// A measure-preserving map.
pub struct LaxgridMap(MeasureMap);

/// A permutation of grid cells.
pub struct LaxgridPermutation(CellPermutation);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn remember(status: LaxgridStatus, message: String) -> LaxgridStatus {
    let text = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
    status
}

fn fail(e: Error) -> LaxgridStatus {
    remember(LaxgridStatus::from(&e), format!("{}: {e}", e.name()))
}

/// Runs `body`, turning panics into [`LaxgridStatus::Panic`].
fn guard(body: impl FnOnce() -> LaxgridStatus) -> LaxgridStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|_| remember(LaxgridStatus::Panic, "internal panic".into()))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, LaxgridStatus> {
    if s.is_null() {
        return Err(remember(LaxgridStatus::NullPointer, "null string".into()));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| remember(LaxgridStatus::InvalidUtf8, "string is not UTF-8".into()))
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return remember(LaxgridStatus::NullPointer, concat!("null argument `", stringify!($p), "`").into());
        })+
    };
}

/// Message for the last failing call on this thread; empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn laxgrid_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a map spec such as `"torus_linear:2,1,1,1"` for dimension `dim`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_map_parse(spec: *const c_char, dim: usize, out: *mut *mut LaxgridMap) -> LaxgridStatus {
    guard(|| {
        non_null!(out);
        let spec = match text(spec) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match MeasureMap::parse(spec, dim) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(LaxgridMap(m)));
                LaxgridStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `map` must come from [`laxgrid_map_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_map_free(map: *mut LaxgridMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// # Safety
/// `map` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_map_dim(map: *const LaxgridMap) -> usize {
    if map.is_null() {
        0
    } else {
        (*map).0.dim()
    }
}

/// Evaluates the map at `point` (length `dim`), writing `dim` values to `out`.
///
/// # Safety
/// `point` and `out` must each hold `laxgrid_map_dim(map)` doubles.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_map_eval(map: *const LaxgridMap, point: *const f64, out: *mut f64) -> LaxgridStatus {
    guard(|| {
        non_null!(map, point, out);
        let map = &(*map).0;
        let n = map.dim();
        match map.eval(std::slice::from_raw_parts(point, n)) {
            Ok(y) => {
                ptr::copy_nonoverlapping(y.as_ptr(), out, n);
                LaxgridStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Lax approximation at dyadic order `order`. `samples` is the number of
/// sample points per axis, or [`LAXGRID_SAMPLING_EXACT`]. On success `out`
/// receives the permutation and `strong_bound`, if not null, its certified
/// distance bound.
///
/// # Safety
/// `map` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_lax_approximate(
    map: *const LaxgridMap,
    order: u32,
    samples: u32,
    mode: u32,
    out: *mut *mut LaxgridPermutation,
    strong_bound: *mut f64,
) -> LaxgridStatus {
    guard(|| {
        non_null!(map, out);
        let mode = match mode {
            LAXGRID_MODE_PLAIN => LaxMode::Plain,
            LAXGRID_MODE_CYCLIC => LaxMode::Cyclic,
            LAXGRID_MODE_BICYCLIC => LaxMode::Bicyclic,
            other => return fail(Error::InvalidArgument(format!("unknown mode {other}"))),
        };
        let sampling = if samples == LAXGRID_SAMPLING_EXACT { Sampling::Exact } else { Sampling::Stratified(samples as usize) };
        let map = &(*map).0;
        let result = grid_for(map, order).and_then(|g| lax_approximate(map, &g, sampling, mode));
        match result {
            Ok((perm, cert)) => {
                if !strong_bound.is_null() {
                    *strong_bound = cert.strong_bound;
                }
                *out = Box::into_raw(Box::new(LaxgridPermutation(perm)));
                LaxgridStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Builds a permutation from its image array.
///
/// # Safety
/// `image` must hold `len` values and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_permutation_new(image: *const usize, len: usize, out: *mut *mut LaxgridPermutation) -> LaxgridStatus {
    guard(|| {
        non_null!(out);
        if len > 0 {
            non_null!(image);
        }
        let image = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(image, len).to_vec() };
        match CellPermutation::new(image) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(LaxgridPermutation(p)));
                LaxgridStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `perm` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_permutation_free(perm: *mut LaxgridPermutation) {
    if !perm.is_null() {
        drop(Box::from_raw(perm));
    }
}

/// # Safety
/// `perm` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_permutation_len(perm: *const LaxgridPermutation) -> usize {
    if perm.is_null() {
        0
    } else {
        (*perm).0.len()
    }
}

/// # Safety
/// `perm` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_permutation_cycle_count(perm: *const LaxgridPermutation) -> usize {
    if perm.is_null() {
        0
    } else {
        (*perm).0.cycle_count()
    }
}

/// Copies the image array into `out`, which must hold `capacity` values.
///
/// # Safety
/// `perm` must be a live handle and `out` hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_permutation_image(perm: *const LaxgridPermutation, out: *mut usize, capacity: usize) -> LaxgridStatus {
    guard(|| {
        non_null!(perm, out);
        let image = (*perm).0.image();
        if capacity < image.len() {
            return remember(LaxgridStatus::BufferTooSmall, format!("need {} entries", image.len()));
        }
        ptr::copy_nonoverlapping(image.as_ptr(), out, image.len());
        LaxgridStatus::Ok
    })
}

/// Merges the cycles of `perm` into one along `ordering` (`len` cells), or
/// along `0, 1, ..., len - 1` when `ordering` is null.
///
/// # Safety
/// `perm` must be a live handle; `ordering`, if not null, must hold as many
/// values as the permutation has cells.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_cyclicize(
    perm: *const LaxgridPermutation,
    ordering: *const usize,
    out: *mut *mut LaxgridPermutation,
) -> LaxgridStatus {
    guard(|| {
        non_null!(perm, out);
        let sigma = &(*perm).0;
        let ordering: Vec<usize> =
            if ordering.is_null() { (0..sigma.len()).collect() } else { std::slice::from_raw_parts(ordering, sigma.len()).to_vec() };
        match cyclicize(sigma, &ordering) {
            Ok((_, product)) => {
                *out = Box::into_raw(Box::new(LaxgridPermutation(product)));
                LaxgridStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Atoms of the spectral type: angle `2π num[i] / den[i]` with weight
/// `weight[i]`. `count` receives the number of atoms; if it exceeds
/// `capacity` nothing is written and [`LaxgridStatus::BufferTooSmall`] is
/// returned.
///
/// # Safety
/// The three arrays must hold `capacity` values each.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_spectral_type(
    perm: *const LaxgridPermutation,
    num: *mut u64,
    den: *mut u64,
    weight: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> LaxgridStatus {
    guard(|| {
        non_null!(perm, count);
        let atoms = spectral_type(&(*perm).0).atoms;
        *count = atoms.len();
        if atoms.len() > capacity {
            return remember(LaxgridStatus::BufferTooSmall, format!("need {} atoms", atoms.len()));
        }
        if !atoms.is_empty() {
            non_null!(num, den, weight);
        }
        for (i, a) in atoms.iter().enumerate() {
            *num.add(i) = a.num;
            *den.add(i) = a.den;
            *weight.add(i) = a.weight;
        }
        LaxgridStatus::Ok
    })
}

/// Runs an experiment from TOML config text and returns the JSON report,
/// without writing any file. Free the string with [`laxgrid_string_free`].
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_run_config(config: *const c_char, out: *mut *mut c_char) -> LaxgridStatus {
    guard(|| {
        non_null!(out);
        let config = match text(config) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match ExperimentConfig::from_toml_str(config).and_then(|c| run(&c)).and_then(|r| r.to_json()) {
            Ok(json) => {
                *out = CString::new(json).expect("JSON has no NUL").into_raw();
                LaxgridStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn laxgrid_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
