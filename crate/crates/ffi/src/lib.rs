//! C ABI for `tsclust`.
//!
//! Every fallible function returns a [`TscStatus`]; on failure a message is
//! available from [`tsc_last_error_message`] on the same thread. Matrices and
//! dendrograms are opaque handles released with their `_free` function.
//! Slices are passed as pointer plus length; lengths are element counts.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tsclust::dissim::{self, Measure, MeasureConfig};
use tsclust::hcluster::{agglomerate_ward, cut, Dendrogram};
use tsclust::matrix::DissimilarityMatrix;
use tsclust::partition::Partition;
use tsclust::series::{SeriesSet, SubjectId, TimeSeries, VariableKind};
use tsclust::validate::{adjusted_rand, silhouette_avg};
use tsclust::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    /// Input the measure or index cannot handle, such as a constant series.
    Degenerate = 4,
    BadK = 5,
    OutOfRange = 6,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TscMeasure {
    Euclidean = 0,
    Cor = 1,
    Cort = 2,
    Dtw = 3,
    Cid = 4,
}

impl From<TscMeasure> for Measure {
    fn from(m: TscMeasure) -> Self {
        match m {
            TscMeasure::Euclidean => Measure::Euclidean,
            TscMeasure::Cor => Measure::Cor,
            TscMeasure::Cort => Measure::Cort,
            TscMeasure::Dtw => Measure::Dtw,
            TscMeasure::Cid => Measure::Cid,
        }
    }
}

/// Opaque dissimilarity matrix.
pub struct TscMatrix(DissimilarityMatrix);

/// Opaque Ward dendrogram.
pub struct TscDendrogram(Dendrogram);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TscStatus {
    match e {
        Error::LengthMismatch { .. } => TscStatus::LengthMismatch,
        Error::ConstantSeries
        | Error::FlatDifferences
        | Error::SingleCluster
        | Error::DegenerateMatrix(_) => TscStatus::Degenerate,
        Error::BadK { .. } => TscStatus::BadK,
        Error::Pair { source, .. } => status_of(source),
        _ => TscStatus::InvalidArgument,
    }
}

struct Fail(TscStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null() -> Fail {
    Fail(TscStatus::NullPointer, "null pointer argument".into())
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TscStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TscStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

fn partition(labels: &[usize]) -> Result<Partition, Fail> {
    Ok(Partition::from_keys(labels)?)
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tsc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tsc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Dissimilarity between two series of equal length `n` (DTW also accepts
/// them), with default parameters.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles; `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsc_distance(
    measure: TscMeasure,
    x: *const f64,
    y: *const f64,
    n: usize,
    result: *mut f64,
) -> TscStatus {
    guard(|| {
        let (x, y) = (slice(x, n)?, slice(y, n)?);
        *out(result)? = MeasureConfig::new(measure.into()).distance(x, y)?;
        Ok(())
    })
}

/// Dynamic time warping between series of possibly different lengths.
///
/// # Safety
/// `x` and `y` must point to `nx` and `ny` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn tsc_dtw(x: *const f64, nx: usize, y: *const f64, ny: usize, result: *mut f64) -> TscStatus {
    guard(|| {
        *out(result)? = dissim::dtw(slice(x, nx)?, slice(y, ny)?)?;
        Ok(())
    })
}

/// Complexity-invariant distance with an explicit complexity floor `eps`.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn tsc_cid(x: *const f64, y: *const f64, n: usize, eps: f64, result: *mut f64) -> TscStatus {
    guard(|| {
        *out(result)? = dissim::cid(slice(x, n)?, slice(y, n)?, eps)?;
        Ok(())
    })
}

/// Temporal-correlation dissimilarity with tuning parameter `k`.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn tsc_cort(x: *const f64, y: *const f64, n: usize, k: f64, result: *mut f64) -> TscStatus {
    guard(|| {
        *out(result)? = dissim::cort_dissim(slice(x, n)?, slice(y, n)?, k)?;
        Ok(())
    })
}

/// Pairwise matrix of `n_series` row-major series of `length` values each.
///
/// # Safety
/// `values` must point to `n_series * length` doubles; `matrix` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsc_matrix_compute(
    values: *const f64,
    n_series: usize,
    length: usize,
    measure: TscMeasure,
    matrix: *mut *mut TscMatrix,
) -> TscStatus {
    guard(|| {
        let target = out(matrix)?;
        let total = n_series
            .checked_mul(length)
            .ok_or_else(|| Fail(TscStatus::InvalidArgument, "size overflow".into()))?;
        let values = slice(values, total)?;
        let start = tsclust::synthgen::default_start();
        let series = (0..n_series)
            .map(|i| {
                TimeSeries::derived(
                    SubjectId::new(i.to_string()),
                    start,
                    VariableKind::Time,
                    values[i * length..(i + 1) * length].to_vec(),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let set = SeriesSet::new(series, Vec::new())?;
        let m = dissim::pairwise_matrix(&set, &MeasureConfig::new(measure.into()))?;
        *target = Box::into_raw(Box::new(TscMatrix(m)));
        Ok(())
    })
}

/// Wraps a dense symmetric `size * size` row-major matrix with zero diagonal.
///
/// # Safety
/// `entries` must point to `size * size` doubles; `matrix` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsc_matrix_from_dense(
    entries: *const f64,
    size: usize,
    matrix: *mut *mut TscMatrix,
) -> TscStatus {
    guard(|| {
        let target = out(matrix)?;
        let total = size
            .checked_mul(size)
            .ok_or_else(|| Fail(TscStatus::InvalidArgument, "size overflow".into()))?;
        let m = DissimilarityMatrix::from_dense(size, slice(entries, total)?.to_vec())?;
        *target = Box::into_raw(Box::new(TscMatrix(m)));
        Ok(())
    })
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `matrix` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tsc_matrix_size(matrix: *const TscMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.0.size())
}

/// # Safety
/// `matrix` must be a live handle and `result` writable.
#[no_mangle]
pub unsafe extern "C" fn tsc_matrix_get(matrix: *const TscMatrix, i: usize, j: usize, result: *mut f64) -> TscStatus {
    guard(|| {
        let m = &handle(matrix)?.0;
        if i >= m.size() || j >= m.size() {
            return Err(Fail(
                TscStatus::OutOfRange,
                format!("index ({i}, {j}) outside a {0}x{0} matrix", m.size()),
            ));
        }
        *out(result)? = m.get(i, j);
        Ok(())
    })
}

/// # Safety
/// `matrix` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tsc_matrix_free(matrix: *mut TscMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Ward agglomerative clustering of a matrix.
///
/// # Safety
/// `matrix` must be a live handle and `dendrogram` writable.
#[no_mangle]
pub unsafe extern "C" fn tsc_ward(matrix: *const TscMatrix, dendrogram: *mut *mut TscDendrogram) -> TscStatus {
    guard(|| {
        let target = out(dendrogram)?;
        let d = agglomerate_ward(&handle(matrix)?.0)?;
        *target = Box::into_raw(Box::new(TscDendrogram(d)));
        Ok(())
    })
}

/// Number of merges (leaves minus one); 0 for a null handle.
///
/// # Safety
/// `dendrogram` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tsc_dendrogram_merge_count(dendrogram: *const TscDendrogram) -> usize {
    dendrogram.as_ref().map_or(0, |d| d.0.merges().len())
}

/// Merge `index` (0-based). Children use signed ids: leaves are `-1..=-K`
/// and earlier merges `1..`.
///
/// # Safety
/// `dendrogram` must be a live handle; every output pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsc_dendrogram_merge(
    dendrogram: *const TscDendrogram,
    index: usize,
    left: *mut i64,
    right: *mut i64,
    height: *mut f64,
    size: *mut usize,
) -> TscStatus {
    guard(|| {
        let d = &handle(dendrogram)?.0;
        let m = d.merges().get(index).ok_or_else(|| {
            Fail(TscStatus::OutOfRange, format!("merge {index} of {}", d.merges().len()))
        })?;
        *out(left)? = m.left.signed_id();
        *out(right)? = m.right.signed_id();
        *out(height)? = m.height;
        *out(size)? = m.size;
        Ok(())
    })
}

/// Cuts into `k` clusters, writing labels `1..=k` for every leaf.
///
/// # Safety
/// `labels` must point to room for one `size_t` per leaf.
#[no_mangle]
pub unsafe extern "C" fn tsc_dendrogram_cut(
    dendrogram: *const TscDendrogram,
    k: usize,
    labels: *mut usize,
    n_labels: usize,
) -> TscStatus {
    guard(|| {
        let d = &handle(dendrogram)?.0;
        if n_labels != d.leaf_count() {
            return Err(Error::LengthMismatch {
                left: n_labels,
                right: d.leaf_count(),
            }
            .into());
        }
        if labels.is_null() {
            return Err(null());
        }
        let p = cut(d, k)?;
        std::slice::from_raw_parts_mut(labels, n_labels).copy_from_slice(p.labels());
        Ok(())
    })
}

/// # Safety
/// `dendrogram` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tsc_dendrogram_free(dendrogram: *mut TscDendrogram) {
    if !dendrogram.is_null() {
        drop(Box::from_raw(dendrogram));
    }
}

/// Average silhouette width of a labelling. Labels are arbitrary cluster keys.
///
/// # Safety
/// `labels` must point to one value per matrix row.
#[no_mangle]
pub unsafe extern "C" fn tsc_silhouette(
    matrix: *const TscMatrix,
    labels: *const usize,
    n: usize,
    result: *mut f64,
) -> TscStatus {
    guard(|| {
        let m = &handle(matrix)?.0;
        let p = partition(slice(labels, n)?)?;
        *out(result)? = silhouette_avg(m, &p)?;
        Ok(())
    })
}

/// Adjusted Rand index between two labellings of `n` items.
///
/// # Safety
/// `a` and `b` must point to `n` values each.
#[no_mangle]
pub unsafe extern "C" fn tsc_adjusted_rand(a: *const usize, b: *const usize, n: usize, result: *mut f64) -> TscStatus {
    guard(|| {
        let (p, q) = (partition(slice(a, n)?)?, partition(slice(b, n)?)?);
        *out(result)? = adjusted_rand(&p, &q)?;
        Ok(())
    })
}
