//! C ABI for the dualguide retrieval engine.
//!
//! Opaque handles wrap the index and search results; every call returns a
//! status code and the last error message is kept per thread. All handles
//! must be released with their matching `_free` function. Index handles are
//! immutable after creation and may be shared across threads; result
//! handles must stay on the thread that made them or be externally
//! synchronized.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use dualguide::index::{build_index, load_index, serialize_index, AlignmentMode, FillMode};
use dualguide::query::{execute, Algorithm, Query, TraversalConfig};
use dualguide::{Bm25Params, DualIndex, MixCoefficients, QueryRun};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgStatus {
    DgOk = 0,
    DgErrNullArgument = 1,
    DgErrInvalidArgument = 2,
    DgErrIo = 3,
    DgErrParse = 4,
    DgErrBuild = 5,
    DgErrPanic = 6,
}

/// Alignment fill policy for `dg_index_build`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgAlignment {
    DgAlignZero = 0,
    DgAlignOne = 1,
    DgAlignScaled = 2,
}

/// Traversal algorithm selector for `dg_search`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgAlgorithm {
    DgAlgoMaxscore2gti = 0,
    DgAlgoBmw2gti = 1,
    DgAlgoExhaustive = 2,
}

/// Search parameters; mirror the CLI flags.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DgSearchParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k: usize,
    pub factor_f: f64,
    pub algorithm: DgAlgorithm,
}

/// Opaque index handle.
pub struct DgIndex {
    inner: DualIndex,
}

/// Opaque search-result handle.
pub struct DgResults {
    run: QueryRun,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
}

fn status_of(err: &dualguide::Error) -> DgStatus {
    use dualguide::Error as E;
    match err {
        E::Io(_) => DgStatus::DgErrIo,
        E::CorpusParse { .. }
        | E::QueryParse { .. }
        | E::TrecParse { .. }
        | E::IndexFormat { .. }
        | E::VersionMismatch { .. } => DgStatus::DgErrParse,
        E::DuplicatePosting { .. }
        | E::NegativeWeight { .. }
        | E::NonDenseDocIds { .. }
        | E::Alignment(_) => DgStatus::DgErrBuild,
        E::Domain(_) | E::NoEvaluableQueries => DgStatus::DgErrInvalidArgument,
    }
}

fn fail(err: dualguide::Error) -> DgStatus {
    let status = status_of(&err);
    set_error(err);
    status
}

/// Runs `f`, converting panics into a status instead of unwinding into C.
fn guarded(f: impl FnOnce() -> DgStatus) -> DgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            DgStatus::DgErrPanic
        }
    }
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, DgStatus> {
    if ptr.is_null() {
        set_error("null path argument");
        return Err(DgStatus::DgErrNullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(DgStatus::DgErrInvalidArgument)
        }
    }
}

/// Message of the most recent error on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dg_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Loads an index file into a new handle.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_index_load(path: *const c_char, out: *mut *mut DgIndex) -> DgStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return DgStatus::DgErrNullArgument;
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_index(path) {
            Ok(index) => {
                *out = Box::into_raw(Box::new(DgIndex { inner: index }));
                DgStatus::DgOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Builds an index from a corpus file.
///
/// # Safety
/// `corpus_path` must be a valid NUL-terminated string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_index_build(
    corpus_path: *const c_char,
    bm25_k1: f64,
    bm25_b: f64,
    block_size: u32,
    alignment: DgAlignment,
    keep_learned_zero: bool,
    out: *mut *mut DgIndex,
) -> DgStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return DgStatus::DgErrNullArgument;
        }
        let path = match path_arg(corpus_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let fill = match alignment {
            DgAlignment::DgAlignZero => FillMode::ZeroFill,
            DgAlignment::DgAlignOne => FillMode::OneFill,
            DgAlignment::DgAlignScaled => FillMode::ScaledFill,
        };
        let result = Bm25Params::new(bm25_k1, bm25_b)
            .and_then(|params| {
                let corpus = dualguide::corpus::Corpus::read_path(path)?;
                build_index(
                    &corpus,
                    params,
                    block_size,
                    AlignmentMode {
                        fill,
                        include_learned_zero: keep_learned_zero,
                    },
                )
            })
            .map(|b| b.index);
        match result {
            Ok(index) => {
                *out = Box::into_raw(Box::new(DgIndex { inner: index }));
                DgStatus::DgOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Writes the index to a file.
///
/// # Safety
/// `index` must be a live handle and `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dg_index_save(index: *const DgIndex, path: *const c_char) -> DgStatus {
    guarded(|| {
        let Some(index) = index.as_ref() else {
            set_error("null index handle");
            return DgStatus::DgErrNullArgument;
        };
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match serialize_index(&index.inner, path) {
            Ok(()) => DgStatus::DgOk,
            Err(e) => fail(e),
        }
    })
}

/// Number of documents in the index; 0 for a null handle.
#[no_mangle]
pub extern "C" fn dg_index_num_docs(index: *const DgIndex) -> u32 {
    unsafe { index.as_ref() }.map_or(0, |i| i.inner.num_docs)
}

/// Number of posting records in the index; 0 for a null handle.
#[no_mangle]
pub extern "C" fn dg_index_num_postings(index: *const DgIndex) -> u64 {
    unsafe { index.as_ref() }.map_or(0, |i| i.inner.postings_count())
}

/// Releases an index handle; a null handle is a no-op.
#[no_mangle]
pub extern "C" fn dg_index_free(index: *mut DgIndex) {
    if !index.is_null() {
        drop(unsafe { Box::from_raw(index) });
    }
}

/// Runs one query. `terms` holds `num_terms` term ids; repetitions weight a
/// term. On success `out` receives a result handle.
///
/// # Safety
/// `index` must be a live handle; `terms` must point to `num_terms` ids (or
/// be null when `num_terms` is 0); `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_search(
    index: *const DgIndex,
    terms: *const u32,
    num_terms: usize,
    params: DgSearchParams,
    out: *mut *mut DgResults,
) -> DgStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return DgStatus::DgErrNullArgument;
        }
        let Some(index) = index.as_ref() else {
            set_error("null index handle");
            return DgStatus::DgErrNullArgument;
        };
        if terms.is_null() && num_terms > 0 {
            set_error("null term array with nonzero length");
            return DgStatus::DgErrNullArgument;
        }
        let terms = if num_terms == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(terms, num_terms).to_vec()
        };
        let algorithm = match params.algorithm {
            DgAlgorithm::DgAlgoMaxscore2gti => Algorithm::Maxscore2gti,
            DgAlgorithm::DgAlgoBmw2gti => Algorithm::Bmw2gti,
            DgAlgorithm::DgAlgoExhaustive => Algorithm::Exhaustive,
        };
        let result = MixCoefficients::new(params.alpha, params.beta, params.gamma)
            .map(|coeffs| {
                TraversalConfig::new(coeffs, params.k, params.factor_f, algorithm)
                    .with_counters(true)
            })
            .and_then(|config| execute(&Query::new("ffi", terms), &index.inner, &config));
        match result {
            Ok(run) => {
                *out = Box::into_raw(Box::new(DgResults { run }));
                DgStatus::DgOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of results in the handle; 0 for a null handle.
#[no_mangle]
pub extern "C" fn dg_results_len(results: *const DgResults) -> usize {
    unsafe { results.as_ref() }.map_or(0, |r| r.run.results.len())
}

/// Document id at `rank` (0-based); `u32::MAX` when out of range.
#[no_mangle]
pub extern "C" fn dg_results_doc(results: *const DgResults, rank: usize) -> u32 {
    unsafe { results.as_ref() }
        .and_then(|r| r.run.results.as_slice().get(rank))
        .map_or(u32::MAX, |d| d.doc_id)
}

/// Score at `rank` (0-based); NaN when out of range.
#[no_mangle]
pub extern "C" fn dg_results_score(results: *const DgResults, rank: usize) -> f64 {
    unsafe { results.as_ref() }
        .and_then(|r| r.run.results.as_slice().get(rank))
        .map_or(f64::NAN, |d| d.score)
}

/// Effort counters of the search that produced the results.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DgCounters {
    pub docs_fully_scored: u64,
    pub docs_locally_pruned: u64,
    pub docs_globally_skipped: u64,
    pub postings_touched: u64,
    pub repartition_count: u64,
    pub blocks_opened: u64,
}

/// Copies the effort counters out of a result handle.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_results_counters(
    results: *const DgResults,
    out: *mut DgCounters,
) -> DgStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return DgStatus::DgErrNullArgument;
        }
        let Some(r) = results.as_ref() else {
            set_error("null results handle");
            return DgStatus::DgErrNullArgument;
        };
        let c = r.run.counters;
        *out = DgCounters {
            docs_fully_scored: c.docs_fully_scored,
            docs_locally_pruned: c.docs_locally_pruned,
            docs_globally_skipped: c.docs_globally_skipped,
            postings_touched: c.postings_touched,
            repartition_count: c.repartition_count,
            blocks_opened: c.blocks_opened,
        };
        DgStatus::DgOk
    })
}

/// Releases a result handle; a null handle is a no-op.
#[no_mangle]
pub extern "C" fn dg_results_free(results: *mut DgResults) {
    if !results.is_null() {
        drop(unsafe { Box::from_raw(results) });
    }
}
