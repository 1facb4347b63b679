//! C ABI over the `nextpoi` simulator.
//!
//! Every fallible call returns a [`NextpoiStatus`]; on failure the message is
//! kept per thread and read back with [`nextpoi_last_error_message`].
//! Handles are opaque and owned by the caller until passed to the matching
//! `_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use nextpoi::dataset::{extract_visit_counts, generate_synthetic, load_checkins, Dataset, TransitionModel};
use nextpoi::ldp::split_budget;
use nextpoi::recommender::top_k;
use nextpoi::trainer::{als_update_user, train_spirel, LatentModel, Privacy, PrivateProfile, TrainConfig};
use nextpoi::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextpoiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Format = 5,
    Numerical = 6,
    BudgetExceeded = 7,
    Internal = 8,
    Panic = 9,
}

/// Check-in data loaded or generated on the Rust side.
pub struct NextpoiDataset {
    inner: Dataset,
}

/// POI latent factors, from training or a checkpoint.
pub struct NextpoiModel {
    inner: LatentModel,
}

/// Training knobs. Start from [`nextpoi_train_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NextpoiTrainParams {
    pub d: usize,
    pub iterations: usize,
    /// Total per-client budget.
    pub epsilon: f64,
    /// Share of `epsilon` spent on the transition report.
    pub split: f64,
    pub learning_rate: f64,
    pub lambda: f64,
    pub seed: u64,
    /// When false the run uses exact data and is NOT private.
    pub private_mode: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NextpoiStatus {
    match e {
        Error::InvalidParameter { .. }
        | Error::Contract(_)
        | Error::Domain { .. }
        | Error::InvalidInput(_)
        | Error::Config { .. }
        | Error::Evaluation(_) => NextpoiStatus::InvalidArgument,
        Error::UnknownPoi(_) | Error::Parse { .. } => NextpoiStatus::Parse,
        Error::Format(_) => NextpoiStatus::Format,
        Error::Io { .. } => NextpoiStatus::Io,
        Error::Numerical(_) => NextpoiStatus::Numerical,
        Error::BudgetExceeded { .. } => NextpoiStatus::BudgetExceeded,
        Error::Protocol(_) | Error::Scheduling(_) => NextpoiStatus::Internal,
    }
}

struct Fail(NextpoiStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NextpoiStatus::NullPointer, format!("`{what}` is null"))
}

fn bad(msg: impl Into<String>) -> Fail {
    Fail(NextpoiStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NextpoiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            NextpoiStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NextpoiStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| bad("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn out_handle<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn nextpoi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code, e.g. `"invalid argument"`.
#[no_mangle]
pub extern "C" fn nextpoi_status_name(status: i32) -> *const c_char {
    let s: &'static CStr = match status {
        0 => c"ok",
        1 => c"null pointer",
        2 => c"invalid argument",
        3 => c"i/o error",
        4 => c"parse error",
        5 => c"checkpoint format error",
        6 => c"numerical error",
        7 => c"privacy budget exceeded",
        8 => c"internal error",
        9 => c"panic",
        _ => c"unknown status",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn nextpoi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Random-walk population on a ring of `pois` POIs.
///
/// # Safety
/// `out` must be a valid pointer to write a handle into.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_dataset_generate(
    users: usize,
    pois: usize,
    length: usize,
    seed: u64,
    out: *mut *mut NextpoiDataset,
) -> NextpoiStatus {
    guard(|| {
        let inner = generate_synthetic(users, pois, length, &TransitionModel::RandomWalk, seed)?;
        out_handle(out, NextpoiDataset { inner })
    })
}

/// Biased ring walk: step forward with probability `forward`, otherwise
/// jump to POI `k` with weight `1/(k+1)^popularity`.
///
/// # Safety
/// `out` must be a valid pointer to write a handle into.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_dataset_generate_ring(
    users: usize,
    pois: usize,
    length: usize,
    forward: f64,
    popularity: f64,
    seed: u64,
    out: *mut *mut NextpoiDataset,
) -> NextpoiStatus {
    guard(|| {
        let model = TransitionModel::Ring { forward, backward: 0.0, stay: 0.0, popularity };
        let inner = generate_synthetic(users, pois, length, &model, seed)?;
        out_handle(out, NextpoiDataset { inner })
    })
}

/// Reads a check-in file (see the README for the format). Users with a
/// single check-in are dropped.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_dataset_load(path: *const c_char, out: *mut *mut NextpoiDataset) -> NextpoiStatus {
    guard(|| {
        let path = path_arg(path)?;
        let loaded = load_checkins(&path, None)?;
        out_handle(out, NextpoiDataset { inner: loaded.dataset })
    })
}

/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_dataset_n_users(dataset: *const NextpoiDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.n_users())
}

/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_dataset_n_pois(dataset: *const NextpoiDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.n_pois())
}

/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_dataset_free(dataset: *mut NextpoiDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

#[no_mangle]
pub extern "C" fn nextpoi_train_params_default() -> NextpoiTrainParams {
    let t = TrainConfig::default();
    NextpoiTrainParams {
        d: t.d,
        iterations: t.iterations,
        epsilon: t.budget.total(),
        split: t.budget.ratio(),
        learning_rate: t.learning_rate,
        lambda: t.lambda,
        seed: t.seed,
        private_mode: true,
    }
}

/// Runs the full private pipeline (or the exact one when `private_mode` is
/// false) and returns the POI factors.
///
/// # Safety
/// `dataset` and `params` must be live, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_train(
    dataset: *const NextpoiDataset,
    params: *const NextpoiTrainParams,
    out: *mut *mut NextpoiModel,
) -> NextpoiStatus {
    guard(|| {
        let dataset = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let config = TrainConfig {
            d: p.d,
            iterations: p.iterations,
            learning_rate: p.learning_rate,
            lambda: p.lambda,
            seed: p.seed,
            budget: split_budget(p.epsilon, p.split)?,
            privacy: if p.private_mode { Privacy::Local } else { Privacy::Disabled },
            ..TrainConfig::default()
        };
        let outcome = train_spirel(&dataset.inner, &config)?;
        out_handle(out, NextpoiModel { inner: outcome.model })
    })
}

/// Reads a `model.bin` checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_model_load(path: *const c_char, out: *mut *mut NextpoiModel) -> NextpoiStatus {
    guard(|| {
        let path = path_arg(path)?;
        out_handle(out, NextpoiModel { inner: LatentModel::load(&path)? })
    })
}

/// Writes a `model.bin` checkpoint.
///
/// # Safety
/// `model` must be live and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_model_save(model: *const NextpoiModel, path: *const c_char) -> NextpoiStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let path = path_arg(path)?;
        Ok(model.inner.save(&path)?)
    })
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_model_n_pois(model: *const NextpoiModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.n())
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_model_dim(model: *const NextpoiModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.d())
}

/// Copies the `n x d` row-major factor matrix into `out` (`len >= n*d`).
///
/// # Safety
/// `model` must be live and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_model_factors(model: *const NextpoiModel, out: *mut f64, len: usize) -> NextpoiStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = model.inner.factors().as_slice();
        if len < v.len() {
            return Err(bad(format!("buffer holds {len} values, need {}", v.len())));
        }
        std::slice::from_raw_parts_mut(out, v.len()).copy_from_slice(v);
        Ok(())
    })
}

/// Top-`k` POIs for a user vector `u` of length `d`, standing at `current`
/// (pass a negative value for no location). Writes `k` POI ids and scores
/// in descending order; ties go to the lower id.
///
/// # Safety
/// `model` must be live, `u` must hold `d` doubles, `out_pois` and
/// `out_scores` must hold `k` entries (`out_scores` may be null).
#[no_mangle]
pub unsafe extern "C" fn nextpoi_recommend(
    model: *const NextpoiModel,
    u: *const f64,
    d: usize,
    current: i64,
    k: usize,
    out_pois: *mut usize,
    out_scores: *mut f64,
) -> NextpoiStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if u.is_null() {
            return Err(null("u"));
        }
        let u = std::slice::from_raw_parts(u, d);
        let current = usize::try_from(current).ok();
        write_top_k(model, u, current, k, out_pois, out_scores)
    })
}

/// Top-`k` for user `user` of `dataset`, computed the way a client would:
/// its vector is the ridge solution against the model's factors over its
/// whole history, and its location is its latest check-in.
///
/// # Safety
/// Handles must be live; `out_pois` and `out_scores` must hold `k` entries
/// (`out_scores` may be null).
#[no_mangle]
pub unsafe extern "C" fn nextpoi_recommend_user(
    model: *const NextpoiModel,
    dataset: *const NextpoiDataset,
    user: usize,
    lambda: f64,
    k: usize,
    out_pois: *mut usize,
    out_scores: *mut f64,
) -> NextpoiStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let dataset = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        if model.inner.n() != dataset.inner.n_pois() {
            return Err(bad(format!(
                "model has {} POIs, dataset has {}",
                model.inner.n(),
                dataset.inner.n_pois()
            )));
        }
        let history = dataset
            .inner
            .histories()
            .get(user)
            .ok_or_else(|| bad(format!("user {user} outside 0..{}", dataset.inner.n_users())))?;
        let latest = history.checkins().last().ok_or_else(|| bad(format!("user {user} has no check-ins")))?;
        let visits = extract_visit_counts(history.checkins());
        let profile = PrivateProfile::new(vec![0.0; model.inner.d()], visits, model.inner.n());
        let u = als_update_user(&profile, model.inner.factors(), lambda)?;
        write_top_k(model, &u, Some(latest.poi), k, out_pois, out_scores)
    })
}

unsafe fn write_top_k(
    model: &NextpoiModel,
    u: &[f64],
    current: Option<usize>,
    k: usize,
    out_pois: *mut usize,
    out_scores: *mut f64,
) -> Result<(), Fail> {
    if out_pois.is_null() {
        return Err(null("out_pois"));
    }
    let rec = top_k(u, current, model.inner.factors(), k)?;
    let pois = std::slice::from_raw_parts_mut(out_pois, k);
    for (slot, &(poi, _)) in pois.iter_mut().zip(rec.ranked()) {
        *slot = poi;
    }
    if !out_scores.is_null() {
        let scores = std::slice::from_raw_parts_mut(out_scores, k);
        for (slot, &(_, s)) in scores.iter_mut().zip(rec.ranked()) {
            *slot = s;
        }
    }
    Ok(())
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nextpoi_model_free(model: *mut NextpoiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
