//! C ABI for the kronsample designers.
//!
//! Handles are opaque and owned by the caller once returned; release them with the matching
//! `*_free`. Every fallible call returns a [`KsStatus`] and leaves a message for
//! [`ks_last_error`] on the calling thread. Matrices are passed row-major as separate real and
//! imaginary arrays; a null imaginary pointer means a real input.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use kronsample::multilinear::subselect;
use kronsample::recon::LsEstimator;
use kronsample::{
    greedy_dense, greedy_diag, metrics, DenseConstraints, DiagConstraints, Error, GreedyTrace,
    Matrix, MultilinearModel, C64,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KsStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad shapes, indices or values.
    InvalidArgument = 2,
    /// The budget cannot meet the per-domain minima.
    Infeasible = 3,
    /// The sampled system does not have full column rank.
    Unidentifiable = 4,
    BufferTooSmall = 5,
    Internal = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KsCore {
    Dense = 0,
    Diagonal = 1,
}

/// Opaque factor model.
pub struct KsModel {
    model: MultilinearModel,
}

/// Opaque greedy design with its prepared least-squares operator.
pub struct KsDesign {
    trace: GreedyTrace,
    sampled: MultilinearModel,
    estimator: Option<LsEstimator>,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct KsMetrics {
    /// `tr((Ψ^H Ψ)^{-1})`, infinite when `unidentifiable` is set.
    pub mse: f64,
    pub fp: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub sensors: usize,
    pub samples: u64,
    pub unidentifiable: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KsStatus {
    match e {
        Error::Shape(_) | Error::InvalidModel(_) | Error::InvalidSelection(_) | Error::Format(_) | Error::Config(_) => {
            KsStatus::InvalidArgument
        }
        Error::Infeasible(_) => KsStatus::Infeasible,
        Error::Identifiability { .. } | Error::SamplingExhausted(_) => KsStatus::Unidentifiable,
        _ => KsStatus::Internal,
    }
}

struct Fail(KsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(KsStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> KsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            KsStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside kronsample".into());
            KsStatus::Panic
        }
    }
}

unsafe fn slice_or_empty<'a, T>(p: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(p, len))
    }
}

unsafe fn complex_vec(re: *const f64, im: *const f64, len: usize) -> Result<Vec<C64>, Fail> {
    let re = slice_or_empty(re, len).ok_or_else(|| null("real part"))?;
    let im = if im.is_null() { None } else { slice_or_empty(im, len) };
    Ok(re
        .iter()
        .enumerate()
        .map(|(k, &r)| C64::new(r, im.map_or(0.0, |v| v[k])))
        .collect())
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn ks_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a model from `order` factors stored back to back. Factor `i` is `rows[i] × cols[i]`,
/// row-major, starting right after factor `i - 1` in `re` (and `im` if not null).
///
/// # Safety
/// `rows` and `cols` must hold `order` entries; `re` (and `im`) must hold `Σ rows[i]·cols[i]`.
#[no_mangle]
pub unsafe extern "C" fn ks_model_new(
    core: KsCore,
    order: usize,
    rows: *const usize,
    cols: *const usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut KsModel,
) -> KsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if order == 0 {
            return Err(Fail(KsStatus::InvalidArgument, "order must be positive".into()));
        }
        let rows = slice_or_empty(rows, order).ok_or_else(|| null("rows"))?;
        let cols = slice_or_empty(cols, order).ok_or_else(|| null("cols"))?;
        let total = rows
            .iter()
            .zip(cols)
            .try_fold(0usize, |acc, (&r, &c)| r.checked_mul(c).and_then(|n| acc.checked_add(n)))
            .ok_or_else(|| Fail(KsStatus::InvalidArgument, "factor sizes overflow".into()))?;
        let data = complex_vec(re, im, total)?;
        let mut factors = Vec::with_capacity(order);
        let mut at = 0;
        for (&r, &c) in rows.iter().zip(cols) {
            factors.push(Matrix::from_row_major(r, c, data[at..at + r * c].to_vec())?);
            at += r * c;
        }
        let model = match core {
            KsCore::Dense => MultilinearModel::dense(factors)?,
            KsCore::Diagonal => MultilinearModel::diagonal(factors)?,
        };
        *out = Box::into_raw(Box::new(KsModel { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`ks_model_new`] and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ks_model_free(model: *mut KsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Total sensor count `Σ N_i`, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ks_model_total_sensors(model: *const KsModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.total_sensors())
}

/// Number of core coefficients, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ks_model_core_len(model: *const KsModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.core_len())
}

unsafe fn finish_design(model: &MultilinearModel, trace: GreedyTrace, out: *mut *mut KsDesign) -> Result<(), Fail> {
    let sampled = subselect(model, &trace.selection)?;
    let estimator = LsEstimator::new(&sampled).ok();
    *out = Box::into_raw(Box::new(KsDesign {
        trace,
        sampled,
        estimator,
    }));
    Ok(())
}

unsafe fn design_args<'a>(
    model: *const KsModel,
    slack: *const usize,
    slack_len: usize,
    out: *mut *mut KsDesign,
) -> Result<(&'a KsModel, Vec<usize>), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = ptr::null_mut();
    let m = model.as_ref().ok_or_else(|| null("model"))?;
    let slack = slice_or_empty(slack, slack_len).ok_or_else(|| null("slack"))?;
    Ok((m, slack.to_vec()))
}

/// Greedy design of `budget` sensors for a dense-core model. `slack` may be null with
/// `slack_len = 0`, otherwise it holds one extra minimum per domain.
///
/// # Safety
/// `model` must be a live handle, `slack` must hold `slack_len` entries and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_greedy_dense(
    model: *const KsModel,
    budget: usize,
    slack: *const usize,
    slack_len: usize,
    out: *mut *mut KsDesign,
) -> KsStatus {
    guard(|| {
        let (m, slack) = design_args(model, slack, slack_len, out)?;
        let trace = greedy_dense(&m.model, &DenseConstraints::new(budget).with_slack(slack))?;
        finish_design(&m.model, trace, out)
    })
}

/// Greedy design for a diagonal-core model. A negative `privileged` picks the default domain.
///
/// # Safety
/// Same as [`ks_greedy_dense`].
#[no_mangle]
pub unsafe extern "C" fn ks_greedy_diag(
    model: *const KsModel,
    budget: usize,
    privileged: isize,
    slack: *const usize,
    slack_len: usize,
    out: *mut *mut KsDesign,
) -> KsStatus {
    guard(|| {
        let (m, slack) = design_args(model, slack, slack_len, out)?;
        let mut cons = DiagConstraints::new(budget).with_slack(slack);
        if privileged >= 0 {
            cons = cons.with_privileged(privileged as usize);
        }
        let trace = greedy_diag(&m.model, &cons)?;
        finish_design(&m.model, trace, out)
    })
}

/// # Safety
/// `design` must come from a `ks_greedy_*` call and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ks_design_free(design: *mut KsDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

/// Copies the kept rows of `domain` (ascending) into `buf`. `len` always receives the count;
/// pass a null `buf` to query it.
///
/// # Safety
/// `design` must be a live handle, `buf` must hold `cap` entries unless null.
#[no_mangle]
pub unsafe extern "C" fn ks_design_kept(
    design: *const KsDesign,
    domain: usize,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> KsStatus {
    guard(|| {
        let d = design.as_ref().ok_or_else(|| null("design"))?;
        let len = len.as_mut().ok_or_else(|| null("len"))?;
        let kept = d.trace.selection.kept();
        let rows = kept.get(domain).ok_or_else(|| {
            Fail(KsStatus::InvalidArgument, format!("domain {domain} out of range ({} domains)", kept.len()))
        })?;
        *len = rows.len();
        if buf.is_null() {
            return Ok(());
        }
        if cap < rows.len() {
            return Err(Fail(KsStatus::BufferTooSmall, format!("need {} entries, got {cap}", rows.len())));
        }
        slice::from_raw_parts_mut(buf, rows.len()).copy_from_slice(rows);
        Ok(())
    })
}

/// Final greedy objective (`G` or `Q`), NaN for a null handle.
///
/// # Safety
/// `design` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ks_design_objective(design: *const KsDesign) -> f64 {
    design.as_ref().map_or(f64::NAN, |d| d.trace.objective_final)
}

/// Estimation metrics of the sampled system.
///
/// # Safety
/// `design` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ks_design_metrics(design: *const KsDesign, out: *mut KsMetrics) -> KsStatus {
    guard(|| {
        let d = design.as_ref().ok_or_else(|| null("design"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let m = metrics(&d.sampled)?;
        *out = KsMetrics {
            mse: m.mse,
            fp: m.fp,
            lambda_min: m.lambda_min,
            lambda_max: m.lambda_max,
            sensors: m.sensors,
            samples: m.samples,
            unidentifiable: m.unidentifiable,
        };
        Ok(())
    })
}

/// Least-squares core estimate from the `samples` measurements on the design grid, ordered
/// row-major over the kept rows. `g_re`/`g_im` receive `core_len` values; `g_im` may be null.
///
/// # Safety
/// Input arrays must hold `len` values and outputs `core_len` values.
#[no_mangle]
pub unsafe extern "C" fn ks_estimate(
    design: *const KsDesign,
    y_re: *const f64,
    y_im: *const f64,
    len: usize,
    g_re: *mut f64,
    g_im: *mut f64,
    core_len: usize,
) -> KsStatus {
    guard(|| {
        let d = design.as_ref().ok_or_else(|| null("design"))?;
        let est = d.estimator.as_ref().ok_or_else(|| {
            Fail(KsStatus::Unidentifiable, "sampled system is rank deficient".into())
        })?;
        let y = complex_vec(y_re, y_im, len)?;
        let g = est.estimate(&y)?;
        if core_len != g.len() {
            return Err(Fail(KsStatus::BufferTooSmall, format!("core has {} coefficients, got {core_len}", g.len())));
        }
        if g_re.is_null() {
            return Err(null("g_re"));
        }
        for (k, v) in g.as_slice().iter().enumerate() {
            *g_re.add(k) = v.re;
            if !g_im.is_null() {
                *g_im.add(k) = v.im;
            }
        }
        Ok(())
    })
}

/// Greedy trace as JSON. Free the string with [`ks_string_free`].
///
/// # Safety
/// `design` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ks_design_to_json(design: *const KsDesign, out: *mut *mut c_char) -> KsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let d = design.as_ref().ok_or_else(|| null("design"))?;
        let json = d.trace.to_json()?;
        *out = CString::new(json)
            .map_err(|e| Fail(KsStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ks_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
