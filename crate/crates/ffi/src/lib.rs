//! C ABI over `lai-gpr`.
//!
//! Every fallible function returns a [`LaiStatus`]. On failure a description
//! is kept per thread and can be read with [`lai_last_error_message`] until
//! the next call on that thread. Models are opaque [`LaiModel`] handles owned
//! by the caller and released with [`lai_model_free`]. A handle may be used
//! for prediction from several threads at once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use lai_gpr::evaluation::compute_stats;
use lai_gpr::gp::{fit, FitConfig, TrainedModel, TrainingData, DEFAULT_SEED};
use lai_gpr::Error;
use nalgebra::DMatrix;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Format = 5,
    InsufficientData = 6,
    Panic = 7,
}

/// Trained GP model.
pub struct LaiModel {
    inner: TrainedModel,
}

/// Validation statistics. `r2` is meaningful only when `r2_valid` is 1.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaiStats {
    pub rmse: f64,
    pub mae: f64,
    pub me: f64,
    pub r2: f64,
    pub r2_valid: i32,
    pub n: usize,
}

/// Optimizer settings. A `fixed_*` value that is not a positive finite
/// number leaves that hyperparameter free.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaiFitOptions {
    pub restarts: u32,
    pub max_iterations: u32,
    pub gradient_tolerance: f64,
    pub seed: u64,
    pub fixed_lengthscale: f64,
    pub fixed_signal_amp: f64,
    pub fixed_noise_std: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

type Failure = (LaiStatus, String);

fn from_error(e: Error) -> Failure {
    let status = match &e {
        Error::Usage(_) => LaiStatus::InvalidArgument,
        Error::Numerical { .. } | Error::TrainingFailed { .. } => LaiStatus::Numerical,
        Error::InsufficientData(_) => LaiStatus::InsufficientData,
        Error::Load { .. } => LaiStatus::Format,
        Error::Io { .. } => LaiStatus::Io,
    };
    (status, e.to_string())
}

fn null(what: &str) -> Failure {
    (LaiStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    (LaiStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LaiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LaiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            LaiStatus::Panic
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| invalid("path is not valid UTF-8"))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn model_arg<'a>(model: *const LaiModel) -> Result<&'a TrainedModel, Failure> {
    model
        .as_ref()
        .map(|m| &m.inner)
        .ok_or_else(|| null("model"))
}

fn boxed(model: TrainedModel) -> *mut LaiModel {
    Box::into_raw(Box::new(LaiModel { inner: model }))
}

/// Library and file-format versions, as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lai_version() -> *const c_char {
    static VERSION: &str = concat!(
        "lai-gpr ",
        env!("CARGO_PKG_VERSION"),
        " (model format gpr-lai-model/1, raster format gpr-lai-raster/1)\0"
    );
    VERSION.as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn lai_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn lai_fit_options_default() -> LaiFitOptions {
    let d = FitConfig::default();
    LaiFitOptions {
        restarts: d.restarts as u32,
        max_iterations: d.max_iterations as u32,
        gradient_tolerance: d.gradient_tolerance,
        seed: DEFAULT_SEED,
        fixed_lengthscale: 0.0,
        fixed_signal_amp: 0.0,
        fixed_noise_std: 0.0,
    }
}

fn fixed(v: f64) -> Option<f64> {
    (v.is_finite() && v > 0.0).then_some(v)
}

/// Fits a model to `n` rows of `d` raw band values (row-major) and `n`
/// targets. `options` may be NULL for defaults.
///
/// # Safety
/// `inputs` must point to `n * d` doubles, `targets` to `n` doubles, and
/// `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn lai_model_fit(
    inputs: *const f64,
    targets: *const f64,
    n: usize,
    d: usize,
    options: *const LaiFitOptions,
    out: *mut *mut LaiModel,
) -> LaiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if n == 0 || d == 0 {
            return Err(invalid("n and d must be positive"));
        }
        let len = n.checked_mul(d).ok_or_else(|| invalid("n * d overflows"))?;
        let x = slice_arg(inputs, len, "inputs")?;
        let y = slice_arg(targets, n, "targets")?;
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| lai_fit_options_default());
        let config = FitConfig {
            restarts: o.restarts as usize,
            max_iterations: o.max_iterations as usize,
            gradient_tolerance: o.gradient_tolerance,
            seed: o.seed,
            fixed_lengthscale: fixed(o.fixed_lengthscale),
            fixed_signal_amp: fixed(o.fixed_signal_amp),
            fixed_noise_std: fixed(o.fixed_noise_std),
        };
        let data =
            TrainingData::from_raw(&DMatrix::from_row_slice(n, d, x), y).map_err(from_error)?;
        let model = fit(&data, &config).map_err(from_error)?;
        *out = boxed(model);
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lai_model_load(path: *const c_char, out: *mut *mut LaiModel) -> LaiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = path_arg(path)?;
        let model = TrainedModel::load(&path).map_err(from_error)?;
        *out = boxed(model);
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lai_model_save(model: *const LaiModel, path: *const c_char) -> LaiStatus {
    guard(|| {
        let m = model_arg(model)?;
        let path = path_arg(path)?;
        m.save(&path).map_err(from_error)
    })
}

/// Number of bands the model expects; 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lai_model_input_dim(model: *const LaiModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.input_dim())
}

/// Predictive mean and variance (including observation noise) at one pixel.
///
/// # Safety
/// `x` must point to `d` doubles; `mean` and `variance` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lai_model_predict(
    model: *const LaiModel,
    x: *const f64,
    d: usize,
    mean: *mut f64,
    variance: *mut f64,
) -> LaiStatus {
    lai_model_predict_batch(model, x, 1, d, mean, variance)
}

/// Row-major batch of `n` pixels with `d` bands each.
///
/// # Safety
/// `x` must point to `n * d` doubles; `means` and `variances` to `n`
/// writable doubles each.
#[no_mangle]
pub unsafe extern "C" fn lai_model_predict_batch(
    model: *const LaiModel,
    x: *const f64,
    n: usize,
    d: usize,
    means: *mut f64,
    variances: *mut f64,
) -> LaiStatus {
    guard(|| {
        let m = model_arg(model)?;
        if d != m.input_dim() {
            return Err(invalid(format!("d = {d}, model expects {}", m.input_dim())));
        }
        if means.is_null() || variances.is_null() {
            return Err(null("output buffer"));
        }
        let len = n.checked_mul(d).ok_or_else(|| invalid("n * d overflows"))?;
        let xs = slice_arg(x, len, "x")?;
        let means = std::slice::from_raw_parts_mut(means, n);
        let variances = std::slice::from_raw_parts_mut(variances, n);
        for (i, row) in xs.chunks_exact(d).enumerate() {
            let p = m.predict(row).map_err(from_error)?;
            means[i] = p.mean;
            variances[i] = p.variance;
        }
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lai_model_free(model: *mut LaiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// RMSE, MAE, signed mean error, and squared Pearson correlation of
/// `predicted` against `observed`.
///
/// # Safety
/// Both arrays must hold `n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lai_compute_stats(
    predicted: *const f64,
    observed: *const f64,
    n: usize,
    out: *mut LaiStats,
) -> LaiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = slice_arg(predicted, n, "predicted")?;
        let o = slice_arg(observed, n, "observed")?;
        let s = compute_stats(p, o).map_err(from_error)?;
        *out = LaiStats {
            rmse: s.rmse,
            mae: s.mae,
            me: s.me,
            r2: s.r2.unwrap_or(f64::NAN),
            r2_valid: s.r2.is_some() as i32,
            n: s.n,
        };
        Ok(())
    })
}
