//! C ABI over `mvpareto`.
//!
//! Every function returns an [`MvpStatus`] and writes results through out
//! pointers. A portfolio lives behind an opaque [`MvpPortfolio`] handle that
//! the caller releases with [`mvp_portfolio_free`]. Coordinates are 1-based,
//! as in the Rust API. After a failure, [`mvp_last_error_message`] returns a
//! description for the calling thread. Panics never cross the boundary; they
//! become `MVP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use mvpareto::dist::{
    centred_regression, conditional_ddf_eq, conditional_ddf_gt, correlation, covariance, joint_ddf,
    joint_pdf, marginal_ddf, marginal_mean, marginal_var,
};
use mvpareto::extremes::{maxima_ddf, minima_ddf};
use mvpareto::risk::{
    cte_marginal, cte_maxima, cte_minima, economic_cte, var_extreme, var_marginal, ExtremeTarget,
};
use mvpareto::sim::{sample, Representation};
use mvpareto::{Error, ExposureMatrix, ExposurePortfolio, Preset};

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    CoordinateOutOfRange = 4,
    InfiniteMoment = 5,
    NonConvergence = 6,
    Guard = 7,
    InsufficientSample = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Named exposure patterns.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvpPreset {
    Arnold = 0,
    Independent = 1,
    FlexibleI = 2,
    FlexibleII = 3,
    Example13 = 4,
}

/// Sampling representation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvpRepresentation {
    BackgroundRisk = 0,
    CommonShock = 1,
}

/// Opaque portfolio handle.
pub struct MvpPortfolio(ExposurePortfolio);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(MvpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) => MvpStatus::InvalidArgument,
            Error::Dimension(_) => MvpStatus::Dimension,
            Error::CoordinateOutOfRange { .. } => MvpStatus::CoordinateOutOfRange,
            Error::InfiniteMoment { .. } => MvpStatus::InfiniteMoment,
            Error::NonConvergence(_) => MvpStatus::NonConvergence,
            Error::Guard(_) => MvpStatus::Guard,
            Error::InsufficientSample(_) => MvpStatus::InsufficientSample,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MvpStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, records any failure for the thread and maps it to a status.
fn call(body: impl FnOnce() -> Result<(), Failure>) -> MvpStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure(MvpStatus::Panic, format!("panic: {msg}")))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            MvpStatus::Ok
        }
        Err(Failure(status, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            status
        }
    }
}

unsafe fn portfolio<'a>(p: *const MvpPortfolio) -> Result<&'a ExposurePortfolio, Failure> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("portfolio"))
}

unsafe fn input<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn emit(p: ExposurePortfolio, out: *mut *mut MvpPortfolio) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    out.write(Box::into_raw(Box::new(MvpPortfolio(p))));
    Ok(())
}

/// Builds a portfolio from an `n × (n+1)` row-major 0/1 exposure matrix,
/// `n` scales and `n + 1` factor shapes.
///
/// # Safety
/// `exposure` must point to `n * (n + 1)` bytes, `sigma` to `n` doubles,
/// `gamma` to `n + 1` doubles, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_portfolio_new(
    n: usize,
    exposure: *const u8,
    sigma: *const f64,
    gamma: *const f64,
    out: *mut *mut MvpPortfolio,
) -> MvpStatus {
    call(|| {
        let c = input(exposure, n * (n + 1), "exposure")?;
        let rows: Vec<Vec<u8>> = c.chunks(n + 1).map(<[u8]>::to_vec).collect();
        let c = ExposureMatrix::new(&rows)?;
        let p = ExposurePortfolio::new(
            c,
            input(sigma, n, "sigma")?.to_vec(),
            input(gamma, n + 1, "gamma")?.to_vec(),
        )?;
        emit(p, out)
    })
}

/// Builds a portfolio from a named exposure pattern.
///
/// # Safety
/// `sigma` must point to `n` doubles, `gamma` to `n + 1` doubles, and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_portfolio_preset(
    kind: MvpPreset,
    n: usize,
    sigma: *const f64,
    gamma: *const f64,
    out: *mut *mut MvpPortfolio,
) -> MvpStatus {
    call(|| {
        let kind = match kind {
            MvpPreset::Arnold => Preset::Arnold,
            MvpPreset::Independent => Preset::Independent,
            MvpPreset::FlexibleI => Preset::FlexibleI,
            MvpPreset::FlexibleII => Preset::FlexibleII,
            MvpPreset::Example13 => Preset::Example13,
        };
        let p = mvpareto::preset(
            kind,
            n,
            input(sigma, n, "sigma")?,
            input(gamma, n + 1, "gamma")?,
        )?;
        emit(p, out)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvp_portfolio_free(p: *mut MvpPortfolio) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of risks.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_portfolio_dim(p: *const MvpPortfolio, out: *mut usize) -> MvpStatus {
    call(|| write(out, portfolio(p)?.n()))
}

/// Tail index of every margin, written to `out[0..n]`.
///
/// # Safety
/// `p` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mvp_marginal_indices(
    p: *const MvpPortfolio,
    out: *mut f64,
    len: usize,
) -> MvpStatus {
    call(|| {
        let idx = portfolio(p)?.marginal_indices();
        if len < idx.len() {
            return Err(Failure(
                MvpStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", idx.len()),
            ));
        }
        if out.is_null() {
            return Err(null("output buffer"));
        }
        slice::from_raw_parts_mut(out, idx.len()).copy_from_slice(idx);
        Ok(())
    })
}

/// Joint survival `P[X_1 > x_1, ..., X_n > x_n]`.
///
/// # Safety
/// `x` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_joint_ddf(
    p: *const MvpPortfolio,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, joint_ddf(portfolio(p)?, input(x, len, "x")?)?))
}

/// Joint density.
///
/// # Safety
/// `x` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_joint_pdf(
    p: *const MvpPortfolio,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, joint_pdf(portfolio(p)?, input(x, len, "x")?)?))
}

/// Marginal survival of risk `i`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_marginal_ddf(
    p: *const MvpPortfolio,
    i: usize,
    x: f64,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, marginal_ddf(portfolio(p)?, i, x)?))
}

/// Mean of risk `i`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_marginal_mean(
    p: *const MvpPortfolio,
    i: usize,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, marginal_mean(portfolio(p)?, i)?))
}

/// Variance of risk `i`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_marginal_var(
    p: *const MvpPortfolio,
    i: usize,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, marginal_var(portfolio(p)?, i)?))
}

/// Covariance of risks `k` and `l`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_covariance(
    p: *const MvpPortfolio,
    k: usize,
    l: usize,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, covariance(portfolio(p)?, k, l)?))
}

/// Pearson correlation of risks `k` and `l`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_correlation(
    p: *const MvpPortfolio,
    k: usize,
    l: usize,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, correlation(portfolio(p)?, k, l)?))
}

/// `P[X_k > x_k | X_l = x_l]`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_conditional_ddf_eq(
    p: *const MvpPortfolio,
    k: usize,
    l: usize,
    x_k: f64,
    x_l: f64,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, conditional_ddf_eq(portfolio(p)?, k, l, x_k, x_l)?))
}

/// `P[X_k > x_k | X_l > x_l]`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_conditional_ddf_gt(
    p: *const MvpPortfolio,
    k: usize,
    l: usize,
    x_k: f64,
    x_l: f64,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, conditional_ddf_gt(portfolio(p)?, k, l, x_k, x_l)?))
}

/// `E[X_k | X_l = x_l] - E[X_k]`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_centred_regression(
    p: *const MvpPortfolio,
    k: usize,
    l: usize,
    x_l: f64,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, centred_regression(portfolio(p)?, k, l, x_l)?))
}

/// Survival of the minimum over `subset` (1-based coordinates). An empty
/// subset means every risk.
///
/// # Safety
/// `subset` must point to `len` entries and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_minima_ddf(
    p: *const MvpPortfolio,
    subset: *const usize,
    len: usize,
    x: f64,
    out: *mut f64,
) -> MvpStatus {
    call(|| {
        let p = portfolio(p)?;
        let subset = subset_or_all(p, input(subset, len, "subset")?);
        write(out, minima_ddf(p, &subset, x)?)
    })
}

fn subset_or_all(p: &ExposurePortfolio, subset: &[usize]) -> Vec<usize> {
    if subset.is_empty() {
        (1..=p.n()).collect()
    } else {
        subset.to_vec()
    }
}

/// Survival of the maximum over every risk.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_maxima_ddf(
    p: *const MvpPortfolio,
    x: f64,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, maxima_ddf(portfolio(p)?, x)?))
}

/// What a risk measure is taken of.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvpTarget {
    /// Risk `index`.
    Margin = 0,
    /// Minimum over every risk.
    Minima = 1,
    /// Maximum over every risk.
    Maxima = 2,
}

/// Value at risk at level `q`. `index` is used by `Margin` only.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_var(
    p: *const MvpPortfolio,
    target: MvpTarget,
    index: usize,
    q: f64,
    out: *mut f64,
) -> MvpStatus {
    call(|| {
        let p = portfolio(p)?;
        let v = match target {
            MvpTarget::Margin => var_marginal(p, index, q)?,
            MvpTarget::Minima => var_extreme(p, &ExtremeTarget::Minima(subset_or_all(p, &[])), q)?,
            MvpTarget::Maxima => var_extreme(p, &ExtremeTarget::Maxima, q)?,
        };
        write(out, v)
    })
}

/// Conditional tail expectation at level `q`. `index` is used by `Margin` only.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_cte(
    p: *const MvpPortfolio,
    target: MvpTarget,
    index: usize,
    q: f64,
    out: *mut f64,
) -> MvpStatus {
    call(|| {
        let p = portfolio(p)?;
        let v = match target {
            MvpTarget::Margin => cte_marginal(p, index, q)?,
            MvpTarget::Minima => cte_minima(p, &subset_or_all(p, &[]), q)?,
            MvpTarget::Maxima => cte_maxima(p, q)?,
        };
        write(out, v)
    })
}

/// `E[X_k | X_l > VaR_q(X_l)]`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_economic_cte(
    p: *const MvpPortfolio,
    k: usize,
    l: usize,
    q: f64,
    out: *mut f64,
) -> MvpStatus {
    call(|| write(out, economic_cte(portfolio(p)?, k, l, q)?))
}

/// Scale whose Pareto-II margin with tail index `gamma_star` defaults before
/// `horizon` with probability `p_default`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvp_calibrate_sigma(
    p_default: f64,
    horizon: f64,
    gamma_star: f64,
    out: *mut f64,
) -> MvpStatus {
    call(|| {
        write(
            out,
            mvpareto::cli::calibrate_sigma(p_default, horizon, gamma_star)?,
        )
    })
}

/// Draws `m` replicates into `out` as an `m × n` row-major array.
///
/// # Safety
/// `p` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mvp_sample(
    p: *const MvpPortfolio,
    representation: MvpRepresentation,
    m: usize,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> MvpStatus {
    call(|| {
        let p = portfolio(p)?;
        let need = m
            .checked_mul(p.n())
            .ok_or_else(|| Failure(MvpStatus::Guard, "m * n overflows".into()))?;
        if len < need {
            return Err(Failure(
                MvpStatus::BufferTooSmall,
                format!("need {need} doubles, got {len}"),
            ));
        }
        if out.is_null() {
            return Err(null("output buffer"));
        }
        let rep = match representation {
            MvpRepresentation::BackgroundRisk => Representation::BackgroundRisk,
            MvpRepresentation::CommonShock => Representation::CommonShock,
        };
        let batch = sample(p, rep, m, seed)?;
        let dst = slice::from_raw_parts_mut(out, need);
        for (chunk, row) in dst.chunks_mut(p.n().max(1)).zip(batch.rows()) {
            chunk.copy_from_slice(row);
        }
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length in bytes (without the terminator), 0 when the last call
/// succeeded.
///
/// # Safety
/// `buf` must hold `len` bytes, or be null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn mvp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            buf.add(n).write(0);
        }
        msg.len()
    })
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn mvp_status_name(status: MvpStatus) -> *const c_char {
    let name: &'static CStr = match status {
        MvpStatus::Ok => c"ok",
        MvpStatus::NullPointer => c"null pointer",
        MvpStatus::InvalidArgument => c"invalid argument",
        MvpStatus::Dimension => c"dimension mismatch",
        MvpStatus::CoordinateOutOfRange => c"coordinate out of range",
        MvpStatus::InfiniteMoment => c"infinite moment",
        MvpStatus::NonConvergence => c"non-convergence",
        MvpStatus::Guard => c"size guard exceeded",
        MvpStatus::InsufficientSample => c"insufficient sample",
        MvpStatus::BufferTooSmall => c"buffer too small",
        MvpStatus::Panic => c"panic",
    };
    name.as_ptr()
}
