//! C ABI for the market geometry library.
//!
//! The surface is a small set of `extern "C"` functions over two opaque
//! handle types: a reachable set built from the same JSON descriptions the
//! CLI consumes, and a fee-aware trading set derived from one. Every
//! fallible call returns a status code and writes its result through out
//! pointers; no Rust type crosses the boundary. Panics are caught at the
//! boundary and reported as [`CFMM_ERR_INTERNAL`].
//!
//! The matching header lives at `include/cfmmgeo.h`.

use std::ffi::CStr;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use cfmmgeo::numerics::Tolerance;
use cfmmgeo::reachable::{self, SharedSet};
use cfmmgeo::schema::parse_pool_spec;
use cfmmgeo::trade::{self, FeePoolTradingSet};
use cfmmgeo::Error;

/// Success.
pub const CFMM_OK: i32 = 0;
/// A required pointer was null.
pub const CFMM_ERR_NULL: i32 = 1;
/// The JSON description failed to parse or was not valid UTF-8.
pub const CFMM_ERR_PARSE: i32 = 2;
/// A domain precondition was violated (bad shape, reserves outside the
/// set, invalid parameter).
pub const CFMM_ERR_DOMAIN: i32 = 3;
/// An iterative routine did not converge within its budget.
pub const CFMM_ERR_NO_CONVERGENCE: i32 = 4;
/// The operation is not defined for this set or dimension.
pub const CFMM_ERR_UNSUPPORTED: i32 = 5;
/// An internal invariant failed; the out parameters are untouched.
pub const CFMM_ERR_INTERNAL: i32 = 6;

/// Opaque reachable set handle.
pub struct CfmmSet {
    inner: SharedSet,
}

/// Opaque trading set handle: a pool snapshot with reserves and a fee.
pub struct CfmmTrading {
    inner: FeePoolTradingSet,
}

fn status(e: &Error) -> i32 {
    match e {
        Error::Parse(_) => CFMM_ERR_PARSE,
        Error::NonBracketing
        | Error::NoBracketFound { .. }
        | Error::MaxIterExceeded { .. }
        | Error::RoutingNotConverged { .. } => CFMM_ERR_NO_CONVERGENCE,
        Error::Unsupported(_) => CFMM_ERR_UNSUPPORTED,
        _ => CFMM_ERR_DOMAIN,
    }
}

fn guarded<F: FnOnce() -> i32>(f: F) -> i32 {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(CFMM_ERR_INTERNAL)
}

/// Build a reachable set from a JSON pool description.
///
/// On success writes a handle to `out` and returns [`CFMM_OK`]; the handle
/// must be released with [`cfmm_set_free`].
///
/// # Safety
/// `json` must point to a NUL-terminated string and `out` to a writable
/// pointer slot; both must be non-null.
#[no_mangle]
pub unsafe extern "C" fn cfmm_set_from_json(json: *const c_char, out: *mut *mut CfmmSet) -> i32 {
    if json.is_null() || out.is_null() {
        return CFMM_ERR_NULL;
    }
    guarded(|| {
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(_) => return CFMM_ERR_PARSE,
        };
        let spec = match parse_pool_spec(text) {
            Ok(s) => s,
            Err(e) => return status(&e),
        };
        match spec.build(&Tolerance::default()) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(CfmmSet { inner: set }));
                CFMM_OK
            }
            Err(e) => status(&e),
        }
    })
}

/// Release a set handle. Null is ignored.
///
/// # Safety
/// `set` must be a pointer returned by [`cfmm_set_from_json`] that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn cfmm_set_free(set: *mut CfmmSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of assets the set prices.
///
/// # Safety
/// `set` must be a live handle from [`cfmm_set_from_json`].
#[no_mangle]
pub unsafe extern "C" fn cfmm_set_dim(set: *const CfmmSet) -> usize {
    if set.is_null() {
        return 0;
    }
    (*set).inner.dim()
}

/// Membership test. Writes 1 or 0 to `out`.
///
/// # Safety
/// `set` must be a live handle, `reserves` must point to `len` doubles,
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfmm_set_contains(
    set: *const CfmmSet,
    reserves: *const f64,
    len: usize,
    out: *mut i32,
) -> i32 {
    if set.is_null() || reserves.is_null() || out.is_null() {
        return CFMM_ERR_NULL;
    }
    guarded(|| {
        let r = std::slice::from_raw_parts(reserves, len);
        match reachable::contains((*set).inner.as_ref(), r) {
            Ok(member) => {
                *out = i32::from(member);
                CFMM_OK
            }
            Err(e) => status(&e),
        }
    })
}

/// Evaluate the trading function at `reserves`.
///
/// # Safety
/// `set` must be a live handle, `reserves` must point to `len` doubles,
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfmm_phi(
    set: *const CfmmSet,
    reserves: *const f64,
    len: usize,
    out: *mut f64,
) -> i32 {
    if set.is_null() || reserves.is_null() || out.is_null() {
        return CFMM_ERR_NULL;
    }
    guarded(|| {
        let r = std::slice::from_raw_parts(reserves, len);
        match reachable::phi((*set).inner.as_ref(), r, &Tolerance::default()) {
            Ok(phi) => {
                *out = phi;
                CFMM_OK
            }
            Err(e) => status(&e),
        }
    })
}

/// Evaluate the portfolio value at `prices`.
///
/// # Safety
/// `set` must be a live handle, `prices` must point to `len` doubles, and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfmm_portfolio_value(
    set: *const CfmmSet,
    prices: *const f64,
    len: usize,
    out: *mut f64,
) -> i32 {
    if set.is_null() || prices.is_null() || out.is_null() {
        return CFMM_ERR_NULL;
    }
    guarded(|| {
        let c = std::slice::from_raw_parts(prices, len);
        match reachable::portfolio_value((*set).inner.as_ref(), c, &Tolerance::default()) {
            Ok((value, _)) => {
                *out = value;
                CFMM_OK
            }
            Err(e) => status(&e),
        }
    })
}

/// Marginal prices at `reserves`, normalized so the last asset is the
/// numeraire. Writes `len` doubles to `out`.
///
/// # Safety
/// `set` must be a live handle; `reserves` and `out` must each point to
/// `len` doubles, with `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cfmm_marginal_prices(
    set: *const CfmmSet,
    reserves: *const f64,
    len: usize,
    out: *mut f64,
) -> i32 {
    if set.is_null() || reserves.is_null() || out.is_null() {
        return CFMM_ERR_NULL;
    }
    guarded(|| {
        let r = std::slice::from_raw_parts(reserves, len);
        match reachable::marginal_prices((*set).inner.as_ref(), r, &Tolerance::default()) {
            Ok(prices) => {
                if prices.len() != len {
                    return CFMM_ERR_INTERNAL;
                }
                std::ptr::copy_nonoverlapping(prices.as_ptr(), out, len);
                CFMM_OK
            }
            Err(e) => status(&e),
        }
    })
}

/// Snapshot a pool into a trading set at given reserves with fee retention
/// `gamma` in [0, 1].
///
/// On success writes a handle to `out`; release it with
/// [`cfmm_trading_free`]. The set handle stays owned by the caller and may
/// be freed independently afterwards.
///
/// # Safety
/// `set` must be a live handle, `reserves` must point to `len` doubles,
/// and `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn cfmm_trading_new(
    set: *const CfmmSet,
    reserves: *const f64,
    len: usize,
    gamma: f64,
    out: *mut *mut CfmmTrading,
) -> i32 {
    if set.is_null() || reserves.is_null() || out.is_null() {
        return CFMM_ERR_NULL;
    }
    guarded(|| {
        let r = std::slice::from_raw_parts(reserves, len).to_vec();
        match FeePoolTradingSet::new((*set).inner.clone(), r, gamma) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(CfmmTrading { inner: t }));
                CFMM_OK
            }
            Err(e) => status(&e),
        }
    })
}

/// Release a trading handle. Null is ignored.
///
/// # Safety
/// `t` must be a pointer returned by [`cfmm_trading_new`] that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn cfmm_trading_free(t: *mut CfmmTrading) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Feasibility of a trade (positive entries received by the trader).
/// Writes 1 or 0 to `out`.
///
/// # Safety
/// `t` must be a live handle, `delta` must point to `len` doubles, and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfmm_trade_feasible(
    t: *const CfmmTrading,
    delta: *const f64,
    len: usize,
    out: *mut i32,
) -> i32 {
    if t.is_null() || delta.is_null() || out.is_null() {
        return CFMM_ERR_NULL;
    }
    guarded(|| {
        let d = std::slice::from_raw_parts(delta, len);
        match trade::trade_feasible(&(*t).inner, d) {
            Ok(feasible) => {
                *out = i32::from(feasible);
                CFMM_OK
            }
            Err(e) => status(&e),
        }
    })
}

/// Convex trading function of a trade: the smallest downscaling that makes
/// it acceptable.
///
/// # Safety
/// `t` must be a live handle, `delta` must point to `len` doubles, and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfmm_trade_phi(
    t: *const CfmmTrading,
    delta: *const f64,
    len: usize,
    out: *mut f64,
) -> i32 {
    if t.is_null() || delta.is_null() || out.is_null() {
        return CFMM_ERR_NULL;
    }
    guarded(|| {
        let d = std::slice::from_raw_parts(delta, len);
        match trade::trade_phi(&(*t).inner, d, &Tolerance::default()) {
            Ok(phi) => {
                *out = phi;
                CFMM_OK
            }
            Err(e) => status(&e),
        }
    })
}

/// Most profitable single trade against external prices. Writes the profit
/// to `out_profit` and the trade to `out_trade` (`len` doubles).
///
/// # Safety
/// `t` must be a live handle; `prices` and `out_trade` must each point to
/// `len` doubles; `out_profit` and `out_trade` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfmm_arb(
    t: *const CfmmTrading,
    prices: *const f64,
    len: usize,
    out_profit: *mut f64,
    out_trade: *mut f64,
) -> i32 {
    if t.is_null() || prices.is_null() || out_profit.is_null() || out_trade.is_null() {
        return CFMM_ERR_NULL;
    }
    guarded(|| {
        let c = std::slice::from_raw_parts(prices, len);
        match trade::arb(&(*t).inner, c, &Tolerance::default()) {
            Ok((profit, delta)) => {
                if delta.len() != len {
                    return CFMM_ERR_INTERNAL;
                }
                *out_profit = profit;
                std::ptr::copy_nonoverlapping(delta.as_ptr(), out_trade, len);
                CFMM_OK
            }
            Err(e) => status(&e),
        }
    })
}
