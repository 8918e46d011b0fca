//! C interface to the order book, frozen policies and the statistics routines.
//!
//! Objects cross the boundary as opaque handles created by `*_new` / `*_load` and
//! released by the matching `*_free`. Every fallible function returns a [`LobStatus`]
//! and writes its result through an out-pointer.

use std::ffi::{c_char, CStr};
use std::path::Path;
use std::slice;

use lobmarl::agent::{Observation, OBS_DIM};
use lobmarl::market::{Order, OrderBook};
use lobmarl::ot::{ot_distance, PointCloud};
use lobmarl::policy::{Checkpoint, FrozenPolicy, ACTION_DIM};
use lobmarl::sim::PolicyDriver;
use lobmarl::stylized::{excess_kurtosis, hill_tail_exponent};
use lobmarl::ModelError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LobStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientData = 3,
    Degenerate = 4,
    Io = 5,
    Checkpoint = 6,
}

impl From<&ModelError> for LobStatus {
    fn from(e: &ModelError) -> Self {
        match e {
            ModelError::InsufficientData { .. } | ModelError::EmptyInterval { .. } => LobStatus::InsufficientData,
            ModelError::Degenerate(_) => LobStatus::Degenerate,
            _ => LobStatus::InvalidArgument,
        }
    }
}

/// Opaque order book.
pub struct LobBook(OrderBook);

/// Opaque frozen policy loaded from a checkpoint.
pub struct LobPolicy {
    policy: FrozenPolicy,
    rng: ChaCha8Rng,
}

/// Static, NUL-terminated description of a status code.
#[no_mangle]
pub extern "C" fn lob_status_message(status: LobStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        LobStatus::Ok => b"ok\0",
        LobStatus::NullPointer => b"null pointer argument\0",
        LobStatus::InvalidArgument => b"invalid argument\0",
        LobStatus::InsufficientData => b"insufficient data\0",
        LobStatus::Degenerate => b"degenerate input\0",
        LobStatus::Io => b"i/o error\0",
        LobStatus::Checkpoint => b"invalid checkpoint\0",
    };
    s.as_ptr().cast()
}

/// Creates an empty book with the given tick size.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn lob_book_new(tick_size: f64, out: *mut *mut LobBook) -> LobStatus {
    if out.is_null() {
        return LobStatus::NullPointer;
    }
    match OrderBook::new(tick_size) {
        Ok(b) => {
            *out = Box::into_raw(Box::new(LobBook(b)));
            LobStatus::Ok
        }
        Err(e) => LobStatus::from(&e),
    }
}

/// # Safety
/// `book` must be null or a handle from [`lob_book_new`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn lob_book_free(book: *mut LobBook) {
    if !book.is_null() {
        drop(Box::from_raw(book));
    }
}

/// Submits a limit order (positive volume buys, negative sells) and reports the
/// number of trades and the volume executed.
///
/// # Safety
/// `book` must be a live handle; `trades` and `executed` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn lob_book_submit(
    book: *mut LobBook,
    agent_id: u64,
    signed_volume: i64,
    price: f64,
    step: u64,
    trades: *mut u64,
    executed: *mut i64,
) -> LobStatus {
    let Some(book) = book.as_mut() else {
        return LobStatus::NullPointer;
    };
    let order = match Order::new(agent_id as usize, signed_volume, price, step) {
        Ok(o) => o,
        Err(e) => return LobStatus::from(&e),
    };
    match book.0.submit(order) {
        Ok(fills) => {
            if !trades.is_null() {
                *trades = fills.len() as u64;
            }
            if !executed.is_null() {
                *executed = fills.iter().map(|t| t.volume).sum();
            }
            LobStatus::Ok
        }
        Err(e) => LobStatus::from(&e),
    }
}

/// Best bid and ask; a missing side is reported as NaN.
///
/// # Safety
/// `book` must be a live handle; `bid` and `ask` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lob_book_best_quotes(book: *const LobBook, bid: *mut f64, ask: *mut f64) -> LobStatus {
    let Some(book) = book.as_ref() else {
        return LobStatus::NullPointer;
    };
    if bid.is_null() || ask.is_null() {
        return LobStatus::NullPointer;
    }
    *bid = book.0.best_bid().unwrap_or(f64::NAN);
    *ask = book.0.best_ask().unwrap_or(f64::NAN);
    LobStatus::Ok
}

/// Number of resting orders, or 0 for a null handle.
///
/// # Safety
/// `book` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lob_book_order_count(book: *const LobBook) -> u64 {
    book.as_ref().map_or(0, |b| b.0.order_count() as u64)
}

/// Loads a policy checkpoint from a UTF-8 path.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn lob_policy_load(path: *const c_char, seed: u64, out: *mut *mut LobPolicy) -> LobStatus {
    if path.is_null() || out.is_null() {
        return LobStatus::NullPointer;
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return LobStatus::InvalidArgument;
    };
    match Checkpoint::load(Path::new(path)) {
        Ok(c) => {
            let policy = FrozenPolicy::new(c.params, c.normalizer);
            *out = Box::into_raw(Box::new(LobPolicy { policy, rng: ChaCha8Rng::seed_from_u64(seed) }));
            LobStatus::Ok
        }
        Err(lobmarl::PolicyError::Io(_)) => LobStatus::Io,
        Err(_) => LobStatus::Checkpoint,
    }
}

/// # Safety
/// `policy` must be null or a handle from [`lob_policy_load`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn lob_policy_free(policy: *mut LobPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Width of the policy's hidden layers, or 0 for a null handle.
///
/// # Safety
/// `policy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lob_policy_hidden_width(policy: *const LobPolicy) -> u64 {
    policy.as_ref().map_or(0, |p| p.policy.params.hidden_width() as u64)
}

/// Maps an 11-component raw observation to a 2-component action in [-1, 1]
/// (scaled volume, scaled margin). With `deterministic` set the distribution mean is
/// used, otherwise the handle's generator draws a sample.
///
/// # Safety
/// `obs` must point to 11 doubles and `action` to writable storage for 2.
#[no_mangle]
pub unsafe extern "C" fn lob_policy_act(
    policy: *mut LobPolicy,
    obs: *const f64,
    deterministic: bool,
    action: *mut f64,
) -> LobStatus {
    let Some(p) = policy.as_mut() else {
        return LobStatus::NullPointer;
    };
    if obs.is_null() || action.is_null() {
        return LobStatus::NullPointer;
    }
    let mut raw = [0.0; OBS_DIM];
    raw.copy_from_slice(slice::from_raw_parts(obs, OBS_DIM));
    if raw.iter().any(|x| !x.is_finite()) {
        return LobStatus::InvalidArgument;
    }
    p.policy.deterministic = deterministic;
    let d = p.policy.decide(0, &Observation(raw), &mut p.rng);
    let out = slice::from_raw_parts_mut(action, ACTION_DIM);
    out[0] = d.action.scaled_volume;
    out[1] = d.action.scaled_margin;
    LobStatus::Ok
}

unsafe fn input<'a>(data: *const f64, n: usize) -> Option<&'a [f64]> {
    if n == 0 {
        Some(&[])
    } else if data.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(data, n))
    }
}

fn write_result(r: Result<f64, ModelError>, out: *mut f64) -> LobStatus {
    match r {
        Ok(v) => {
            // SAFETY: callers check `out` before computing.
            unsafe { *out = v };
            LobStatus::Ok
        }
        Err(e) => LobStatus::from(&e),
    }
}

/// Excess kurtosis with population moments.
///
/// # Safety
/// `data` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lob_excess_kurtosis(data: *const f64, n: usize, out: *mut f64) -> LobStatus {
    match input(data, n) {
        Some(xs) if !out.is_null() => write_result(excess_kurtosis(xs), out),
        _ => LobStatus::NullPointer,
    }
}

/// Hill estimate of the tail exponent from the `k` largest samples.
///
/// # Safety
/// `data` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lob_hill_tail_exponent(data: *const f64, n: usize, k: usize, out: *mut f64) -> LobStatus {
    match input(data, n) {
        Some(xs) if !out.is_null() => write_result(hill_tail_exponent(xs, k), out),
        _ => LobStatus::NullPointer,
    }
}

/// Exact optimal-transport cost (squared Euclidean, uniform weights) between two point
/// clouds stored row-major with `dim` columns.
///
/// # Safety
/// `a` must point to `n_a * dim` doubles and `b` to `n_b * dim`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lob_ot_distance(
    a: *const f64,
    n_a: usize,
    b: *const f64,
    n_b: usize,
    dim: usize,
    out: *mut f64,
) -> LobStatus {
    if out.is_null() {
        return LobStatus::NullPointer;
    }
    let (Some(len_a), Some(len_b)) = (n_a.checked_mul(dim), n_b.checked_mul(dim)) else {
        return LobStatus::InvalidArgument;
    };
    let (Some(xa), Some(xb)) = (input(a, len_a), input(b, len_b)) else {
        return LobStatus::NullPointer;
    };
    if n_a == 0 || n_b == 0 {
        return LobStatus::InsufficientData;
    }
    let clouds = PointCloud::new(xa.to_vec(), dim).and_then(|ca| Ok((ca, PointCloud::new(xb.to_vec(), dim)?)));
    match clouds {
        Ok((ca, cb)) => write_result(ot_distance(&ca, &cb), out),
        Err(e) => LobStatus::from(&e),
    }
}
