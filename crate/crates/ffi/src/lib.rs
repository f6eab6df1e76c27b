//! C ABI over `shuffle-spectra`.
//!
//! Every function returns an [`SsStatus`]; results go through out-pointers.
//! On failure a message is kept per thread and can be read with
//! [`ss_last_error`]. Statistics are opaque handles created by
//! `ss_statistic_new_*` and released with [`ss_statistic_free`]. Panics are
//! caught at the boundary and reported as [`SsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use shuffle_spectra::exact::exact_mixing_time;
use shuffle_spectra::marking::run_until_uniform_time;
use shuffle_spectra::spectral::{solve_zeta, DEFAULT_TOL};
use shuffle_spectra::statistic::{
    evaluate_f, predicted_mean, second_moment_bound, stationary_second_moment, tv_lower_bound,
    TestStatistic,
};
use shuffle_spectra::{Error, Permutation, RuleKind, ShuffleRule};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SizeMismatch = 3,
    NoConvergence = 4,
    BufferTooSmall = 5,
    Internal = 6,
    Panic = 7,
}

/// Location rules accepted across the boundary. Functions take the rule
/// as a `uint32_t` holding one of these values.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsRule {
    Cyclic = 0,
    Star = 1,
    UniformIid = 2,
    PakMemoryTwo = 3,
}

fn rule_kind(code: u32) -> Result<RuleKind, (SsStatus, String)> {
    Ok(match code {
        c if c == SsRule::Cyclic as u32 => RuleKind::Cyclic,
        c if c == SsRule::Star as u32 => RuleKind::Star,
        c if c == SsRule::UniformIid as u32 => RuleKind::UniformIid,
        c if c == SsRule::PakMemoryTwo as u32 => RuleKind::PakMemoryTwo,
        c => return Err((SsStatus::InvalidArgument, format!("unknown rule code {c}"))),
    })
}

/// Opaque test statistic handle.
pub struct SsStatistic {
    inner: TestStatistic,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SsStatus {
    match e {
        Error::SizeMismatch { .. } => SsStatus::SizeMismatch,
        Error::NoConvergence { .. } | Error::RootNotLocalized { .. } | Error::TrivialRoot => {
            SsStatus::NoConvergence
        }
        Error::Io(_) | Error::InconsistentState(_) => SsStatus::Internal,
        _ => SsStatus::InvalidArgument,
    }
}

/// Runs `f`, records any error or panic, and maps it to a status.
fn guard<F: FnOnce() -> Result<(), (SsStatus, String)>>(f: F) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside shuffle-spectra".into());
            SsStatus::Panic
        }
    }
}

fn lib<T>(r: shuffle_spectra::Result<T>) -> Result<T, (SsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SsStatus, String) {
    (SsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn out<T>(p: *mut T, what: &str, v: T) -> Result<(), (SsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn stat<'a>(h: *const SsStatistic) -> Result<&'a TestStatistic, (SsStatus, String)> {
    h.as_ref().map(|s| &s.inner).ok_or_else(|| null("statistic handle"))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The `m`-th root of `e^z - z - 1` in the upper half plane (`m >= 1`).
///
/// # Safety
/// `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_solve_zeta(m: u32, re: *mut f64, im: *mut f64) -> SsStatus {
    guard(|| {
        let z = lib(solve_zeta(m, DEFAULT_TOL))?;
        out(re, "re", z.re)?;
        out(im, "im", z.im)
    })
}

/// Statistic for branch `m` at deck size `n`.
///
/// # Safety
/// `handle` must be valid for writes. Free the result with
/// [`ss_statistic_free`].
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_new_branch(
    n: usize,
    m: u32,
    handle: *mut *mut SsStatistic,
) -> SsStatus {
    guard(|| {
        let s = lib(TestStatistic::branch(n, m))?;
        out(handle, "handle", Box::into_raw(Box::new(SsStatistic { inner: s })))
    })
}

/// Statistic from the exact slowest nontrivial eigenvalue (`3 <= n <= 64`).
///
/// # Safety
/// As for [`ss_statistic_new_branch`].
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_new_slowest_exact(
    n: usize,
    handle: *mut *mut SsStatistic,
) -> SsStatus {
    guard(|| {
        let s = lib(TestStatistic::slowest_exact(n))?;
        out(handle, "handle", Box::into_raw(Box::new(SsStatistic { inner: s })))
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `handle` must come from `ss_statistic_new_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_free(handle: *mut SsStatistic) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be live; `n` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_n(handle: *const SsStatistic, n: *mut usize) -> SsStatus {
    guard(|| out(n, "n", stat(handle)?.n()))
}

/// # Safety
/// `handle` must be live; `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_lambda(
    handle: *const SsStatistic,
    re: *mut f64,
    im: *mut f64,
) -> SsStatus {
    guard(|| {
        let l = stat(handle)?.lambda();
        out(re, "re", l.re)?;
        out(im, "im", l.im)
    })
}

/// `||f||_2` and `||f||_inf`.
///
/// # Safety
/// `handle` must be live; `norm2` and `norm_inf` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_norms(
    handle: *const SsStatistic,
    norm2: *mut f64,
    norm_inf: *mut f64,
) -> SsStatus {
    guard(|| {
        let ef = stat(handle)?.eigenfunction();
        out(norm2, "norm2", ef.norm2)?;
        out(norm_inf, "norm_inf", ef.norm_inf)
    })
}

/// Copies the eigenfunction into `re[0..n]` and `im[0..n]`; `len` is the
/// capacity of each buffer.
///
/// # Safety
/// `handle` must be live; `re` and `im` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_eigenfunction(
    handle: *const SsStatistic,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SsStatus {
    guard(|| {
        let s = stat(handle)?;
        if re.is_null() || im.is_null() {
            return Err(null("buffer"));
        }
        if len < s.n() {
            return Err((SsStatus::BufferTooSmall, format!("need {} entries, got {len}", s.n())));
        }
        for (k, v) in s.eigenfunction().values.iter().enumerate() {
            re.add(k).write(v.re);
            im.add(k).write(v.im);
        }
        Ok(())
    })
}

/// `F(sigma)` for `sigma` given as a card -> state array of length `len`
/// (renewal frame).
///
/// # Safety
/// `handle` must be live; `card_to_state` must be valid for `len` reads;
/// `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_evaluate(
    handle: *const SsStatistic,
    card_to_state: *const usize,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> SsStatus {
    guard(|| {
        let s = stat(handle)?;
        if card_to_state.is_null() {
            return Err(null("card_to_state"));
        }
        let states = std::slice::from_raw_parts(card_to_state, len).to_vec();
        let perm = lib(Permutation::from_card_to_state(states))?;
        let v = lib(evaluate_f(&perm, s))?;
        out(re, "re", v.re)?;
        out(im, "im", v.im)
    })
}

/// `lambda^t ||f||_2^2`.
///
/// # Safety
/// `handle` must be live; `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_predicted_mean(
    handle: *const SsStatistic,
    t: u64,
    re: *mut f64,
    im: *mut f64,
) -> SsStatus {
    guard(|| {
        let v = predicted_mean(stat(handle)?, t);
        out(re, "re", v.re)?;
        out(im, "im", v.im)
    })
}

/// # Safety
/// `handle` must be live; `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_stationary_second_moment(
    handle: *const SsStatistic,
    value: *mut f64,
) -> SsStatus {
    guard(|| out(value, "value", lib(stationary_second_moment(stat(handle)?))?))
}

/// # Safety
/// `handle` must be live; `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_second_moment_bound(
    handle: *const SsStatistic,
    t: u64,
    value: *mut f64,
) -> SsStatus {
    guard(|| out(value, "value", second_moment_bound(stat(handle)?, t)))
}

/// Lower bound on the total variation to uniform at time `t`.
///
/// # Safety
/// `handle` must be live; `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_statistic_tv_lower_bound(
    handle: *const SsStatistic,
    t: u64,
    value: *mut f64,
) -> SsStatus {
    guard(|| out(value, "value", tv_lower_bound(stat(handle)?, t)))
}

/// Exact total variation to uniform for `t = 0..=horizon` from the
/// identity (`n <= 8`). Writes `horizon + 1` values into `tv`, whose
/// capacity is `len`. `tau_mix` receives the first `t` with tv at most
/// `threshold`, or `UINT64_MAX` if none.
///
/// # Safety
/// `tv` must be valid for `len` writes and `tau_mix` for one write.
#[no_mangle]
pub unsafe extern "C" fn ss_exact_tv_curve(
    n: usize,
    rule: u32,
    threshold: f64,
    horizon: u64,
    tv: *mut f64,
    len: usize,
    tau_mix: *mut u64,
) -> SsStatus {
    guard(|| {
        if tv.is_null() {
            return Err(null("tv"));
        }
        let need = horizon.saturating_add(1);
        if (len as u64) < need {
            return Err((SsStatus::BufferTooSmall, format!("need {need} entries, got {len}")));
        }
        let r = lib(ShuffleRule::new(rule_kind(rule)?, n))?;
        let res = lib(exact_mixing_time(n, &r, threshold, horizon))?;
        for (k, (_, v)) in res.tv_curve.iter().enumerate() {
            tv.add(k).write(*v);
        }
        out(tau_mix, "tau_mix", res.tau_mix.unwrap_or(u64::MAX))
    })
}

/// One run of the card-marking process. `t` receives the uniform time, or
/// `UINT64_MAX` if `cap` steps passed first; `card_to_state` (capacity
/// `len >= n`) receives the final deck.
///
/// # Safety
/// `t` must be valid for one write; `card_to_state` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ss_uniform_time(
    n: usize,
    rule: u32,
    seed: u64,
    replica: u64,
    cap: u64,
    t: *mut u64,
    card_to_state: *mut usize,
    len: usize,
) -> SsStatus {
    guard(|| {
        if card_to_state.is_null() {
            return Err(null("card_to_state"));
        }
        if len < n {
            return Err((SsStatus::BufferTooSmall, format!("need {n} entries, got {len}")));
        }
        let r = lib(ShuffleRule::new(rule_kind(rule)?, n))?;
        let run = lib(run_until_uniform_time(n, &r, seed, replica, cap))?;
        for (k, &s) in run.final_perm.card_to_state().iter().enumerate() {
            card_to_state.add(k).write(s);
        }
        out(t, "t", run.outcome.time().unwrap_or(u64::MAX))
    })
}
