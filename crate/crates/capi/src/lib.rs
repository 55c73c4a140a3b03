//! C ABI over `cutoff-core`.
//!
//! Objects are opaque handles created by `*_new`/`*_parse`/`*_sample`/`*_solve`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`CutoffStatus`]; on failure the message is kept per thread and
//! read with [`cutoff_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cutoff_core::entropic::{solve_t0, EntropicSchedule};
use cutoff_core::group::{AbelianGroup, GeneratorMultiset};
use cutoff_core::mixingstats::psi;
use cutoff_core::spectral::{tv_curve, CharacterSpectrum};
use cutoff_core::typdist::{graph_distances, reference_radius, DistanceHistogram};
use cutoff_core::walklaw::WalkKind;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Group = 3,
    Solver = 4,
    Spectral = 5,
    Distance = 6,
    Panic = 7,
}

/// Finite Abelian group.
pub struct CutoffGroup(AbelianGroup);

/// Generator multiset drawn from a group.
pub struct CutoffGenerators(GeneratorMultiset);

/// Entropic times for one `(kind, k, n)`.
pub struct CutoffSchedule(EntropicSchedule);

/// Distribution of graph distances from the identity.
pub struct CutoffHistogram(DistanceHistogram);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: CutoffStatus, msg: impl ToString) -> CutoffStatus {
    set_error(msg.to_string());
    status
}

/// Runs `f`, turning a panic into [`CutoffStatus::Panic`].
fn guard(f: impl FnOnce() -> CutoffStatus) -> CutoffStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(CutoffStatus::Panic, msg)
        }
    }
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(CutoffStatus::NullPointer, concat!(stringify!($p), " is null")),
        }
    };
}

fn store<T>(out: *mut *mut T, value: T) -> CutoffStatus {
    if out.is_null() {
        return fail(CutoffStatus::NullPointer, "output pointer is null");
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    CutoffStatus::Ok
}

fn write<T>(out: *mut T, value: T) -> CutoffStatus {
    if out.is_null() {
        return fail(CutoffStatus::NullPointer, "output pointer is null");
    }
    unsafe { *out = value };
    CutoffStatus::Ok
}

/// Copies the last error of this thread into `buf` as a NUL-terminated string,
/// truncating to `len - 1` bytes. Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cutoff_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a group literal such as `"65536"` or `"6x4"`.
///
/// # Safety
/// `literal` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cutoff_group_parse(literal: *const c_char, out: *mut *mut CutoffGroup) -> CutoffStatus {
    guard(|| {
        if literal.is_null() {
            return fail(CutoffStatus::NullPointer, "literal is null");
        }
        let text = match CStr::from_ptr(literal).to_str() {
            Ok(t) => t,
            Err(e) => return fail(CutoffStatus::InvalidArgument, e),
        };
        match text.parse::<AbelianGroup>() {
            Ok(g) => store(out, CutoffGroup(g)),
            Err(e) => fail(CutoffStatus::Group, e),
        }
    })
}

/// # Safety
/// `group` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cutoff_group_order(group: *const CutoffGroup, out: *mut u64) -> CutoffStatus {
    guard(|| write(out, deref!(group).0.order()))
}

/// Number of invariant factors.
///
/// # Safety
/// `group` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cutoff_group_dim(group: *const CutoffGroup, out: *mut usize) -> CutoffStatus {
    guard(|| write(out, deref!(group).0.dim()))
}

/// # Safety
/// `group` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cutoff_group_free(group: *mut CutoffGroup) {
    if !group.is_null() {
        drop(Box::from_raw(group));
    }
}

/// Draws `k` uniform generators, reproducibly in `seed`.
///
/// # Safety
/// `group` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cutoff_generators_sample(
    group: *const CutoffGroup,
    k: usize,
    seed: u64,
    out: *mut *mut CutoffGenerators,
) -> CutoffStatus {
    guard(|| match deref!(group).0.sample_generators(k, seed) {
        Ok(g) => store(out, CutoffGenerators(g)),
        Err(e) => fail(CutoffStatus::Group, e),
    })
}

/// # Safety
/// `gens` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cutoff_generators_free(gens: *mut CutoffGenerators) {
    if !gens.is_null() {
        drop(Box::from_raw(gens));
    }
}

/// Solves for the entropic time `t0` of the undirected (`directed = false`) or
/// directed walk with `k` generators on `n` elements.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cutoff_schedule_solve(
    directed: bool,
    k: usize,
    n: u64,
    out: *mut *mut CutoffSchedule,
) -> CutoffStatus {
    guard(|| match solve_t0(WalkKind::from_directed(directed), k, n) {
        Ok(s) => store(out, CutoffSchedule(s)),
        Err(e) => fail(CutoffStatus::Solver, e),
    })
}

/// # Safety
/// `schedule` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cutoff_schedule_t0(schedule: *const CutoffSchedule, out: *mut f64) -> CutoffStatus {
    guard(|| write(out, deref!(schedule).0.t0))
}

/// # Safety
/// `schedule` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cutoff_schedule_t_alpha(
    schedule: *const CutoffSchedule,
    alpha: f64,
    out: *mut f64,
) -> CutoffStatus {
    guard(|| {
        if !alpha.is_finite() {
            return fail(CutoffStatus::InvalidArgument, "alpha must be finite");
        }
        match deref!(schedule).0.solve_t_alpha(alpha) {
            Ok(t) => write(out, t),
            Err(e) => fail(CutoffStatus::Solver, e),
        }
    })
}

/// # Safety
/// `schedule` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cutoff_schedule_free(schedule: *mut CutoffSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Exact TV and L2 distances from uniform at each of `len` times.
/// Either output array may be null when not wanted.
///
/// # Safety
/// `times` must hold `len` values; non-null outputs must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn cutoff_tv_curve(
    group: *const CutoffGroup,
    gens: *const CutoffGenerators,
    directed: bool,
    times: *const f64,
    len: usize,
    tv_out: *mut f64,
    l2_out: *mut f64,
) -> CutoffStatus {
    guard(|| {
        let g = &deref!(group).0;
        let z = &deref!(gens).0;
        if times.is_null() && len > 0 {
            return fail(CutoffStatus::NullPointer, "times is null");
        }
        let ts = if len == 0 { &[][..] } else { std::slice::from_raw_parts(times, len) };
        let curve = match CharacterSpectrum::new(g, z, directed).and_then(|s| tv_curve(&s, ts)) {
            Ok(c) => c,
            Err(e) => return fail(CutoffStatus::Spectral, e),
        };
        for (i, p) in curve.iter().enumerate() {
            if !tv_out.is_null() {
                *tv_out.add(i) = p.tv;
            }
            if !l2_out.is_null() {
                *l2_out.add(i) = p.l2;
            }
        }
        CutoffStatus::Ok
    })
}

/// Breadth-first distances from the identity in the Cayley graph.
///
/// # Safety
/// `group` and `gens` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cutoff_graph_distances(
    group: *const CutoffGroup,
    gens: *const CutoffGenerators,
    directed: bool,
    out: *mut *mut CutoffHistogram,
) -> CutoffStatus {
    guard(|| match graph_distances(&deref!(group).0, &deref!(gens).0, directed) {
        Ok(h) => store(out, CutoffHistogram(h)),
        Err(e) => fail(CutoffStatus::Distance, e),
    })
}

/// Smallest radius whose ball holds a `beta` fraction of the group.
///
/// # Safety
/// `hist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cutoff_histogram_quantile(
    hist: *const CutoffHistogram,
    beta: f64,
    out: *mut f64,
) -> CutoffStatus {
    guard(|| match deref!(hist).0.quantile(beta) {
        Ok(d) => write(out, d),
        Err(e) => fail(CutoffStatus::Distance, e),
    })
}

/// Number of elements not reached from the identity.
///
/// # Safety
/// `hist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cutoff_histogram_unreached(hist: *const CutoffHistogram, out: *mut u64) -> CutoffStatus {
    guard(|| write(out, deref!(hist).0.unreached()))
}

/// # Safety
/// `hist` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cutoff_histogram_free(hist: *mut CutoffHistogram) {
    if !hist.is_null() {
        drop(Box::from_raw(hist));
    }
}

/// Standard normal upper tail.
#[no_mangle]
pub extern "C" fn cutoff_psi(alpha: f64) -> f64 {
    psi(alpha)
}

/// Lattice-ball reference radius for `k` generators, norm exponent `p`
/// (`INFINITY` allowed) and `log_n = ln |G|`. Returns NaN for invalid input.
#[no_mangle]
pub extern "C" fn cutoff_reference_radius(k: usize, p: f64, log_n: f64, directed: bool) -> f64 {
    if k == 0 || !(p >= 1.0) || !(log_n > 0.0) {
        return f64::NAN;
    }
    reference_radius(k, p, log_n, directed)
}
