//! C ABI over the gengeom kernel.
//!
//! Objects cross the boundary as opaque handles (`GgRho`, `GgFlow`, `GgState`)
//! created and released by paired `*_new`/`*_free` functions. Structured data
//! travels as JSON strings in the same formats the CLI reads and writes;
//! strings returned through `char **` out-parameters are owned by the caller and
//! released with `gg_string_free`. Every fallible call returns a `GgStatus`; on
//! failure `gg_last_error_message` describes the error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gengeom::flow::{initial_state, DerivativeScheme, Flow, Grid, GridState, Perturbation};
use gengeom::io::{polynomial_to_json, rho_to_json, RhoJson};
use gengeom::spin55::{normal_form, quartic_invariant, RhoPair};
use gengeom::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInput = 4,
    Unstable = 5,
    Computation = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GgScheme {
    Spectral = 0,
    FiniteDifference4 = 1,
}

/// A pair of even forms on a 5-chart.
pub struct GgRho(RhoPair);

/// A periodic grid together with the pointwise kernel.
pub struct GgFlow(Flow);

/// A grid state and the orbit signs it started in.
pub struct GgState {
    state: GridState,
    orbit: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GgStatus {
    match e {
        Error::Json(_) | Error::Parse(_) => GgStatus::Parse,
        Error::Unstable(_) | Error::OrbitFlip(_) => GgStatus::Unstable,
        Error::Io(_) => GgStatus::Io,
        Error::InvalidDimension(_)
        | Error::ChartMismatch { .. }
        | Error::IndexOutOfRange { .. }
        | Error::DimensionMismatch { .. }
        | Error::NotPureDegree { .. }
        | Error::NotEven
        | Error::NotClosed(_)
        | Error::Hypothesis(_)
        | Error::MalformedCover(_)
        | Error::UnknownOverlap(..)
        | Error::InvalidGrid(_)
        | Error::Inconsistent(_)
        | Error::TooFewSteps { .. } => GgStatus::InvalidInput,
        _ => GgStatus::Computation,
    }
}

struct Failure(GgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(GgStatus::Parse, e.to_string())
    }
}

/// Runs `f`, recording any error or panic for `gg_last_error_message`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            GgStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(GgStatus::NullArgument, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Failure(GgStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = CString::new(s).map_err(|e| Failure(GgStatus::Computation, e.to_string()))?.into_raw();
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn gg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `{"rho1": form, "rho2": form}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gg_rho_from_json(json: *const c_char, out: *mut *mut GgRho) -> GgStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let rho = serde_json::from_str::<RhoJson>(text)?.to_rho()?;
        put(out, GgRho(rho))
    })
}

/// The constant-coefficient normal form.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gg_rho_normal_form(out: *mut *mut GgRho) -> GgStatus {
    guard(|| put(out, GgRho(normal_form())))
}

/// # Safety
/// `rho` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gg_rho_free(rho: *mut GgRho) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

/// # Safety
/// `rho` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gg_rho_to_json(rho: *const GgRho, out: *mut *mut c_char) -> GgStatus {
    guard(|| put_string(out, rho_to_json(&deref(rho, "rho")?.0).to_string()))
}

/// The quartic invariant `f(ρ)` as a JSON polynomial.
///
/// # Safety
/// `rho` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gg_rho_quartic_invariant(rho: *const GgRho, out: *mut *mut c_char) -> GgStatus {
    guard(|| {
        let f = quartic_invariant(&deref(rho, "rho")?.0)?;
        put_string(out, polynomial_to_json(&f).to_string())
    })
}

/// The `spin55 analyze` report as JSON. `passed` receives whether every check passed.
///
/// # Safety
/// `rho` must be a live handle, `out` a writable pointer, `passed` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn gg_rho_analyze(rho: *const GgRho, out: *mut *mut c_char, passed: *mut bool) -> GgStatus {
    guard(|| {
        let rep = gengeom::cli::analyze_rho(&deref(rho, "rho")?.0, &gengeom::cli::default_stability_points())?;
        if !passed.is_null() {
            *passed = rep.passed();
        }
        put_string(out, serde_json::to_string(&rep)?)
    })
}

/// The `verify identities` report as JSON; `dim = 0` cycles through dimensions 2 to 5.
///
/// # Safety
/// `out` must be a writable pointer, `passed` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn gg_verify_identities(
    dim: usize,
    cases: usize,
    seed: u64,
    degree: u32,
    out: *mut *mut c_char,
    passed: *mut bool,
) -> GgStatus {
    guard(|| {
        let dim = (dim != 0).then_some(dim);
        let rep = gengeom::cli::verify_identities(dim, cases, seed, degree)?;
        if !passed.is_null() {
            *passed = rep.passed();
        }
        put_string(out, serde_json::to_string(&rep)?)
    })
}

/// A periodic `n⁵` grid.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gg_flow_new(n: usize, scheme: GgScheme, out: *mut *mut GgFlow) -> GgStatus {
    guard(|| {
        let scheme = match scheme {
            GgScheme::Spectral => DerivativeScheme::Spectral,
            GgScheme::FiniteDifference4 => DerivativeScheme::FiniteDifference4,
        };
        put(out, GgFlow(Flow::new(Grid::new(n, scheme)?)))
    })
}

/// # Safety
/// `flow` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gg_flow_free(flow: *mut GgFlow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// Initial state `ρ₀ + ε dα`. A NULL `base` selects the normal form and a NULL
/// `perturbation` the zero perturbation; otherwise `perturbation` is
/// `{"terms": [{"component", "indices", "mode", "cos", "sin"}, ...]}`.
///
/// # Safety
/// `flow` must be live, `base` NULL or live, `perturbation` NULL or NUL-terminated,
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gg_state_new(
    flow: *const GgFlow,
    base: *const GgRho,
    epsilon: f64,
    perturbation: *const c_char,
    out: *mut *mut GgState,
) -> GgStatus {
    guard(|| {
        let flow = &deref(flow, "flow")?.0;
        let base = match base.as_ref() {
            Some(b) => b.0.clone(),
            None => normal_form(),
        };
        let pert: Perturbation = if perturbation.is_null() {
            Perturbation::default()
        } else {
            serde_json::from_str(read_str(perturbation, "perturbation")?)?
        };
        let state = initial_state(&flow.grid, &base, epsilon, &pert)?;
        let orbit = flow.orbit_signs(&state)?;
        put(out, GgState { state, orbit })
    })
}

/// # Safety
/// `state` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gg_state_free(state: *mut GgState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Current time, or NaN for a NULL handle.
///
/// # Safety
/// `state` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn gg_state_time(state: *const GgState) -> f64 {
    state.as_ref().map_or(f64::NAN, |s| s.state.t)
}

/// Number of doubles in the state: 32 components of `n⁵` nodes each.
///
/// # Safety
/// `state` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn gg_state_len(state: *const GgState) -> usize {
    state.as_ref().map_or(0, |s| s.state.data.len())
}

/// Copies the component-major state data into `buf`, which holds `len` doubles.
///
/// # Safety
/// `state` must be live and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gg_state_copy(state: *const GgState, buf: *mut f64, len: usize) -> GgStatus {
    guard(|| {
        let s = deref(state, "state")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < s.state.data.len() {
            return Err(Failure(GgStatus::BufferTooSmall, format!("need {} doubles, have {len}", s.state.data.len())));
        }
        ptr::copy_nonoverlapping(s.state.data.as_ptr(), buf, s.state.data.len());
        Ok(())
    })
}

fn check_grid(flow: &Flow, s: &GgState) -> Result<(), Failure> {
    if s.orbit.len() != flow.grid.nodes() {
        return Err(Failure(GgStatus::InvalidInput, "state was built on a different grid".into()));
    }
    Ok(())
}

/// Advances `state` in place by `steps` Runge–Kutta steps of size `dt`. A node
/// leaving its starting orbit stops the run with `GG_STATUS_UNSTABLE` and leaves
/// the state at the last completed step.
///
/// # Safety
/// `flow` and `state` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn gg_flow_step(flow: *const GgFlow, state: *mut GgState, dt: f64, steps: usize) -> GgStatus {
    guard(|| {
        let flow = &deref(flow, "flow")?.0;
        let s = state.as_mut().ok_or_else(|| null("state"))?;
        check_grid(flow, s)?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Failure(GgStatus::InvalidInput, format!("dt must be positive, got {dt}")));
        }
        for _ in 0..steps {
            let (next, _) = flow.step(&s.state, dt, &s.orbit)?;
            s.state = next;
        }
        Ok(())
    })
}

/// The volume functional `V` of the state.
///
/// # Safety
/// `flow` and `state` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gg_flow_hamiltonian(flow: *const GgFlow, state: *const GgState, out: *mut f64) -> GgStatus {
    guard(|| {
        let flow = &deref(flow, "flow")?.0;
        let s = deref(state, "state")?;
        check_grid(flow, s)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = flow.hamiltonian(&s.state)?;
        Ok(())
    })
}

/// `max |dρ|` over the grid.
///
/// # Safety
/// `flow` and `state` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gg_flow_closure_norm(flow: *const GgFlow, state: *const GgState, out: *mut f64) -> GgStatus {
    guard(|| {
        let flow = &deref(flow, "flow")?.0;
        let s = deref(state, "state")?;
        check_grid(flow, s)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = flow.closure_norm(&s.state);
        Ok(())
    })
}
