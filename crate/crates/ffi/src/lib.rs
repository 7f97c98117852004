// SPDX-License-Identifier: Apache-2.0

//! C ABI over `qtm`.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `*_parse`/producer function and released by the matching `*_free`.
//! Functions return a [`QtmStatus`]; on failure the message is available
//! from [`qtm_last_error_message`] on the same thread. Output pointers are
//! written only on success. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qtm::cli::machine_file::parse_qtm;
use qtm::configuration::{parse_input, QConfiguration};
use qtm::distribution::{compute_output, ppd_of, ConvergencePolicy, OutputStatus, Ppd};
use qtm::evolution::Qtm;
use qtm::machine::Machine;
use qtm::observation::{consistency_residuals, empirical_ppd, enumerate_runs, sample_observed, TauSchedule};
use qtm::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QtmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    SyntaxError = 3,
    InvalidMachine = 4,
    UnvalidatedMachine = 5,
    InvalidInput = 6,
    NotNormalized = 7,
    InvalidSchedule = 8,
    BudgetExceeded = 9,
    DomainError = 10,
    Panic = 11,
}

/// How `qtm_compute_output` stopped.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QtmOutputStatus {
    Finitary = 0,
    Converged = 1,
    HorizonReached = 2,
}

/// A parsed machine. Evolution is available only if it passed validation.
pub struct QtmMachine {
    machine: Machine,
    qtm: Option<Qtm>,
}

/// A superposition of configurations of one machine.
pub struct QtmState {
    phi: QConfiguration,
}

/// A partial probability distribution over the naturals.
pub struct QtmPpd {
    ppd: Ppd,
    entries: Vec<(u64, f64)>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QtmStatus {
    match e.name() {
        "SyntaxError" => QtmStatus::SyntaxError,
        "UnvalidatedMachine" => QtmStatus::UnvalidatedMachine,
        "NotNormalized" => QtmStatus::NotNormalized,
        "NonInitialTerm" | "NonZeroCounterOnPlainState" => QtmStatus::InvalidInput,
        "InvalidSchedule" | "HorizonTooShort" => QtmStatus::InvalidSchedule,
        "BudgetExceeded" => QtmStatus::BudgetExceeded,
        _ if matches!(e, Error::Machine(_) | Error::MachineFile(_)) => QtmStatus::InvalidMachine,
        _ => QtmStatus::DomainError,
    }
}

struct Failure(QtmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T: Into<Error>>(e: T) -> Failure {
    Failure::from(e.into())
}

/// Runs `body`, translating errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> QtmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QtmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside qtm");
            QtmStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(QtmStatus::NullPointer, "NullPointer: a required pointer argument is null".into())
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(QtmStatus::InvalidUtf8, "InvalidUtf8: argument is not UTF-8".into()))
}

/// # Safety
/// `p` must be null or a live handle from this library.
unsafe fn obj<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

fn out<T>(p: *mut *mut T, value: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null());
    }
    // SAFETY: checked non-null; caller guarantees it is writable.
    unsafe { *p = Box::into_raw(Box::new(value)) };
    Ok(())
}

fn qtm(m: &QtmMachine) -> Result<&Qtm, Failure> {
    m.qtm.as_ref().ok_or_else(|| {
        let report = m.machine.validate(qtm::machine::DEFAULT_UNITARITY_TOLERANCE);
        fail(qtm::evolution::EvolutionError::UnvalidatedMachine { report })
    })
}

fn new_ppd(ppd: Ppd) -> QtmPpd {
    let entries = ppd.iter().collect();
    QtmPpd { ppd, entries }
}

/// Message of the last failed call on this thread. Owned by the library;
/// valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn qtm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a machine file. Invalid machines parse successfully; check
/// `qtm_machine_validate` before evolving.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qtm_machine_parse(text_ptr: *const c_char, out_machine: *mut *mut QtmMachine) -> QtmStatus {
    guard(|| {
        let machine = parse_qtm(text(text_ptr)?).map_err(fail)?;
        let qtm = Qtm::new(machine.clone()).ok();
        out(out_machine, QtmMachine { machine, qtm })
    })
}

/// # Safety
/// `m` must be null or a handle from `qtm_machine_parse` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qtm_machine_free(m: *mut QtmMachine) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Evaluates the local conditions at `tolerance`.
///
/// # Safety
/// `m` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn qtm_machine_validate(
    m: *const QtmMachine,
    tolerance: f64,
    out_valid: *mut bool,
    out_max_residual: *mut f64,
) -> QtmStatus {
    guard(|| {
        let m = obj(m)?;
        if out_valid.is_null() || out_max_residual.is_null() {
            return Err(null());
        }
        let report = m.machine.validate(tolerance);
        *out_valid = report.valid;
        *out_max_residual = report.max_residual;
        Ok(())
    })
}

/// Parses an initial superposition in ket notation for machine `m`.
///
/// # Safety
/// `m` must be a live handle, `text` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qtm_state_parse(
    m: *const QtmMachine,
    text_ptr: *const c_char,
    out_state: *mut *mut QtmState,
) -> QtmStatus {
    guard(|| {
        let m = obj(m)?;
        let phi = parse_input(&m.machine, text(text_ptr)?).map_err(fail)?;
        out(out_state, QtmState { phi })
    })
}

/// # Safety
/// `s` must be null or a live state handle.
#[no_mangle]
pub unsafe extern "C" fn qtm_state_free(s: *mut QtmState) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of basis terms with non-zero amplitude.
///
/// # Safety
/// `s` must be a live state handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn qtm_state_len(s: *const QtmState) -> usize {
    s.as_ref().map_or(0, |s| s.phi.len())
}

/// # Safety
/// `s` must be a live state handle or null (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn qtm_state_norm(s: *const QtmState) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.phi.norm())
}

/// Renders a state, one `amplitude<TAB>configuration` line per term.
/// Release with `qtm_string_free`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qtm_state_render(
    m: *const QtmMachine,
    s: *const QtmState,
    out_text: *mut *mut c_char,
) -> QtmStatus {
    guard(|| {
        let (m, s) = (obj(m)?, obj(s)?);
        if out_text.is_null() {
            return Err(null());
        }
        let rendered = s.phi.display(&m.machine).to_string();
        *out_text = CString::new(rendered).expect("rendering has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn qtm_string_free(p: *mut c_char) {
    if !p.is_null() {
        drop(CString::from_raw(p));
    }
}

/// `U^steps` applied to `s`, as a new state.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qtm_evolve(
    m: *const QtmMachine,
    s: *const QtmState,
    steps: usize,
    out_state: *mut *mut QtmState,
) -> QtmStatus {
    guard(|| {
        let (m, s) = (obj(m)?, obj(s)?);
        let phi = qtm(m)?.evolve(&s.phi, steps);
        out(out_state, QtmState { phi })
    })
}

/// One application of the adjoint evolution, as a new state.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qtm_step_backward(
    m: *const QtmMachine,
    s: *const QtmState,
    out_state: *mut *mut QtmState,
) -> QtmStatus {
    guard(|| {
        let (m, s) = (obj(m)?, obj(s)?);
        let phi = qtm(m)?.step_backward(&s.phi);
        out(out_state, QtmState { phi })
    })
}

/// Output distribution of the final part of `s`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qtm_ppd_of(m: *const QtmMachine, s: *const QtmState, out_ppd: *mut *mut QtmPpd) -> QtmStatus {
    guard(|| {
        let (m, s) = (obj(m)?, obj(s)?);
        let ppd = ppd_of(&m.machine, &s.phi).map_err(fail)?;
        out(out_ppd, new_ppd(ppd))
    })
}

/// Iterates until finitary, converged, or the horizon; see the library's
/// `compute_output` for the stopping rules.
///
/// # Safety
/// Handles must be live; output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn qtm_compute_output(
    m: *const QtmMachine,
    s: *const QtmState,
    epsilon: f64,
    window: usize,
    horizon: usize,
    out_ppd: *mut *mut QtmPpd,
    out_status: *mut QtmOutputStatus,
    out_step: *mut usize,
) -> QtmStatus {
    guard(|| {
        let (m, s) = (obj(m)?, obj(s)?);
        if out_status.is_null() || out_step.is_null() {
            return Err(null());
        }
        let policy = ConvergencePolicy { epsilon, window, horizon };
        let report = compute_output(qtm(m)?, &s.phi, &policy).map_err(fail)?;
        *out_status = match report.status {
            OutputStatus::Finitary { .. } => QtmOutputStatus::Finitary,
            OutputStatus::Converged { .. } => QtmOutputStatus::Converged,
            OutputStatus::HorizonReached { .. } => QtmOutputStatus::HorizonReached,
        };
        *out_step = report.status.step();
        out(out_ppd, new_ppd(report.ppd))
    })
}

/// Empirical distribution of observed outputs over `runs` sampled runs.
///
/// # Safety
/// Handles must be live, `tau` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qtm_sample(
    m: *const QtmMachine,
    s: *const QtmState,
    tau: *const c_char,
    horizon: usize,
    runs: usize,
    seed: u64,
    out_ppd: *mut *mut QtmPpd,
) -> QtmStatus {
    guard(|| {
        let (m, s) = (obj(m)?, obj(s)?);
        let tau = TauSchedule::parse(text(tau)?).map_err(fail)?;
        let observed = sample_observed(qtm(m)?, &s.phi, &tau, horizon, runs, seed).map_err(fail)?;
        out(out_ppd, new_ppd(empirical_ppd(observed).ppd))
    })
}

/// Enumerates every observed run and reports the largest gap between the
/// exact observed distribution and the unobserved output distribution at
/// the depths following each observation.
///
/// # Safety
/// Handles must be live, `tau` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qtm_consistency_residual(
    m: *const QtmMachine,
    s: *const QtmState,
    tau: *const c_char,
    horizon: usize,
    budget: usize,
    out_residual: *mut f64,
) -> QtmStatus {
    guard(|| {
        let (m, s) = (obj(m)?, obj(s)?);
        if out_residual.is_null() {
            return Err(null());
        }
        let tau = TauSchedule::parse(text(tau)?).map_err(fail)?;
        let q = qtm(m)?;
        let tree = enumerate_runs(q, &s.phi, &tau, horizon, budget).map_err(fail)?;
        let residuals = consistency_residuals(q, &s.phi, &tau, &tree).map_err(fail)?;
        *out_residual = residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max);
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a live distribution handle.
#[no_mangle]
pub unsafe extern "C" fn qtm_ppd_free(p: *mut QtmPpd) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Probability of `n` (0 outside the support).
///
/// # Safety
/// `p` must be a live distribution handle or null (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn qtm_ppd_get(p: *const QtmPpd, n: u64) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.ppd.get(n))
}

/// Missing mass `1 − Σ P(n)`.
///
/// # Safety
/// `p` must be a live distribution handle or null (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn qtm_ppd_bottom(p: *const QtmPpd) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.ppd.bottom())
}

/// Size of the support.
///
/// # Safety
/// `p` must be a live distribution handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn qtm_ppd_len(p: *const QtmPpd) -> usize {
    p.as_ref().map_or(0, |p| p.entries.len())
}

/// The `index`-th support element in increasing order.
///
/// # Safety
/// `p` must be a live distribution handle; output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn qtm_ppd_entry(
    p: *const QtmPpd,
    index: usize,
    out_n: *mut u64,
    out_probability: *mut f64,
) -> QtmStatus {
    guard(|| {
        let p = obj(p)?;
        if out_n.is_null() || out_probability.is_null() {
            return Err(null());
        }
        let (n, prob) = *p.entries.get(index).ok_or_else(|| {
            Failure(QtmStatus::DomainError, format!("IndexOutOfRange: {index} >= {}", p.entries.len()))
        })?;
        *out_n = n;
        *out_probability = prob;
        Ok(())
    })
}
