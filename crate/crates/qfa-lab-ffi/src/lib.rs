//! C ABI for the qfa-lab workbench: load a machine from its text format,
//! check well-formedness, and run it on an input string.
//!
//! Conventions, uniform across the surface:
//! - every machine lives behind an opaque `QfaMachine*` owned by the
//!   caller and released with [`qfa_machine_free`];
//! - fallible calls return a [`QfaStatus`]; on anything other than
//!   `QFA_STATUS_OK` a human-readable message is available from
//!   [`qfa_last_error`] on the same thread;
//! - panics never unwind across the boundary: they are caught and
//!   reported as `QFA_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qfa_lab::alphabet::AlphabetError;
use qfa_lab::classical::{run_gfa, run_rtpfa, ClassicalError};
use qfa_lab::format::{load_machine, Machine};
use qfa_lab::quantum_rt::{run_rtkwqfa, run_rtqfa, QuantumError};
use qfa_lab::twoway::{run_twoway, TwoWayError, DEFAULT_MAX_STEPS, DEFAULT_RUN_TOL};
use qfa_lab::wellformed::{check_rtkwqfa, check_rtpfa, check_rtqfa, check_unitary};
use qfa_lab::{Alphabet, ComplexMatrix, RunOutcome};

/// Result of every fallible call in this library.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfaStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The machine text did not parse or did not assemble into a machine.
    Parse = 3,
    /// The machine file could not be read.
    Io = 4,
    /// The input string uses a symbol outside the machine's alphabet.
    InputSymbol = 5,
    /// The machine failed its well-formedness conditions.
    Malformed = 6,
    /// The run itself failed (for example, a dimension mismatch).
    Run = 7,
    /// An internal panic was caught at the boundary.
    Panic = 8,
}

/// Outcome of running a machine on one input string.
///
/// Real-time machines read the framed input once, so `steps` is the
/// input length plus two and `converged` is always true. The
/// generalized automaton has no probability semantics: its raw value is
/// reported as `p_acc`, with `p_rej = 1 - p_acc` and zero residual. For
/// two-way machines `residual` is the nonhalting mass left when the run
/// stopped, and `converged` says whether that mass fell below the
/// requested tolerance within the step budget.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QfaRunOutcome {
    /// Accumulated acceptance probability (raw value for `gfa`).
    pub p_acc: f64,
    /// Accumulated rejection probability.
    pub p_rej: f64,
    /// Nonhalting mass remaining at the end of the run.
    pub residual: f64,
    /// Evolution steps taken.
    pub steps: u64,
    /// Whether the residual fell below the tolerance in time.
    pub converged: bool,
}

/// An opaque loaded machine. Created by [`qfa_machine_from_text`] or
/// [`qfa_machine_from_file`], released by [`qfa_machine_free`].
pub struct QfaMachine {
    inner: Machine,
    type_name: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    // Interior NULs cannot survive into a C string; map them away.
    let sanitized: String = message.replace('\0', "?");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NULs removed above");
    });
}

struct Fail {
    status: QfaStatus,
    message: String,
}

fn fail(status: QfaStatus, message: impl Into<String>) -> Fail {
    Fail {
        status,
        message: message.into(),
    }
}

/// Run `body`, translating both failures and panics into a status code
/// plus a last-error message.
fn guarded(body: impl FnOnce() -> Result<(), Fail>) -> QfaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QfaStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(&format!("internal panic: {what}"));
            QfaStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or a valid NUL-terminated C string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(QfaStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(QfaStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn build_handle(text: &str) -> Result<Box<QfaMachine>, Fail> {
    let inner = load_machine(text).map_err(|e| fail(QfaStatus::Parse, e.to_string()))?;
    let type_name = CString::new(inner.type_keyword()).expect("keywords contain no NUL");
    Ok(Box::new(QfaMachine { inner, type_name }))
}

/// Last failure message from this thread, as a NUL-terminated string.
///
/// Never null; empty until the first failing call. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qfa_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Version of the underlying library, as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qfa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parse machine text and build the machine it describes.
///
/// On success, writes an owned handle to `*out` and returns
/// `QFA_STATUS_OK`. The handle must be released with
/// [`qfa_machine_free`].
///
/// # Safety
/// `text` must be a valid NUL-terminated C string and `out` a valid
/// pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn qfa_machine_from_text(
    text: *const c_char,
    out: *mut *mut QfaMachine,
) -> QfaStatus {
    guarded(|| {
        if out.is_null() {
            return Err(fail(QfaStatus::NullArgument, "out is null"));
        }
        let text = read_str(text, "text")?;
        out.write(Box::into_raw(build_handle(text)?));
        Ok(())
    })
}

/// Read a machine file from disk and build the machine it describes.
///
/// # Safety
/// `path` must be a valid NUL-terminated C string and `out` a valid
/// pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn qfa_machine_from_file(
    path: *const c_char,
    out: *mut *mut QfaMachine,
) -> QfaStatus {
    guarded(|| {
        if out.is_null() {
            return Err(fail(QfaStatus::NullArgument, "out is null"));
        }
        let path = read_str(path, "path")?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| fail(QfaStatus::Io, format!("{path}: {e}")))?;
        out.write(Box::into_raw(build_handle(&text)?));
        Ok(())
    })
}

/// Release a handle returned by one of the constructors. Null is a
/// permitted no-op.
///
/// # Safety
/// `m` must be null or a pointer obtained from a constructor in this
/// library that has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn qfa_machine_free(m: *mut QfaMachine) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// The machine's type keyword (`rt-pfa`, `gfa`, `rt-qfa`, `rt-kwqfa`,
/// `kwqfa-1way`, or `kwqfa-2way`), valid for the handle's lifetime.
/// Null if `m` is null.
///
/// # Safety
/// `m` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn qfa_machine_type(m: *const QfaMachine) -> *const c_char {
    match m.as_ref() {
        Some(m) => m.type_name.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Number of states, or 0 if `m` is null.
///
/// # Safety
/// `m` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn qfa_machine_state_count(m: *const QfaMachine) -> usize {
    match m.as_ref() {
        Some(m) => m.inner.state_count(),
        None => 0,
    }
}

fn tape_labels(alphabet: &Alphabet) -> Vec<String> {
    let mut labels = vec!["cent".to_string()];
    labels.extend(alphabet.symbols().iter().map(|c| c.to_string()));
    labels.push("dollar".to_string());
    labels
}

/// Check the machine's well-formedness conditions (stochasticity,
/// trace preservation, or unitarity, by type).
///
/// Returns `QFA_STATUS_OK` when every condition holds. On
/// `QFA_STATUS_MALFORMED` the full violation report is available from
/// [`qfa_last_error`]. The generalized automaton has no numeric
/// conditions and always passes.
///
/// # Safety
/// `m` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn qfa_machine_check(m: *const QfaMachine) -> QfaStatus {
    guarded(|| {
        let m = m
            .as_ref()
            .ok_or_else(|| fail(QfaStatus::NullArgument, "machine is null"))?;
        let (report, labels) = match &m.inner {
            Machine::RtPfa(m) => (check_rtpfa(m), tape_labels(&m.alphabet)),
            Machine::Gfa(_) => return Ok(()),
            Machine::RtQfa(m) => (check_rtqfa(m), tape_labels(&m.alphabet)),
            Machine::RtKwqfa(m) => (check_rtkwqfa(m), tape_labels(&m.alphabet)),
            Machine::TwoWay(m) => {
                // validate() covers structure (moves, state kinds) on
                // top of the unitarity that the report below measures.
                if let Err(e) = m.validate() {
                    if !matches!(e, TwoWayError::NotUnitary { .. }) {
                        return Err(fail(QfaStatus::Malformed, e.to_string()));
                    }
                }
                let mats: Vec<&ComplexMatrix> = m.unitaries.iter_tape().map(|(_, u)| u).collect();
                (check_unitary(&mats), tape_labels(&m.alphabet))
            }
        };
        if report.passed {
            Ok(())
        } else {
            Err(fail(QfaStatus::Malformed, report.render(&labels)))
        }
    })
}

trait InputError: std::fmt::Display {
    fn foreign_symbol(&self) -> bool;
}

impl InputError for ClassicalError {
    fn foreign_symbol(&self) -> bool {
        matches!(self, ClassicalError::Input(AlphabetError::UnknownSymbol(_)))
    }
}

impl InputError for QuantumError {
    fn foreign_symbol(&self) -> bool {
        matches!(self, QuantumError::Input(AlphabetError::UnknownSymbol(_)))
    }
}

impl InputError for TwoWayError {
    fn foreign_symbol(&self) -> bool {
        matches!(self, TwoWayError::Input(AlphabetError::UnknownSymbol(_)))
    }
}

fn run_fail(e: impl InputError) -> Fail {
    let status = if e.foreign_symbol() {
        QfaStatus::InputSymbol
    } else {
        QfaStatus::Run
    };
    fail(status, e.to_string())
}

fn run_any(machine: &Machine, w: &str, tol: f64, max_steps: usize) -> Result<RunOutcome, Fail> {
    let rt = |p: f64| RunOutcome {
        p_acc: p,
        p_rej: 1.0 - p,
        residual: 0.0,
        steps: w.chars().count() + 2,
        converged: true,
    };
    match machine {
        Machine::RtPfa(m) => run_rtpfa(m, w).map(rt).map_err(run_fail),
        Machine::Gfa(m) => run_gfa(m, w)
            .map(|f| RunOutcome {
                p_acc: f,
                p_rej: 1.0 - f,
                residual: 0.0,
                steps: w.chars().count(),
                converged: true,
            })
            .map_err(run_fail),
        Machine::RtQfa(m) => run_rtqfa(m, w).map(rt).map_err(run_fail),
        Machine::RtKwqfa(m) => run_rtkwqfa(m, w).map_err(run_fail),
        Machine::TwoWay(m) => run_twoway(m, w, tol, max_steps).map_err(run_fail),
    }
}

/// Run the machine on `input` and write the outcome to `*out`.
///
/// `tol` is the residual tolerance for two-way runs; any value at or
/// below zero selects the default (1e-12). `max_steps` is the two-way
/// step budget; zero selects the default (100000). Real-time machines
/// ignore both.
///
/// A symbol outside the machine's alphabet yields
/// `QFA_STATUS_INPUT_SYMBOL`. A two-way run that exhausts its budget is
/// not an error: it returns `QFA_STATUS_OK` with `converged` false.
///
/// # Safety
/// `m` must be a live handle from this library, `input` a valid
/// NUL-terminated C string, and `out` a valid pointer to writable
/// memory.
#[no_mangle]
pub unsafe extern "C" fn qfa_machine_run(
    m: *const QfaMachine,
    input: *const c_char,
    tol: f64,
    max_steps: u64,
    out: *mut QfaRunOutcome,
) -> QfaStatus {
    guarded(|| {
        let m = m
            .as_ref()
            .ok_or_else(|| fail(QfaStatus::NullArgument, "machine is null"))?;
        if out.is_null() {
            return Err(fail(QfaStatus::NullArgument, "out is null"));
        }
        let input = read_str(input, "input")?;
        let tol = if tol > 0.0 { tol } else { DEFAULT_RUN_TOL };
        let max_steps = if max_steps == 0 {
            DEFAULT_MAX_STEPS
        } else {
            usize::try_from(max_steps).unwrap_or(usize::MAX)
        };
        let o = run_any(&m.inner, input, tol, max_steps)?;
        out.write(QfaRunOutcome {
            p_acc: o.p_acc,
            p_rej: o.p_rej,
            residual: o.residual,
            steps: o.steps as u64,
            converged: o.converged,
        });
        Ok(())
    })
}
