//! Drives the C ABI end to end from Rust: the call sequences below are
//! exactly what a foreign caller would perform, pointer conventions
//! included.

use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use qfa_lab_ffi::{
    qfa_last_error, qfa_machine_check, qfa_machine_free, qfa_machine_from_file,
    qfa_machine_from_text, qfa_machine_run, qfa_machine_state_count, qfa_machine_type, qfa_version,
    QfaMachine, QfaRunOutcome, QfaStatus,
};

fn fixture(name: &str) -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../qfa-lab/machines")
        .join(name);
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(qfa_last_error()) }
        .to_str()
        .unwrap()
        .to_string()
}

fn load_file(name: &str) -> *mut QfaMachine {
    let mut handle: *mut QfaMachine = ptr::null_mut();
    let status = unsafe { qfa_machine_from_file(fixture(name).as_ptr(), &mut handle) };
    assert_eq!(status, QfaStatus::Ok, "{name}: {}", last_error());
    assert!(!handle.is_null());
    handle
}

fn type_of(handle: *const QfaMachine) -> String {
    let p = unsafe { qfa_machine_type(handle) };
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn run(handle: *const QfaMachine, input: &str) -> (QfaStatus, QfaRunOutcome) {
    let input = CString::new(input).unwrap();
    let mut out = QfaRunOutcome {
        p_acc: f64::NAN,
        p_rej: f64::NAN,
        residual: f64::NAN,
        steps: 0,
        converged: false,
    };
    let status = unsafe { qfa_machine_run(handle, input.as_ptr(), 0.0, 0, &mut out) };
    (status, out)
}

#[test]
fn load_inspect_run_and_free_a_probabilistic_machine() {
    let coin = load_file("coin.qfa");
    assert_eq!(type_of(coin), "rt-pfa");
    assert_eq!(unsafe { qfa_machine_state_count(coin) }, 2);
    assert_eq!(unsafe { qfa_machine_check(coin) }, QfaStatus::Ok);

    // Two coin flips leave heads with probability 1/4.
    let (status, out) = run(coin, "aa");
    assert_eq!(status, QfaStatus::Ok);
    assert!((out.p_acc - 0.75).abs() <= 1e-12);
    assert!((out.p_rej - 0.25).abs() <= 1e-12);
    assert_eq!(out.steps, 4);
    assert!(out.converged);

    unsafe { qfa_machine_free(coin) };
}

#[test]
fn two_way_machine_runs_with_default_tolerances() {
    let lys = load_file("lys.qfa");
    assert_eq!(type_of(lys), "kwqfa-2way");
    assert_eq!(unsafe { qfa_machine_check(lys) }, QfaStatus::Ok);

    let (status, out) = run(lys, "abaa");
    assert_eq!(status, QfaStatus::Ok);
    assert!(out.converged);
    assert!((out.p_acc - (0.5 + std::f64::consts::SQRT_2 / 32.0)).abs() <= 1e-9);
    assert!(out.residual < 1e-11);

    unsafe { qfa_machine_free(lys) };
}

#[test]
fn generalized_machine_reports_its_raw_value() {
    let decay = load_file("decay.qfa");
    assert_eq!(type_of(decay), "gfa");
    // No numeric conditions apply, so the check always passes.
    assert_eq!(unsafe { qfa_machine_check(decay) }, QfaStatus::Ok);
    let (status, out) = run(decay, "aba");
    assert_eq!(status, QfaStatus::Ok);
    assert!((out.p_acc - 0.125).abs() <= 1e-15);
    assert_eq!(out.steps, 3);
    unsafe { qfa_machine_free(decay) };
}

#[test]
fn foreign_input_symbol_is_its_own_status() {
    let coin = load_file("coin.qfa");
    let (status, _) = run(coin, "ax");
    assert_eq!(status, QfaStatus::InputSymbol);
    assert!(last_error().contains('x'), "message: {}", last_error());
    unsafe { qfa_machine_free(coin) };
}

#[test]
fn malformed_machine_is_loadable_but_fails_the_check() {
    let text = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../qfa-lab/machines/coin.qfa"),
    )
    .unwrap();
    let corrupted = text.replace("1/2, 0", "3/5, 0");
    assert_ne!(corrupted, text, "the corruption must hit an entry");
    let corrupted = CString::new(corrupted).unwrap();

    let mut handle: *mut QfaMachine = ptr::null_mut();
    let status = unsafe { qfa_machine_from_text(corrupted.as_ptr(), &mut handle) };
    assert_eq!(status, QfaStatus::Ok, "loading is structural only");

    assert_eq!(unsafe { qfa_machine_check(handle) }, QfaStatus::Malformed);
    let report = last_error();
    assert!(report.contains("column-sum"), "report: {report}");

    unsafe { qfa_machine_free(handle) };
}

#[test]
fn parse_errors_carry_a_message() {
    let garbage = CString::new("type coffee-maker\n").unwrap();
    let mut handle: *mut QfaMachine = ptr::null_mut();
    let status = unsafe { qfa_machine_from_text(garbage.as_ptr(), &mut handle) };
    assert_eq!(status, QfaStatus::Parse);
    assert!(handle.is_null(), "no handle on failure");
    assert!(!last_error().is_empty());
}

#[test]
fn pointer_misuse_is_reported_not_undefined() {
    // Null arguments.
    let mut handle: *mut QfaMachine = ptr::null_mut();
    assert_eq!(
        unsafe { qfa_machine_from_text(ptr::null(), &mut handle) },
        QfaStatus::NullArgument
    );
    let text = CString::new("x").unwrap();
    assert_eq!(
        unsafe { qfa_machine_from_text(text.as_ptr(), ptr::null_mut()) },
        QfaStatus::NullArgument
    );
    assert_eq!(
        unsafe { qfa_machine_check(ptr::null()) },
        QfaStatus::NullArgument
    );
    let mut out = QfaRunOutcome {
        p_acc: 0.0,
        p_rej: 0.0,
        residual: 0.0,
        steps: 0,
        converged: false,
    };
    assert_eq!(
        unsafe { qfa_machine_run(ptr::null(), text.as_ptr(), 0.0, 0, &mut out) },
        QfaStatus::NullArgument
    );

    // Null-safe accessors.
    assert!(unsafe { qfa_machine_type(ptr::null()) }.is_null());
    assert_eq!(unsafe { qfa_machine_state_count(ptr::null()) }, 0);
    unsafe { qfa_machine_free(ptr::null_mut()) };

    // Invalid UTF-8 in a text argument.
    let bad = CString::new(vec![0xff, 0xfe]).unwrap();
    assert_eq!(
        unsafe { qfa_machine_from_text(bad.as_ptr(), &mut handle) },
        QfaStatus::InvalidUtf8
    );
}

#[test]
fn missing_file_reports_io() {
    let path = CString::new("/no/such/file.qfa").unwrap();
    let mut handle: *mut QfaMachine = ptr::null_mut();
    assert_eq!(
        unsafe { qfa_machine_from_file(path.as_ptr(), &mut handle) },
        QfaStatus::Io
    );
    assert!(last_error().contains("/no/such/file.qfa"));
}

#[test]
fn version_is_a_nonempty_c_string() {
    let v: *const c_char = qfa_version();
    let v = unsafe { CStr::from_ptr(v) }.to_str().unwrap();
    assert!(!v.is_empty());
}

#[test]
fn generated_header_declares_the_full_surface() {
    let header = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/qfa_lab.h"),
    )
    .expect("build script wrote include/qfa_lab.h");
    for needle in [
        "typedef struct QfaMachine QfaMachine;",
        "QFA_STATUS_OK",
        "QFA_STATUS_MALFORMED",
        "qfa_machine_from_text",
        "qfa_machine_from_file",
        "qfa_machine_free",
        "qfa_machine_check",
        "qfa_machine_run",
        "qfa_machine_type",
        "qfa_machine_state_count",
        "qfa_last_error",
        "qfa_version",
        "double p_acc",
        "uint64_t steps",
    ] {
        assert!(header.contains(needle), "header lacks {needle:?}");
    }
}
