use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gengeom_ffi::*;

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { gg_string_free(p) };
    s
}

fn last_error() -> Option<String> {
    let p = gg_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(gg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn normal_form_round_trips_and_analyzes() {
    unsafe {
        let mut rho = ptr::null_mut();
        assert_eq!(gg_rho_normal_form(&mut rho), GgStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(gg_rho_to_json(rho, &mut json), GgStatus::Ok);
        let text = CString::new(take_string(json)).unwrap();

        let mut again = ptr::null_mut();
        assert_eq!(gg_rho_from_json(text.as_ptr(), &mut again), GgStatus::Ok);

        let mut f = ptr::null_mut();
        assert_eq!(gg_rho_quartic_invariant(again, &mut f), GgStatus::Ok);
        let f: serde_json::Value = serde_json::from_str(&take_string(f)).unwrap();
        assert_eq!(f, serde_json::json!([{"coeff": "-8", "exponents": [0, 0, 0, 0, 0]}]));

        let mut report = ptr::null_mut();
        let mut passed = false;
        assert_eq!(gg_rho_analyze(again, &mut report, &mut passed), GgStatus::Ok);
        assert!(passed);
        let report: serde_json::Value = serde_json::from_str(&take_string(report)).unwrap();
        assert_eq!(report["stable"], true);

        gg_rho_free(rho);
        gg_rho_free(again);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut rho = ptr::null_mut();
        let bad = CString::new("{not json").unwrap();
        assert_eq!(gg_rho_from_json(bad.as_ptr(), &mut rho), GgStatus::Parse);
        assert!(rho.is_null());
        assert!(last_error().is_some());

        assert_eq!(gg_rho_from_json(ptr::null(), &mut rho), GgStatus::NullArgument);
        assert_eq!(last_error().as_deref(), Some("json is null"));

        let mut flow = ptr::null_mut();
        assert_eq!(gg_flow_new(3, GgScheme::FiniteDifference4, &mut flow), GgStatus::InvalidInput);
        assert!(flow.is_null());

        assert_eq!(gg_rho_normal_form(&mut rho), GgStatus::Ok);
        assert!(last_error().is_none());
        gg_rho_free(rho);

        gg_rho_free(ptr::null_mut());
        gg_string_free(ptr::null_mut());
    }
}

#[test]
fn identities_report_passes() {
    unsafe {
        let mut out = ptr::null_mut();
        let mut passed = false;
        assert_eq!(gg_verify_identities(3, 5, 1, 2, &mut out, &mut passed), GgStatus::Ok);
        assert!(passed);
        let report: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
        assert!(report["checks"].as_array().is_some_and(|c| !c.is_empty()));
    }
}

#[test]
fn flow_steps_in_place() {
    unsafe {
        let mut flow = ptr::null_mut();
        assert_eq!(gg_flow_new(4, GgScheme::Spectral, &mut flow), GgStatus::Ok);
        let pert =
            CString::new(r#"{"terms": [{"component": 1, "indices": [0], "mode": [1, 0, 0, 0, 0], "cos": 1.0}]}"#)
                .unwrap();
        let mut state = ptr::null_mut();
        assert_eq!(gg_state_new(flow, ptr::null(), 1e-2, pert.as_ptr(), &mut state), GgStatus::Ok);
        let len = gg_state_len(state);
        assert_eq!(len, 32 * 4usize.pow(5));

        let mut before = vec![0.0; len];
        assert_eq!(gg_state_copy(state, before.as_mut_ptr(), len), GgStatus::Ok);
        assert_eq!(gg_state_copy(state, before.as_mut_ptr(), len - 1), GgStatus::BufferTooSmall);

        let mut v0 = 0.0;
        assert_eq!(gg_flow_hamiltonian(flow, state, &mut v0), GgStatus::Ok);
        assert!(v0.is_finite() && v0 > 0.0);

        assert_eq!(gg_flow_step(flow, state, 0.01, 3), GgStatus::Ok);
        assert!((gg_state_time(state) - 0.03).abs() < 1e-12);
        let mut after = vec![0.0; len];
        assert_eq!(gg_state_copy(state, after.as_mut_ptr(), len), GgStatus::Ok);
        assert_ne!(before, after);

        let mut closure = 1.0;
        assert_eq!(gg_flow_closure_norm(flow, state, &mut closure), GgStatus::Ok);
        assert!(closure < 1e-12);

        assert_eq!(gg_flow_step(flow, state, -1.0, 1), GgStatus::InvalidInput);

        let mut other = ptr::null_mut();
        assert_eq!(gg_flow_new(6, GgScheme::Spectral, &mut other), GgStatus::Ok);
        assert_eq!(gg_flow_step(other, state, 0.01, 1), GgStatus::InvalidInput);

        gg_state_free(state);
        gg_flow_free(flow);
        gg_flow_free(other);
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/gengeom.h")
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "gg_version",
        "gg_last_error_message",
        "gg_string_free",
        "gg_rho_from_json",
        "gg_rho_normal_form",
        "gg_rho_analyze",
        "gg_verify_identities",
        "gg_flow_new",
        "gg_state_new",
        "gg_flow_step",
        "gg_flow_hamiltonian",
        "typedef struct GgRho GgRho",
        "GG_STATUS_OK = 0",
    ] {
        assert!(text.contains(name), "header is missing {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "gengeom.h"

int main(void) {
    GgRho *rho = NULL;
    if (gg_rho_normal_form(&rho) != GG_STATUS_OK) return 10;
    char *f = NULL;
    if (gg_rho_quartic_invariant(rho, &f) != GG_STATUS_OK) return 11;
    printf("%s\n", f);
    gg_string_free(f);
    gg_rho_free(rho);

    GgRho *bad = NULL;
    if (gg_rho_from_json("[]", &bad) != GG_STATUS_PARSE) return 12;
    if (gg_last_error_message() == NULL) return 13;
    return 0;
}
"#;

/// Compiles a C program against the header and links it to the static library.
#[test]
fn c_program_links_against_static_library() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libgengeom_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("cc is available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let printed = String::from_utf8(out.stdout).unwrap();
    assert!(printed.contains("\"-8\""), "{printed}");
}
