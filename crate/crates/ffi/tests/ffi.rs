use std::ffi::{c_char, CStr};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use pathslice_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { ps_last_error(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert_eq!(n, s.len());
    s
}

fn grid(points: usize) -> *mut PsGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { ps_grid_new(12.0, points, &mut g) }, PsStatus::Ok);
    g
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(ps_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn grid_errors_set_last_error() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { ps_grid_new(12.0, 1000, &mut g) }, PsStatus::Config);
    assert!(g.is_null());
    assert!(last_error().contains("power of two"));
    let g = grid(64);
    assert_eq!(unsafe { ps_grid_len(g) }, 64);
    assert_eq!(last_error(), "");
    assert_eq!(unsafe { ps_grid_new(12.0, 64, ptr::null_mut()) }, PsStatus::NullPointer);
    unsafe { ps_grid_free(g) };
    unsafe { ps_grid_free(ptr::null_mut()) };
}

#[test]
fn linear_action_coefficients() {
    let g = grid(64);
    let mut v = ptr::null_mut();
    let mut e = ptr::null_mut();
    unsafe {
        assert_eq!(ps_potential_linear(1.0, &mut v), PsStatus::Ok);
        assert_eq!(ps_expansion_new(v, 3, 0.0, 1.0, g, &mut e), PsStatus::Ok);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(ps_expansion_eval_w(e, 1, 0, 1.0, 3.0, &mut re, &mut im), PsStatus::Ok);
        assert!((re + 2.0).abs() < 1e-14 && im == 0.0);
        assert_eq!(ps_expansion_eval_w(e, 3, 0, 0.3, -2.0, &mut re, &mut im), PsStatus::Ok);
        assert!((re + 1.0 / 24.0).abs() < 1e-14);
        assert_eq!(ps_expansion_eval_w(e, 4, 0, 0.0, 0.0, &mut re, &mut im), PsStatus::Index);
        assert_eq!(ps_expansion_eval_action(e, 0.5, 0.0, 0.0, &mut re, &mut im), PsStatus::Ok);
        assert!((re + 0.125 / 24.0).abs() < 1e-14);
        assert_eq!(ps_expansion_eval_action(e, 0.0, 0.0, 0.0, &mut re, &mut im), PsStatus::TimeOrder);
        ps_expansion_free(e);
        ps_potential_free(v);
        ps_grid_free(g);
    }
}

#[test]
fn budget_is_enforced() {
    let g = grid(64);
    let (mut v, mut e) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(ps_potential_low_regularity(1, 16, &mut v), PsStatus::Ok);
        assert_eq!(ps_expansion_new(v, 2, 0.0, 1.0, g, &mut e), PsStatus::DerivativeBudget);
        assert!(e.is_null());
        assert!(last_error().contains("derivative budget"));
        let mut d = 0.0;
        assert_eq!(ps_potential_derivative(v, 0, 3, 0.0, 0.0, &mut d), PsStatus::DerivativeBudget);
        assert_eq!(ps_potential_derivative(v, 0, 2, 0.0, 0.0, &mut d), PsStatus::Ok);
        ps_potential_free(v);
        ps_grid_free(g);
    }
}

#[test]
fn free_propagation_matches_reference() {
    let g = grid(256);
    unsafe {
        let (mut v, mut e, mut f) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(ps_potential_zero(&mut v), PsStatus::Ok);
        assert_eq!(ps_expansion_new(v, 1, 0.0, 1.0, g, &mut e), PsStatus::Ok);
        assert_eq!(ps_wave_gaussian(g, 0.5, 1.0, 1.0, 1.0, &mut f), PsStatus::Ok);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ps_propagate_time_sliced(e, f, 1.0, 4, &mut a), PsStatus::Ok);
        assert_eq!(ps_propagate_reference(v, f, 0.0, 1.0, 1024, 1.0, &mut b), PsStatus::Ok);
        let mut d = 1.0;
        assert_eq!(ps_wave_distance(a, b, &mut d), PsStatus::Ok);
        assert!(d <= 1e-8, "{d}");
        let mut n = 0.0;
        assert_eq!(ps_wave_norm(a, &mut n), PsStatus::Ok);
        assert!((n - 1.0).abs() < 1e-10);
        let mut step = ptr::null_mut();
        assert_eq!(ps_propagate_short_time(e, f, 2.0, 0.0, 0.0, &mut step), PsStatus::Window);
        assert_eq!(ps_propagate_short_time(e, f, 2.0, 0.0, 2.0, &mut step), PsStatus::Ok);
        for w in [a, b, step, f] {
            ps_wave_free(w);
        }
        ps_expansion_free(e);
        ps_potential_free(v);
        ps_grid_free(g);
    }
}

#[test]
fn sample_round_trip() {
    let g = grid(16);
    let re: Vec<f64> = (0..16).map(|j| j as f64).collect();
    let im: Vec<f64> = (0..16).map(|j| -(j as f64)).collect();
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(ps_wave_from_samples(g, re.as_ptr(), im.as_ptr(), 15, &mut w), PsStatus::Shape);
        assert_eq!(ps_wave_from_samples(g, re.as_ptr(), im.as_ptr(), 16, &mut w), PsStatus::Ok);
        assert_eq!(ps_wave_len(w), 16);
        let (mut r2, mut i2) = (vec![0.0; 16], vec![0.0; 16]);
        assert_eq!(ps_wave_values(w, r2.as_mut_ptr(), i2.as_mut_ptr(), 16), PsStatus::Ok);
        assert_eq!((r2, i2), (re, im));
        assert_eq!(ps_wave_warning_count(w), 0);
        ps_wave_free(w);
        ps_grid_free(g);
    }
}

#[test]
fn time_modulated_potential() {
    unsafe {
        let (mut base, mut v) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ps_potential_cosine(1.0, 1.0, &mut base), PsStatus::Ok);
        let env = [1.0, 0.0, 0.5];
        assert_eq!(ps_potential_time_modulated(base, env.as_ptr(), 3, &mut v), PsStatus::Ok);
        let mut d = 0.0;
        assert_eq!(ps_potential_derivative(v, 1, 0, 2.0, 0.0, &mut d), PsStatus::Ok);
        assert!((d - 2.0).abs() < 1e-14);
        ps_potential_free(v);
        ps_potential_free(base);
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/pathslice.h")
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "typedef struct PsGrid PsGrid;",
        "PS_STATUS_DERIVATIVE_BUDGET = 4",
        "ps_last_error(char *buf, size_t len)",
        "ps_expansion_eval_w(",
        "ps_propagate_time_sliced(",
        "ps_wave_free(",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "pathslice.h"

int main(void) {
    PsGrid *g = NULL;
    PsPotential *v = NULL;
    PsExpansion *e = NULL;
    double re = 0.0, im = 0.0;
    if (ps_grid_new(12.0, 64, &g) != PS_STATUS_OK) return 1;
    if (ps_potential_harmonic(1.0, &v) != PS_STATUS_OK) return 2;
    if (ps_expansion_new(v, 2, 0.0, 1.0, g, &e) != PS_STATUS_OK) return 3;
    if (ps_expansion_eval_w(e, 2, 0, 0.4, -1.0, &re, &im) != PS_STATUS_OK) return 4;
    if (fabs(im + 1.0 / 12.0) > 1e-14 || fabs(re) > 1e-14) return 5;
    if (ps_expansion_eval_w(e, 3, 0, 0.0, 0.0, &re, &im) != PS_STATUS_INDEX) return 6;
    char buf[256];
    if (ps_last_error(buf, sizeof buf) == 0) return 7;
    printf("%s\n", buf);
    ps_expansion_free(e);
    ps_potential_free(v);
    ps_grid_free(g);
    return 0;
}
"#;

fn cc() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .map(str::to_string)
}

#[test]
fn c_program_compiles_against_header() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());

    // Link and run when the static library from this build is available.
    let target = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target");
    let lib = ["debug", "release"]
        .iter()
        .map(|p| target.join(p).join("libpathslice_ffi.a"))
        .find(|p| p.exists());
    let Some(lib) = lib else {
        eprintln!("libpathslice_ffi.a not built; link step skipped");
        return;
    };
    let exe = dir.path().join("main");
    let status = Command::new(&cc)
        .args(["-std=c99", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).contains("index error"));
}
