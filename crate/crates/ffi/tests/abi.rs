use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use renormalab_ffi::*;

fn cs(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(rl_last_error()) }.to_string_lossy().into_owned()
}

fn value(s: RlScalar) -> f64 {
    s.hi + s.lo
}

#[test]
fn scalars_keep_both_words() {
    let mut out = RlScalar { hi: 0.0, lo: 0.0 };
    let lit = cs("0.1");
    assert_eq!(unsafe { rl_scalar_parse(lit.as_ptr(), &mut out) }, RlStatus::Ok);
    assert_eq!(out.hi, 0.1);
    assert!(out.lo != 0.0 && out.lo.abs() < 1e-17);
    let bad = cs("zero point one");
    assert_eq!(unsafe { rl_scalar_parse(bad.as_ptr(), &mut out) }, RlStatus::Parse);
    assert!(last_error().contains("zero point one"));
}

#[test]
fn null_pointers_are_reported() {
    let mut n = 0usize;
    assert_eq!(unsafe { rl_germ_degree(ptr::null(), &mut n) }, RlStatus::NullPointer);
    assert!(last_error().contains("germ"));
    assert_eq!(unsafe { rl_scalar_parse(ptr::null(), ptr::null_mut()) }, RlStatus::NullPointer);
    unsafe {
        rl_germ_free(ptr::null_mut());
        rl_string_free(ptr::null_mut());
    }
}

#[test]
fn germ_handles() {
    let mut g = ptr::null_mut();
    let c = RlScalar { hi: -1.0, lo: 0.0 };
    assert_eq!(unsafe { rl_germ_quadratic(c, 16, 2.5, &mut g) }, RlStatus::Ok);
    let mut a = RlScalar { hi: 0.0, lo: 0.0 };
    unsafe {
        assert_eq!(rl_germ_coefficient(g, 2, &mut a), RlStatus::Ok);
        assert_eq!(value(a), 1.0);
        assert_eq!(rl_germ_coefficient(g, 17, &mut a), RlStatus::InvalidArgument);
        assert_eq!(rl_germ_eval(g, RlScalar { hi: 0.5, lo: 0.0 }, &mut a), RlStatus::Ok);
        assert_eq!(value(a), -0.75);
        assert_eq!(rl_germ_eval(g, RlScalar { hi: 9.0, lo: 0.0 }, &mut a), RlStatus::Numeric);
        let mut s = ptr::null_mut();
        assert_eq!(rl_germ_to_json(g, &mut s), RlStatus::Ok);
        assert!(CStr::from_ptr(s).to_str().unwrap().contains("coeffs"));
        rl_string_free(s);
        rl_germ_free(g);
    }
    assert_eq!(unsafe { rl_germ_quadratic(c, 16, -1.0, &mut g) }, RlStatus::InvalidArgument);
}

#[test]
fn fixed_point_and_cascade_agree() {
    let word = cs("2");
    let mut fp = ptr::null_mut();
    assert_eq!(unsafe { rl_fixed_point_solve(word.as_ptr(), 30, 4, 1e-10, &mut fp) }, RlStatus::Ok);
    let mut lambda = RlScalar { hi: 0.0, lo: 0.0 };
    let mut res = lambda;
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(rl_fixed_point_scaling(fp, &mut lambda), RlStatus::Ok);
        assert_eq!(rl_fixed_point_residual(fp, &mut res), RlStatus::Ok);
        assert_eq!(rl_fixed_point_germ(fp, &mut g), RlStatus::Ok);
        rl_fixed_point_free(fp);
        let mut a0 = RlScalar { hi: 0.0, lo: 0.0 };
        assert_eq!(rl_germ_coefficient(g, 0, &mut a0), RlStatus::Ok);
        assert!((value(a0) + 1.527632997).abs() < 1e-8);
        rl_germ_free(g);
    }
    assert!((value(lambda) + 2.502907875).abs() < 1e-8);
    assert!(value(res) < 1e-10);

    let letter = cs("doubling");
    let mut t = ptr::null_mut();
    let mut delta = RlScalar { hi: 0.0, lo: 0.0 };
    let mut n = 0;
    unsafe {
        assert_eq!(rl_cascade_new(letter.as_ptr(), 10, &mut t), RlStatus::Ok);
        assert_eq!(rl_cascade_len(t, &mut n), RlStatus::Ok);
        assert_eq!(rl_cascade_delta(t, &mut delta), RlStatus::Ok);
        let mut c1 = delta;
        assert_eq!(rl_cascade_parameter(t, 0, &mut c1), RlStatus::Ok);
        assert_eq!(value(c1), -1.0);
        assert_eq!(rl_cascade_parameter(t, 10, &mut c1), RlStatus::InvalidArgument);
        rl_cascade_free(t);
    }
    assert_eq!(n, 10);
    assert!((value(delta) - 4.6692016).abs() < 1e-5);
}

#[test]
fn numeric_failures_map_to_codes() {
    let word = cs("2");
    let mut fp = ptr::null_mut();
    assert_eq!(unsafe { rl_fixed_point_solve(word.as_ptr(), 30, 4, -1.0, &mut fp) }, RlStatus::InvalidArgument);
    assert_eq!(unsafe { rl_fixed_point_solve(word.as_ptr(), 16, 4, 1e-40, &mut fp) }, RlStatus::NotFixedPoint);
    assert!(fp.is_null());
    let letters = cs("2");
    let mut d = RlScalar { hi: 0.0, lo: 0.0 };
    assert_eq!(unsafe { rl_hdim_estimate(letters.as_ptr(), 3, &mut d) }, RlStatus::InvalidArgument);
    let letter = cs("3");
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { rl_cascade_new(letter.as_ptr(), 12, &mut t) }, RlStatus::PrecisionExhausted);
}

#[test]
fn grids_and_images() {
    let mut g = ptr::null_mut();
    let re = RlScalar { hi: -0.5, lo: 0.0 };
    let im = RlScalar { hi: 0.0, lo: 0.0 };
    assert_eq!(unsafe { rl_grid_render(re, im, 1.5, 64, 200, false, &mut g) }, RlStatus::Ok);
    let mut size = 0;
    let mut member = false;
    unsafe {
        assert_eq!(rl_grid_pgm(g, ptr::null_mut(), 0, &mut size), RlStatus::Ok);
        assert_eq!(size, 13 + 64 * 64);
        let mut buf = vec![0u8; size];
        assert_eq!(rl_grid_pgm(g, buf.as_mut_ptr(), 10, &mut size), RlStatus::InvalidArgument);
        assert_eq!(rl_grid_pgm(g, buf.as_mut_ptr(), buf.len(), &mut size), RlStatus::Ok);
        assert!(buf.starts_with(b"P5\n64 64\n255\n"));
        assert_eq!(rl_grid_member(g, 32, 16, &mut member), RlStatus::Ok);
        assert!(member);
        assert_eq!(rl_grid_member(g, 64, 0, &mut member), RlStatus::InvalidArgument);
        let mut r = re;
        assert_eq!(rl_grid_gap_radius(g, &mut r), RlStatus::Ok);
        assert!(value(r) > 0.0);
        rl_grid_free(g);
    }
    assert_eq!(unsafe { rl_grid_render(re, im, 1.5, 100, 200, false, &mut g) }, RlStatus::InvalidArgument);
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(rl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "renormalab.h"

int main(void) {
    RlCascade *t = NULL;
    RlScalar d;
    if (rl_cascade_new("2", 8, &t) != RL_STATUS_OK) return 1;
    if (rl_cascade_delta(t, &d) != RL_STATUS_OK) return 2;
    rl_cascade_free(t);
    if (rl_cascade_new("nonsense", 8, &t) != RL_STATUS_PARSE) return 3;
    if (rl_last_error()[0] == '\0') return 4;
    printf("%.6f\n", d.hi + d.lo);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let profile_dir = tmp.parent().unwrap().join(if cfg!(debug_assertions) { "debug" } else { "release" });
    let lib = profile_dir.join("librenormalab_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let src = tmp.join("abi_check.c");
    let exe = tmp.join("abi_check");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let printed: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((printed - 4.6692).abs() < 1e-3);
}
