use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use cvxkob_ffi::*;

fn last_error() -> String {
    let p = cvxkob_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn unit_ball() -> *mut CvxkobDomain {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { cvxkob_domain_new_ball(2, [0.0; 4].as_ptr(), 1.0, &mut d) }, CvxkobStatus::Ok);
    d
}

#[test]
fn distance_matches_the_disc_formula() {
    let d = unit_ball();
    assert_eq!(unsafe { cvxkob_domain_dim(d) }, 2);
    let (z, w) = ([0.0; 4], [0.5, 0.0, 0.0, 0.0]);
    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(unsafe { cvxkob_distance(d, z.as_ptr(), w.as_ptr(), &mut lo, &mut hi) }, CvxkobStatus::Ok);
    let exact = 0.5f64.atanh();
    assert!(lo <= exact + 1e-12 && exact <= hi + 1e-12 && hi - lo < 1e-6, "[{lo}, {hi}]");
    let mut inside = -1;
    assert_eq!(unsafe { cvxkob_domain_contains(d, [0.9, 0.0, 0.5, 0.0].as_ptr(), &mut inside) }, CvxkobStatus::Ok);
    assert_eq!(inside, 0);
    unsafe { cvxkob_domain_free(d) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let d = unit_ball();
    let (mut lo, mut hi) = (0.0, 0.0);
    let outside = [2.0, 0.0, 0.0, 0.0];
    let s = unsafe { cvxkob_distance(d, [0.0; 4].as_ptr(), outside.as_ptr(), &mut lo, &mut hi) };
    assert_eq!(s, CvxkobStatus::NotInDomain);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { cvxkob_distance(ptr::null(), outside.as_ptr(), outside.as_ptr(), &mut lo, &mut hi) }, CvxkobStatus::NullPointer);
    assert!(last_error().contains("domain"));
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { cvxkob_domain_new_ellipsoid(2, [1, 0].as_ptr(), &mut e) }, CvxkobStatus::InvalidArgument);
    let json = CString::new(r#"{"dim": 2, "kind": "ellipsoid", "exponents": [1, 2]}"#).unwrap();
    assert_eq!(unsafe { cvxkob_domain_new_json(json.as_ptr(), &mut e) }, CvxkobStatus::Ok);
    assert_eq!(unsafe { cvxkob_domain_dim(e) }, 2);
    let bad = CString::new(r#"{"dim": 2, "kind": "ball"}"#).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { cvxkob_domain_new_json(bad.as_ptr(), &mut f) }, CvxkobStatus::InvalidArgument);
    assert!(f.is_null());
    unsafe {
        cvxkob_domain_free(d);
        cvxkob_domain_free(e);
        cvxkob_domain_free(ptr::null_mut());
    }
}

#[test]
fn hyperbolic_dilation_is_classified() {
    let d = unit_ball();
    let (ch, sh) = (1.0f64.cosh(), 1.0f64.sinh());
    #[rustfmt::skip]
    let m = [
        ch, 0.0, 0.0, 0.0, sh, 0.0,
        0.0, 0.0, 1.0, 0.0, 0.0, 0.0,
        sh, 0.0, 0.0, 0.0, ch, 0.0,
    ];
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { cvxkob_automorphism_new_matrix(d, 3, m.as_ptr(), &mut a) }, CvxkobStatus::Ok);
    let mut img = [0.0; 4];
    assert_eq!(unsafe { cvxkob_automorphism_apply(a, [0.0; 4].as_ptr(), img.as_mut_ptr()) }, CvxkobStatus::Ok);
    assert!((img[0] - 1.0f64.tanh()).abs() < 1e-12 && img[2].abs() < 1e-12, "{img:?}");
    let mut kind = CvxkobMapType::Elliptic;
    let mut xp = [0.0; 4];
    assert_eq!(unsafe { cvxkob_classify(d, a, [0.0; 4].as_ptr(), &mut kind, xp.as_mut_ptr()) }, CvxkobStatus::Ok);
    assert_eq!(kind, CvxkobMapType::Hyperbolic);
    assert!((xp[0] - 1.0).abs() < 1e-4 && xp[2].abs() < 1e-4, "{xp:?}");
    unsafe {
        cvxkob_automorphism_free(a);
        cvxkob_domain_free(d);
    }
}

#[test]
fn disc_lift_acts_on_the_first_coordinate() {
    let json = CString::new(r#"{"dim": 2, "kind": "ellipsoid", "exponents": [1, 2]}"#).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { cvxkob_domain_new_json(json.as_ptr(), &mut d) }, CvxkobStatus::Ok);
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { cvxkob_automorphism_new_disc_lift(d, 0.3, 0.0, 0.0, &mut a) }, CvxkobStatus::Ok);
    let mut img = [0.0; 4];
    assert_eq!(unsafe { cvxkob_automorphism_apply(a, [0.3, 0.0, 0.0, 0.0].as_ptr(), img.as_mut_ptr()) }, CvxkobStatus::Ok);
    assert!(img.iter().all(|x| x.abs() < 1e-12), "{img:?}");
    assert_eq!(unsafe { cvxkob_automorphism_new_disc_lift(d, 1.5, 0.0, 0.0, &mut a) }, CvxkobStatus::InvalidArgument);
    unsafe {
        cvxkob_automorphism_free(a);
        cvxkob_domain_free(d);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(cvxkob_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const SMOKE: &str = r#"
#include <stdio.h>
#include "cvxkob.h"

int main(void) {
    double center[4] = {0, 0, 0, 0}, z[4] = {0, 0, 0, 0}, w[4] = {0.5, 0, 0, 0};
    CvxkobDomain *d = NULL;
    double lo = 0, hi = 0;
    if (cvxkob_domain_new_ball(2, center, 1.0, &d) != CVXKOB_STATUS_OK) return 10;
    if (cvxkob_distance(d, z, w, &lo, &hi) != CVXKOB_STATUS_OK) return 11;
    w[0] = 3.0;
    if (cvxkob_distance(d, z, w, &lo, &hi) != CVXKOB_STATUS_NOT_IN_DOMAIN) return 12;
    if (cvxkob_last_error() == NULL) return 13;
    cvxkob_domain_free(d);
    printf("%.12f\n", lo);
    return 0;
}
"#;

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_against_the_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include").join("cvxkob.h");
    assert!(header.exists());
    // target/<profile>/deps/<test exe>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libcvxkob_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let work = std::env::temp_dir().join(format!("cvxkob-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("smoke.c");
    std::fs::write(&src, SMOKE).unwrap();
    let bin = work.join("smoke");
    let out = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .output();
    let out = match out {
        Ok(o) => o,
        Err(e) => {
            eprintln!("skipping: no C compiler ({e})");
            return;
        }
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert_eq!(run.status.code(), Some(0));
    let lo: f64 = String::from_utf8_lossy(&run.stdout).trim().parse().unwrap();
    assert!((lo - 0.5f64.atanh()).abs() < 1e-6);
}
