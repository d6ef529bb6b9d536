//! Exercises the exported functions through their C signatures.

use ksduo_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

struct Params(*mut KsduoParams);

impl Params {
    fn new() -> Self {
        Params(ksduo_params_new())
    }

    fn set(&self, key: &str, value: f64) -> KsduoStatus {
        let key = CString::new(key).unwrap();
        unsafe { ksduo_params_set(self.0, key.as_ptr(), value) }
    }
}

impl Drop for Params {
    fn drop(&mut self) {
        unsafe { ksduo_params_free(self.0) }
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ksduo_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn thresholds_and_equilibrium_at_defaults() {
    let p = Params::new();
    let mut eq = KsduoEquilibrium::default();
    assert_eq!(unsafe { ksduo_equilibrium(p.0, &mut eq) }, KsduoStatus::Ok);
    assert!((eq.u - 2.0 / 3.0).abs() < 1e-15 && (eq.w - 8.0 / 3.0).abs() < 1e-14);

    let (mut ct, mut ch) = (0.0, 0.0);
    assert_eq!(unsafe { ksduo_chi_tilde(p.0, 1, &mut ct) }, KsduoStatus::Ok);
    assert_eq!(unsafe { ksduo_chi_hat(p.0, 1, &mut ch) }, KsduoStatus::Ok);
    assert!((ct - 61.0).abs() <= 0.05 && (ch - 75.2).abs() <= 0.05);

    let mut crit = std::mem::MaybeUninit::<KsduoCritical>::uninit();
    assert_eq!(unsafe { ksduo_critical_chi(p.0, 200, crit.as_mut_ptr()) }, KsduoStatus::Ok);
    let crit = unsafe { crit.assume_init() };
    assert_eq!((crit.argmin_k, crit.loss_type, crit.stability), (1, KsduoLossType::SteadyState, KsduoStability::Stable));
    assert_eq!(crit.chi0, ct);
}

#[test]
fn branch_sign_matches_library() {
    let p = Params::new();
    assert_eq!(p.set("d1", 1000.0), KsduoStatus::Ok);
    assert_eq!(p.set("d2", 1000.0), KsduoStatus::Ok);
    let mut b = std::mem::MaybeUninit::<KsduoBranch>::uninit();
    assert_eq!(unsafe { ksduo_branch(p.0, 1, b.as_mut_ptr()) }, KsduoStatus::Ok);
    let b = unsafe { b.assume_init() };
    assert_eq!(b.k2.signum() as i8, b.k2_asymptotic_sign);
}

#[test]
fn errors_carry_status_and_message() {
    let p = Params::new();
    assert_eq!(p.set("bogus", 1.0), KsduoStatus::InvalidArgument);
    assert!(last_error().contains("bogus"));

    assert_eq!(p.set("a1", 1.5), KsduoStatus::Ok);
    assert_eq!(unsafe { ksduo_params_validate(p.0) }, KsduoStatus::InvalidParams);
    assert!(last_error().contains("a1"));

    let mut x = 0.0;
    assert_eq!(unsafe { ksduo_chi_tilde(ptr::null(), 1, &mut x) }, KsduoStatus::NullPointer);
    assert_eq!(p.set("a1", 0.5), KsduoStatus::Ok);
    assert_eq!(unsafe { ksduo_chi_tilde(p.0, 0, &mut x) }, KsduoStatus::InvalidArgument);
    let name = unsafe { CStr::from_ptr(ksduo_status_name(KsduoStatus::BlowUp)) };
    assert_eq!(name.to_str().unwrap(), "blow_up");
}

#[test]
fn simulate_and_read_back() {
    let p = Params::new();
    assert_eq!(p.set("chi", 100.0), KsduoStatus::Ok);
    let mut opts = ksduo_solver_options_default();
    opts.t_end = 0.5;
    opts.snapshot_every = 10;
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { ksduo_simulate(p.0, &opts, &mut t) }, KsduoStatus::Ok);
    let n = unsafe { ksduo_trajectory_cells(t) };
    let count = unsafe { ksduo_trajectory_snapshots(t) };
    assert_eq!((n, count), (50, 6));
    let mut time = 0.0;
    assert_eq!(unsafe { ksduo_trajectory_time(t, count - 1, &mut time) }, KsduoStatus::Ok);
    assert!((time - 0.5).abs() < 1e-12);
    let mut buf = vec![0.0; n];
    assert_eq!(unsafe { ksduo_trajectory_field(t, 0, KsduoField::W, buf.as_mut_ptr(), n - 1) }, KsduoStatus::InvalidArgument);
    assert_eq!(unsafe { ksduo_trajectory_field(t, 0, KsduoField::W, buf.as_mut_ptr(), n) }, KsduoStatus::Ok);
    let eq_w = 8.0 / 3.0;
    assert!(buf.iter().all(|w| (w - eq_w).abs() <= 0.01 + 1e-12));
    unsafe { ksduo_trajectory_free(t) };
}

#[test]
fn blow_up_is_reported_and_output_nulled() {
    let p = Params::new();
    assert_eq!(p.set("chi", 1000.0), KsduoStatus::Ok);
    let mut opts = ksduo_solver_options_default();
    opts.t_end = 5.0;
    let mut t = ptr::NonNull::<KsduoTrajectory>::dangling().as_ptr();
    assert_eq!(unsafe { ksduo_simulate(p.0, &opts, &mut t) }, KsduoStatus::BlowUp);
    assert!(t.is_null());
}

#[test]
fn header_is_generated() {
    let header = include_str!("../include/ksduo.h");
    for sym in ["ksduo_params_new", "ksduo_branch", "ksduo_simulate", "KSDUO_STATUS_BLOW_UP", "typedef struct KsduoParams KsduoParams"] {
        assert!(header.contains(sym), "{sym}");
    }
}

/// Compiles the C smoke program against the header and the static library
/// when a C compiler is available.
#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if std::process::Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipped");
        return;
    }
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    // `cargo test` does not emit the staticlib, so build it into a private
    // target dir; the outer build lock is still held.
    let target = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("staticlib");
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let status = std::process::Command::new(cargo)
        .args(["build", "--release", "--lib", "--manifest-path"])
        .arg(root.join("Cargo.toml"))
        .arg("--target-dir")
        .arg(&target)
        .status()
        .unwrap();
    assert!(status.success());
    let lib = target.join("release/libksduo_ffi.a");
    let out = tempfile::tempdir().unwrap();
    let bin = out.path().join("smoke");
    let status = std::process::Command::new(&cc)
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let run = std::process::Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
