use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use fbs_ffi::*;

fn reference() -> FbsModel {
    FbsModel { alpha: -0.02, beta: 0.6, coherence_time: 10e-6 }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fbs_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn stateless_functions_match_core() {
    let mut tau = 0.0;
    assert_eq!(unsafe { fbs_optimal_tau(1e6, 10e-6, &mut tau) }, FbsStatus::Ok);
    assert!((tau / 1.578934675188444e-7 - 1.0).abs() < 1e-12);

    let mut df = 0.0;
    assert_eq!(unsafe { fbs_optimal_detuning(1e5, tau, 0, &mut df) }, FbsStatus::Ok);
    assert!((df / 1683346.0619272468 - 1.0).abs() < 1e-12);

    let prior = FbsBelief { mu: 0.0, sigma: 1e6 };
    let probe = FbsProbe { tau, delta_f: 1.0 / (4.0 * tau) };
    let mut post = FbsBelief::default();
    let mut clamped = 7u8;
    let s = unsafe { fbs_update(&prior, &probe, 1, &reference(), &mut post, &mut clamped) };
    assert_eq!(s, FbsStatus::Ok);
    assert!((post.mu / 365505.0244896696 - 1.0).abs() < 1e-10);
    assert!((post.sigma / 930809.3666658098 - 1.0).abs() < 1e-10);
    assert_eq!(clamped, 0);

    let (mut p_plus, mut p_minus) = (0.0, 0.0);
    unsafe {
        fbs_likelihood(1, 2e5, &probe, &reference(), &mut p_plus);
        fbs_likelihood(-1, 2e5, &probe, &reference(), &mut p_minus);
    }
    assert!((p_plus + p_minus - 1.0).abs() < 1e-15);
}

#[test]
fn errors_set_status_and_message() {
    let mut out = 0.0;
    assert_eq!(unsafe { fbs_optimal_tau(-1.0, 1e-5, &mut out) }, FbsStatus::InvalidParameter);
    assert!(last_error().contains("sigma"), "{}", last_error());

    assert_eq!(unsafe { fbs_optimal_tau(1e6, 1e-5, ptr::null_mut()) }, FbsStatus::NullPointer);
    assert_eq!(last_error(), "out is null");

    let probe = FbsProbe { tau: 1e-7, delta_f: 0.0 };
    assert_eq!(unsafe { fbs_likelihood(0, 0.0, &probe, &reference(), &mut out) }, FbsStatus::InvalidParameter);

    assert_eq!(unsafe { fbs_optimal_tau(1e6, 1e-5, &mut out) }, FbsStatus::Ok);
    assert_eq!(last_error(), "");
}

#[test]
fn estimator_handle_lifecycle() {
    let prior = FbsBelief { mu: 0.0, sigma: 1e6 };
    let mut est = ptr::null_mut();
    assert_eq!(unsafe { fbs_estimator_new(&prior, &reference(), 0, &mut est) }, FbsStatus::Ok);
    assert!(!est.is_null());
    assert_eq!(unsafe { fbs_estimator_steps(est) }, 0);

    let mut probe = FbsProbe::default();
    let mut step = FbsStep::default();
    for m in [1i8, -1, -1, 1] {
        assert_eq!(unsafe { fbs_estimator_next_probe(est, &mut probe) }, FbsStatus::Ok);
        assert_eq!(unsafe { fbs_estimator_observe(est, m, &mut step) }, FbsStatus::Ok);
        assert_eq!(step.tau, probe.tau);
        assert_eq!(step.outcome, m);
    }
    assert_eq!(step.step, 4);
    assert_eq!(unsafe { fbs_estimator_observe(est, 2, ptr::null_mut()) }, FbsStatus::InvalidParameter);
    assert_eq!(unsafe { fbs_estimator_steps(est) }, 4);

    let mut first = FbsStep::default();
    assert_eq!(unsafe { fbs_estimator_step(est, 0, &mut first) }, FbsStatus::Ok);
    assert!((first.mu / 365505.0244896696 - 1.0).abs() < 1e-10);
    assert_eq!(unsafe { fbs_estimator_step(est, 4, &mut first) }, FbsStatus::IndexOutOfRange);

    let mut b = FbsBelief::default();
    assert_eq!(unsafe { fbs_estimator_belief(est, &mut b) }, FbsStatus::Ok);
    assert_eq!((b.mu, b.sigma), (step.mu, step.sigma));
    unsafe { fbs_estimator_free(est) };
    unsafe { fbs_estimator_free(ptr::null_mut()) };
    assert_eq!(unsafe { fbs_estimator_steps(ptr::null()) }, 0);
}

#[test]
fn invalid_model_leaves_handle_null() {
    let prior = FbsBelief { mu: 0.0, sigma: 1e6 };
    let bad = FbsModel { alpha: 0.5, beta: 0.9, coherence_time: 1e-5 };
    let mut est = ptr::dangling_mut::<FbsEstimator>();
    assert_eq!(unsafe { fbs_estimator_new(&prior, &bad, 0, &mut est) }, FbsStatus::InvalidParameter);
    assert!(est.is_null());
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(fbs_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header_and_staticlib() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libfbs_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or {} missing", lib.display());
        return;
    }
    let exe = Path::new(env!("CARGO_TARGET_TMPDIR")).join("fbs_smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C smoke test failed to compile");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
