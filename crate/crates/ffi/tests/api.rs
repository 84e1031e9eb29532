use std::ffi::{c_char, CStr, CString};
use std::ptr;

use freespiral::{ModelParams, SpinSign};
use freespiral_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe {
        fs_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn quantized(kappa: f64, sign: i32) -> (*mut FsModel, f64) {
    let mut model = ptr::null_mut();
    let mut mz = 0.0;
    let status = unsafe { fs_model_quantized(kappa, sign, &mut model, &mut mz) };
    assert_eq!(status, FsStatus::Ok, "{}", last_error());
    assert!(!model.is_null());
    (model, mz)
}

#[test]
fn spiral_params_match_the_library() {
    let (model, mz) = quantized(0.6, -1);
    let (p, expected_mz) = ModelParams { kappa: 0.6, ..Default::default() }.with_quantized_spin(SpinSign::Minus).unwrap();
    assert_eq!(mz, expected_mz);
    let mut sp = FsSpiral::default();
    assert_eq!(unsafe { fs_spiral_params(model, mz, 0.02, &mut sp) }, FsStatus::Ok);
    let expected = p.spiral_params(mz, 0.02).unwrap();
    assert_eq!(sp.radius, expected.radius);
    assert_eq!(sp.omega, expected.omega);
    assert!(sp.omega < 0.0);
    assert!((sp.wavelength.abs() / sp.de_broglie - 2.0).abs() < 1e-12);
    unsafe { fs_model_free(model) };
}

#[test]
fn trajectory_samples_round_trip() {
    let (model, mz) = quantized(0.5, 1);
    let mut tr = ptr::null_mut();
    let status = unsafe { fs_integrate_spiral(model, mz, 0.01, 0.3, 3.0, 200, &mut tr) };
    assert_eq!(status, FsStatus::Ok, "{}", last_error());
    let n = unsafe { fs_trajectory_len(tr) };
    assert_eq!(n, 601);
    let mut first = FsSample::default();
    let mut last = FsSample::default();
    unsafe {
        assert_eq!(fs_trajectory_sample(tr, 0, &mut first), FsStatus::Ok);
        assert_eq!(fs_trajectory_sample(tr, n - 1, &mut last), FsStatus::Ok);
    }
    assert_eq!(first.t, 0.0);
    let norm = |a: [f64; 3]| a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff = |a: [f64; 3], b: [f64; 3]| norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
    assert!(diff(first.momentum, last.momentum) <= 1e-6 * norm(first.momentum));
    let j_drift = diff(first.angular_momentum, last.angular_momentum) / norm(first.angular_momentum);
    assert!(j_drift <= 1e-5, "{j_drift}");
    let mut s = FsSample::default();
    assert_eq!(unsafe { fs_trajectory_sample(tr, n, &mut s) }, FsStatus::OutOfRange);
    assert!(last_error().contains(&n.to_string()));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { fs_trajectory_write_csv(tr, c_path.as_ptr()) }, FsStatus::Ok);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), n + 1);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 18);
    unsafe {
        fs_trajectory_free(tr);
        fs_model_free(model);
    }
}

#[test]
fn null_pointers_are_reported() {
    let mut mz = 0.0;
    assert_eq!(unsafe { fs_model_quantized(0.5, 1, ptr::null_mut(), &mut mz) }, FsStatus::NullPointer);
    assert!(last_error().contains("null"));
    let mut sp = FsSpiral::default();
    assert_eq!(unsafe { fs_spiral_params(ptr::null(), 0.5, 0.01, &mut sp) }, FsStatus::NullPointer);
    assert_eq!(unsafe { fs_trajectory_len(ptr::null()) }, 0);
    assert_eq!(unsafe { fs_trajectory_write_csv(ptr::null(), ptr::null()) }, FsStatus::NullPointer);
    assert_eq!(unsafe { fs_run_scenario(ptr::null(), ptr::null(), ptr::null(), -1) }, FsStatus::NullPointer);
    unsafe {
        fs_model_free(ptr::null_mut());
        fs_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn invalid_inputs_map_to_status_codes() {
    let mut model = ptr::null_mut();
    let status = unsafe { fs_model_new(0.2, 1.0, 0.5, 1.0, 1.0, 1.0, &mut model) };
    assert_eq!(status, FsStatus::Domain);
    assert!(model.is_null());
    assert!(last_error().contains("kappa"), "{}", last_error());

    let status = unsafe { fs_model_new(0.5, 1.0, 0.5, 1.0, 1.0, 1.0, &mut model) };
    assert_eq!(status, FsStatus::Ok, "{}", last_error());
    assert!(last_error().is_empty());
    let mut sp = FsSpiral::default();
    assert_ne!(unsafe { fs_spiral_params(model, 0.5, f64::NAN, &mut sp) }, FsStatus::Ok);
    let mut tr = ptr::null_mut();
    assert_eq!(unsafe { fs_integrate_spiral(model, 0.5, 0.01, 0.0, -1.0, 200, &mut tr) }, FsStatus::Precondition);
    assert!(tr.is_null());
    unsafe { fs_model_free(model) };
}

#[test]
fn physical_model_has_electron_mass() {
    let mut model = ptr::null_mut();
    let mut mz = 0.0;
    assert_eq!(unsafe { fs_model_physical(0.8, &mut model, &mut mz) }, FsStatus::Ok, "{}", last_error());
    let mut sp = FsSpiral::default();
    assert_eq!(unsafe { fs_spiral_params(model, mz, 1e8, &mut sp) }, FsStatus::Ok);
    assert!((sp.effective_mass / 9.1093837015e-28 - 1.0).abs() < 1e-9, "{}", sp.effective_mass);
    unsafe { fs_model_free(model) };
}

#[test]
fn scenarios_run_and_report_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().join("phase").to_str().unwrap()).unwrap();
    let phase = CString::new("phase").unwrap();
    let empty = CString::new("").unwrap();
    assert_eq!(unsafe { fs_run_scenario(phase.as_ptr(), empty.as_ptr(), out.as_ptr(), 7) }, FsStatus::Ok, "{}", last_error());
    let summary = std::fs::read_to_string(dir.path().join("phase/summary.json")).unwrap();
    assert!(summary.contains("\"seed\": 7"));

    let bad = CString::new("[model]\nkappa = 0.2\n").unwrap();
    assert_eq!(unsafe { fs_run_scenario(phase.as_ptr(), bad.as_ptr(), out.as_ptr(), -1) }, FsStatus::Config);

    let unknown = CString::new("teleport").unwrap();
    assert_eq!(unsafe { fs_run_scenario(unknown.as_ptr(), empty.as_ptr(), out.as_ptr(), -1) }, FsStatus::Config);
    assert!(last_error().contains("teleport"));

    let resonance = CString::new("resonance").unwrap();
    let coarse = CString::new("[resonance]\npolarization = \"transverse\"\npoints = 5\ninteraction_pitches = 20\nrefinements = 0\n").unwrap();
    let out = CString::new(dir.path().join("res").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { fs_run_scenario(resonance.as_ptr(), coarse.as_ptr(), out.as_ptr(), -1) }, FsStatus::ChecksFailed);
}

#[test]
fn truncated_error_message_stays_terminated() {
    let mut mz = 0.0;
    unsafe { fs_model_quantized(0.5, 1, ptr::null_mut(), &mut mz) };
    let mut buf = [1 as c_char; 4];
    let full = unsafe { fs_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(full > 3);
    assert_eq!(buf[3], 0);
    assert_eq!(unsafe { fs_last_error(ptr::null_mut(), 0) }, full);
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(fs_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
