use std::ffi::{CStr, CString};
use std::ptr;

use mots_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(mots_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn default_regime_scalars() {
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(mots_regime_default(&mut r), MotsStatus::MotsOk);
        let mut s = MotsRegimeScalars::default();
        assert_eq!(mots_regime_scalars(r, &mut s), MotsStatus::MotsOk);
        assert_eq!(s.a, 1e4);
        assert!((s.mu - 12.5).abs() < 1e-12);
        assert!((s.delta / 1e-40 - 1.0).abs() < 1e-12);
        assert!((s.amplitude / 1e32 - 1.0).abs() < 1e-9);
        let mut class = MotsPenroseClass::MotsViolatedNever;
        let mut slack = 0.0;
        assert_eq!(mots_regime_classify(r, 0.0, &mut class, &mut slack), MotsStatus::MotsOk);
        assert_eq!(class, MotsPenroseClass::MotsCertifiedPositive);
        assert!(slack > 0.0);
        assert_eq!(mots_regime_classify(r, 1.0, &mut class, &mut slack), MotsStatus::MotsOk);
        assert_eq!(class, MotsPenroseClass::MotsInconclusive);
        assert!(slack.is_nan());
        mots_regime_free(r);
    }
}

#[test]
fn constraint_violation_reports_code_and_message() {
    let text = CString::new("kappa = 0.4\n").unwrap();
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(mots_regime_from_toml(text.as_ptr(), &mut r), MotsStatus::MotsErrConstraint);
        assert!(r.is_null());
        assert!(last_error().contains("kappa"), "{}", last_error());
        let bad = CString::new("bogus = 1\n").unwrap();
        assert_eq!(mots_regime_from_toml(bad.as_ptr(), &mut r), MotsStatus::MotsErrConfig);
    }
}

#[test]
fn null_pointers_are_refused() {
    unsafe {
        assert_eq!(mots_regime_default(ptr::null_mut()), MotsStatus::MotsErrNull);
        let mut s = MotsRegimeScalars::default();
        assert_eq!(mots_regime_scalars(ptr::null(), &mut s), MotsStatus::MotsErrNull);
        assert!(last_error().contains("regime"));
        mots_regime_free(ptr::null_mut());
        mots_profile_free(ptr::null_mut());
        mots_solution_free(ptr::null_mut());
    }
    let name = unsafe { CStr::from_ptr(mots_status_name(5)) };
    assert_eq!(name.to_str().unwrap(), "non-convergence");
    assert_eq!(unsafe { CStr::from_ptr(mots_status_name(99)) }.to_str().unwrap(), "unknown");
}

#[test]
fn profile_roundtrip_and_slice_solve() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("p.bin").to_str().unwrap()).unwrap();
    let hash = CString::new("h").unwrap();
    unsafe {
        let mut r = ptr::null_mut();
        mots_regime_default(&mut r);
        let mut s = MotsRegimeScalars::default();
        mots_regime_scalars(r, &mut s);
        let mut p = ptr::null_mut();
        assert_eq!(mots_profile_build(r, &mut p), MotsStatus::MotsOk);
        let mut ok = 0;
        assert_eq!(mots_profile_verify(p, &mut ok), MotsStatus::MotsOk);
        assert_eq!(ok, 1);
        assert_eq!(mots_profile_save(p, path.as_ptr(), hash.as_ptr()), MotsStatus::MotsOk);
        let mut q = ptr::null_mut();
        assert_eq!(mots_profile_load(path.as_ptr(), &mut q), MotsStatus::MotsOk);
        let (mut n1, mut n2) = (0.0, 0.0);
        mots_profile_scale_critical_norm(p, 1, 2, &mut n1);
        mots_profile_scale_critical_norm(q, 1, 2, &mut n2);
        assert_eq!(n1, n2);
        assert_eq!(mots_profile_scale_critical_norm(p, 1, 500, &mut n1), MotsStatus::MotsErrResolution);

        let ubar = 0.5 * (s.ubar_window_start + s.ubar_lambda);
        let mut sol = ptr::null_mut();
        assert_eq!(mots_solve_slice(q, 8, 16, ubar, 3, 1.0, &mut sol), MotsStatus::MotsOk, "{}", last_error());
        let mut len = 0;
        mots_solution_len(sol, &mut len);
        assert_eq!(len, 8 * 16);
        let mut small = vec![0.0; 4];
        let mut written = 0;
        assert_eq!(mots_solution_radius(sol, small.as_mut_ptr(), small.len(), &mut written), MotsStatus::MotsErrBufferTooSmall);
        assert_eq!(written, len);
        let mut buf = vec![0.0; len];
        assert_eq!(mots_solution_radius(sol, buf.as_mut_ptr(), len, ptr::null_mut()), MotsStatus::MotsOk);
        let (mut lo, mut hi, mut res, mut area) = (0.0, 0.0, 0.0, 0.0);
        mots_solution_summary(sol, &mut lo, &mut hi, &mut res, &mut area);
        assert!(buf.iter().all(|v| (lo..=hi).contains(v)));
        // radius proxy R/2 ≈ A u̅ / 4 to within the o(1) band
        let centre = 0.5 * s.amplitude * ubar;
        assert!((lo / centre - 1.0).abs() < 0.2 && (hi / centre - 1.0).abs() < 0.2);
        let r_area = (area / (4.0 * std::f64::consts::PI)).sqrt();
        assert!(lo <= r_area && r_area <= hi);

        assert_eq!(mots_solve_slice(q, 8, 16, ubar, 3, 2.0, &mut sol), MotsStatus::MotsErrArgument);
        assert!(sol.is_null());
        mots_profile_free(p);
        mots_profile_free(q);
        mots_regime_free(r);
    }
}
