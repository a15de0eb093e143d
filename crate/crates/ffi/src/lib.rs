//! C ABI over `mots_core`.
//!
//! Every function returns a `MotsStatus`; on anything but `MOTS_OK` a message
//! is available from `mots_last_error()` on the same thread. Handles are
//! opaque, created by the `*_default`, `*_from_toml`, `*_build`, `*_load`
//! functions or `mots_solve_slice`, and
//! released with the matching `*_free` (which accept NULL).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use mots_core::horizon::area_of;
use mots_core::mots::{solve_slice, MotsProblem, MotsSolution as CoreSolution, Perturbations, SolverOptions};
use mots_core::penrose::{classify_regime, RegimeClass, UbarPosition};
use mots_core::regime::{RegimeInput, RegimeParameters};
use mots_core::shear::{build_profile, ProfileSpec, ShearProfile};
use mots_core::sphere::SphereGrid;
use mots_core::Error;

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotsStatus {
    MotsOk = 0,
    MotsErrNull = 1,
    MotsErrArgument = 2,
    MotsErrConfig = 3,
    MotsErrConstraint = 4,
    MotsErrNonConvergence = 5,
    MotsErrFocusing = 6,
    MotsErrResolution = 7,
    MotsErrIo = 8,
    MotsErrFormat = 9,
    MotsErrBufferTooSmall = 10,
    MotsErrInternal = 11,
    MotsErrPanic = 12,
}

/// Lower-side Penrose class.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotsPenroseClass {
    MotsCertifiedPositive = 0,
    MotsInconclusive = 1,
    MotsViolatedNever = 2,
}

/// Derived scalars of a regime.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MotsRegimeScalars {
    pub a: f64,
    pub kappa: f64,
    pub mu: f64,
    pub y: f64,
    pub t: f64,
    pub b: f64,
    pub delta: f64,
    pub m0: f64,
    pub amplitude: f64,
    pub ubar_window_start: f64,
    pub ubar_lambda: f64,
    pub ubar_end: f64,
    pub epsilon: f64,
}

pub struct MotsRegime(RegimeParameters);
pub struct MotsProfile(ShearProfile);
pub struct MotsSolution(CoreSolution);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MotsStatus {
    match e {
        Error::Argument(_) | Error::MalformedParameters(_) | Error::Shape(_) | Error::Positivity(_) | Error::Domain(_) => {
            MotsStatus::MotsErrArgument
        }
        Error::Config(_) | Error::Dependency { .. } => MotsStatus::MotsErrConfig,
        Error::Constraint { .. } => MotsStatus::MotsErrConstraint,
        Error::NonConvergence { .. } => MotsStatus::MotsErrNonConvergence,
        Error::Focusing { .. } => MotsStatus::MotsErrFocusing,
        Error::Resolution(_) => MotsStatus::MotsErrResolution,
        Error::Io { .. } => MotsStatus::MotsErrIo,
        Error::Format(_) | Error::Json(_) => MotsStatus::MotsErrFormat,
        #[allow(unreachable_patterns)]
        _ => MotsStatus::MotsErrInternal,
    }
}

enum Fail {
    Core(Error),
    Null(&'static str),
    Arg(String),
    Small(usize),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MotsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MotsStatus::MotsOk,
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            MotsStatus::MotsErrNull
        }
        Ok(Err(Fail::Arg(m))) => {
            set_error(m);
            MotsStatus::MotsErrArgument
        }
        Ok(Err(Fail::Small(need))) => {
            set_error(format!("buffer too small: {need} elements needed"));
            MotsStatus::MotsErrBufferTooSmall
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MotsStatus::MotsErrPanic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail::Arg(format!("{what}: {e}")))
}

/// Message of the last failure on this thread ("" if none). Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn mots_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Short static name of a status code ("unknown" outside the enum).
#[no_mangle]
pub extern "C" fn mots_status_name(status: i32) -> *const c_char {
    let s: &'static CStr = match status {
        0 => c"ok",
        1 => c"null-pointer",
        2 => c"argument",
        3 => c"config",
        4 => c"constraint",
        5 => c"non-convergence",
        6 => c"focusing",
        7 => c"resolution",
        8 => c"io",
        9 => c"format",
        10 => c"buffer-too-small",
        11 => c"internal",
        12 => c"panic",
        _ => c"unknown",
    };
    s.as_ptr()
}

// ---- regime ----

/// The default regime (a = 10⁴, κ = 0.6, y = 10, t = 0.3).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mots_regime_default(out_regime: *mut *mut MotsRegime) -> MotsStatus {
    guard(|| {
        let o = out(out_regime, "out_regime")?;
        *o = Box::into_raw(Box::new(MotsRegime(RegimeParameters::default_regime())));
        Ok(())
    })
}

/// A regime from TOML `key = value` lines (unset keys take their defaults).
///
/// # Safety
/// `toml_text` must be a NUL-terminated string; `out_regime` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mots_regime_from_toml(toml_text: *const c_char, out_regime: *mut *mut MotsRegime) -> MotsStatus {
    guard(|| {
        let o = out(out_regime, "out_regime")?;
        *o = ptr::null_mut();
        let t = text(toml_text, "toml_text")?;
        let input: RegimeInput = toml::from_str(t).map_err(|e| Error::Config(e.to_string()))?;
        *o = Box::into_raw(Box::new(MotsRegime(RegimeParameters::new(&input)?)));
        Ok(())
    })
}

/// # Safety
/// `regime` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn mots_regime_free(regime: *mut MotsRegime) {
    if !regime.is_null() {
        drop(Box::from_raw(regime));
    }
}

/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mots_regime_scalars(regime: *const MotsRegime, out_scalars: *mut MotsRegimeScalars) -> MotsStatus {
    guard(|| {
        let p = &deref(regime, "regime")?.0;
        *out(out_scalars, "out_scalars")? = MotsRegimeScalars {
            a: p.a,
            kappa: p.kappa,
            mu: p.mu,
            y: p.y,
            t: p.t,
            b: p.b,
            delta: p.delta,
            m0: p.m0,
            amplitude: p.amplitude(),
            ubar_window_start: p.ubar_window_start(),
            ubar_lambda: p.ubar_lambda(),
            ubar_end: p.ubar_end(),
            epsilon: p.epsilon(),
        };
        Ok(())
    })
}

/// Lower-side Penrose class at a window fraction in [0, 1].
/// `out_slack` (may be NULL) receives NaN where the slack is undefined.
///
/// # Safety
/// `regime` and `out_class` must be valid; `out_slack` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn mots_regime_classify(
    regime: *const MotsRegime,
    window_fraction: f64,
    out_class: *mut MotsPenroseClass,
    out_slack: *mut f64,
) -> MotsStatus {
    guard(|| {
        let p = &deref(regime, "regime")?.0;
        let c = classify_regime(p, UbarPosition::WindowFraction { fraction: window_fraction })?;
        *out(out_class, "out_class")? = match c.lower_side {
            RegimeClass::CertifiedPositive => MotsPenroseClass::MotsCertifiedPositive,
            RegimeClass::Inconclusive => MotsPenroseClass::MotsInconclusive,
            RegimeClass::ViolatedNever => MotsPenroseClass::MotsViolatedNever,
        };
        if let Some(s) = out_slack.as_mut() {
            *s = c.slack.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

// ---- profile ----

/// Shear profile with the default construction settings.
///
/// # Safety
/// `regime` and `out_profile` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mots_profile_build(regime: *const MotsRegime, out_profile: *mut *mut MotsProfile) -> MotsStatus {
    guard(|| {
        let o = out(out_profile, "out_profile")?;
        *o = ptr::null_mut();
        let p = &deref(regime, "regime")?.0;
        *o = Box::into_raw(Box::new(MotsProfile(build_profile(p, &ProfileSpec::default())?)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated UTF-8 path; `out_profile` valid.
#[no_mangle]
pub unsafe extern "C" fn mots_profile_load(path: *const c_char, out_profile: *mut *mut MotsProfile) -> MotsStatus {
    guard(|| {
        let o = out(out_profile, "out_profile")?;
        *o = ptr::null_mut();
        let p = PathBuf::from(text(path, "path")?);
        *o = Box::into_raw(Box::new(MotsProfile(ShearProfile::load(&p)?)));
        Ok(())
    })
}

/// # Safety
/// `profile` valid; `path` and `config_hash` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mots_profile_save(profile: *const MotsProfile, path: *const c_char, config_hash: *const c_char) -> MotsStatus {
    guard(|| {
        let prof = &deref(profile, "profile")?.0;
        let p = PathBuf::from(text(path, "path")?);
        prof.save(&p, text(config_hash, "config_hash")?)?;
        Ok(())
    })
}

/// # Safety
/// `profile` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn mots_profile_free(profile: *mut MotsProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Runs the profile's own checks; `out_passed` is 1 when all hold.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mots_profile_verify(profile: *const MotsProfile, out_passed: *mut i32) -> MotsStatus {
    guard(|| {
        let prof = &deref(profile, "profile")?.0;
        *out(out_passed, "out_passed")? = i32::from(prof.verify().passed);
        Ok(())
    })
}

/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mots_profile_scale_critical_norm(
    profile: *const MotsProfile,
    j_max: u32,
    i_max: u32,
    out_value: *mut f64,
) -> MotsStatus {
    guard(|| {
        let prof = &deref(profile, "profile")?.0;
        *out(out_value, "out_value")? = prof.scale_critical_norm(j_max as usize, i_max as usize)?.value;
        Ok(())
    })
}

// ---- MOTS ----

/// Solves the MOTS equation on the slice `ubar` with default solver settings.
/// Perturbations are drawn from `seed` with frame norm `beta · b^{1/4}`.
///
/// # Safety
/// `profile` and `out_solution` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mots_solve_slice(
    profile: *const MotsProfile,
    n_theta: u32,
    n_phi: u32,
    ubar: f64,
    seed: u64,
    beta: f64,
    out_solution: *mut *mut MotsSolution,
) -> MotsStatus {
    guard(|| {
        let o = out(out_solution, "out_solution")?;
        *o = ptr::null_mut();
        let prof = &deref(profile, "profile")?.0;
        if !(0.0..=1.0).contains(&beta) {
            return Err(Fail::Arg(format!("beta = {beta} outside [0, 1]")));
        }
        let grid = SphereGrid::new(n_theta as usize, n_phi as usize)?;
        let pert = Perturbations::sample(&grid, seed, beta, prof.params.b_quarter())?;
        let problem = MotsProblem::from_model(&prof.model(), &grid, ubar, pert)?;
        let sol = solve_slice(&problem, &SolverOptions::default())?;
        *o = Box::into_raw(Box::new(MotsSolution(sol)));
        Ok(())
    })
}

/// # Safety
/// `solution` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn mots_solution_free(solution: *mut MotsSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of grid nodes of the solution.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mots_solution_len(solution: *const MotsSolution, out_len: *mut usize) -> MotsStatus {
    guard(|| {
        *out(out_len, "out_len")? = deref(solution, "solution")?.0.r.values.len();
        Ok(())
    })
}

/// Copies R (θ-major node order) into `buffer`. Fails with
/// `MOTS_ERR_BUFFER_TOO_SMALL` if `capacity` is short; `out_written` (may be NULL) gets the length.
///
/// # Safety
/// `buffer` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn mots_solution_radius(
    solution: *const MotsSolution,
    buffer: *mut f64,
    capacity: usize,
    out_written: *mut usize,
) -> MotsStatus {
    guard(|| {
        let r = &deref(solution, "solution")?.0.r.values;
        if let Some(w) = out_written.as_mut() {
            *w = r.len();
        }
        if capacity < r.len() {
            return Err(Fail::Small(r.len()));
        }
        if buffer.is_null() {
            return Err(Fail::Null("buffer"));
        }
        ptr::copy_nonoverlapping(r.as_ptr(), buffer, r.len());
        Ok(())
    })
}

/// Range of R, residual norm and area ∫R² dΩ of a solution.
///
/// # Safety
/// `solution` valid; each out pointer valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn mots_solution_summary(
    solution: *const MotsSolution,
    out_r_min: *mut f64,
    out_r_max: *mut f64,
    out_residual: *mut f64,
    out_area: *mut f64,
) -> MotsStatus {
    guard(|| {
        let s = &deref(solution, "solution")?.0;
        for (p, v) in [
            (out_r_min, s.diagnostics.r_min),
            (out_r_max, s.diagnostics.r_max),
            (out_residual, s.residual_norm),
            (out_area, area_of(&s.r, 1.0).area),
        ] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}
