//! C interface to the freespiral simulator.
//!
//! Every function returns an [`FsStatus`]; results go through out-pointers.
//! Models and trajectories are opaque handles released with their `_free`
//! function. After a failure, [`fs_last_error`] copies the message of the
//! most recent error on the calling thread. Panics are caught at the
//! boundary and reported as [`FsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use freespiral::cli::config::Experiment;
use freespiral::cli::{run_command, ScenarioConfig};
use freespiral::dynamics::{integrate, spiral_initial_conditions, FieldSpec, IntegratorConfig, Trajectory};
use freespiral::{Error, ModelParams, SpinSign};

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A parameter lies outside the domain of a formula.
    Domain = 2,
    /// Inputs violate a precondition of the operation.
    Precondition = 3,
    /// The integrator or a root finder failed.
    Numeric = 4,
    /// The data do not determine the result.
    Degenerate = 5,
    /// Invalid scenario text or unknown command.
    Config = 6,
    /// Reading or writing a file failed.
    Io = 7,
    /// A sample index was out of range.
    OutOfRange = 8,
    /// The run completed but one of its checks failed.
    ChecksFailed = 9,
    /// An internal panic was caught.
    Panic = 10,
}

/// Closed-form free-spiral descriptors.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FsSpiral {
    pub g: f64,
    pub radius: f64,
    /// Signed angular frequency (sign of m_hat_z).
    pub omega: f64,
    /// Signed spatial period v_z 2 pi / omega; its magnitude is the pitch.
    pub wavelength: f64,
    pub effective_mass: f64,
    pub de_broglie: f64,
    pub m_hat_z: f64,
    pub v_z: f64,
}

/// One trajectory sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FsSample {
    pub t: f64,
    pub r: [f64; 3],
    pub v: [f64; 3],
    pub m_hat: [f64; 3],
    /// Field momentum P.
    pub momentum: [f64; 3],
    /// J = M0 m_hat + r x P.
    pub angular_momentum: [f64; 3],
}

/// Opaque model handle.
pub struct FsModel {
    params: ModelParams,
}

/// Opaque trajectory handle.
pub struct FsTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(e: &Error) -> FsStatus {
    match e {
        Error::Domain(_) => FsStatus::Domain,
        Error::Precondition(_) => FsStatus::Precondition,
        Error::Instability { .. } | Error::VelocityCeiling { .. } | Error::NonMonotone { .. } => FsStatus::Numeric,
        Error::Degenerate(_) => FsStatus::Degenerate,
        Error::Config(_) => FsStatus::Config,
        Error::Io(_) => FsStatus::Io,
    }
}

/// Runs `f`, recording the error message and catching panics.
fn guard(f: impl FnOnce() -> Result<(), (FsStatus, String)>) -> FsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            FsStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FsStatus::Panic
        }
    }
}

fn fail(e: Error) -> (FsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (FsStatus, String) {
    (FsStatus::NullPointer, format!("{name} is null"))
}

/// # Safety
/// `ptr` must be null or point to a NUL-terminated string.
unsafe fn text<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, (FsStatus, String)> {
    if ptr.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| (FsStatus::Config, format!("{name} is not UTF-8")))
}

fn sign_of(sign: c_int) -> SpinSign {
    if sign < 0 {
        SpinSign::Minus
    } else {
        SpinSign::Plus
    }
}

fn boxed_model(params: ModelParams, out: *mut *mut FsModel) {
    // SAFETY: callers check `out` for null first
    unsafe { *out = Box::into_raw(Box::new(FsModel { params })) };
}

/// Version string of the library (static, NUL-terminated).
#[no_mangle]
pub extern "C" fn fs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buffer` (truncated,
/// always NUL-terminated) and returns the full message length in bytes.
///
/// # Safety
/// `buffer` must be null or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn fs_last_error(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buffer.is_null() && capacity > 0 {
            let n = e.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(e.as_ptr(), buffer.cast::<u8>(), n);
            *buffer.add(n) = 0;
        }
        e.len()
    })
}

/// Model with explicit constants. The speed ceiling is 0.1 c.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_model_new(
    kappa: f64,
    m0: f64,
    ang_momentum: f64,
    charge: f64,
    c_light: f64,
    hbar: f64,
    out: *mut *mut FsModel,
) -> FsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = ModelParams { kappa, m0, ang_momentum, charge, c_light, hbar, ..ModelParams::default() };
        params.validate(false).into_result().map_err(fail)?;
        boxed_model(params, out);
        Ok(())
    })
}

/// Natural-unit model (c = hbar = m0 = e = 1) with M0 quantized so that
/// M0 m_hat_z = sign hbar / 2; `sign` < 0 selects the minus branch.
///
/// # Safety
/// `out` and `m_hat_z` must be null or valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fs_model_quantized(kappa: f64, sign: c_int, out: *mut *mut FsModel, m_hat_z: *mut f64) -> FsStatus {
    guard(|| {
        if out.is_null() || m_hat_z.is_null() {
            return Err(null("out or m_hat_z"));
        }
        let base = ModelParams { kappa, ..ModelParams::default() };
        let (params, mz) = base.with_quantized_spin(sign_of(sign)).map_err(fail)?;
        *m_hat_z = mz;
        boxed_model(params, out);
        Ok(())
    })
}

/// CGS electron with quantized spin whose effective mass is the electron mass.
///
/// # Safety
/// `out` and `m_hat_z` must be null or valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fs_model_physical(kappa: f64, out: *mut *mut FsModel, m_hat_z: *mut f64) -> FsStatus {
    guard(|| {
        if out.is_null() || m_hat_z.is_null() {
            return Err(null("out or m_hat_z"));
        }
        let (params, mz) = ModelParams::physical_electron(kappa).map_err(fail)?;
        *m_hat_z = mz;
        boxed_model(params, out);
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must be null or a handle from an `fs_model_*` constructor not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fs_model_free(model: *mut FsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Closed-form spiral descriptors at (m_hat_z, v_z).
///
/// # Safety
/// `model` must be a live handle; `out` must be null or valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fs_spiral_params(model: *const FsModel, m_hat_z: f64, v_z: f64, out: *mut FsSpiral) -> FsStatus {
    guard(|| {
        if model.is_null() || out.is_null() {
            return Err(null("model or out"));
        }
        let sp = (*model).params.spiral_params(m_hat_z, v_z).map_err(fail)?;
        *out = FsSpiral {
            g: sp.g,
            radius: sp.radius,
            omega: sp.omega,
            wavelength: sp.wavelength,
            effective_mass: sp.effective_mass,
            de_broglie: sp.de_broglie,
            m_hat_z: sp.m_hat_z,
            v_z: sp.v_z,
        };
        Ok(())
    })
}

/// Integrates the free spiral from azimuth `phase` for `periods` free periods.
///
/// # Safety
/// `model` must be a live handle; `out` must be null or valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fs_integrate_spiral(
    model: *const FsModel,
    m_hat_z: f64,
    v_z: f64,
    phase: f64,
    periods: f64,
    steps_per_period: usize,
    out: *mut *mut FsTrajectory,
) -> FsStatus {
    guard(|| {
        if model.is_null() || out.is_null() {
            return Err(null("model or out"));
        }
        let p = &(*model).params;
        let sp = p.spiral_params(m_hat_z, v_z).map_err(fail)?;
        if !(periods > 0.0 && periods.is_finite()) {
            return Err(fail(Error::Precondition(format!("periods must be positive (got {periods})"))));
        }
        let s0 = spiral_initial_conditions(p, m_hat_z, v_z, phase).map_err(fail)?;
        let cfg = IntegratorConfig { steps_per_period, max_time: periods * sp.period(), ..Default::default() };
        let inner = integrate(p, &s0, &FieldSpec::Zero, &cfg).map_err(fail)?;
        *out = Box::into_raw(Box::new(FsTrajectory { inner }));
        Ok(())
    })
}

/// Number of recorded samples (0 for a null handle).
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_trajectory_len(traj: *const FsTrajectory) -> usize {
    if traj.is_null() {
        0
    } else {
        (*traj).inner.len()
    }
}

/// Copies sample `index` into `out`.
///
/// # Safety
/// `traj` must be a live handle; `out` must be null or valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fs_trajectory_sample(traj: *const FsTrajectory, index: usize, out: *mut FsSample) -> FsStatus {
    guard(|| {
        if traj.is_null() || out.is_null() {
            return Err(null("traj or out"));
        }
        let tr = &(*traj).inner;
        if index >= tr.len() {
            return Err((FsStatus::OutOfRange, format!("index {index} >= {}", tr.len())));
        }
        let (s, d) = (tr.samples[index], tr.diagnostics[index]);
        *out = FsSample {
            t: s.t,
            r: s.r.into(),
            v: s.v.into(),
            m_hat: s.m_hat.into(),
            momentum: d.momentum.into(),
            angular_momentum: d.total_angular_momentum.into(),
        };
        Ok(())
    })
}

/// Writes the trajectory as CSV (18 columns).
///
/// # Safety
/// `traj` must be a live handle; `path` must be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fs_trajectory_write_csv(traj: *const FsTrajectory, path: *const c_char) -> FsStatus {
    guard(|| {
        if traj.is_null() {
            return Err(null("traj"));
        }
        let path = text(path, "path")?;
        let file = std::fs::File::create(path).map_err(|e| fail(e.into()))?;
        (*traj).inner.write_csv(std::io::BufWriter::new(file)).map_err(fail)
    })
}

/// Releases a trajectory; null is ignored.
///
/// # Safety
/// `traj` must be null or a handle from [`fs_integrate_spiral`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fs_trajectory_free(traj: *mut FsTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Runs a CLI command ("simulate", "spiral", "resonance", "spectrum",
/// "filter" or "phase") on scenario text, writing into `out_dir`. A
/// negative `seed` keeps the scenario's seed. Returns `ChecksFailed` when
/// the run completes with a failed check.
///
/// # Safety
/// The string arguments must be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fs_run_scenario(
    command: *const c_char,
    scenario_toml: *const c_char,
    out_dir: *const c_char,
    seed: i64,
) -> FsStatus {
    guard(|| {
        let command = text(command, "command")?;
        let experiment = match command {
            "simulate" => Experiment::Simulate,
            "spiral" => Experiment::Spiral,
            "resonance" => Experiment::Resonance,
            "spectrum" => Experiment::Spectrum,
            "filter" => Experiment::Filter,
            "phase" => Experiment::Phase,
            other => return Err((FsStatus::Config, format!("unknown command {other:?}"))),
        };
        let config = ScenarioConfig::from_toml(text(scenario_toml, "scenario_toml")?).map_err(fail)?;
        let out = Path::new(text(out_dir, "out_dir")?);
        let seed = u64::try_from(seed).ok();
        let summary = run_command(experiment, &config, out, seed).map_err(fail)?;
        if summary.pass {
            Ok(())
        } else {
            let failed: Vec<&str> = summary.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            Err((FsStatus::ChecksFailed, format!("failed checks: {}", failed.join(", "))))
        }
    })
}
