use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::helix_fit::{fit_helix, HelixFit};
use crate::dynamics::{
    average_trajectory, conservation_report, integrate, spiral_initial_conditions, ConservationReport,
    ConservationTolerances, FieldSpec, FreeMotion, IntegratorConfig, Trajectory, Vec3,
};
use crate::error::{Error, Result};
use crate::model::{ModelParams, SpiralParams};

/// Closed-form prediction, fitted helix and conservation monitors of one run.
#[derive(Debug, Clone, Serialize)]
pub struct FreeSpiralRun {
    pub spiral: SpiralParams,
    pub fit: HelixFit,
    pub conservation: ConservationReport,
    /// Relative deviations of the fit from the closed forms (absent when degenerate).
    pub radius_error: f64,
    pub omega_error: Option<f64>,
    pub pitch_error: Option<f64>,
    /// Fitted pitch over the de Broglie wavelength.
    pub fitted_wavelength_ratio: Option<f64>,
    /// Largest |P_z - m_e v_z| / (m_e |v_z|) over the samples.
    pub axial_momentum_error: f64,
    /// m_e |v_perp| R measured on the trajectory (RMS |v_perp|, fitted R).
    pub measured_uncertainty_product: f64,
    pub closed_form_uncertainty_product: f64,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a / b - 1.0).abs()
    }
}

/// Integrates the exact free spiral for `periods` free-oscillation periods
/// (unless `cfg.max_time` is set) and compares it with the closed forms.
pub fn run_free_spiral(
    p: &ModelParams,
    m_hat_z: f64,
    v_z: f64,
    phase: f64,
    periods: f64,
    cfg: &IntegratorConfig,
    tolerances: &ConservationTolerances,
) -> Result<FreeSpiralRun> {
    let spiral = p.spiral_params(m_hat_z, v_z)?;
    let s0 = spiral_initial_conditions(p, m_hat_z, v_z, phase)?;
    let mut cfg = *cfg;
    if cfg.max_time == 0.0 {
        let rate = FreeMotion::new(p, &s0).precession_rate().abs();
        if rate == 0.0 {
            return Err(Error::Degenerate("no free oscillation to time the run".into()));
        }
        cfg.max_time = periods * 2.0 * std::f64::consts::PI / rate;
    }
    let trajectory = integrate(p, &s0, &FieldSpec::Zero, &cfg)?;
    let fit = fit_helix(&trajectory)?;
    let conservation = conservation_report(&trajectory, tolerances)?;

    let m_e = spiral.effective_mass;
    let axial_momentum_error = trajectory
        .diagnostics
        .iter()
        .zip(&trajectory.samples)
        .map(|(d, s)| (d.momentum.z - m_e * s.v.z).abs() / (m_e * s.v.z.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let axis = fit.axis;
    let mean_sq = trajectory
        .samples
        .iter()
        .map(|s| (s.v - s.v.dot(&axis) * axis).norm_squared())
        .sum::<f64>()
        / trajectory.len() as f64;
    let measured_uncertainty_product = m_e * mean_sq.sqrt() * fit.radius;
    let closed_form_uncertainty_product = p.uncertainty_product(m_hat_z, v_z)?.0;

    Ok(FreeSpiralRun {
        radius_error: relative(fit.radius, spiral.radius),
        omega_error: fit.omega.map(|w| relative(w, spiral.omega)),
        pitch_error: fit.pitch.map(|l| relative(l, spiral.wavelength)),
        fitted_wavelength_ratio: fit.pitch.map(|l| l.abs() / spiral.de_broglie),
        spiral,
        fit,
        conservation,
        axial_momentum_error,
        measured_uncertainty_product,
        closed_form_uncertainty_product,
        trajectory,
    })
}

/// Largest position error against the closed-form motion over `periods`.
pub fn helix_position_error(
    p: &ModelParams,
    m_hat_z: f64,
    v_z: f64,
    periods: f64,
    steps_per_period: usize,
) -> Result<f64> {
    let s0 = spiral_initial_conditions(p, m_hat_z, v_z, 0.0)?;
    let exact = FreeMotion::new(p, &s0);
    let period = 2.0 * std::f64::consts::PI / exact.precession_rate().abs();
    let cfg = IntegratorConfig { steps_per_period, max_time: periods * period, ..Default::default() };
    let tr = integrate(p, &s0, &FieldSpec::Zero, &cfg)?;
    Ok(tr.samples.iter().map(|s| (s.r - exact.state_at(s.t).r).norm()).fold(0.0, f64::max))
}

/// Error ratio when the step is halved (16 for a fourth-order scheme).
pub fn convergence_ratio(p: &ModelParams, m_hat_z: f64, v_z: f64, periods: f64, steps_per_period: usize) -> Result<f64> {
    let coarse = helix_position_error(p, m_hat_z, v_z, periods, steps_per_period)?;
    let fine = helix_position_error(p, m_hat_z, v_z, periods, 2 * steps_per_period)?;
    Ok(coarse / fine)
}

/// Averaged motion of a spiral in a weak uniform field across its axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragedMotion {
    /// Field strength along x.
    pub field: f64,
    /// Orbit curvature radius m_e v_z^2 / (e E) in units of R_s.
    pub curvature_over_radius: f64,
    pub fitted_acceleration: f64,
    /// e E / m_e
    pub expected_acceleration: f64,
    pub ratio: f64,
}

/// Integrates a spiral in E = field x for `periods` periods, averages over
/// one free period and fits x(t) with a parabola.
pub fn averaged_acceleration(
    p: &ModelParams,
    m_hat_z: f64,
    v_z: f64,
    curvature_over_radius: f64,
    periods: f64,
    cfg: &IntegratorConfig,
) -> Result<AveragedMotion> {
    if !(curvature_over_radius > 0.0) {
        return Err(Error::Precondition("curvature ratio must be positive".into()));
    }
    let sp = p.spiral_params(m_hat_z, v_z)?;
    if sp.radius == 0.0 {
        return Err(Error::Degenerate("straight-line spiral has no averaging scale".into()));
    }
    let m_e = sp.effective_mass;
    let field = m_e * v_z * v_z / (p.charge * curvature_over_radius * sp.radius);
    let s0 = spiral_initial_conditions(p, m_hat_z, v_z, 0.0)?;
    let f = FieldSpec::Uniform { e0: [field, 0.0, 0.0] };
    let cfg = IntegratorConfig { max_time: periods * sp.period(), ..*cfg };
    let tr = integrate(p, &s0, &f, &cfg)?;
    let avg = average_trajectory(&tr, Some(sp.period()))?;

    // x = c0 + c1 t + c2 t^2 on a centered, scaled time axis
    let times: Vec<f64> = avg.times().collect();
    let (t_mid, t_half) = ((times[0] + times[times.len() - 1]) / 2.0, (times[times.len() - 1] - times[0]) / 2.0);
    let mut design = DMatrix::zeros(times.len(), 3);
    let mut rhs = DVector::zeros(times.len());
    for (i, (t, s)) in times.iter().zip(&avg.samples).enumerate() {
        let u = (t - t_mid) / t_half;
        design[(i, 0)] = 1.0;
        design[(i, 1)] = u;
        design[(i, 2)] = u * u;
        rhs[i] = s.r.x;
    }
    let c = design
        .svd(true, true)
        .solve(&rhs, 1e-15)
        .map_err(|e| Error::Degenerate(format!("parabola fit failed: {e}")))?;
    let fitted_acceleration = 2.0 * c[2] / (t_half * t_half);
    let expected_acceleration = p.charge * field / m_e;
    Ok(AveragedMotion {
        field,
        curvature_over_radius,
        fitted_acceleration,
        expected_acceleration,
        ratio: fitted_acceleration / expected_acceleration,
    })
}

/// Helix fit of a spiral whose transverse velocity is scaled by `factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbedStart {
    pub factor: f64,
    pub fit: HelixFit,
    /// Angle between the fitted axis and z.
    pub tilt_from_z: f64,
    /// Angle between the fitted axis and the conserved momentum.
    pub tilt_from_momentum: f64,
}

pub fn perturbed_start(
    p: &ModelParams,
    m_hat_z: f64,
    v_z: f64,
    factor: f64,
    periods: f64,
    cfg: &IntegratorConfig,
) -> Result<PerturbedStart> {
    let mut s0 = spiral_initial_conditions(p, m_hat_z, v_z, 0.0)?;
    s0.v.x *= factor;
    s0.v.y *= factor;
    let fm = FreeMotion::new(p, &s0);
    let period = 2.0 * std::f64::consts::PI / fm.precession_rate().abs();
    let cfg = IntegratorConfig { max_time: periods * period, ..*cfg };
    let tr = integrate(p, &s0, &FieldSpec::Zero, &cfg)?;
    let fit = fit_helix(&tr)?;
    let angle = |a: &Vec3, b: &Vec3| a.normalize().dot(&b.normalize()).clamp(-1.0, 1.0).acos();
    Ok(PerturbedStart {
        factor,
        fit,
        tilt_from_z: angle(&fit.axis, &Vec3::z()),
        tilt_from_momentum: angle(&fit.axis, &fm.momentum()),
    })
}
