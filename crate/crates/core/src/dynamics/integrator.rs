use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Coefficients, FieldSpec, FreeMotion, RunStats, State, Trajectory, Vec3};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Largest pre-renormalization spin defect tolerated before a step is
/// declared unstable.
const SPIN_DEFECT_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub steps_per_period: usize,
    /// Fixed step; when absent the step is one `steps_per_period`-th of the free-oscillation period.
    pub dt: Option<f64>,
    pub max_time: f64,
    pub record_stride: usize,
    pub renormalize_spin: bool,
    /// Step-doubling error control.
    pub adaptive: bool,
    pub tolerance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            steps_per_period: 200,
            dt: None,
            max_time: 0.0,
            record_stride: 1,
            renormalize_spin: true,
            adaptive: false,
            tolerance: 1e-10,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.steps_per_period < 16 {
            problems.push(format!("steps_per_period = {} < 16", self.steps_per_period));
        }
        if !(self.tolerance > 1e-14 && self.tolerance < 1e-4) {
            problems.push(format!("tolerance = {} outside (1e-14, 1e-4)", self.tolerance));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                problems.push(format!("dt = {dt} must be positive"));
            }
        }
        if !(self.max_time >= 0.0 && self.max_time.is_finite()) {
            problems.push(format!("max_time = {} must be non-negative", self.max_time));
        }
        if self.record_stride == 0 {
            problems.push("record_stride must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Local free-oscillation rate |(3k-1) s| |P| / (M0 (1+k)); equals |Omega_s| on a free spiral.
pub(crate) fn oscillation_rate(p: &ModelParams, s: &State) -> f64 {
    FreeMotion::new(p, s).precession_rate().abs()
}

/// Classical fourth-order Runge-Kutta stepper for (r, v, m_hat).
#[derive(Debug, Clone)]
pub struct Integrator {
    params: ModelParams,
    field: FieldSpec,
    coeffs: Coefficients,
    renormalize: bool,
}

#[derive(Clone, Copy)]
struct Deriv {
    r: Vec3,
    v: Vec3,
    m: Vec3,
}

impl Integrator {
    pub fn new(params: &ModelParams, field: &FieldSpec, renormalize_spin: bool) -> Self {
        Integrator { params: *params, field: *field, coeffs: Coefficients::new(params), renormalize: renormalize_spin }
    }

    #[inline]
    fn deriv(&self, r: &Vec3, v: &Vec3, m: &Vec3) -> Deriv {
        let (dv, dm) = self.coeffs.eval(r, v, m, &self.field);
        Deriv { r: *v, v: dv, m: dm }
    }

    /// Advances `s` by `h`; returns the spin-norm defect before renormalization.
    pub fn step(&self, s: &mut State, h: f64) -> f64 {
        let k1 = self.deriv(&s.r, &s.v, &s.m_hat);
        let half = 0.5 * h;
        let k2 = self.deriv(&(s.r + half * k1.r), &(s.v + half * k1.v), &(s.m_hat + half * k1.m));
        let k3 = self.deriv(&(s.r + half * k2.r), &(s.v + half * k2.v), &(s.m_hat + half * k2.m));
        let k4 = self.deriv(&(s.r + h * k3.r), &(s.v + h * k3.v), &(s.m_hat + h * k3.m));
        let w = h / 6.0;
        s.r += w * (k1.r + 2.0 * (k2.r + k3.r) + k4.r);
        s.v += w * (k1.v + 2.0 * (k2.v + k3.v) + k4.v);
        s.m_hat += w * (k1.m + 2.0 * (k2.m + k3.m) + k4.m);
        s.t += h;
        let norm = s.m_hat.norm();
        if self.renormalize && norm > 0.0 {
            s.m_hat /= norm;
        }
        (norm - 1.0).abs()
    }

    fn check(&self, s: &State, defect: f64) -> Result<()> {
        if !s.is_finite() {
            return Err(Error::Instability { t: s.t, reason: "non-finite state".into() });
        }
        if defect > SPIN_DEFECT_LIMIT {
            return Err(Error::Instability {
                t: s.t,
                reason: format!("spin norm defect {defect:.3e} in one step"),
            });
        }
        let ratio = s.v.norm() / self.params.c_light;
        if ratio >= self.params.speed_ceiling {
            return Err(Error::VelocityCeiling { t: s.t, ratio });
        }
        Ok(())
    }
}

/// Integrates from `s0` up to `s0.t + cfg.max_time`.
pub fn integrate(p: &ModelParams, s0: &State, f: &FieldSpec, cfg: &IntegratorConfig) -> Result<Trajectory> {
    p.validate(false).into_result()?;
    f.validate()?;
    cfg.validate()?;
    if !s0.is_finite() || (s0.m_hat.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition("initial state must be finite with |m_hat| = 1".into()));
    }
    p.check_speed(s0.v.norm())?;

    let stepper = Integrator::new(p, f, cfg.renormalize_spin);
    let mut tr = Trajectory { params: *p, field: *f, samples: Vec::new(), diagnostics: Vec::new(), stats: RunStats::default() };
    tr.push(*s0);
    if cfg.max_time == 0.0 {
        return Ok(tr);
    }
    let base_dt = match cfg.dt {
        Some(dt) => dt,
        None => {
            let rate = oscillation_rate(p, s0);
            if rate > 0.0 {
                2.0 * PI / rate / cfg.steps_per_period as f64
            } else {
                cfg.max_time / cfg.steps_per_period as f64
            }
        }
    };
    if cfg.adaptive {
        integrate_adaptive(&stepper, p, s0, cfg, base_dt, &mut tr)?;
    } else {
        integrate_fixed(&stepper, s0, cfg, base_dt, &mut tr)?;
    }
    Ok(tr)
}

fn integrate_fixed(stepper: &Integrator, s0: &State, cfg: &IntegratorConfig, dt: f64, tr: &mut Trajectory) -> Result<()> {
    let n_steps = (cfg.max_time / dt - 1e-9).ceil().max(1.0) as u64;
    let t_end = s0.t + cfg.max_time;
    let mut s = *s0;
    for i in 1..=n_steps {
        let target = if i == n_steps { t_end } else { s0.t + i as f64 * dt };
        let h = target - s.t;
        let defect = stepper.step(&mut s, h);
        s.t = target;
        tr.stats.steps += 1;
        tr.stats.max_spin_defect = tr.stats.max_spin_defect.max(defect);
        stepper.check(&s, defect)?;
        if i % cfg.record_stride as u64 == 0 || i == n_steps {
            tr.push(s);
        }
    }
    Ok(())
}

fn integrate_adaptive(
    stepper: &Integrator,
    p: &ModelParams,
    s0: &State,
    cfg: &IntegratorConfig,
    dt0: f64,
    tr: &mut Trajectory,
) -> Result<()> {
    let t_end = s0.t + cfg.max_time;
    let mut s = *s0;
    let mut h = dt0;
    let mut accepted = 0u64;
    let h_min = dt0 * 1e-9;
    while s.t < t_end {
        // the free-oscillation period bounds the step from above
        let rate = oscillation_rate(p, &s);
        if rate > 0.0 {
            h = h.min(2.0 * PI / rate / 16.0);
        }
        let last = s.t + h >= t_end;
        let step = if last { t_end - s.t } else { h };

        let mut full = s;
        let d_full = stepper.step(&mut full, step);
        let mut halves = s;
        let d1 = stepper.step(&mut halves, 0.5 * step);
        stepper.check(&halves, d1)?;
        let d2 = stepper.step(&mut halves, 0.5 * step);
        stepper.check(&full, d_full)?;
        stepper.check(&halves, d2)?;

        let scale_v = halves.v.norm().max(f64::MIN_POSITIVE);
        let scale_r = (halves.r.norm() + scale_v * step).max(f64::MIN_POSITIVE);
        let err = [
            (halves.v - full.v).norm() / scale_v,
            (halves.m_hat - full.m_hat).norm(),
            (halves.r - full.r).norm() / scale_r,
        ]
        .into_iter()
        .fold(0.0, f64::max)
            / 15.0;

        let factor = if err == 0.0 { 5.0 } else { (0.9 * (cfg.tolerance / err).powf(0.2)).clamp(0.2, 5.0) };
        if err <= cfg.tolerance {
            halves.t = if last { t_end } else { s.t + step };
            s = halves;
            accepted += 1;
            tr.stats.steps += 1;
            tr.stats.max_spin_defect = tr.stats.max_spin_defect.max(d1.max(d2));
            if accepted.is_multiple_of(cfg.record_stride as u64) || s.t >= t_end {
                tr.push(s);
            }
            h = step.max(h) * factor;
        } else {
            tr.stats.rejected += 1;
            h = step * factor;
            if h < h_min {
                return Err(Error::Instability { t: s.t, reason: "adaptive step underflow".into() });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::spiral_initial_conditions;
    use approx::assert_relative_eq;

    fn canonical() -> (ModelParams, f64, f64) {
        (ModelParams::default(), (2.0f64 / 3.0).sqrt(), 0.01)
    }

    #[test]
    fn config_bounds() {
        assert!(IntegratorConfig { steps_per_period: 15, ..Default::default() }.validate().is_err());
        assert!(IntegratorConfig { tolerance: 1e-3, ..Default::default() }.validate().is_err());
        assert!(IntegratorConfig { record_stride: 0, ..Default::default() }.validate().is_err());
        assert!(IntegratorConfig::default().validate().is_ok());
    }

    #[test]
    fn renormalized_spin_stays_unit_and_defect_is_small() {
        let (p, mz, vz) = canonical();
        let s0 = spiral_initial_conditions(&p, mz, vz, 0.0).unwrap();
        let sp = p.spiral_params(mz, vz).unwrap();
        let cfg = IntegratorConfig { max_time: 20.0 * sp.period(), record_stride: 7, ..Default::default() };
        let tr = integrate(&p, &s0, &FieldSpec::Zero, &cfg).unwrap();
        for s in &tr.samples {
            assert!((s.m_hat.norm() - 1.0).abs() <= 1e-12);
        }
        // (2 pi / 200)^5 ~ 3e-8, the defect is far below it
        assert!(tr.stats.max_spin_defect < 1e-10, "{}", tr.stats.max_spin_defect);
        assert_eq!(tr.stats.steps, 4000);
        assert_relative_eq!(tr.samples.last().unwrap().t, cfg.max_time, max_relative = 1e-15);
    }

    #[test]
    fn spin_defect_is_fifth_order() {
        let (p, mz, vz) = canonical();
        let s0 = spiral_initial_conditions(&p, mz, vz, 0.0).unwrap();
        let period = p.spiral_params(mz, vz).unwrap().period();
        let stepper = Integrator::new(&p, &FieldSpec::Zero, true);
        let defect = |n: f64| {
            let mut s = s0;
            stepper.step(&mut s, period / n)
        };
        // at least fifth order (the norm defect of a rotation is in fact sixth order)
        let ratio = defect(20.0) / defect(40.0);
        assert!(ratio > 30.0, "ratio {ratio}");
    }

    #[test]
    fn oversized_step_is_reported_unstable() {
        let (p, mz, vz) = canonical();
        let s0 = spiral_initial_conditions(&p, mz, vz, 0.0).unwrap();
        let period = p.spiral_params(mz, vz).unwrap().period();
        let cfg = IntegratorConfig { dt: Some(period / 2.0), max_time: 1000.0 * period, ..Default::default() };
        let err = integrate(&p, &s0, &FieldSpec::Zero, &cfg).unwrap_err();
        assert!(err.is_numeric(), "{err}");
    }

    #[test]
    fn uniform_field_changes_momentum_linearly() {
        let (p, mz, vz) = canonical();
        let s0 = spiral_initial_conditions(&p, mz, vz, 0.4).unwrap();
        let period = p.spiral_params(mz, vz).unwrap().period();
        let e0 = [2e-11, -1e-11, 3e-11];
        let f = FieldSpec::Uniform { e0 };
        let cfg = IntegratorConfig { max_time: 30.0 * period, record_stride: 50, steps_per_period: 400, ..Default::default() };
        let tr = integrate(&p, &s0, &f, &cfg).unwrap();
        let p0 = tr.diagnostics[0].momentum;
        let scale = p0.norm();
        for (s, d) in tr.samples.iter().zip(&tr.diagnostics) {
            let expect = p0 + p.charge * s.t * Vec3::from(e0);
            assert!((d.momentum - expect).norm() < 1e-8 * scale, "{}", (d.momentum - expect).norm() / scale);
        }
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let (p, _, _) = canonical();
        let m = Vec3::new(0.3, -0.4, 0.8).normalize();
        let s0 = State { t: 0.0, r: Vec3::new(1.0, 2.0, -1.0), v: Vec3::new(0.004, -0.003, 0.009), m_hat: m };
        let rate = oscillation_rate(&p, &s0);
        let cfg = IntegratorConfig { max_time: 10.0 * 2.0 * PI / rate, record_stride: 1000, ..Default::default() };
        let fwd = integrate(&p, &s0, &FieldSpec::Zero, &cfg).unwrap();
        let end = fwd.samples.last().unwrap();
        let flipped = State { t: 0.0, r: end.r, v: -end.v, m_hat: -end.m_hat };
        let back = integrate(&p, &flipped, &FieldSpec::Zero, &cfg).unwrap();
        let fin = back.samples.last().unwrap();
        let scale = s0.r.norm() + s0.v.norm() * cfg.max_time;
        assert!((fin.r - s0.r).norm() < 1e-8 * scale);
        assert!((-fin.v - s0.v).norm() < 1e-8 * s0.v.norm());
        assert!((-fin.m_hat - s0.m_hat).norm() < 1e-8);
    }

    #[test]
    fn adaptive_mode_tracks_closed_form() {
        let (p, _, _) = canonical();
        let m = Vec3::new(0.2, 0.1, 0.9).normalize();
        let s0 = State { t: 0.0, r: Vec3::zeros(), v: Vec3::new(0.003, 0.0, 0.01), m_hat: m };
        let exact = FreeMotion::new(&p, &s0);
        let rate = oscillation_rate(&p, &s0);
        let cfg = IntegratorConfig { max_time: 5.0 * 2.0 * PI / rate, adaptive: true, tolerance: 1e-11, ..Default::default() };
        let tr = integrate(&p, &s0, &FieldSpec::Zero, &cfg).unwrap();
        let end = tr.samples.last().unwrap();
        let want = exact.state_at(end.t);
        assert_relative_eq!(end.t, cfg.max_time, max_relative = 1e-14);
        assert!((end.v - want.v).norm() < 1e-8 * s0.v.norm());
        assert!(tr.stats.steps > 0);
    }
}
