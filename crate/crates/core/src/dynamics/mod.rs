//! Equations of motion for the spinning model and their integration.
//!
//! The state is (t, r, v, m_hat). In an external electric field E(r):
//!
//! ```text
//! dv/dt = e E / (m0 (1+k)) + (3k-1) e m (m.E) / (2 m0 (1-k^2))
//!         - m0 (3k-1)^2 / (M0 (1+k)) (m x v) (m.v)^2
//! dm/dt = -(m0 (3k-1) / M0) (m x v) (m.v)
//! ```
//!
//! which is equivalent to dP/dt = e E and d(M0 m)/dt = P x v with the field
//! momentum P of [`ModelParams::momentum`].

mod averaging;
mod conservation;
mod integrator;
mod trajectory;

pub use averaging::average_trajectory;
pub use conservation::{conservation_report, ConservationReport, ConservationTolerances, Drift};
pub use integrator::{integrate, IntegratorConfig, Integrator};
pub use trajectory::{Diagnostics, RunStats, Trajectory, CSV_HEADER};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub type Vec3 = Vector3<f64>;

/// Instantaneous kinematic state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub r: Vec3,
    pub v: Vec3,
    /// Unit vector along the symmetry axis.
    pub m_hat: Vec3,
}

impl State {
    /// m_hat . v
    pub fn axial_speed(&self) -> f64 {
        self.m_hat.dot(&self.v)
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.r.iter().chain(self.v.iter()).chain(self.m_hat.iter()).all(|x| x.is_finite())
    }
}

/// External electric field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    #[default]
    Zero,
    Uniform { e0: [f64; 3] },
    /// E = gradient * z along z.
    LinearZ { gradient: f64 },
    /// E = amplitude cos(2 pi z / period) along z.
    PeriodicZ { amplitude: f64, period: f64 },
    /// E = amplitude cos(2 pi z / period) along x.
    PeriodicX { amplitude: f64, period: f64 },
}

impl FieldSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            FieldSpec::Zero => true,
            FieldSpec::Uniform { e0 } => e0.iter().all(|x| x.is_finite()),
            FieldSpec::LinearZ { gradient } => gradient.is_finite(),
            FieldSpec::PeriodicZ { amplitude, period } | FieldSpec::PeriodicX { amplitude, period } => {
                if !(period > 0.0 && period.is_finite()) {
                    return Err(Error::Domain(format!("field period must be positive (got {period})")));
                }
                amplitude.is_finite()
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::Domain("field magnitudes must be finite".into()))
        }
    }

    #[inline]
    pub fn at(&self, r: &Vec3) -> Vec3 {
        match *self {
            FieldSpec::Zero => Vec3::zeros(),
            FieldSpec::Uniform { e0 } => Vec3::from(e0),
            FieldSpec::LinearZ { gradient } => Vec3::new(0.0, 0.0, gradient * r.z),
            FieldSpec::PeriodicZ { amplitude, period } => Vec3::new(
                0.0,
                0.0,
                amplitude * (2.0 * std::f64::consts::PI * r.z / period).cos(),
            ),
            FieldSpec::PeriodicX { amplitude, period } => Vec3::new(
                amplitude * (2.0 * std::f64::consts::PI * r.z / period).cos(),
                0.0,
                0.0,
            ),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            FieldSpec::Zero => true,
            FieldSpec::Uniform { e0 } => e0 == [0.0; 3],
            FieldSpec::LinearZ { gradient } => gradient == 0.0,
            FieldSpec::PeriodicZ { amplitude, .. } | FieldSpec::PeriodicX { amplitude, .. } => amplitude == 0.0,
        }
    }
}

/// Coefficients of the equations of motion that depend only on the model.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coefficients {
    drive: f64,
    axial_drive: f64,
    velocity_torque: f64,
    spin_torque: f64,
}

impl Coefficients {
    pub(crate) fn new(p: &ModelParams) -> Self {
        let k = p.kappa;
        let a = p.anisotropy();
        Coefficients {
            drive: p.charge / (p.m0 * (1.0 + k)),
            axial_drive: a * p.charge / (2.0 * p.m0 * (1.0 - k * k)),
            velocity_torque: p.m0 * a * a / (p.ang_momentum * (1.0 + k)),
            spin_torque: p.m0 * a / p.ang_momentum,
        }
    }

    #[inline]
    pub(crate) fn eval(&self, r: &Vec3, v: &Vec3, m: &Vec3, field: &FieldSpec) -> (Vec3, Vec3) {
        let s = m.dot(v);
        let mxv = m.cross(v);
        let mut dv = -self.velocity_torque * s * s * mxv;
        if !field.is_zero() {
            let e = field.at(r);
            dv += self.drive * e + self.axial_drive * m.dot(&e) * m;
        }
        let dm = -self.spin_torque * s * mxv;
        (dv, dm)
    }
}

/// Right-hand side (dv/dt, dm_hat/dt) of the equations of motion at `s`.
pub fn rhs(p: &ModelParams, s: &State, f: &FieldSpec) -> Result<(Vec3, Vec3)> {
    if (s.m_hat.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!("|m_hat| = {} is not 1", s.m_hat.norm())));
    }
    p.validate(false).into_result()?;
    Ok(Coefficients::new(p).eval(&s.r, &s.v, &s.m_hat, f))
}

/// A state on the exact free spiral about the z axis.
///
/// m_hat has transverse part of length sqrt(1 - m_hat_z^2) at azimuth `phase`,
/// v = v_z z + c1 m_perp with c1 = m_hat_z v_z / (G + m_hat_z^2), and r sits
/// at distance R_s from the axis, perpendicular to v_perp.
pub fn spiral_initial_conditions(p: &ModelParams, m_hat_z: f64, v_z: f64, phase: f64) -> Result<State> {
    let sp = p.spiral_params(m_hat_z, v_z)?;
    let g = sp.g;
    let m_perp = (1.0 - m_hat_z * m_hat_z).max(0.0).sqrt();
    let (sin, cos) = phase.sin_cos();
    let m_hat = Vec3::new(m_perp * cos, m_perp * sin, m_hat_z);
    let c1 = m_hat_z * v_z / (g + m_hat_z * m_hat_z);
    let v = Vec3::new(c1 * m_perp * cos, c1 * m_perp * sin, v_z);
    // c1 / Omega_s = M0 / (m_e v_z)
    let offset = p.ang_momentum * m_perp / (sp.effective_mass * v_z);
    let r = Vec3::new(offset * sin, -offset * cos, 0.0);
    p.check_speed(v.norm())?;
    Ok(State { t: 0.0, r, v, m_hat })
}

/// Closed-form solution of the force-free equations.
///
/// Without a field P and s = m_hat . v are constants and m_hat precesses
/// uniformly about P at rate (3k-1) s |P| / (M0 (1+k)); v follows from
/// inverting the momentum relation.
#[derive(Debug, Clone, Copy)]
pub struct FreeMotion {
    start: State,
    momentum: Vec3,
    axial_speed: f64,
    /// Precession vector; m_hat rotates about it right-handedly.
    precession: Vec3,
    one_plus_k: f64,
    a: f64,
    m0: f64,
}

impl FreeMotion {
    pub fn new(p: &ModelParams, start: &State) -> Self {
        let momentum = p.momentum_unchecked(&start.v, &start.m_hat);
        let s = start.axial_speed();
        let a = p.anisotropy();
        let precession = (a * s / (p.ang_momentum * (1.0 + p.kappa))) * momentum;
        FreeMotion { start: *start, momentum, axial_speed: s, precession, one_plus_k: 1.0 + p.kappa, a, m0: p.m0 }
    }

    pub fn momentum(&self) -> Vec3 {
        self.momentum
    }

    /// Signed precession rate about the momentum direction.
    pub fn precession_rate(&self) -> f64 {
        let n = self.momentum.norm();
        if n == 0.0 {
            0.0
        } else {
            self.precession.dot(&self.momentum) / n
        }
    }

    pub fn state_at(&self, t: f64) -> State {
        let tau = t - self.start.t;
        let m0 = self.start.m_hat;
        let w = self.precession.norm();
        let (m_hat, m_integral) = if w == 0.0 {
            (m0, m0 * tau)
        } else {
            let n = self.precession / w;
            let par = n.dot(&m0) * n;
            let perp = m0 - par;
            let side = n.cross(&perp);
            let theta = w * tau;
            let (sin, cos) = theta.sin_cos();
            let m = par + cos * perp + sin * side;
            // (1 - cos) / w written with sin^2 to avoid cancellation
            let half = (0.5 * theta).sin();
            let integral = par * tau + (sin / w) * perp + (2.0 * half * half / w) * side;
            (m, integral)
        };
        let drift = self.momentum / (self.m0 * self.one_plus_k);
        let k = self.a * self.axial_speed / self.one_plus_k;
        State {
            t,
            r: self.start.r + drift * tau + k * m_integral,
            v: drift + k * m_hat,
            m_hat,
        }
    }
}
