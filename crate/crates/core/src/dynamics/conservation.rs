use serde::{Deserialize, Serialize};

use super::{Trajectory, Vec3};
use crate::error::{Error, Result};

/// Pass thresholds for the monitored drifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConservationTolerances {
    /// Absolute bound on | |m_hat| - 1 |.
    pub spin_norm: f64,
    /// Relative bound on every conserved or balance-corrected quantity.
    pub relative: f64,
    /// Relative bound on the finite-difference torque residual.
    pub torque_residual: f64,
}

impl Default for ConservationTolerances {
    fn default() -> Self {
        ConservationTolerances { spin_norm: 1e-12, relative: 1e-6, torque_residual: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drift {
    pub name: String,
    /// Maximum relative drift over the run (absolute for the spin norm).
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    pub drifts: Vec<Drift>,
}

impl ConservationReport {
    pub fn pass(&self) -> bool {
        self.drifts.iter().all(|d| d.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Drift> {
        self.drifts.iter().find(|d| d.name == name)
    }
}

fn scalar_drift(values: impl Iterator<Item = f64>, reference: f64, scale: f64) -> f64 {
    values.map(|x| (x - reference).abs()).fold(0.0, f64::max) / scale
}

fn vector_drift<'a>(values: impl Iterator<Item = Vec3> + 'a, reference: Vec3, scale: f64) -> f64 {
    values.map(|x| (x - reference).norm()).fold(0.0, f64::max) / scale
}

fn positive_or(x: f64, fallback: f64) -> f64 {
    if x > 0.0 {
        x
    } else if fallback > 0.0 {
        fallback
    } else {
        1.0
    }
}

/// Monitors the conservation and balance laws along `tr`.
///
/// Free motion: |v|, m_hat . v, P, J = M0 m_hat + r x P and T = P.v/2 are
/// constant. In a field: P - int e E dt and J - int r x e E dt are constant
/// (trapezoidal quadrature over the samples). Always: |m_hat| and the
/// central-difference residual of dM/dt = P x v.
pub fn conservation_report(tr: &Trajectory, tol: &ConservationTolerances) -> Result<ConservationReport> {
    if tr.len() < 2 {
        return Err(Error::Precondition("conservation report needs at least two samples".into()));
    }
    let p = &tr.params;
    let d0 = tr.diagnostics[0];
    let s0 = tr.samples[0];
    let mut drifts = Vec::new();
    let mut push = |name: &str, value: f64, tolerance: f64| {
        drifts.push(Drift { name: name.to_string(), value, tolerance, pass: value <= tolerance })
    };

    let spin_norm = tr.samples.iter().map(|s| (s.m_hat.norm() - 1.0).abs()).fold(0.0, f64::max);
    push("spin_norm", spin_norm, tol.spin_norm);

    let p_scale = positive_or(d0.momentum.norm(), p.m0 * s0.v.norm());
    let j_scale = positive_or(d0.total_angular_momentum.norm(), p.ang_momentum);

    if tr.field.is_zero() {
        let diag = &tr.diagnostics;
        let speed_scale = positive_or(d0.speed, 1.0);
        push("speed", scalar_drift(diag.iter().map(|d| d.speed), d0.speed, speed_scale), tol.relative);
        push(
            "axial_speed",
            scalar_drift(diag.iter().map(|d| d.axial_speed), d0.axial_speed, positive_or(d0.axial_speed.abs(), speed_scale)),
            tol.relative,
        );
        push("momentum", vector_drift(diag.iter().map(|d| d.momentum), d0.momentum, p_scale), tol.relative);
        push(
            "angular_momentum",
            vector_drift(diag.iter().map(|d| d.total_angular_momentum), d0.total_angular_momentum, j_scale),
            tol.relative,
        );
        push(
            "kinetic",
            scalar_drift(diag.iter().map(|d| d.kinetic), d0.kinetic, positive_or(d0.kinetic.abs(), 1.0)),
            tol.relative,
        );
    } else {
        let mut impulse = Vec3::zeros();
        let mut moment = Vec3::zeros();
        let mut max_p: f64 = 0.0;
        let mut max_j: f64 = 0.0;
        let force = |s: &super::State| p.charge * tr.field.at(&s.r);
        for w in tr.samples.windows(2).zip(tr.diagnostics.windows(2)) {
            let (s, d) = w;
            let h = s[1].t - s[0].t;
            let (f0, f1) = (force(&s[0]), force(&s[1]));
            impulse += 0.5 * h * (f0 + f1);
            moment += 0.5 * h * (s[0].r.cross(&f0) + s[1].r.cross(&f1));
            max_p = max_p.max((d[1].momentum - impulse - d0.momentum).norm());
            max_j = max_j.max((d[1].total_angular_momentum - moment - d0.total_angular_momentum).norm());
        }
        push("momentum_balance", max_p / p_scale, tol.relative);
        push("angular_momentum_balance", max_j / j_scale, tol.relative);
    }

    // dM/dt = P x v at interior samples
    let mut residual: f64 = 0.0;
    let mut torque_scale: f64 = 0.0;
    for i in 1..tr.len().saturating_sub(1) {
        let dt = tr.samples[i + 1].t - tr.samples[i - 1].t;
        let dm = (tr.diagnostics[i + 1].spin - tr.diagnostics[i - 1].spin) / dt;
        let torque = tr.diagnostics[i].momentum.cross(&tr.samples[i].v);
        residual = residual.max((dm - torque).norm());
        torque_scale = torque_scale.max(torque.norm());
    }
    let torque_residual = if torque_scale > 0.0 { residual / torque_scale } else { residual };
    push("torque_residual", torque_residual, tol.torque_residual);

    Ok(ConservationReport { drifts })
}
