use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Free-oscillation phase against the quasiclassical phase over a distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseComparison {
    pub distance: f64,
    /// Omega_s L / v_z
    pub free_phase: f64,
    /// m_e v_z L / hbar
    pub quasiclassical_phase: f64,
    /// free / quasiclassical, taken from the rates so it is defined at L = 0.
    pub ratio: f64,
    /// Same ratio when each half turn (m_hat -> -m_hat) counts as a full cycle.
    pub half_turn_ratio: f64,
}

pub fn phase_comparison(p: &ModelParams, m_hat_z: f64, v_z: f64, distance: f64) -> Result<PhaseComparison> {
    if !(distance >= 0.0 && distance.is_finite()) {
        return Err(Error::Precondition(format!("distance must be non-negative (got {distance})")));
    }
    let sp = p.spiral_params(m_hat_z, v_z)?;
    let free_rate = sp.omega / v_z;
    let quasiclassical_rate = sp.effective_mass * v_z / p.hbar;
    let ratio = free_rate / quasiclassical_rate;
    Ok(PhaseComparison {
        distance,
        free_phase: free_rate * distance,
        quasiclassical_phase: quasiclassical_rate * distance,
        ratio,
        half_turn_ratio: 2.0 * ratio,
    })
}
