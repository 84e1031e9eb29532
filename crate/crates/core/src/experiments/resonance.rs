use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::helix_fit::ols_slope;
use crate::dynamics::{integrate, spiral_initial_conditions, FieldSpec, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Direction of the periodic field; both vary as cos(2 pi z / period).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    /// Along the spiral axis.
    #[default]
    Axial,
    /// Across the spiral axis (along x).
    Transverse,
}

impl Polarization {
    pub fn field(self, amplitude: f64, period: f64) -> FieldSpec {
        match self {
            Polarization::Axial => FieldSpec::PeriodicZ { amplitude, period },
            Polarization::Transverse => FieldSpec::PeriodicX { amplitude, period },
        }
    }
}

/// Spiral azimuths averaged over at each sweep point.
pub const PHASES: [f64; 4] = [0.0, 0.5 * PI, PI, 1.5 * PI];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceCurve {
    pub polarization: Polarization,
    pub amplitude: f64,
    pub interaction_length: f64,
    pub de_broglie: f64,
    pub spiral_wavelength: f64,
    /// Field periods, strictly increasing.
    pub field_periods: Vec<f64>,
    /// |<d T_perp / dt>| / T_perp(0), the rate averaged over [`PHASES`].
    pub response: Vec<f64>,
    pub peak: Option<f64>,
    pub peak_response: f64,
    /// Full width at half maximum, when both crossings lie in the sweep.
    pub width: Option<f64>,
    pub peak_at_edge: bool,
    pub warnings: Vec<String>,
}

impl ResonanceCurve {
    /// Linear interpolation of the response at `field_period`.
    pub fn response_at(&self, field_period: f64) -> Option<f64> {
        let x = &self.field_periods;
        let (first, last) = (x[0], x[x.len() - 1]);
        let slack = 1e-12 * last.abs();
        if field_period < first - slack || field_period > last + slack {
            return None;
        }
        if x.len() == 1 {
            return Some(self.response[0]);
        }
        let j = x.partition_point(|&v| v <= field_period).clamp(1, x.len() - 1);
        let w = ((field_period - x[j - 1]) / (x[j] - x[j - 1])).clamp(0.0, 1.0);
        Some(self.response[j - 1] * (1.0 - w) + self.response[j] * w)
    }
}

/// Sweep of `count` field periods evenly spaced between the two bounds.
pub fn linear_sweep(from: f64, to: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![from];
    }
    (0..count).map(|i| from + (to - from) * i as f64 / (count - 1) as f64).collect()
}

/// Transverse kinetic scalar m0 (1 + k) |v_perp|^2 / 2.
fn transverse_energy(p: &ModelParams, v: &crate::dynamics::Vec3) -> f64 {
    0.5 * p.m0 * (1.0 + p.kappa) * (v.x * v.x + v.y * v.y)
}

/// Signed secular growth rate of the transverse kinetic scalar, relative to
/// its free value, over an interaction length `length` in a periodic field.
pub fn growth_rate(
    p: &ModelParams,
    m_hat_z: f64,
    v_z: f64,
    phase: f64,
    field: &FieldSpec,
    length: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let s0 = spiral_initial_conditions(p, m_hat_z, v_z, phase)?;
    let free = transverse_energy(p, &s0.v);
    if free == 0.0 {
        return Err(Error::Degenerate("the spiral has no transverse motion".into()));
    }
    let cfg = IntegratorConfig { max_time: length / v_z.abs(), ..*cfg };
    let tr = integrate(p, &s0, field, &cfg)?;
    let times: Vec<f64> = tr.times().collect();
    let energy: Vec<f64> = tr.samples.iter().map(|s| transverse_energy(p, &s.v)).collect();
    Ok(ols_slope(&times, &energy) / free)
}

/// Parabolic vertex through three points.
fn vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curvature = (d2 - d1) / (x[2] - x[0]);
    if !(curvature < 0.0) {
        return None;
    }
    let slope_mid = d1 + curvature * (x[1] - x[0]);
    // y = y1 + slope_mid (t - x1) + curvature (t - x1)^2 with t relative to x1
    let shift = -slope_mid / (2.0 * curvature);
    let top = y[1] + slope_mid * shift + curvature * shift * shift;
    Some((x[1] + shift, top))
}

fn half_max_crossing(x: &[f64], y: &[f64], from: usize, half: f64, step: isize) -> Option<f64> {
    let mut i = from as isize;
    loop {
        let j = i + step;
        if j < 0 || j as usize >= x.len() {
            return None;
        }
        let (a, b) = (i as usize, j as usize);
        if y[b] <= half {
            let w = (y[a] - half) / (y[a] - y[b]);
            return Some(x[a] + w * (x[b] - x[a]));
        }
        i = j;
    }
}

/// Inputs of a resonance sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSweep {
    pub amplitude: f64,
    /// Initial field periods, strictly increasing.
    pub field_periods: Vec<f64>,
    /// Distance travelled along the axis.
    pub interaction_length: f64,
    #[serde(default)]
    pub polarization: Polarization,
    /// Rounds of local refinement around the running maximum.
    #[serde(default)]
    pub refinements: usize,
    /// Points inserted between the neighbours of the maximum per round.
    #[serde(default = "default_refine_points")]
    pub refine_points: usize,
}

fn default_refine_points() -> usize {
    10
}

fn argmax(values: &[f64]) -> usize {
    values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0)
}

/// Sweeps the field period and records the transverse growth rate.
///
/// Sweep points run in parallel; each refinement round samples the interval
/// between the neighbours of the current maximum more finely.
pub fn run_periodic_field_resonance(
    p: &ModelParams,
    m_hat_z: f64,
    v_z: f64,
    sweep: &ResonanceSweep,
    cfg: &IntegratorConfig,
) -> Result<ResonanceCurve> {
    let (amplitude, interaction_length, polarization) = (sweep.amplitude, sweep.interaction_length, sweep.polarization);
    let initial = &sweep.field_periods;
    if initial.is_empty() {
        return Err(Error::Precondition("resonance sweep is empty".into()));
    }
    if initial.windows(2).any(|w| !(w[1] > w[0])) || !(initial[0] > 0.0) {
        return Err(Error::Precondition("field periods must be positive and strictly increasing".into()));
    }
    if !(interaction_length > 0.0 && amplitude.is_finite()) {
        return Err(Error::Precondition("interaction length must be positive and amplitude finite".into()));
    }
    let sp = p.spiral_params(m_hat_z, v_z)?;
    let mut warnings = Vec::new();
    let kick = (p.charge * amplitude / sp.effective_mass).abs() * sp.period();
    if kick >= 0.01 * v_z.abs() {
        warnings.push(format!(
            "non-perturbative amplitude: velocity change per period {kick:.3e} is not below 1% of v_z"
        ));
    }
    if interaction_length < 200.0 * sp.pitch() {
        warnings.push(format!(
            "interaction length {interaction_length:.3e} is shorter than 200 spiral pitches"
        ));
    }
    let evaluate = |periods: &[f64]| -> Result<Vec<f64>> {
        let work: Vec<(f64, f64)> = periods.iter().flat_map(|&x| PHASES.iter().map(move |&ph| (x, ph))).collect();
        let rates: Vec<f64> = work
            .par_iter()
            .map(|&(x, phase)| {
                growth_rate(p, m_hat_z, v_z, phase, &polarization.field(amplitude, x), interaction_length, cfg)
            })
            .collect::<Result<_>>()?;
        // opposite azimuths cancel the first-order (phase-dependent) part
        Ok(rates.chunks(PHASES.len()).map(|c| (c.iter().sum::<f64>() / c.len() as f64).abs()).collect())
    };
    let mut x = initial.clone();
    let mut response = evaluate(&x)?;
    for _ in 0..sweep.refinements {
        if x.len() < 2 || sweep.refine_points == 0 {
            break;
        }
        let i = argmax(&response);
        let (lo, hi) = (x[i.saturating_sub(1)], x[(i + 1).min(x.len() - 1)]);
        let k = sweep.refine_points;
        let extra: Vec<f64> = (1..=k)
            .map(|j| lo + (hi - lo) * j as f64 / (k + 1) as f64)
            .filter(|v| !x.contains(v))
            .collect();
        let extra_response = evaluate(&extra)?;
        let mut merged: Vec<(f64, f64)> =
            x.into_iter().zip(response).chain(extra.into_iter().zip(extra_response)).collect();
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        merged.dedup_by(|a, b| a.0 == b.0);
        (x, response) = merged.into_iter().unzip();
    }

    let imax = argmax(&response);
    let ymax = response[imax];
    let peak_at_edge = imax == 0 || imax + 1 == x.len();
    let (peak, peak_response) = if ymax <= 0.0 {
        (None, 0.0)
    } else if peak_at_edge {
        (Some(x[imax]), ymax)
    } else {
        match vertex([x[imax - 1], x[imax], x[imax + 1]], [response[imax - 1], ymax, response[imax + 1]]) {
            Some((at, top)) => (Some(at), top.max(ymax)),
            None => (Some(x[imax]), ymax),
        }
    };
    let width = if ymax > 0.0 {
        let half = 0.5 * peak_response;
        match (half_max_crossing(&x, &response, imax, half, -1), half_max_crossing(&x, &response, imax, half, 1)) {
            (Some(lo), Some(hi)) => Some(hi - lo),
            _ => None,
        }
    } else {
        None
    };
    Ok(ResonanceCurve {
        polarization,
        amplitude,
        interaction_length,
        de_broglie: sp.de_broglie,
        spiral_wavelength: sp.pitch(),
        field_periods: x,
        response,
        peak,
        peak_response,
        width,
        peak_at_edge,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpinSign;

    fn quantized() -> (ModelParams, f64, f64) {
        let (q, mz) = ModelParams::default().with_quantized_spin(SpinSign::Plus).unwrap();
        (q, mz, 0.01)
    }

    fn weak_amplitude(p: &ModelParams, mz: f64, vz: f64) -> f64 {
        let sp = p.spiral_params(mz, vz).unwrap();
        1e-6 * sp.effective_mass * vz * sp.omega.abs() / p.charge
    }

    #[test]
    fn parabola_vertex() {
        let y = |t: f64| 3.0 - (t - 2.5) * (t - 2.5);
        let (at, top) = vertex([1.0, 2.0, 4.0], [y(1.0), y(2.0), y(4.0)]).unwrap();
        assert!((at - 2.5).abs() < 1e-14 && (top - 3.0).abs() < 1e-14);
        let (at, top) = vertex([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0]).unwrap();
        assert!((at).abs() < 1e-15 && (top - 1.0).abs() < 1e-15);
        assert!(vertex([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]).is_none());
    }

    #[test]
    fn zero_amplitude_is_flat_zero() {
        let (q, mz, vz) = quantized();
        let sp = q.spiral_params(mz, vz).unwrap();
        let sweep = linear_sweep(0.5 * sp.de_broglie, 3.0 * sp.de_broglie, 4);
        let cfg = IntegratorConfig { record_stride: 10, ..Default::default() };
        let sweep = ResonanceSweep {
            amplitude: 0.0,
            field_periods: sweep,
            interaction_length: 20.0 * sp.pitch(),
            polarization: Polarization::Axial,
            refinements: 0,
            refine_points: 10,
        };
        let c = run_periodic_field_resonance(&q, mz, vz, &sweep, &cfg).unwrap();
        assert!(c.response.iter().all(|&r| r < 1e-12), "{:?}", c.response);
    }

    fn transverse_curve(periods: f64) -> (ResonanceCurve, f64) {
        let (q, mz, vz) = quantized();
        let sp = q.spiral_params(mz, vz).unwrap();
        let sweep = ResonanceSweep {
            amplitude: weak_amplitude(&q, mz, vz),
            field_periods: linear_sweep(1.6 * sp.de_broglie, 2.4 * sp.de_broglie, 9),
            interaction_length: periods * sp.pitch(),
            polarization: Polarization::Transverse,
            refinements: 3,
            refine_points: 8,
        };
        let cfg = IntegratorConfig { record_stride: 10, ..Default::default() };
        (run_periodic_field_resonance(&q, mz, vz, &sweep, &cfg).unwrap(), sp.pitch())
    }

    #[test]
    fn transverse_drive_resonates_at_spiral_wavelength() {
        let (c, pitch) = transverse_curve(50.0);
        assert!((c.peak.unwrap() / pitch - 1.0).abs() < 0.01, "{}", c.peak.unwrap() / pitch);
        assert!(c.warnings.iter().any(|w| w.contains("200 spiral pitches")));
    }

    #[test]
    fn longer_interaction_sharpens_the_line() {
        let (short, _) = transverse_curve(50.0);
        let (long, _) = transverse_curve(100.0);
        let ratio = short.width.unwrap() / long.width.unwrap();
        assert!(ratio > 1.5 && ratio < 2.5, "{ratio}");
    }

    #[test]
    fn phase_shift_by_pi_leaves_axial_response_unchanged() {
        let (q, mz, vz) = quantized();
        let sp = q.spiral_params(mz, vz).unwrap();
        let amp = weak_amplitude(&q, mz, vz);
        let cfg = IntegratorConfig { record_stride: 10, ..Default::default() };
        // rotating by pi about the axis maps the axial field onto itself
        let f = Polarization::Axial.field(amp, 1.1 * sp.pitch());
        let a = growth_rate(&q, mz, vz, 0.3, &f, 20.0 * sp.pitch(), &cfg).unwrap();
        let b = growth_rate(&q, mz, vz, 0.3 + PI, &f, 20.0 * sp.pitch(), &cfg).unwrap();
        assert!((a - b).abs() <= 1e-6 * a.abs().max(b.abs()) + 1e-15, "{a} {b}");
    }

    #[test]
    fn rejects_bad_sweeps() {
        let (q, mz, vz) = quantized();
        let cfg = IntegratorConfig::default();
        let mut sweep = ResonanceSweep {
            amplitude: 1.0,
            field_periods: vec![],
            interaction_length: 1.0,
            polarization: Polarization::Axial,
            refinements: 0,
            refine_points: 10,
        };
        assert!(run_periodic_field_resonance(&q, mz, vz, &sweep, &cfg).is_err());
        sweep.field_periods = vec![2.0, 1.0];
        assert!(run_periodic_field_resonance(&q, mz, vz, &sweep, &cfg).is_err());
    }
}
