use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, spiral_initial_conditions, FieldSpec, FreeMotion, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Phase accumulated per level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizationRule {
    /// Phi(E_n) = n pi: the spin flips m_hat -> -m_hat every half period.
    #[default]
    HalfTurn,
    /// Phi(E_n) = 2 pi n.
    FullTurn,
}

impl QuantizationRule {
    pub fn phase_per_level(self) -> f64 {
        match self {
            QuantizationRule::HalfTurn => PI,
            QuantizationRule::FullTurn => 2.0 * PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub rule: QuantizationRule,
    pub gradient: f64,
    /// Averaged oscillation frequency sqrt(-e k / m_e).
    pub omega: f64,
    /// hbar omega
    pub reference_spacing: f64,
    /// E_1 .. E_n, strictly increasing.
    pub levels: Vec<f64>,
    pub spacings: Vec<f64>,
    /// max |dE_n - hbar omega| / (hbar omega)
    pub max_spacing_error: f64,
    /// stdev(dE_n) / mean(dE_n)
    pub spacing_spread: f64,
    /// Energy grid and Phi(E) used to bracket the levels.
    pub grid_energies: Vec<f64>,
    pub grid_phases: Vec<f64>,
}

/// Smallest number of steps per averaged period.
const MIN_STEPS: usize = 2000;

/// Free-oscillation phase accumulated over one averaged period.
#[derive(Debug, Clone, Copy)]
pub struct PhaseIntegral {
    params: ModelParams,
    m_hat_z: f64,
    gradient: f64,
    omega: f64,
    m_e: f64,
    /// Omega_s / v_z^2
    rate_per_speed_sq: f64,
    cfg: IntegratorConfig,
}

impl PhaseIntegral {
    pub fn new(p: &ModelParams, m_hat_z: f64, gradient: f64, cfg: &IntegratorConfig) -> Result<Self> {
        p.validate(true).into_result()?;
        cfg.validate()?;
        if !p.is_quantized(m_hat_z) {
            return Err(Error::Precondition(
                "spectrum needs the quantized spin projection (M0 m_hat_z = hbar / 2, m_hat_z^2 = G / 3)".into(),
            ));
        }
        if !(p.charge * gradient < 0.0) || !gradient.is_finite() {
            return Err(Error::Precondition(format!(
                "field gradient {gradient} is not restoring for charge {}",
                p.charge
            )));
        }
        let g = p.g()?;
        let m_e = p.effective_mass(m_hat_z)?;
        let mz2 = m_hat_z * m_hat_z;
        Ok(PhaseIntegral {
            params: *p,
            m_hat_z,
            gradient,
            omega: (-p.charge * gradient / m_e).sqrt(),
            m_e,
            rate_per_speed_sq: m_e * m_hat_z.abs() / (p.ang_momentum * (g + mz2)),
            cfg: *cfg,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Phi(E) = integral of |Omega_s(v_z(t))| over 2 pi / omega, starting at z = 0.
    pub fn at(&self, energy: f64) -> Result<f64> {
        if !(energy > 0.0) {
            return Err(Error::Precondition(format!("energy must be positive (got {energy})")));
        }
        let v0 = (2.0 * energy / self.m_e).sqrt();
        let s0 = spiral_initial_conditions(&self.params, self.m_hat_z, v0, 0.0)?;
        let duration = 2.0 * PI / self.omega;
        let fast = FreeMotion::new(&self.params, &s0).precession_rate().abs();
        let per_free = (duration * fast / (2.0 * PI) * self.cfg.steps_per_period as f64).ceil() as usize;
        let n = {
            let n = per_free.max(MIN_STEPS);
            n + n % 2
        };
        let cfg = IntegratorConfig {
            dt: Some(duration / n as f64),
            max_time: duration,
            record_stride: 1,
            adaptive: false,
            ..self.cfg
        };
        let tr = integrate(&self.params, &s0, &FieldSpec::LinearZ { gradient: self.gradient }, &cfg)?;
        if tr.len() != n + 1 {
            return Err(Error::Instability { t: tr.duration(), reason: "unexpected sample count".into() });
        }
        // composite Simpson on the uniform grid
        let h = duration / n as f64;
        let f = |i: usize| {
            let vz = tr.samples[i].v.z;
            self.rate_per_speed_sq * vz * vz
        };
        let mut sum = f(0) + f(n);
        for i in 1..n {
            sum += if i % 2 == 1 { 4.0 * f(i) } else { 2.0 * f(i) };
        }
        Ok(sum * h / 3.0)
    }
}

fn bisect(phi: &PhaseIntegral, target: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= 1e-14 * hi || mid == lo || mid == hi {
            break;
        }
        if phi.at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Energy levels of the averaged oscillator in E_z = gradient z.
pub fn run_linear_field_spectrum(
    p: &ModelParams,
    m_hat_z: f64,
    gradient: f64,
    levels: usize,
    rule: QuantizationRule,
    cfg: &IntegratorConfig,
) -> Result<SpectrumResult> {
    if levels < 2 {
        return Err(Error::Precondition("at least two levels are needed for a spacing".into()));
    }
    let phi = PhaseIntegral::new(p, m_hat_z, gradient, cfg)?;
    let reference_spacing = p.hbar * phi.omega();
    let step = rule.phase_per_level();
    let targets: Vec<f64> = (1..=levels).map(|n| n as f64 * step).collect();

    // bracket with a grid scaled by a probe slope
    let slope = phi.at(reference_spacing)? / reference_spacing;
    let e_hi = 1.25 * targets[levels - 1] / slope;
    let e_lo = 0.25 * targets[0] / slope;
    let count = 4 * levels + 1;
    let grid_energies: Vec<f64> =
        (0..count).map(|i| e_lo + (e_hi - e_lo) * i as f64 / (count - 1) as f64).collect();
    let grid_phases: Vec<f64> = grid_energies.par_iter().map(|&e| phi.at(e)).collect::<Result<_>>()?;
    for (w, e) in grid_phases.windows(2).zip(&grid_energies[1..]) {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotone { energy: *e });
        }
    }
    if grid_phases[0] >= targets[0] || grid_phases[count - 1] <= targets[levels - 1] {
        return Err(Error::NonMonotone { energy: e_hi });
    }
    let found: Vec<f64> = targets
        .par_iter()
        .map(|&target| {
            let j = grid_phases.partition_point(|&x| x < target);
            bisect(&phi, target, grid_energies[j - 1], grid_energies[j])
        })
        .collect::<Result<_>>()?;
    if found.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotone { energy: found[0] });
    }
    let spacings: Vec<f64> = found.windows(2).map(|w| w[1] - w[0]).collect();
    let n = spacings.len() as f64;
    let mean = spacings.iter().sum::<f64>() / n;
    let var = spacings.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    Ok(SpectrumResult {
        rule,
        gradient,
        omega: phi.omega(),
        reference_spacing,
        max_spacing_error: spacings
            .iter()
            .map(|d| (d - reference_spacing).abs() / reference_spacing)
            .fold(0.0, f64::max),
        spacing_spread: var.sqrt() / mean,
        levels: found,
        spacings,
        grid_energies,
        grid_phases,
    })
}

/// Gradient that gives the averaged oscillator frequency `omega`.
pub fn gradient_for_frequency(p: &ModelParams, m_hat_z: f64, omega: f64) -> Result<f64> {
    Ok(-omega * omega * p.effective_mass(m_hat_z)? / p.charge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpinSign;

    fn setup(omega: f64) -> (ModelParams, f64, f64) {
        let (q, mz) = ModelParams::default().with_quantized_spin(SpinSign::Plus).unwrap();
        let k = gradient_for_frequency(&q, mz, omega).unwrap();
        (q, mz, k)
    }

    #[test]
    fn phase_integral_is_linear_in_energy() {
        let (q, mz, k) = setup(1e-6);
        let phi = PhaseIntegral::new(&q, mz, k, &IntegratorConfig::default()).unwrap();
        for e in [0.5e-6, 3e-6, 7.5e-6] {
            let expect = PI * e / (q.hbar * 1e-6);
            assert!((phi.at(e).unwrap() / expect - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn half_turn_levels_are_evenly_spaced() {
        let (q, mz, k) = setup(1e-6);
        let s = run_linear_field_spectrum(&q, mz, k, 5, QuantizationRule::HalfTurn, &IntegratorConfig::default()).unwrap();
        assert!(s.max_spacing_error < 1e-8, "{}", s.max_spacing_error);
        assert!((s.levels[0] / s.reference_spacing - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rules_interleave() {
        let (q, mz, k) = setup(1e-6);
        let cfg = IntegratorConfig::default();
        let half = run_linear_field_spectrum(&q, mz, k, 6, QuantizationRule::HalfTurn, &cfg).unwrap();
        let full = run_linear_field_spectrum(&q, mz, k, 3, QuantizationRule::FullTurn, &cfg).unwrap();
        for (i, e) in full.levels.iter().enumerate() {
            assert!((e / half.levels[2 * i + 1] - 1.0).abs() < 1e-9);
            assert!(half.levels[2 * i] < *e);
        }
        assert!((full.spacings[0] / half.spacings[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (q, mz, k) = setup(1e-6);
        let cfg = IntegratorConfig::default();
        assert!(run_linear_field_spectrum(&q, mz, -k, 4, QuantizationRule::HalfTurn, &cfg).is_err());
        assert!(run_linear_field_spectrum(&q, 0.5, k, 4, QuantizationRule::HalfTurn, &cfg).is_err());
        assert!(run_linear_field_spectrum(&q, mz, k, 1, QuantizationRule::HalfTurn, &cfg).is_err());
    }
}
