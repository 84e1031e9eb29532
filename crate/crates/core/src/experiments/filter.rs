use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::units;

/// Electron picture used to decide whether a sample passes a hole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElectronModel {
    /// Straight line; passes iff it stays inside the hole.
    PointClassical,
    /// Geometric transmission times clamp(1 - (lambda_0 / 2D)^2, 0, 1). A heuristic.
    DiffractionBaseline,
    /// Helix of radius R_s(E) that must stay inside the hole.
    FreeSpiral,
}

impl ElectronModel {
    pub const ALL: [ElectronModel; 3] =
        [ElectronModel::PointClassical, ElectronModel::DiffractionBaseline, ElectronModel::FreeSpiral];

    pub fn name(self) -> &'static str {
        match self {
            ElectronModel::PointClassical => "point_classical",
            ElectronModel::DiffractionBaseline => "diffraction_baseline",
            ElectronModel::FreeSpiral => "free_spiral",
        }
    }
}

/// One cylindrical hole per square cell of side `cell_pitch` (lengths in cm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterGeometry {
    pub hole_diameter: f64,
    pub thickness: f64,
    pub cell_pitch: f64,
    /// Half-angle of the beam cone (rad), sampled uniformly over the cone's solid disk.
    pub divergence: f64,
}

impl Default for FilterGeometry {
    fn default() -> Self {
        FilterGeometry { hole_diameter: 1e-6, thickness: 1e-4, cell_pitch: 2e-6, divergence: 0.0 }
    }
}

impl FilterGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.hole_diameter) || !positive(self.thickness) || !positive(self.cell_pitch) {
            return Err(Error::Config("hole diameter, thickness and cell pitch must be positive".into()));
        }
        if self.cell_pitch < self.hole_diameter {
            return Err(Error::Config("cell pitch must be at least the hole diameter".into()));
        }
        if !(self.divergence >= 0.0 && self.divergence < 0.5 * PI) {
            return Err(Error::Config("divergence must lie in [0, pi/2)".into()));
        }
        Ok(())
    }

    /// Hole area over cell area.
    pub fn open_fraction(&self) -> f64 {
        PI * self.hole_diameter * self.hole_diameter / (4.0 * self.cell_pitch * self.cell_pitch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionCurve {
    pub model: ElectronModel,
    pub heuristic: bool,
    pub energies_ev: Vec<f64>,
    pub transmission: Vec<f64>,
    pub std_error: Vec<f64>,
    pub passed: Vec<u64>,
    pub hole_diameter: f64,
    pub thickness: f64,
    pub cell_pitch: f64,
    pub divergence: f64,
    pub n_samples: u64,
    pub seed: u64,
    /// Energy where R_s = D/2 (free-spiral model only).
    pub cutoff_energy_ev: Option<f64>,
}

/// Axial speed of the averaged motion at kinetic energy m_e v^2 / 2.
pub fn axial_speed(p: &ModelParams, m_hat_z: f64, energy_ev: f64) -> Result<f64> {
    if !(energy_ev > 0.0 && energy_ev.is_finite()) {
        return Err(Error::Precondition(format!("energy must be positive (got {energy_ev} eV)")));
    }
    Ok(units::speed_from_energy(energy_ev, p.effective_mass(m_hat_z)?))
}

pub fn spiral_radius_at(p: &ModelParams, m_hat_z: f64, energy_ev: f64) -> Result<f64> {
    Ok(p.spiral_params(m_hat_z, axial_speed(p, m_hat_z, energy_ev)?)?.radius)
}

/// Closed form of the energy where R_s = D/2.
pub fn cutoff_energy_closed_form(p: &ModelParams, m_hat_z: f64, hole_diameter: f64) -> Result<f64> {
    let m_e = p.effective_mass(m_hat_z)?;
    let v = 2.0 * p.ang_momentum * (1.0 - m_hat_z * m_hat_z).max(0.0).sqrt() / (m_e * hole_diameter);
    Ok(units::erg_to_ev(0.5 * m_e * v * v))
}

/// Solves R_s(E) = D/2 by bisection in log E.
pub fn cutoff_energy_ev(p: &ModelParams, m_hat_z: f64, hole_diameter: f64) -> Result<f64> {
    if !(hole_diameter > 0.0) {
        return Err(Error::Precondition("hole diameter must be positive".into()));
    }
    if (1.0 - m_hat_z * m_hat_z) <= 0.0 {
        return Err(Error::Degenerate("a straight-line electron has no cutoff".into()));
    }
    let half = 0.5 * hole_diameter;
    let excess = |log_e: f64| -> Result<f64> { Ok(spiral_radius_at(p, m_hat_z, log_e.exp())? - half) };
    // R_s falls with energy; widen the bracket until it straddles the root
    let (mut lo, mut hi) = (-30.0f64, 0.0f64);
    while excess(lo)? < 0.0 {
        lo -= 30.0;
        if lo < -700.0 {
            return Err(Error::Degenerate("cutoff energy below representable range".into()));
        }
    }
    while excess(hi)? > 0.0 {
        hi += 10.0;
        let speed = axial_speed(p, m_hat_z, hi.exp())?;
        if speed >= p.speed_ceiling * p.c_light {
            return Err(Error::Precondition("cutoff lies above the velocity ceiling".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Random draws of one Monte Carlo sample.
#[derive(Debug, Clone, Copy)]
struct Draw {
    entry: [f64; 2],
    phase: f64,
    handedness: f64,
    /// Transverse drift over the filter thickness.
    drift: [f64; 2],
}

impl Draw {
    /// Stream `index` of the seeded generator, so each sample is independent of scheduling.
    fn new(seed: u64, index: u64, g: &FilterGeometry) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let half = 0.5 * g.cell_pitch;
        let entry = [rng.random_range(-half..half), rng.random_range(-half..half)];
        let phase = rng.random_range(0.0..2.0 * PI);
        let handedness = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let theta = g.divergence * rng.random::<f64>().sqrt();
        let psi = rng.random_range(0.0..2.0 * PI);
        let shift = g.thickness * theta.tan();
        Draw { entry, phase, handedness, drift: [shift * psi.cos(), shift * psi.sin()] }
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

/// Largest distance from the hole axis of center + R u(phi) for phi on the arc.
fn max_distance_on_arc(center: [f64; 2], radius: f64, start: f64, sweep: f64) -> f64 {
    let at = |phi: f64| norm([center[0] + radius * phi.cos(), center[1] + radius * phi.sin()]);
    let outward = center[1].atan2(center[0]);
    let (lo, span) = if sweep >= 0.0 { (start, sweep) } else { (start + sweep, -sweep) };
    let offset = (outward - lo).rem_euclid(2.0 * PI);
    if offset <= span {
        norm(center) + radius
    } else {
        at(lo).max(at(lo + span))
    }
}

fn straight_passes(d: &Draw, half: f64) -> bool {
    norm(d.entry) < half && norm(add(d.entry, d.drift)) < half
}

fn spiral_passes(d: &Draw, half: f64, radius: f64, turns: f64) -> bool {
    let u = [d.phase.cos(), d.phase.sin()];
    let axis_in = [d.entry[0] - radius * u[0], d.entry[1] - radius * u[1]];
    let axis_out = add(axis_in, d.drift);
    if turns >= 1.0 {
        norm(axis_in) + radius < half && norm(axis_out) + radius < half
    } else {
        let sweep = d.handedness * 2.0 * PI * turns;
        max_distance_on_arc(axis_in, radius, d.phase, sweep) < half
            && max_distance_on_arc(axis_out, radius, d.phase, sweep) < half
    }
}

/// Monte Carlo transmission through the filter for each energy.
///
/// Only |m_hat_z| is used; the spin sign (spiral handedness) is drawn per sample.
/// Every energy reuses the same `n_samples` draws, and draw `i` comes from
/// stream `i` of a generator seeded with `seed`, so results do not depend on
/// the thread count.
pub fn run_filter_transmission(
    p: &ModelParams,
    m_hat_z: f64,
    geometry: &FilterGeometry,
    energies_ev: &[f64],
    n_samples: u64,
    seed: u64,
    model: ElectronModel,
) -> Result<TransmissionCurve> {
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    if energies_ev.is_empty() {
        return Err(Error::Config("energy grid is empty".into()));
    }
    geometry.validate()?;
    p.validate(false).into_result()?;
    let m_hat_z = m_hat_z.abs();
    let draws: Vec<Draw> = (0..n_samples).into_par_iter().map(|i| Draw::new(seed, i, geometry)).collect();
    let half = 0.5 * geometry.hole_diameter;
    let n = n_samples as f64;
    let mut curve = TransmissionCurve {
        model,
        heuristic: model == ElectronModel::DiffractionBaseline,
        energies_ev: energies_ev.to_vec(),
        transmission: Vec::with_capacity(energies_ev.len()),
        std_error: Vec::with_capacity(energies_ev.len()),
        passed: Vec::with_capacity(energies_ev.len()),
        hole_diameter: geometry.hole_diameter,
        thickness: geometry.thickness,
        cell_pitch: geometry.cell_pitch,
        divergence: geometry.divergence,
        n_samples,
        seed,
        cutoff_energy_ev: None,
    };
    if model == ElectronModel::FreeSpiral {
        curve.cutoff_energy_ev = Some(cutoff_energy_ev(p, m_hat_z, geometry.hole_diameter)?);
    }
    for &energy in energies_ev {
        let v_z = axial_speed(p, m_hat_z, energy)?;
        let sp = p.spiral_params(m_hat_z, v_z)?;
        let passed = match model {
            ElectronModel::PointClassical | ElectronModel::DiffractionBaseline => {
                draws.par_iter().filter(|d| straight_passes(d, half)).count()
            }
            ElectronModel::FreeSpiral => {
                let turns = if sp.radius == 0.0 { f64::INFINITY } else { geometry.thickness / sp.pitch() };
                draws.par_iter().filter(|d| spiral_passes(d, half, sp.radius, turns)).count()
            }
        } as u64;
        let fraction = passed as f64 / n;
        let se = (fraction * (1.0 - fraction) / n).sqrt();
        let factor = match model {
            ElectronModel::DiffractionBaseline => {
                let ratio = sp.de_broglie / (2.0 * geometry.hole_diameter);
                (1.0 - ratio * ratio).clamp(0.0, 1.0)
            }
            _ => 1.0,
        };
        curve.passed.push(passed);
        curve.transmission.push(factor * fraction);
        curve.std_error.push(factor * se);
    }
    Ok(curve)
}

/// `count` energies spaced evenly in log between the bounds.
pub fn log_grid(from: f64, to: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![from];
    }
    let (a, b) = (from.ln(), to.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn physical(kappa: f64) -> (ModelParams, f64) {
        ModelParams::physical_electron(kappa).unwrap()
    }

    #[test]
    fn cutoff_bisection_matches_closed_form() {
        for kappa in [0.5, 0.6, 0.8, 0.95] {
            let (p, mz) = physical(kappa);
            let a = cutoff_energy_ev(&p, mz, 1e-6).unwrap();
            let b = cutoff_energy_closed_form(&p, mz, 1e-6).unwrap();
            assert!((a / b - 1.0).abs() < 1e-12, "{kappa}: {a} {b}");
            let r = spiral_radius_at(&p, mz, a).unwrap();
            assert!((r / 0.5e-6 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn de_broglie_at_centi_electronvolt_exceeds_the_hole() {
        let (p, mz) = physical(0.5);
        let v = axial_speed(&p, mz, 1e-2).unwrap();
        let l0 = p.de_broglie_wavelength(mz, v).unwrap();
        assert!((l0 / 1.2264e-6 - 1.0).abs() < 1e-3, "{l0}");
        assert!(l0 > 1e-6);
    }

    #[test]
    fn arc_maximum() {
        // center on +x, full circle reaches |c| + R
        assert!((max_distance_on_arc([1.0, 0.0], 0.5, 0.0, 2.0 * PI) - 1.5).abs() < 1e-15);
        // quarter arc from pi/2 to pi stays on the far side
        let m = max_distance_on_arc([1.0, 0.0], 0.5, 0.5 * PI, 0.5 * PI);
        assert!((m - 1.25f64.sqrt()).abs() < 1e-15);
        // the same arc walked clockwise from pi
        let m2 = max_distance_on_arc([1.0, 0.0], 0.5, PI, -0.5 * PI);
        assert!((m - m2).abs() < 1e-15);
    }

    #[test]
    fn point_classical_is_flat_and_geometric() {
        let (p, mz) = physical(0.8);
        let g = FilterGeometry::default();
        let c = run_filter_transmission(&p, mz, &g, &log_grid(1e-3, 1.0, 5), 20_000, 7, ElectronModel::PointClassical)
            .unwrap();
        assert!(c.transmission.windows(2).all(|w| w[0] == w[1]));
        assert!((c.transmission[0] - g.open_fraction()).abs() < 4.0 * c.std_error[0]);
    }

    #[test]
    fn free_spiral_is_zero_below_cutoff() {
        let (p, mz) = physical(0.8);
        let g = FilterGeometry::default();
        let energies = log_grid(1e-3, 1.0, 16);
        let c = run_filter_transmission(&p, mz, &g, &energies, 20_000, 3, ElectronModel::FreeSpiral).unwrap();
        let cut = c.cutoff_energy_ev.unwrap();
        for (e, t) in energies.iter().zip(&c.transmission) {
            if *e < cut {
                assert_eq!(*t, 0.0);
            }
        }
        assert!(*c.transmission.last().unwrap() > 0.0);
    }

    #[test]
    fn same_seed_same_curve_and_thread_independent() {
        let (p, mz) = physical(0.8);
        let g = FilterGeometry { divergence: 0.01, thickness: 3e-6, ..Default::default() };
        let e = log_grid(1e-3, 1.0, 6);
        let run = || run_filter_transmission(&p, mz, &g, &e, 5000, 11, ElectronModel::FreeSpiral).unwrap();
        let a = run();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(run);
        assert_eq!(a, b);
    }

    #[test]
    fn spin_sign_does_not_change_full_turn_transmission() {
        let (p, mz) = physical(0.8);
        let g = FilterGeometry::default();
        let e = log_grid(1e-2, 1.0, 4);
        let plus = run_filter_transmission(&p, mz, &g, &e, 5000, 1, ElectronModel::FreeSpiral).unwrap();
        let minus = run_filter_transmission(&p, -mz, &g, &e, 5000, 1, ElectronModel::FreeSpiral).unwrap();
        assert_eq!(plus.transmission, minus.transmission);
    }

    #[test]
    fn smaller_holes_never_transmit_more() {
        let (p, mz) = physical(0.8);
        let e = log_grid(1e-3, 1.0, 5);
        for model in ElectronModel::ALL {
            let mut previous: Option<Vec<f64>> = None;
            for d in [1.5e-6, 1e-6, 0.7e-6] {
                let g = FilterGeometry { hole_diameter: d, ..Default::default() };
                let c = run_filter_transmission(&p, mz, &g, &e, 5000, 5, model).unwrap();
                if let Some(prev) = &previous {
                    assert!(c.transmission.iter().zip(prev).all(|(a, b)| a <= b), "{model:?}");
                }
                previous = Some(c.transmission);
            }
        }
    }

    #[test]
    fn rejects_zero_samples_and_bad_geometry() {
        let (p, mz) = physical(0.8);
        let g = FilterGeometry::default();
        assert!(run_filter_transmission(&p, mz, &g, &[1e-2], 0, 1, ElectronModel::FreeSpiral).is_err());
        let bad = FilterGeometry { cell_pitch: 1e-7, ..g };
        assert!(run_filter_transmission(&p, mz, &bad, &[1e-2], 10, 1, ElectronModel::FreeSpiral).is_err());
    }
}
