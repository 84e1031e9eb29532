//! One function per subcommand. Each writes its data files and a
//! `summary.json` into the output directory and returns the summary.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Experiment, Scenario, ScenarioConfig, FORMAT};
use super::Check;
use crate::dynamics::{conservation_report, integrate, ConservationReport, FreeMotion, Trajectory};
use crate::error::{Error, Result};
use crate::experiments::filter::{log_grid, ElectronModel};
use crate::experiments::output::{write_csv, write_json, write_plot};
use crate::experiments::resonance::linear_sweep;
use crate::experiments::spectrum::gradient_for_frequency;
use crate::experiments::{
    phase_comparison, run_filter_transmission, run_free_spiral, run_linear_field_spectrum,
    run_periodic_field_resonance, ResonanceSweep,
};

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub format: &'static str,
    pub version: &'static str,
    pub command: Experiment,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub results: Value,
    pub effective_config: ScenarioConfig,
    /// The same configuration as a scenario file.
    pub effective_config_toml: String,
}

struct Outcome {
    checks: Vec<Check>,
    results: Value,
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Io(e.to_string()))
}

/// Runs `command` with `config`, writing into `out_dir`. The seed is taken
/// from `seed`, then from the config, then 0.
pub fn run_command(command: Experiment, config: &ScenarioConfig, out_dir: &Path, seed: Option<u64>) -> Result<Summary> {
    let scenario = config.resolve(command)?;
    let seed = seed.or(config.seed).unwrap_or(0);
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", out_dir.display())))?;
    let outcome = match command {
        Experiment::Simulate => simulate(&scenario, out_dir)?,
        Experiment::Spiral => spiral(&scenario, out_dir)?,
        Experiment::Resonance => resonance(&scenario, out_dir)?,
        Experiment::Spectrum => spectrum(&scenario, out_dir)?,
        Experiment::Filter => filter(&scenario, out_dir, seed)?,
        Experiment::Phase => phase(&scenario, out_dir)?,
    };
    let effective_config = scenario.effective(command, seed);
    let summary = Summary {
        format: FORMAT,
        version: env!("CARGO_PKG_VERSION"),
        command,
        pass: outcome.checks.iter().all(|c| c.pass),
        checks: outcome.checks,
        results: outcome.results,
        effective_config_toml: effective_config.to_toml()?,
        effective_config,
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn write_trajectory(tr: &Trajectory, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    tr.write_csv(&mut out)?;
    std::io::Write::flush(&mut out)?;
    Ok(())
}

fn conservation_checks(rep: &ConservationReport) -> Vec<Check> {
    rep.drifts.iter().map(|d| Check::at_most(format!("drift_{}", d.name), d.value, d.tolerance)).collect()
}

fn simulate(sc: &Scenario, out: &Path) -> Result<Outcome> {
    let cfg = &sc.config;
    let s0 = sc.start()?;
    let mut icfg = cfg.integrator;
    if icfg.max_time == 0.0 {
        let rate = FreeMotion::new(&sc.params, &s0).precession_rate().abs();
        if rate == 0.0 {
            return Err(Error::Config(
                "the start does not oscillate; set integrator.max_time to give the run length".into(),
            ));
        }
        icfg.max_time = cfg.simulate.periods * 2.0 * PI / rate;
    }
    let tr = integrate(&sc.params, &s0, &cfg.field, &icfg)?;
    let rep = conservation_report(&tr, &cfg.tolerances)?;
    write_trajectory(&tr, &out.join("trajectory.csv"))?;
    let spiral = if cfg.initial.state.is_none() { Some(sc.params.spiral_params(sc.m_hat_z, sc.v_z)?) } else { None };
    Ok(Outcome {
        checks: conservation_checks(&rep),
        results: json!({
            "samples": tr.len(),
            "duration": tr.duration(),
            "stats": to_value(&tr.stats)?,
            "spiral": to_value(&spiral)?,
            "conservation": to_value(&rep)?,
        }),
    })
}

fn spiral(sc: &Scenario, out: &Path) -> Result<Outcome> {
    let cfg = &sc.config;
    let sec = cfg.spiral;
    let run = run_free_spiral(
        &sc.params,
        sc.m_hat_z,
        sc.v_z,
        cfg.initial.phase,
        sec.periods,
        &cfg.integrator,
        &cfg.tolerances,
    )?;
    write_trajectory(&run.trajectory, &out.join("trajectory.csv"))?;
    let xs: Vec<f64> = run.trajectory.samples.iter().map(|s| s.r.x).collect();
    let ys: Vec<f64> = run.trajectory.samples.iter().map(|s| s.r.y).collect();
    write_plot(&out.join("transverse.dat"), &["x y of the integrated trajectory"], &xs, &ys)?;

    let mut checks = vec![Check::at_most("radius_error", run.radius_error, sec.fit_tolerance)];
    match (run.omega_error, run.pitch_error) {
        (Some(w), Some(l)) => {
            checks.push(Check::at_most("omega_error", w, sec.fit_tolerance));
            checks.push(Check::at_most("pitch_error", l, sec.fit_tolerance));
        }
        _ => checks.push(Check::holds("straight_line_expected", run.spiral.radius == 0.0)),
    }
    let quantized = sc.params.is_quantized(sc.m_hat_z);
    if quantized {
        let ratio = run.fitted_wavelength_ratio.unwrap_or(f64::NAN);
        checks.push(Check::at_most("wavelength_ratio_offset", (ratio - 2.0).abs(), sec.ratio_tolerance));
    }
    checks.extend(conservation_checks(&run.conservation));
    Ok(Outcome {
        checks,
        results: json!({
            "quantized": quantized,
            "radius_over_de_broglie": run.spiral.radius_ratio(),
            "run": to_value(&run)?,
        }),
    })
}

fn resonance(sc: &Scenario, out: &Path) -> Result<Outcome> {
    let cfg = &sc.config;
    let sec = cfg.resonance;
    if sec.points < 3 || !(sec.from > 0.0 && sec.to > sec.from) || !(sec.interaction_pitches > 0.0) {
        return Err(Error::Config(
            "resonance: need points >= 3, 0 < from < to and interaction_pitches > 0".into(),
        ));
    }
    let sp = sc.params.spiral_params(sc.m_hat_z, sc.v_z)?;
    let amplitude = sec.amplitude.unwrap_or(
        sec.relative_amplitude * sp.effective_mass * sc.v_z.abs() * sp.omega.abs() / sc.params.charge,
    );
    let sweep = ResonanceSweep {
        amplitude,
        field_periods: linear_sweep(sec.from * sp.de_broglie, sec.to * sp.de_broglie, sec.points),
        interaction_length: sec.interaction_pitches * sp.pitch(),
        polarization: sec.polarization,
        refinements: sec.refinements,
        refine_points: sec.refine_points,
    };
    let curve = run_periodic_field_resonance(&sc.params, sc.m_hat_z, sc.v_z, &sweep, &cfg.integrator)?;
    let scaled: Vec<f64> = curve.field_periods.iter().map(|x| x / sp.de_broglie).collect();
    write_csv(
        &out.join("resonance.csv"),
        &["field_period", "field_period_over_de_broglie", "response"],
        curve.field_periods.iter().zip(&scaled).zip(&curve.response).map(|((a, b), c)| vec![*a, *b, *c]),
    )?;
    write_plot(
        &out.join("resonance.dat"),
        &["field period / de Broglie wavelength", "growth rate of the transverse kinetic scalar"],
        &scaled,
        &curve.response,
    )?;
    let peak_ratio = curve.peak.map(|x| x / sp.de_broglie).unwrap_or(f64::NAN);
    let at_three = curve.response_at(3.0 * sp.de_broglie);
    let contrast = match at_three {
        Some(r) if r > 0.0 => curve.peak_response / r,
        Some(_) if curve.peak_response > 0.0 => f64::INFINITY,
        _ => f64::NAN,
    };
    Ok(Outcome {
        checks: vec![
            Check::at_most("peak_offset_from_de_broglie", (peak_ratio - 1.0).abs(), sec.peak_tolerance),
            Check::at_least("peak_over_response_at_3_de_broglie", contrast, sec.min_contrast),
        ],
        results: json!({
            "peak_over_de_broglie": peak_ratio,
            "peak_over_spiral_wavelength": curve.peak.map(|x| x / sp.pitch()),
            "width_over_de_broglie": curve.width.map(|w| w / sp.de_broglie),
            "response_at_3_de_broglie": at_three,
            "curve": to_value(&curve)?,
        }),
    })
}

fn spectrum(sc: &Scenario, out: &Path) -> Result<Outcome> {
    let cfg = &sc.config;
    let sec = cfg.spectrum;
    let gradient = match sec.gradient {
        Some(k) => k,
        None => {
            let m_e = sc.params.effective_mass(sc.m_hat_z)?;
            let omega = sec.omega_scaled * m_e * sc.params.c_light * sc.params.c_light / sc.params.hbar;
            gradient_for_frequency(&sc.params, sc.m_hat_z, omega)?
        }
    };
    let s = run_linear_field_spectrum(&sc.params, sc.m_hat_z, gradient, sec.levels, sec.rule, &cfg.integrator)?;
    let unit = s.reference_spacing;
    write_csv(
        &out.join("levels.csv"),
        &["n", "energy", "energy_over_hbar_omega"],
        s.levels.iter().enumerate().map(|(i, e)| vec![(i + 1) as f64, *e, e / unit]),
    )?;
    write_csv(
        &out.join("spacings.csv"),
        &["n", "spacing", "spacing_over_hbar_omega"],
        s.spacings.iter().enumerate().map(|(i, d)| vec![(i + 1) as f64, *d, d / unit]),
    )?;
    write_csv(
        &out.join("phase_integral.csv"),
        &["energy", "phase"],
        s.grid_energies.iter().zip(&s.grid_phases).map(|(e, p)| vec![*e, *p]),
    )?;
    let n: Vec<f64> = (1..=s.levels.len()).map(|i| i as f64).collect();
    let scaled: Vec<f64> = s.levels.iter().map(|e| e / unit).collect();
    write_plot(&out.join("levels.dat"), &["n", "E_n / (hbar omega)"], &n, &scaled)?;
    Ok(Outcome {
        checks: vec![
            Check::at_most("max_spacing_error", s.max_spacing_error, sec.spacing_tolerance),
            Check::at_most("spacing_spread", s.spacing_spread, sec.spacing_tolerance),
        ],
        results: json!({ "spectrum": to_value(&s)? }),
    })
}

fn filter(sc: &Scenario, out: &Path, seed: u64) -> Result<Outcome> {
    let sec = &sc.config.filter;
    let energies = log_grid(sec.energy_min_ev, sec.energy_max_ev, sec.energy_points);
    let geometry = sec.geometry();
    let mut curves = Vec::new();
    for &model in &sec.models {
        curves.push(run_filter_transmission(
            &sc.params,
            sc.m_hat_z,
            &geometry,
            &energies,
            sec.n_samples,
            seed,
            model,
        )?);
    }
    let mut header = vec!["energy_ev".to_string()];
    for c in &curves {
        header.push(format!("transmission_{}", c.model.name()));
        header.push(format!("std_error_{}", c.model.name()));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = energies.iter().enumerate().map(|(i, e)| {
        let mut row = vec![*e];
        for c in &curves {
            row.push(c.transmission[i]);
            row.push(c.std_error[i]);
        }
        row
    });
    write_csv(&out.join("transmission.csv"), &header, rows)?;
    let mut checks = Vec::new();
    for c in &curves {
        let comment = format!("energy (eV) vs transmission, {} model", c.model.name());
        write_plot(&out.join(format!("transmission_{}.dat", c.model.name())), &[&comment], &energies, &c.transmission)?;
        match c.model {
            ElectronModel::FreeSpiral => {
                let cutoff = c.cutoff_energy_ev.unwrap_or(f64::NAN);
                let below = energies.iter().zip(&c.passed).filter(|(e, _)| **e < cutoff).all(|(_, n)| *n == 0);
                let above = energies.iter().zip(&c.transmission).filter(|(e, _)| **e > cutoff).all(|(_, t)| *t > 0.0);
                checks.push(Check::holds("free_spiral_zero_below_cutoff", below));
                checks.push(Check::holds("free_spiral_positive_above_cutoff", above));
            }
            ElectronModel::PointClassical => {
                checks.push(Check::holds("point_classical_flat", c.passed.windows(2).all(|w| w[0] == w[1])));
            }
            ElectronModel::DiffractionBaseline => {
                checks.push(Check::holds(
                    "diffraction_baseline_monotone",
                    c.transmission.windows(2).all(|w| w[1] >= w[0]),
                ));
            }
        }
    }
    Ok(Outcome {
        checks,
        results: json!({
            "open_fraction": geometry.open_fraction(),
            "curves": to_value(&curves)?,
        }),
    })
}

fn phase(sc: &Scenario, out: &Path) -> Result<Outcome> {
    let sec = sc.config.phase;
    if !(sec.distance_pitches >= 0.0) || sec.points < 2 {
        return Err(Error::Config("phase: need distance_pitches >= 0 and points >= 2".into()));
    }
    let sp = sc.params.spiral_params(sc.m_hat_z, sc.v_z)?;
    let distance = sec.distance_pitches * sp.pitch().abs();
    let table = linear_sweep(0.0, distance, sec.points)
        .into_iter()
        .map(|l| phase_comparison(&sc.params, sc.m_hat_z, sc.v_z, l))
        .collect::<Result<Vec<_>>>()?;
    write_csv(
        &out.join("phase.csv"),
        &["distance", "free_phase", "quasiclassical_phase"],
        table.iter().map(|c| vec![c.distance, c.free_phase, c.quasiclassical_phase]),
    )?;
    let last = table[table.len() - 1];
    let mut checks = Vec::new();
    let quantized = sc.params.is_quantized(sc.m_hat_z);
    if quantized {
        checks.push(Check::at_most("ratio_offset_from_half", (last.ratio.abs() - 0.5).abs(), 1e-12));
        checks.push(Check::at_most("half_turn_ratio_offset_from_one", (last.half_turn_ratio.abs() - 1.0).abs(), 1e-12));
    }
    Ok(Outcome { checks, results: json!({ "quantized": quantized, "comparison": to_value(&last)? }) })
}
