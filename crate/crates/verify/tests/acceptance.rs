//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! The bounds below are pinned here and compared with the ones the suite
//! applies, so a loosened bound in the library fails this target as well.

use std::process::ExitCode;

use freespiral::cli::verify::{run_suite, SuiteOptions};
use freespiral::cli::Relation;

/// (criterion, check, relation, bound)
const PINNED: &[(u8, &str, Relation, f64)] = &[
    (1, "radius_error", Relation::AtMost, 1e-6),
    (1, "omega_error", Relation::AtMost, 1e-6),
    (1, "pitch_error", Relation::AtMost, 1e-6),
    (1, "runtime_s", Relation::AtMost, 10.0),
    (2, "max_relative_offset", Relation::AtMost, 1e-12),
    (3, "speed_drift", Relation::AtMost, 1e-6),
    (3, "m_dot_v_drift", Relation::AtMost, 1e-6),
    (3, "momentum_drift", Relation::AtMost, 1e-6),
    (3, "angular_momentum_drift", Relation::AtMost, 1e-6),
    (3, "spin_norm_offset", Relation::AtMost, 1e-12),
    (4, "max_relative_offset", Relation::AtMost, 1e-8),
    (5, "error_ratio_on_halving_dt", Relation::AtLeast, 14.0),
    (6, "acceleration_offset_at_200_radii", Relation::AtMost, 0.01),
    (6, "acceleration_offset_at_1000_radii", Relation::AtMost, 0.01),
    (7, "peak_offset_from_de_broglie", Relation::AtMost, 0.05),
    (7, "peak_over_response_at_3_de_broglie", Relation::AtLeast, 10.0),
    (8, "weak_max_spacing_error", Relation::AtMost, 0.01),
    (8, "strong_spacing_spread", Relation::AtMost, 0.01),
    (9, "closed_form_offset_from_hbar_over_16", Relation::AtMost, 1e-12),
    (9, "measured_offset", Relation::AtMost, 1e-6),
    (10, "cutoff_inside_energy_grid", Relation::Holds, 1.0),
    (10, "free_spiral_zero_below_cutoff", Relation::Holds, 1.0),
    (10, "free_spiral_positive_above_cutoff", Relation::Holds, 1.0),
    (10, "transition_width_grid_points", Relation::AtMost, 1.0),
    (10, "point_classical_flat", Relation::Holds, 1.0),
    (10, "diffraction_baseline_monotone", Relation::Holds, 1.0),
    (10, "diffraction_baseline_largest_step_fraction", Relation::AtMost, 0.5),
    (10, "runtime_s", Relation::AtMost, 60.0),
    (11, "identical_files", Relation::Holds, 1.0),
];

fn main() -> ExitCode {
    let outcomes = run_suite(&[], &SuiteOptions::default());
    let mut failed = 0;
    for o in &outcomes {
        let pinned: Vec<_> = PINNED.iter().filter(|p| p.0 == o.id).collect();
        let mismatch = pinned.len() != o.checks.len()
            || pinned.iter().zip(&o.checks).any(|(p, c)| p.1 != c.name || p.2 != c.relation || p.3 != c.bound);
        if mismatch {
            println!("[FAIL] {:>2} bounds differ from the pinned table: {:?}", o.id, o.checks);
        } else {
            println!("{}", o.line());
        }
        if mismatch || !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {} failed", outcomes.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
