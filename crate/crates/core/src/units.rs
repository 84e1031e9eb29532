//! Physical constants in CGS-Gaussian units (9 significant digits).
//!
//! Field quantities follow the Gaussian convention: charge in statcoulomb,
//! field strength in statvolt/cm, so `e * E` is a force in dyn.

/// Electron rest mass, g.
pub const ELECTRON_MASS_G: f64 = 9.10938370e-28;
/// Reduced Planck constant, erg s.
pub const HBAR_ERG_S: f64 = 1.05457182e-27;
/// Elementary charge, statC.
pub const ELEMENTARY_CHARGE_STATC: f64 = 4.80320471e-10;
/// Speed of light, cm/s.
pub const SPEED_OF_LIGHT_CM_S: f64 = 2.99792458e10;
/// One electronvolt, erg.
pub const ELECTRONVOLT_ERG: f64 = 1.60217663e-12;

pub fn ev_to_erg(ev: f64) -> f64 {
    ev * ELECTRONVOLT_ERG
}

pub fn erg_to_ev(erg: f64) -> f64 {
    erg / ELECTRONVOLT_ERG
}

/// Nonrelativistic speed of a particle of mass `mass_g` with kinetic energy `energy_ev`.
pub fn speed_from_energy(energy_ev: f64, mass_g: f64) -> f64 {
    (2.0 * ev_to_erg(energy_ev) / mass_g).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slow_electron_de_broglie_wavelength() {
        // lambda[nm] ~ 1.226 / sqrt(E[eV])
        let v = speed_from_energy(1e-2, ELECTRON_MASS_G);
        let lambda_cm = 2.0 * std::f64::consts::PI * HBAR_ERG_S / (ELECTRON_MASS_G * v);
        assert!((lambda_cm - 1.2264e-6).abs() < 1e-9, "{lambda_cm}");
    }

    #[test]
    fn ev_round_trip() {
        assert!((erg_to_ev(ev_to_erg(0.37)) - 0.37).abs() < 1e-15);
    }
}
