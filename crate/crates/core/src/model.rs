//! Model parameters and the closed-form free-spiral relations.
//!
//! The model is a charged body with rest electromagnetic mass `m0`, a shape
//! parameter `kappa` (fraction of the rest field energy carried by field
//! components parallel to the symmetry axis) and an intrinsic angular
//! momentum `M0 m_hat`. Everything here is nonrelativistic.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// Tolerance on |m_hat| - 1 accepted by the closed forms.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Smallest kappa for which the axial spin projection can be quantized.
pub const KAPPA_QUANTIZABLE_MIN: f64 = 5.0 / 11.0;

/// Physical constants of one electron model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Rest electromagnetic mass U0/c^2.
    pub m0: f64,
    /// Shape parameter, 1/3 < kappa < 1.
    pub kappa: f64,
    /// Magnitude M0 of the intrinsic angular momentum.
    pub ang_momentum: f64,
    pub charge: f64,
    pub c_light: f64,
    /// Only used for comparisons with quantum scales.
    pub hbar: f64,
    /// Largest admissible |v|/c.
    #[serde(default = "default_speed_ceiling")]
    pub speed_ceiling: f64,
}

fn default_speed_ceiling() -> f64 {
    0.1
}

impl Default for ModelParams {
    /// Natural units: c = hbar = m0 = M0 = e = 1, kappa = 1/2.
    fn default() -> Self {
        ModelParams {
            m0: 1.0,
            kappa: 0.5,
            ang_momentum: 1.0,
            charge: 1.0,
            c_light: 1.0,
            hbar: 1.0,
            speed_ceiling: default_speed_ceiling(),
        }
    }
}

/// Sign choice of the quantized axial spin projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinSign {
    #[default]
    Plus,
    Minus,
}

impl SpinSign {
    pub fn value(self) -> f64 {
        match self {
            SpinSign::Plus => 1.0,
            SpinSign::Minus => -1.0,
        }
    }
}

/// Outcome of [`ModelParams::validate`]; valid iff no violations.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Domain(self.violations.join("; ")))
        }
    }
}

/// Closed-form descriptors of the free spiral for given (m_hat_z, v_z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpiralParams {
    pub g: f64,
    /// R_s, always non-negative.
    pub radius: f64,
    /// Omega_s, carries the sign of m_hat_z.
    pub omega: f64,
    /// lambda_s = v_z 2 pi / Omega_s (signed; its magnitude is the pitch).
    pub wavelength: f64,
    pub effective_mass: f64,
    /// lambda_0 = 2 pi hbar / (m_e v_z), taken positive.
    pub de_broglie: f64,
    pub m_hat_z: f64,
    pub v_z: f64,
}

impl SpiralParams {
    /// Steady transverse speed |v_perp| = |m_hat_z v_z| sqrt(1 - m_hat_z^2) / (G + m_hat_z^2).
    pub fn transverse_speed(&self) -> f64 {
        let mz2 = self.m_hat_z * self.m_hat_z;
        (self.m_hat_z * self.v_z).abs() * (1.0 - mz2).max(0.0).sqrt() / (self.g + mz2)
    }

    pub fn pitch(&self) -> f64 {
        self.wavelength.abs()
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega.abs()
    }

    /// |lambda_s| / lambda_0.
    pub fn wavelength_ratio(&self) -> f64 {
        self.pitch() / self.de_broglie
    }

    /// R_s / lambda_0.
    pub fn radius_ratio(&self) -> f64 {
        self.radius / self.de_broglie
    }
}

/// G = 2(1 - kappa)/(3 kappa - 1), defined for 1/3 < kappa < 1.
pub fn shape_factor(kappa: f64) -> Result<f64> {
    if !(kappa > 1.0 / 3.0 && kappa < 1.0) {
        return Err(Error::Domain(format!("kappa = {kappa} outside (1/3, 1)")));
    }
    Ok(2.0 * (1.0 - kappa) / (3.0 * kappa - 1.0))
}

impl ModelParams {
    /// Physical (CGS) electron with the axial spin projection quantized.
    ///
    /// `m0` is chosen so that the effective mass at the quantized projection
    /// equals the electron mass, and `M0 = hbar / (2 |m_hat_z|)`.
    pub fn physical_electron(kappa: f64) -> Result<(ModelParams, f64)> {
        let g = shape_factor(kappa)?;
        let base = ModelParams {
            m0: 1.0,
            kappa,
            ang_momentum: 1.0,
            charge: units::ELEMENTARY_CHARGE_STATC,
            c_light: units::SPEED_OF_LIGHT_CM_S,
            hbar: units::HBAR_ERG_S,
            speed_ceiling: default_speed_ceiling(),
        };
        let (quantized, m_hat_z) = base.with_quantized_spin(SpinSign::Plus)?;
        let mz2 = m_hat_z * m_hat_z;
        let m0 = units::ELECTRON_MASS_G * (g + mz2) / ((1.0 + kappa) * g);
        Ok((ModelParams { m0, ..quantized }, m_hat_z))
    }

    /// 3 kappa - 1, the anisotropy coefficient of the momentum.
    pub fn anisotropy(&self) -> f64 {
        3.0 * self.kappa - 1.0
    }

    pub fn g(&self) -> Result<f64> {
        shape_factor(self.kappa)
    }

    pub fn validate(&self, enforce_quantization: bool) -> ValidationReport {
        let mut violations = Vec::new();
        let positive = [
            ("m0", self.m0),
            ("M0", self.ang_momentum),
            ("c", self.c_light),
            ("hbar", self.hbar),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                violations.push(format!("{name} must be finite and positive (got {value})"));
            }
        }
        if !self.charge.is_finite() {
            violations.push(format!("charge must be finite (got {})", self.charge));
        }
        if !(self.speed_ceiling > 0.0 && self.speed_ceiling <= 1.0) {
            violations.push(format!("speed ceiling must lie in (0, 1] (got {})", self.speed_ceiling));
        }
        let k = self.kappa;
        if !k.is_finite() {
            violations.push(format!("kappa must be finite (got {k})"));
        } else if (3.0 * k - 1.0).abs() < 1e-12 {
            violations.push("G singular: kappa = 1/3 makes 3 kappa - 1 vanish".to_string());
        } else if k <= 1.0 / 3.0 || k >= 1.0 {
            violations.push(format!("kappa = {k} outside (1/3, 1): G not finite and positive"));
        } else if enforce_quantization && k < KAPPA_QUANTIZABLE_MIN {
            let g = 2.0 * (1.0 - k) / (3.0 * k - 1.0);
            violations.push(format!(
                "G/3 > 1: G({k}) = {g} so the quantized m_hat_z^2 = G/3 exceeds 1"
            ));
        }
        ValidationReport { violations }
    }

    pub(crate) fn check_speed(&self, speed: f64) -> Result<()> {
        if !speed.is_finite() || speed >= self.speed_ceiling * self.c_light {
            return Err(Error::Precondition(format!(
                "|v| = {speed} is not below {} c",
                self.speed_ceiling
            )));
        }
        Ok(())
    }

    /// Field momentum P = m0 [(1 + kappa) v - (3 kappa - 1) m_hat (m_hat . v)].
    pub fn momentum(&self, v: &Vector3<f64>, m_hat: &Vector3<f64>) -> Result<Vector3<f64>> {
        self.check_speed(v.norm())?;
        if (m_hat.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Precondition(format!("|m_hat| = {} is not 1", m_hat.norm())));
        }
        Ok(self.momentum_unchecked(v, m_hat))
    }

    #[inline]
    pub(crate) fn momentum_unchecked(&self, v: &Vector3<f64>, m_hat: &Vector3<f64>) -> Vector3<f64> {
        self.m0 * ((1.0 + self.kappa) * v - self.anisotropy() * m_hat.dot(v) * m_hat)
    }

    /// m_e = m0 (1 + kappa) G / (G + m_hat_z^2).
    pub fn effective_mass(&self, m_hat_z: f64) -> Result<f64> {
        let g = self.g()?;
        if !(m_hat_z.abs() <= 1.0) {
            return Err(Error::Domain(format!("|m_hat_z| = {} exceeds 1", m_hat_z.abs())));
        }
        Ok(self.m0 * (1.0 + self.kappa) * g / (g + m_hat_z * m_hat_z))
    }

    pub fn spiral_params(&self, m_hat_z: f64, v_z: f64) -> Result<SpiralParams> {
        let g = self.g()?;
        if !(m_hat_z != 0.0 && m_hat_z.abs() <= 1.0) {
            return Err(Error::Precondition(format!(
                "free spiral needs 0 < |m_hat_z| <= 1 (got {m_hat_z})"
            )));
        }
        if v_z == 0.0 || !v_z.is_finite() {
            return Err(Error::Precondition("free spiral needs v_z != 0".into()));
        }
        self.check_speed(v_z.abs())?;
        let mz2 = m_hat_z * m_hat_z;
        let m_e = self.m0 * (1.0 + self.kappa) * g / (g + mz2);
        let radius = self.ang_momentum * (1.0 - mz2).max(0.0).sqrt() / (m_e * v_z.abs());
        let omega = m_e * m_hat_z * v_z * v_z / (self.ang_momentum * (g + mz2));
        Ok(SpiralParams {
            g,
            radius,
            omega,
            wavelength: v_z * 2.0 * PI / omega,
            effective_mass: m_e,
            de_broglie: 2.0 * PI * self.hbar / (m_e * v_z.abs()),
            m_hat_z,
            v_z,
        })
    }

    /// Quantized axial projection: m_hat_z = sign sqrt(G/3) and M0 = hbar / (2 |m_hat_z|),
    /// so that M0 m_hat_z = sign hbar / 2.
    pub fn quantized_spin_projection(&self, sign: SpinSign) -> Result<(f64, f64)> {
        let g = self.g()?;
        // G(5/11) = 3 up to rounding
        let ratio = if g / 3.0 > 1.0 && g / 3.0 <= 1.0 + 1e-12 { 1.0 } else { g / 3.0 };
        if ratio > 1.0 {
            return Err(Error::Domain(format!(
                "G/3 = {} > 1 for kappa = {}; quantization needs kappa >= 5/11",
                g / 3.0,
                self.kappa
            )));
        }
        let m_hat_z = sign.value() * ratio.sqrt();
        Ok((m_hat_z, self.hbar / (2.0 * m_hat_z.abs())))
    }

    /// Copy of `self` with M0 replaced by its quantized value; also returns m_hat_z.
    pub fn with_quantized_spin(&self, sign: SpinSign) -> Result<(ModelParams, f64)> {
        let (m_hat_z, m0_big) = self.quantized_spin_projection(sign)?;
        Ok((ModelParams { ang_momentum: m0_big, ..*self }, m_hat_z))
    }

    /// Whether |M0 m_hat_z| equals hbar/2 and m_hat_z^2 equals G/3.
    pub fn is_quantized(&self, m_hat_z: f64) -> bool {
        let Ok(g) = self.g() else { return false };
        let spin_ok = ((self.ang_momentum * m_hat_z).abs() - 0.5 * self.hbar).abs() <= 1e-10 * self.hbar;
        let proj_ok = (m_hat_z * m_hat_z - g / 3.0).abs() <= 1e-10;
        spin_ok && proj_ok
    }

    /// Formal products Delta p Delta x = m_e |v_perp| R_s along x and y.
    pub fn uncertainty_product(&self, m_hat_z: f64, v_z: f64) -> Result<(f64, f64)> {
        let sp = self.spiral_params(m_hat_z, v_z)?;
        let product = sp.effective_mass * sp.transverse_speed() * sp.radius;
        Ok((product, product))
    }

    /// lambda_0 = 2 pi hbar / (m_e |v_z|).
    pub fn de_broglie_wavelength(&self, m_hat_z: f64, v_z: f64) -> Result<f64> {
        if v_z == 0.0 || !v_z.is_finite() {
            return Err(Error::Precondition("de Broglie wavelength needs v_z != 0".into()));
        }
        let m_e = self.effective_mass(m_hat_z)?;
        Ok(2.0 * PI * self.hbar / (m_e * v_z.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn kappa(k: f64) -> ModelParams {
        ModelParams { kappa: k, ..ModelParams::default() }
    }

    #[test]
    fn validation_bounds() {
        assert!(kappa(0.5).validate(false).is_valid());
        let r = kappa(1.0 / 3.0).validate(false);
        assert!(r.violations[0].contains("G singular"), "{r:?}");
        let r = kappa(0.4).validate(true);
        assert!(r.violations[0].contains("G/3 > 1"), "{r:?}");
        assert!(kappa(0.4).validate(false).is_valid());
        assert!(!kappa(0.2).validate(false).is_valid());
        let bad = ModelParams { m0: -1.0, hbar: 0.0, ..ModelParams::default() };
        assert_eq!(bad.validate(false).violations.len(), 2);
    }

    #[test]
    fn shape_factor_values() {
        assert_relative_eq!(shape_factor(0.5).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(shape_factor(5.0 / 11.0).unwrap(), 3.0, max_relative = 1e-14);
        assert!(shape_factor(1.0 - 1e-12).unwrap() < 1e-11);
        assert!(shape_factor(1.0 / 3.0).is_err());
        assert!(shape_factor(1.0).is_err());
    }

    #[test]
    fn momentum_special_directions() {
        let p = ModelParams::default();
        let m = Vector3::z();
        let v_perp = Vector3::new(0.02, -0.01, 0.0);
        assert_relative_eq!(p.momentum(&v_perp, &m).unwrap(), 1.5 * v_perp, max_relative = 1e-15);
        let v_par = Vector3::new(0.0, 0.0, 0.03);
        assert_relative_eq!(p.momentum(&v_par, &m).unwrap(), 2.0 * 0.5 * v_par, max_relative = 1e-15);
        let v = Vector3::new(0.0, 0.1, 0.1);
        let big = ModelParams { speed_ceiling: 0.5, ..p };
        let pm = big.momentum(&v, &m).unwrap();
        assert_relative_eq!(pm, Vector3::new(0.0, 0.15, 0.10), max_relative = 1e-14);
        // default ceiling is 0.1 c
        assert!(p.momentum(&v, &m).is_err());
        assert!(p.momentum(&v_par, &Vector3::new(0.0, 0.0, 1.1)).is_err());
    }

    #[test]
    fn effective_mass_values() {
        let p = ModelParams::default();
        assert_relative_eq!(p.effective_mass(0.0).unwrap(), 1.5);
        assert_relative_eq!(p.effective_mass((2.0f64 / 3.0).sqrt()).unwrap(), 1.125, max_relative = 1e-14);
        assert_relative_eq!(p.effective_mass(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert!(kappa(0.3).effective_mass(0.5).is_err());
    }

    #[test]
    fn spiral_degenerate_and_signs() {
        let p = ModelParams::default();
        let sp = p.spiral_params(1.0, 0.01).unwrap();
        assert_eq!(sp.radius, 0.0);
        let plus = p.spiral_params(0.6, 0.01).unwrap();
        let minus = p.spiral_params(-0.6, 0.01).unwrap();
        assert!(plus.omega > 0.0 && minus.omega < 0.0);
        assert_eq!(plus.radius, minus.radius);
        assert!(p.spiral_params(0.0, 0.01).is_err());
        assert!(p.spiral_params(0.5, 0.0).is_err());
        assert!(p.spiral_params(0.5, 0.2).is_err());
    }

    #[test]
    fn quantized_projection_values() {
        let p = ModelParams::default();
        let (mz, m_big) = p.quantized_spin_projection(SpinSign::Plus).unwrap();
        assert_relative_eq!(mz, 0.816496580927726, max_relative = 1e-14);
        assert_relative_eq!(m_big, 0.6123724356957945, max_relative = 1e-14);
        let (mz_m, m_big_m) = p.quantized_spin_projection(SpinSign::Minus).unwrap();
        assert_eq!(mz_m, -mz);
        assert_relative_eq!(m_big_m * mz_m, -0.5, max_relative = 1e-15);
        let edge = kappa(KAPPA_QUANTIZABLE_MIN);
        let (mz, m_big) = edge.quantized_spin_projection(SpinSign::Plus).unwrap();
        assert_relative_eq!(mz, 1.0, max_relative = 1e-14);
        assert_relative_eq!(m_big, 0.5, max_relative = 1e-14);
        assert!(kappa(0.4).quantized_spin_projection(SpinSign::Plus).is_err());
    }

    #[test]
    fn quantized_identities() {
        let (q, mz) = ModelParams::default().with_quantized_spin(SpinSign::Plus).unwrap();
        assert!(q.is_quantized(mz));
        let sp = q.spiral_params(mz, 0.01).unwrap();
        assert_relative_eq!(sp.wavelength_ratio(), 2.0, max_relative = 1e-12);
        // R_s / lambda_0 = sqrt(1 - mz^2) / (4 pi mz)
        let expect = (1.0 - mz * mz).sqrt() / (4.0 * PI * mz);
        assert_relative_eq!(sp.radius_ratio(), expect, max_relative = 1e-12);
        let (px, py) = q.uncertainty_product(mz, 0.01).unwrap();
        assert_relative_eq!(px, 1.0 / 16.0, max_relative = 1e-12);
        assert_eq!(px, py);
        assert_eq!(q.uncertainty_product(1.0, 0.01).unwrap().0, 0.0);
    }

    #[test]
    fn de_broglie_scaling() {
        let p = ModelParams::default();
        let a = p.de_broglie_wavelength(0.5, 0.01).unwrap();
        let b = p.de_broglie_wavelength(0.5, 0.02).unwrap();
        assert_relative_eq!(a, 2.0 * b, max_relative = 1e-15);
        assert!(p.de_broglie_wavelength(0.5, 0.0).is_err());
    }

    #[test]
    fn physical_electron_matches_slow_electron_wavelength() {
        let (p, mz) = ModelParams::physical_electron(0.5).unwrap();
        assert_relative_eq!(p.effective_mass(mz).unwrap(), units::ELECTRON_MASS_G, max_relative = 1e-14);
        let v = units::speed_from_energy(1e-2, units::ELECTRON_MASS_G);
        let lambda = p.de_broglie_wavelength(mz, v).unwrap();
        assert!((lambda - 1.23e-6).abs() < 0.01e-6, "{lambda}");
        assert!(lambda > 1e-6);
    }
}
