//! Scenario files.
//!
//! A scenario is a TOML document (dialect tag `toml-v1`) with a few top-level
//! keys and one table per concern:
//!
//! ```toml
//! format = "toml-v1"      # optional; rejected if it names another dialect
//! experiment = "spiral"   # optional; must match the subcommand
//! seed = 7
//! out = "runs/spiral"
//!
//! [model]                 # preset, explicit constants, spin projection
//! [initial]               # axial speed and azimuth of the starting spiral
//! [field]                 # kind = "zero" | "uniform" | "linear_z" | "periodic_z" | "periodic_x"
//! [integrator]
//! [tolerances]
//! [simulate] / [spiral] / [resonance] / [spectrum] / [filter] / [phase]
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ConservationTolerances, FieldSpec, IntegratorConfig, State, Vec3};
use crate::error::{Error, Result};
use crate::experiments::{ElectronModel, FilterGeometry, Polarization, QuantizationRule};
use crate::model::{ModelParams, SpinSign};

/// Dialect tag written to every summary.
pub const FORMAT: &str = "toml-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    Spiral,
    Resonance,
    Spectrum,
    Filter,
    Phase,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Spiral => "spiral",
            Experiment::Resonance => "resonance",
            Experiment::Spectrum => "spectrum",
            Experiment::Filter => "filter",
            Experiment::Phase => "phase",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Starting constants before explicit overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// c = hbar = m0 = M0 = e = 1.
    #[default]
    Natural,
    /// CGS electron whose effective mass is the electron mass; spin quantized.
    Physical,
}

/// Model constants. Explicit values override the preset; `quantize` then
/// replaces M0 and fixes m_hat_z. Without `quantize` or `m_hat_z` the
/// projection is quantized with the + sign.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ang_momentum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub charge: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_light: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_ceiling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantize: Option<SpinSign>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_hat_z: Option<f64>,
}

impl ModelSection {
    /// Resolves to validated parameters and the spin projection.
    pub fn resolve(&self) -> Result<(ModelParams, f64)> {
        let kappa = self.kappa.unwrap_or(0.5);
        let preset = self.preset.unwrap_or_default();
        let mut p = match preset {
            Preset::Natural => ModelParams { kappa, ..ModelParams::default() },
            Preset::Physical => ModelParams::physical_electron(kappa)?.0,
        };
        let overrides = [
            (&mut p.m0, self.m0),
            (&mut p.ang_momentum, self.ang_momentum),
            (&mut p.charge, self.charge),
            (&mut p.c_light, self.c_light),
            (&mut p.hbar, self.hbar),
            (&mut p.speed_ceiling, self.speed_ceiling),
        ];
        for (slot, value) in overrides {
            if let Some(v) = value {
                *slot = v;
            }
        }
        let quantize = match (self.quantize, self.m_hat_z) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("model: give either quantize or m_hat_z, not both".into()))
            }
            (Some(sign), None) => Some(sign),
            (None, Some(_)) => None,
            (None, None) => Some(SpinSign::Plus),
        };
        p.validate(quantize.is_some()).into_result().map_err(|e| Error::Config(format!("model: {e}")))?;
        let (p, m_hat_z) = match quantize {
            Some(sign) => p.with_quantized_spin(sign)?,
            None => (p, self.m_hat_z.unwrap_or_default()),
        };
        if !(m_hat_z.abs() <= 1.0) {
            return Err(Error::Config(format!("model: |m_hat_z| = {} exceeds 1", m_hat_z.abs())));
        }
        Ok((p, m_hat_z))
    }

    /// Every constant spelled out, so the section resolves without a preset.
    pub fn explicit(p: &ModelParams, m_hat_z: f64) -> Self {
        ModelSection {
            preset: None,
            kappa: Some(p.kappa),
            m0: Some(p.m0),
            ang_momentum: Some(p.ang_momentum),
            charge: Some(p.charge),
            c_light: Some(p.c_light),
            hbar: Some(p.hbar),
            speed_ceiling: Some(p.speed_ceiling),
            quantize: None,
            m_hat_z: Some(m_hat_z),
        }
    }
}

/// Explicit starting state (simulate only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub r: [f64; 3],
    pub v: [f64; 3],
    pub m_hat: [f64; 3],
}

/// The free spiral everything starts from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    /// Axial speed as a fraction of c.
    pub v_z_over_c: f64,
    /// Azimuth of the transverse spin component.
    pub phase: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSection>,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection { v_z_over_c: 0.01, phase: 0.0, state: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Run length in free-oscillation periods (ignored when integrator.max_time is set).
    pub periods: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection { periods: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpiralSection {
    pub periods: f64,
    /// Bound on the relative deviation of the fitted R, Omega and pitch.
    pub fit_tolerance: f64,
    /// Bound on |pitch / lambda_0 - 2| for a quantized model.
    pub ratio_tolerance: f64,
}

impl Default for SpiralSection {
    fn default() -> Self {
        SpiralSection { periods: 100.0, fit_tolerance: 1e-6, ratio_tolerance: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonanceSection {
    /// Absolute field amplitude; overrides `relative_amplitude`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Amplitude in units of m_e v_z |Omega_s| / e.
    pub relative_amplitude: f64,
    pub polarization: Polarization,
    /// Sweep bounds in units of the de Broglie wavelength.
    pub from: f64,
    pub to: f64,
    pub points: usize,
    /// Interaction length in spiral pitches.
    pub interaction_pitches: f64,
    pub refinements: usize,
    pub refine_points: usize,
    /// Allowed relative offset of the peak from lambda_0.
    pub peak_tolerance: f64,
    /// Required peak response over the response at 3 lambda_0.
    pub min_contrast: f64,
}

impl Default for ResonanceSection {
    fn default() -> Self {
        ResonanceSection {
            amplitude: None,
            relative_amplitude: 1e-6,
            polarization: Polarization::Axial,
            from: 0.5,
            to: 3.0,
            points: 26,
            interaction_pitches: 200.0,
            refinements: 2,
            refine_points: 10,
            peak_tolerance: 0.05,
            min_contrast: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    /// Field gradient; overrides `omega_scaled`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradient: Option<f64>,
    /// Averaged oscillation frequency in units of m_e c^2 / hbar.
    pub omega_scaled: f64,
    pub levels: usize,
    pub rule: QuantizationRule,
    /// Bound on |dE_n - hbar omega| / (hbar omega) and on stdev/mean of dE_n.
    pub spacing_tolerance: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            gradient: None,
            omega_scaled: 1e-6,
            levels: 10,
            rule: QuantizationRule::HalfTurn,
            spacing_tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    /// Lengths in the model's length unit (cm for the physical preset).
    pub hole_diameter: f64,
    pub thickness: f64,
    pub cell_pitch: f64,
    pub divergence: f64,
    pub energy_min_ev: f64,
    pub energy_max_ev: f64,
    pub energy_points: usize,
    pub n_samples: u64,
    pub models: Vec<ElectronModel>,
}

impl Default for FilterSection {
    fn default() -> Self {
        let g = FilterGeometry::default();
        FilterSection {
            hole_diameter: g.hole_diameter,
            thickness: g.thickness,
            cell_pitch: g.cell_pitch,
            divergence: g.divergence,
            energy_min_ev: 1e-3,
            energy_max_ev: 1.0,
            energy_points: 31,
            n_samples: 100_000,
            models: ElectronModel::ALL.to_vec(),
        }
    }
}

impl FilterSection {
    pub fn geometry(&self) -> FilterGeometry {
        FilterGeometry {
            hole_diameter: self.hole_diameter,
            thickness: self.thickness,
            cell_pitch: self.cell_pitch,
            divergence: self.divergence,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Config("filter: n_samples must be at least 1".into()));
        }
        if self.energy_points == 0 {
            return Err(Error::Config("filter: energy_points must be at least 1".into()));
        }
        if !(self.energy_min_ev > 0.0 && self.energy_max_ev >= self.energy_min_ev && self.energy_max_ev.is_finite()) {
            return Err(Error::Config("filter: need 0 < energy_min_ev <= energy_max_ev".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("filter: models is empty".into()));
        }
        self.geometry().validate().map_err(|e| Error::Config(format!("filter: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSection {
    /// Distance in spiral pitches.
    pub distance_pitches: f64,
    /// Points in the phase-versus-distance table.
    pub points: usize,
}

impl Default for PhaseSection {
    fn default() -> Self {
        PhaseSection { distance_pitches: 10.0, points: 11 }
    }
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub model: ModelSection,
    pub initial: InitialSection,
    pub field: FieldSpec,
    pub integrator: IntegratorConfig,
    pub tolerances: ConservationTolerances,
    pub simulate: SimulateSection,
    pub spiral: SpiralSection,
    pub resonance: ResonanceSection,
    pub spectrum: SpectrumSection,
    pub filter: FilterSection,
    pub phase: PhaseSection,
}

/// A scenario with the model resolved and every section checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub params: ModelParams,
    pub m_hat_z: f64,
    /// Axial speed in the model's velocity unit.
    pub v_z: f64,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the dialect and the experiment selector, then resolves the model.
    pub fn resolve(&self, command: Experiment) -> Result<Scenario> {
        if let Some(f) = &self.format {
            if f != FORMAT {
                return Err(Error::Config(format!("unsupported format {f:?} (expected {FORMAT:?})")));
            }
        }
        if let Some(e) = self.experiment {
            if e != command {
                return Err(Error::Config(format!("config is for `{e}` but the command is `{command}`")));
            }
        }
        let (params, m_hat_z) = self.model.resolve()?;
        self.field.validate().map_err(|e| Error::Config(format!("field: {e}")))?;
        self.integrator.validate()?;
        let v_z = self.initial.v_z_over_c * params.c_light;
        if !(v_z.is_finite() && v_z != 0.0) {
            return Err(Error::Config("initial: v_z_over_c must be finite and non-zero".into()));
        }
        if !(self.initial.v_z_over_c.abs() < params.speed_ceiling) {
            return Err(Error::Config(format!(
                "initial: |v_z|/c = {} is not below the speed ceiling {}",
                self.initial.v_z_over_c.abs(),
                params.speed_ceiling
            )));
        }
        if self.initial.state.is_some() && command != Experiment::Simulate {
            return Err(Error::Config("initial.state is only used by simulate".into()));
        }
        if command == Experiment::Filter {
            self.filter.validate()?;
        }
        Ok(Scenario { config: self.clone(), params, m_hat_z, v_z })
    }
}

impl Scenario {
    /// The configuration as it was run: defaults filled in, model constants
    /// explicit, the command recorded. The output directory is left out so
    /// that runs into different directories produce identical files.
    pub fn effective(&self, command: Experiment, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            format: Some(FORMAT.to_string()),
            experiment: Some(command),
            seed: Some(seed),
            out: None,
            model: ModelSection::explicit(&self.params, self.m_hat_z),
            ..self.config.clone()
        }
    }

    /// Starting state: the explicit one if given, else the configured spiral.
    pub fn start(&self) -> Result<State> {
        match self.config.initial.state {
            Some(s) => {
                let m_hat = Vec3::from(s.m_hat);
                if (m_hat.norm() - 1.0).abs() > crate::model::UNIT_TOLERANCE {
                    return Err(Error::Config(format!("initial.state: |m_hat| = {} is not 1", m_hat.norm())));
                }
                Ok(State { t: 0.0, r: Vec3::from(s.r), v: Vec3::from(s.v), m_hat })
            }
            None => crate::dynamics::spiral_initial_conditions(
                &self.params,
                self.m_hat_z,
                self.v_z,
                self.config.initial.phase,
            ),
        }
    }
}
