//! Numerical experiments built on the model and the integrator.
//!
//! Each experiment is a pure function of its inputs. Sweeps and Monte Carlo
//! samples run in parallel on the current rayon pool; results are reduced in
//! a fixed order so they do not depend on the thread count.

pub mod filter;
pub mod free_spiral;
pub mod helix_fit;
pub mod output;
pub mod phase;
pub mod resonance;
pub mod spectrum;

pub use filter::{run_filter_transmission, ElectronModel, FilterGeometry, TransmissionCurve};
pub use free_spiral::{run_free_spiral, FreeSpiralRun};
pub use helix_fit::{fit_helix, HelixFit};
pub use phase::{phase_comparison, PhaseComparison};
pub use resonance::{run_periodic_field_resonance, Polarization, ResonanceCurve, ResonanceSweep};
pub use spectrum::{run_linear_field_spectrum, QuantizationRule, SpectrumResult};
