//! Classical electron model with intrinsic angular momentum.
//!
//! The field momentum of a spinning charged body has a component along its
//! symmetry axis, so a force-free model moves along a helix ("free spiral")
//! rather than a straight line. This crate provides the closed forms of that
//! motion ([`model`]), an integrator for the full equations with
//! conservation monitors ([`dynamics`]), and scripted numerical experiments
//! ([`experiments`]) that drive the `freespiral` command-line tool.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod units;

pub use error::{Error, Result};
pub use model::{ModelParams, SpinSign, SpiralParams};
