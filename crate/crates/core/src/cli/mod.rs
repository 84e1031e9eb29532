//! Scenario files, the commands behind the `freespiral` binary and the
//! built-in verification suite.

pub mod commands;
pub mod config;
pub mod verify;

use serde::Serialize;

use crate::error::Error;

pub use commands::{run_command, Summary};
pub use config::{Experiment, Scenario, ScenarioConfig, FORMAT};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// The run completed but a check failed.
    pub const CHECK_FAILED: i32 = 1;
    /// Unreadable or invalid configuration, or a usage error.
    pub const CONFIG: i32 = 2;
    /// The numerical method failed.
    pub const NUMERIC: i32 = 3;
}

/// Exit code for an error that aborted a run.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() || matches!(e, Error::Degenerate(_)) {
        exit::NUMERIC
    } else {
        exit::CONFIG
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Holds,
}

/// One pass/fail comparison of a measured value with a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: Relation::AtMost, pass: value <= bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: Relation::AtLeast, pass: value >= bound }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, bound: 1.0, relation: Relation::Holds, pass: ok }
    }

    /// Bound made `factor` times stricter; boolean checks are unchanged.
    pub fn tightened(self, factor: f64) -> Self {
        match self.relation {
            Relation::AtMost => Check::at_most(self.name, self.value, self.bound / factor),
            Relation::AtLeast => Check::at_least(self.name, self.value, self.bound * factor),
            Relation::Holds => self,
        }
    }

    pub fn describe(&self) -> String {
        match self.relation {
            Relation::AtMost => format!("{} = {:.3e} <= {:.3e}", self.name, self.value, self.bound),
            Relation::AtLeast => format!("{} = {:.3e} >= {:.3e}", self.name, self.value, self.bound),
            Relation::Holds => format!("{}: {}", self.name, if self.pass { "yes" } else { "no" }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_never_passes() {
        assert!(!Check::at_most("x", f64::NAN, 1.0).pass);
        assert!(!Check::at_least("x", f64::NAN, 1.0).pass);
    }

    #[test]
    fn tightening_moves_the_bound() {
        assert!(!Check::at_most("x", 1e-7, 1e-6).tightened(100.0).pass);
        assert!(!Check::at_least("x", 15.0, 14.0).tightened(100.0).pass);
        assert!(Check::holds("x", true).tightened(100.0).pass);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), exit::CONFIG);
        assert_eq!(exit_code(&Error::Domain("x".into())), exit::CONFIG);
        assert_eq!(exit_code(&Error::Instability { t: 0.0, reason: "x".into() }), exit::NUMERIC);
        assert_eq!(exit_code(&Error::NonMonotone { energy: 1.0 }), exit::NUMERIC);
    }
}
