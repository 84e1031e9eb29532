use std::io::{BufRead, Write};

use serde::Serialize;

use super::{FieldSpec, State, Vec3};
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const CSV_HEADER: &str = "t,x,y,z,vx,vy,vz,mx,my,mz,Px,Py,Pz,Jx,Jy,Jz,s,T";

/// Monitored quantities at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Field momentum P.
    pub momentum: Vec3,
    /// Intrinsic angular momentum M = M0 m_hat.
    pub spin: Vec3,
    /// J = M0 m_hat + r x P.
    pub total_angular_momentum: Vec3,
    pub speed: f64,
    /// s = m_hat . v
    pub axial_speed: f64,
    /// T = P . v / 2
    pub kinetic: f64,
}

impl Diagnostics {
    pub fn of(p: &ModelParams, s: &State) -> Self {
        let momentum = p.momentum_unchecked(&s.v, &s.m_hat);
        let spin = p.ang_momentum * s.m_hat;
        Diagnostics {
            momentum,
            spin,
            total_angular_momentum: spin + s.r.cross(&momentum),
            speed: s.v.norm(),
            axial_speed: s.axial_speed(),
            kinetic: 0.5 * momentum.dot(&s.v),
        }
    }
}

/// Step counters of the run that produced a trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub steps: u64,
    pub rejected: u64,
    /// Largest | |m_hat| - 1 | seen before renormalization.
    pub max_spin_defect: f64,
}

/// Time-ordered samples of one run with their diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ModelParams,
    pub field: FieldSpec,
    pub samples: Vec<State>,
    pub diagnostics: Vec<Diagnostics>,
    pub stats: RunStats,
}

impl Trajectory {
    /// Builds a trajectory from states that are strictly increasing in t.
    pub fn from_samples(params: ModelParams, field: FieldSpec, samples: Vec<State>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Precondition("trajectory samples must be strictly increasing in t".into()));
        }
        let diagnostics = samples.iter().map(|s| Diagnostics::of(&params, s)).collect();
        Ok(Trajectory { params, field, samples, diagnostics, stats: RunStats::default() })
    }

    pub(crate) fn push(&mut self, s: State) {
        self.diagnostics.push(Diagnostics::of(&self.params, &s));
        self.samples.push(s);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for (s, d) in self.samples.iter().zip(&self.diagnostics) {
            let row = [
                s.t, s.r.x, s.r.y, s.r.z, s.v.x, s.v.y, s.v.z, s.m_hat.x, s.m_hat.y, s.m_hat.z,
                d.momentum.x, d.momentum.y, d.momentum.z,
                d.total_angular_momentum.x, d.total_angular_momentum.y, d.total_angular_momentum.z,
                d.axial_speed, d.kinetic,
            ];
            let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads the state columns back from a file written by [`Trajectory::write_csv`].
    pub fn read_csv_states<R: BufRead>(input: R) -> Result<Vec<State>> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != CSV_HEADER {
            return Err(Error::Io(format!("unexpected trajectory header: {header}")));
        }
        let mut states = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let cols = cols.map_err(|e| Error::Io(format!("row {}: {e}", i + 2)))?;
            if cols.len() != 18 {
                return Err(Error::Io(format!("row {}: expected 18 columns, got {}", i + 2, cols.len())));
            }
            states.push(State {
                t: cols[0],
                r: Vec3::new(cols[1], cols[2], cols[3]),
                v: Vec3::new(cols[4], cols[5], cols[6]),
                m_hat: Vec3::new(cols[7], cols[8], cols[9]),
            });
        }
        Ok(states)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{spiral_initial_conditions, FreeMotion};
    use proptest::prelude::*;

    #[test]
    fn rejects_non_increasing_times() {
        let s = State { t: 0.0, r: Vec3::zeros(), v: Vec3::zeros(), m_hat: Vec3::z() };
        let r = Trajectory::from_samples(ModelParams::default(), FieldSpec::Zero, vec![s, s]);
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trips_bit_exactly(phase in 0.0f64..std::f64::consts::TAU, tmax in 1.0f64..1e6) {
            let p = ModelParams::default();
            let s0 = spiral_initial_conditions(&p, 0.6, -0.01, phase).unwrap();
            let fm = FreeMotion::new(&p, &s0);
            let samples: Vec<State> = (0..5).map(|i| fm.state_at(tmax * i as f64 / 4.0)).collect();
            let tr = Trajectory::from_samples(p, FieldSpec::Zero, samples.clone()).unwrap();
            let mut buf = Vec::new();
            tr.write_csv(&mut buf).unwrap();
            let back = Trajectory::read_csv_states(buf.as_slice()).unwrap();
            prop_assert_eq!(back, samples);
        }
    }
}
