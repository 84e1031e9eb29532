use std::f64::consts::PI;

use super::integrator::oscillation_rate;
use super::{State, Trajectory, Vec3};
use crate::error::{Error, Result};

/// Running trapezoidal integral of a piecewise-linear signal.
struct Primitive<'a> {
    times: &'a [f64],
    values: Vec<Vec3>,
    cumulative: Vec<Vec3>,
}

impl<'a> Primitive<'a> {
    fn new(times: &'a [f64], values: Vec<Vec3>) -> Self {
        let mut cumulative = Vec::with_capacity(values.len());
        let mut acc = Vec3::zeros();
        cumulative.push(acc);
        for i in 1..values.len() {
            acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
            cumulative.push(acc);
        }
        Primitive { times, values, cumulative }
    }

    fn at(&self, t: f64) -> Vec3 {
        let j = match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            n => (n - 1).min(self.times.len() - 2),
        };
        let (t0, t1) = (self.times[j], self.times[j + 1]);
        let f0 = self.values[j];
        let ft = f0 + (self.values[j + 1] - f0) * ((t - t0) / (t1 - t0));
        self.cumulative[j] + 0.5 * (t - t0) * (f0 + ft)
    }
}

/// Centered moving average of r and v over `window` (default: one free
/// oscillation period of the first sample). Samples closer than half a
/// window to either end are dropped.
pub fn average_trajectory(tr: &Trajectory, window: Option<f64>) -> Result<Trajectory> {
    if tr.len() < 2 {
        return Err(Error::Precondition("averaging needs at least two samples".into()));
    }
    let window = match window {
        Some(w) => w,
        None => {
            let rate = oscillation_rate(&tr.params, &tr.samples[0]);
            if rate == 0.0 {
                return Err(Error::Degenerate("no free oscillation to average over".into()));
            }
            2.0 * PI / rate
        }
    };
    if !(window > 0.0) {
        return Err(Error::Precondition(format!("averaging window must be positive (got {window})")));
    }
    let duration = tr.duration();
    if window > duration * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "trajectory of duration {duration} is shorter than the window {window}"
        )));
    }
    let times: Vec<f64> = tr.times().collect();
    let r = Primitive::new(&times, tr.samples.iter().map(|s| s.r).collect());
    let v = Primitive::new(&times, tr.samples.iter().map(|s| s.v).collect());
    let (first, last) = (times[0], times[times.len() - 1]);
    let half = 0.5 * window;
    let slack = 1e-9 * window;
    let samples: Vec<State> = tr
        .samples
        .iter()
        .filter(|s| s.t - half >= first - slack && s.t + half <= last + slack)
        .map(|s| {
            let (a, b) = ((s.t - half).max(first), (s.t + half).min(last));
            State { t: s.t, r: (r.at(b) - r.at(a)) / window, v: (v.at(b) - v.at(a)) / window, m_hat: s.m_hat }
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::Precondition("no sample lies a half window away from both ends".into()));
    }
    let mut out = Trajectory::from_samples(tr.params, tr.field, samples)?;
    out.stats = tr.stats;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, spiral_initial_conditions, FieldSpec, IntegratorConfig};
    use crate::model::ModelParams;

    fn free_spiral(periods: f64) -> (Trajectory, f64, f64) {
        let p = ModelParams::default();
        let mz = (2.0f64 / 3.0).sqrt();
        let s0 = spiral_initial_conditions(&p, mz, 0.01, 0.7).unwrap();
        let sp = p.spiral_params(mz, 0.01).unwrap();
        let cfg = IntegratorConfig { max_time: periods * sp.period(), ..Default::default() };
        (integrate(&p, &s0, &FieldSpec::Zero, &cfg).unwrap(), sp.radius, sp.period())
    }

    #[test]
    fn free_spiral_averages_to_its_axis() {
        let (tr, radius, period) = free_spiral(6.0);
        for window in [None, Some(2.0 * period)] {
            let avg = average_trajectory(&tr, window).unwrap();
            assert!(avg.len() > 100);
            for s in &avg.samples {
                assert!(s.r.xy().norm() < 1e-6 * radius, "{}", s.r.xy().norm() / radius);
                assert!((s.v.z - 0.01).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn window_longer_than_run_is_rejected() {
        let (tr, _, period) = free_spiral(1.5);
        assert!(average_trajectory(&tr, Some(2.0 * period)).is_err());
        assert!(average_trajectory(&tr, Some(0.0)).is_err());
    }
}
