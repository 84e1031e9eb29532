use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};
use serde::Serialize;

use crate::dynamics::{Trajectory, Vec3};
use crate::error::{Error, Result};

/// Least-squares helix through a force-free trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HelixFit {
    /// Unit axis direction, oriented along the mean velocity.
    pub axis: Vec3,
    /// A point on the axis (the fitted circle center in the plane of the first sample).
    pub center: Vec3,
    pub radius: f64,
    /// Signed angular frequency about `axis`; absent for a straight line.
    pub omega: Option<f64>,
    /// 2 pi (axial speed) / omega; absent for a straight line.
    pub pitch: Option<f64>,
    pub axial_speed: f64,
    /// RMS distance of the projected samples from the fitted circle.
    pub residual_rms: f64,
    pub degenerate: bool,
    /// Number of free-oscillation periods covered.
    pub periods: f64,
}

/// Minimum number of free-oscillation periods a fit must cover.
pub const MIN_PERIODS: f64 = 3.0;

fn orthonormal_basis(axis: &Vec3) -> (Vec3, Vec3) {
    let trial = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (trial - axis.dot(&trial) * axis).normalize();
    (e1, axis.cross(&e1))
}

/// Ordinary least-squares slope of y against x.
pub(crate) fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Axis of the helix: normal of the plane holding the velocity samples.
///
/// Falls back to the mean velocity when the velocities do not span a plane.
fn fit_axis(tr: &Trajectory) -> Result<(Vec3, bool)> {
    let n = tr.len() as f64;
    let mean_v = tr.samples.iter().fold(Vec3::zeros(), |acc, s| acc + s.v) / n;
    let mut cov = Matrix3::zeros();
    for s in &tr.samples {
        let d = s.v - mean_v;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let spread = eig.eigenvalues[order[2]];
    let scale = mean_v.norm_squared().max(cov.trace());
    if scale == 0.0 {
        return Err(Error::Degenerate("trajectory is at rest".into()));
    }
    if spread <= 1e-24 * scale {
        return Ok((mean_v.normalize(), true));
    }
    let mut axis: Vec3 = eig.eigenvectors.column(order[0]).into_owned();
    if axis.dot(&mean_v) < 0.0 {
        axis = -axis;
    }
    Ok((axis.normalize(), false))
}

/// Fits a helix: plane-normal axis, algebraic circle, phase regression.
pub fn fit_helix(tr: &Trajectory) -> Result<HelixFit> {
    if !tr.field.is_zero() {
        return Err(Error::Precondition("helix fit needs a zero-field trajectory".into()));
    }
    if tr.len() < 8 {
        return Err(Error::Precondition("helix fit needs at least 8 samples".into()));
    }
    let rate = crate::dynamics::FreeMotion::new(&tr.params, &tr.samples[0]).precession_rate().abs();
    let periods = tr.duration() * rate / (2.0 * PI);
    let (axis, flat_velocity) = fit_axis(tr)?;
    let (e1, e2) = orthonormal_basis(&axis);
    let origin = tr.samples[0].r;
    let times: Vec<f64> = tr.times().collect();
    let axial: Vec<f64> = tr.samples.iter().map(|s| (s.r - origin).dot(&axis)).collect();
    let axial_speed = ols_slope(&times, &axial);
    let xy: Vec<(f64, f64)> = tr
        .samples
        .iter()
        .map(|s| {
            let d = s.r - origin;
            (d.dot(&e1), d.dot(&e2))
        })
        .collect();
    let n = xy.len() as f64;
    let (cx0, cy0) = xy.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / n, acc.1 + p.1 / n));
    let spread = (xy.iter().map(|p| (p.0 - cx0).powi(2) + (p.1 - cy0).powi(2)).sum::<f64>() / n).sqrt();
    let length_scale = (axial_speed * tr.duration()).abs().max(spread);

    if flat_velocity || spread <= 1e-12 * length_scale {
        return Ok(HelixFit {
            axis,
            center: origin + cx0 * e1 + cy0 * e2,
            radius: spread,
            omega: None,
            pitch: None,
            axial_speed,
            residual_rms: spread,
            degenerate: true,
            periods,
        });
    }
    if periods < MIN_PERIODS * (1.0 - 1e-9) {
        return Err(Error::Precondition(format!(
            "helix fit needs at least {MIN_PERIODS} periods (got {periods:.3})"
        )));
    }
    let samples_per_period = tr.len() as f64 / periods;
    if samples_per_period < 4.0 {
        return Err(Error::Precondition(format!(
            "helix fit needs at least 4 samples per period (got {samples_per_period:.2})"
        )));
    }

    // x^2 + y^2 + a x + b y + c = 0 on coordinates centered at the centroid
    let mut design = DMatrix::zeros(xy.len(), 3);
    let mut rhs = DVector::zeros(xy.len());
    for (i, p) in xy.iter().enumerate() {
        let (x, y) = (p.0 - cx0, p.1 - cy0);
        design[(i, 0)] = x;
        design[(i, 1)] = y;
        design[(i, 2)] = 1.0;
        rhs[i] = -(x * x + y * y);
    }
    let sol = design
        .svd(true, true)
        .solve(&rhs, 1e-15)
        .map_err(|e| Error::Degenerate(format!("circle fit failed: {e}")))?;
    let (a, b, c) = (sol[0], sol[1], sol[2]);
    let (ux, uy) = (-0.5 * a, -0.5 * b);
    let radius = (ux * ux + uy * uy - c).max(0.0).sqrt();
    let (cx, cy) = (cx0 + ux, cy0 + uy);

    let mut residual = 0.0;
    let mut phase = Vec::with_capacity(xy.len());
    let mut previous: Option<f64> = None;
    let mut offset = 0.0;
    for p in &xy {
        let (dx, dy) = (p.0 - cx, p.1 - cy);
        residual += ((dx * dx + dy * dy).sqrt() - radius).powi(2);
        let raw = dy.atan2(dx);
        if let Some(prev) = previous {
            let mut jump = raw + offset - prev;
            while jump > PI {
                offset -= 2.0 * PI;
                jump -= 2.0 * PI;
            }
            while jump < -PI {
                offset += 2.0 * PI;
                jump += 2.0 * PI;
            }
        }
        let unwrapped = raw + offset;
        phase.push(unwrapped);
        previous = Some(unwrapped);
    }
    let omega = ols_slope(&times, &phase);
    Ok(HelixFit {
        axis,
        center: origin + cx * e1 + cy * e2,
        radius,
        omega: Some(omega),
        pitch: Some(2.0 * PI * axial_speed / omega),
        axial_speed,
        residual_rms: (residual / n).sqrt(),
        degenerate: false,
        periods,
    })
}
