//! Trace comparison metrics.

use libm::sqrt;

use super::CalibrationError;
use crate::trace::{ForceTrace, PoseTrace};

/// Points of the common resampling grid used by [`avg_error`] and [`trajectory_match`].
pub const DEFAULT_GRID_POINTS: usize = 200;

/// `100 |max(sim) − max(meas)| / max(meas)`, in percent.
pub fn peak_error(sim: &ForceTrace, meas: &ForceTrace) -> Result<f64, CalibrationError> {
    let reference = meas.peak();
    if reference == 0.0 {
        return Err(CalibrationError::ZeroReference);
    }
    Ok(100.0 * libm::fabs(sim.peak() - reference) / reference)
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> Result<(f64, f64), CalibrationError> {
    let (t0, t1) = (a.0.max(b.0), a.1.min(b.1));
    if t1 > t0 {
        Ok((t0, t1))
    } else {
        Err(CalibrationError::NoOverlap)
    }
}

fn grid(t0: f64, t1: f64, points: usize) -> impl Iterator<Item = f64> {
    let n = points.max(2);
    (0..n).map(move |k| {
        if k == n - 1 {
            t1
        } else {
            t0 + (t1 - t0) * k as f64 / (n - 1) as f64
        }
    })
}

/// Mean absolute force difference over the overlap, relative to the mean measured force, in
/// percent. Both traces are linearly resampled onto [`DEFAULT_GRID_POINTS`] uniform points and
/// averaged with trapezoidal weights.
pub fn avg_error(sim: &ForceTrace, meas: &ForceTrace) -> Result<f64, CalibrationError> {
    avg_error_with(sim, meas, DEFAULT_GRID_POINTS)
}

pub fn avg_error_with(sim: &ForceTrace, meas: &ForceTrace, points: usize) -> Result<f64, CalibrationError> {
    let (t0, t1) = overlap(sim.span(), meas.span())?;
    let n = points.max(2);
    let (mut diff, mut reference) = (0.0, 0.0);
    for (k, t) in grid(t0, t1, n).enumerate() {
        let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let m = meas.value_at(t);
        diff += w * libm::fabs(sim.value_at(t) - m);
        reference += w * m;
    }
    if reference == 0.0 {
        return Err(CalibrationError::ZeroReference);
    }
    Ok(100.0 * diff / reference)
}

/// RMS differences of blade height (mm) and bucket orientation (rad) over the overlap.
pub fn trajectory_match(sim: &PoseTrace, meas: &PoseTrace) -> Result<(f64, f64), CalibrationError> {
    trajectory_match_with(sim, meas, DEFAULT_GRID_POINTS)
}

pub fn trajectory_match_with(
    sim: &PoseTrace,
    meas: &PoseTrace,
    points: usize,
) -> Result<(f64, f64), CalibrationError> {
    let (t0, t1) = overlap(sim.span(), meas.span())?;
    let (mut sh, mut sa, mut n) = (0.0, 0.0, 0usize);
    for t in grid(t0, t1, points) {
        let dh = sim.height_at(t) - meas.height_at(t);
        let da = sim.theta4_at(t) - meas.theta4_at(t);
        sh += dh * dh;
        sa += da * da;
        n += 1;
    }
    Ok((sqrt(sh / n as f64), sqrt(sa / n as f64)))
}
