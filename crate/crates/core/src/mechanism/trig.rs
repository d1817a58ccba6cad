//! Scalar trigonometric solvers used by the closed-form inverse kinematics.

use core::f64::consts::PI;

use libm::{asin, atan2, cos, fabs, sin, sqrt};

/// Which root of `sin(x + φ) = k` to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    /// `x + φ = arcsin(k)`.
    #[default]
    Principal,
    /// `x + φ = π − arcsin(k)`.
    Supplementary,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum TrigError {
    #[error("b = c = 0: equation carries no angle information")]
    Degenerate,
    #[error("|a| = {a} exceeds sqrt(b^2 + c^2) = {amplitude}")]
    Unsolvable { a: f64, amplitude: f64 },
    #[error("2x2 system is singular (determinant {det:e})")]
    SingularSystem { det: f64 },
    #[error("solution violates cos^2 + sin^2 = 1 by {residual:e}")]
    Inconsistent { residual: f64 },
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = atan2(sin(x), cos(x));
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Solves `a = b·sin(x) − c·cos(x)` for `x`.
///
/// The equation is rewritten as `a = √(b² + c²)·sin(x + φ)` with the phase `φ = atan2(−c, b)`;
/// this is `arctan(−c/b)` whenever `b > 0` and stays valid for negative `b`. The result is
/// wrapped into `(−π, π]`.
pub fn solve_linear_trig(a: f64, b: f64, c: f64, branch: Branch) -> Result<f64, TrigError> {
    let amplitude = sqrt(b * b + c * c);
    if amplitude == 0.0 {
        return Err(TrigError::Degenerate);
    }
    let ratio = a / amplitude;
    if !(fabs(ratio) <= 1.0) {
        return Err(TrigError::Unsolvable { a, amplitude });
    }
    let phase = atan2(-c, b);
    let root = asin(ratio);
    let x = match branch {
        Branch::Principal => root - phase,
        Branch::Supplementary => PI - root - phase,
    };
    Ok(wrap_angle(x))
}

/// Result of [`solve_cos_sin_system`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosSinSolution {
    pub angle: f64,
    /// `cos² + sin² − 1` of the linear solve before normalisation through `atan2`.
    pub residual: f64,
}

/// Solves `p·cos x + q·sin x = c3`, `r·sin x + s·cos x = f3` for `x`.
///
/// `(cos x, sin x)` is obtained from the inverse of `[[p, q], [s, r]]` and the angle from the
/// four-quadrant arctangent.
pub fn solve_cos_sin_system(
    p: f64,
    q: f64,
    r: f64,
    s: f64,
    c3: f64,
    f3: f64,
) -> Result<CosSinSolution, TrigError> {
    let det = p * r - q * s;
    if !(fabs(det) >= 1e-12) {
        return Err(TrigError::SingularSystem { det });
    }
    let cos_x = (r * c3 - q * f3) / det;
    let sin_x = (-s * c3 + p * f3) / det;
    let residual = cos_x * cos_x + sin_x * sin_x - 1.0;
    if !(fabs(residual) <= 1e-6) {
        return Err(TrigError::Inconsistent { residual });
    }
    Ok(CosSinSolution {
        angle: atan2(sin_x, cos_x),
        residual,
    })
}
