//! Forward kinematics by Newton continuation on the loop-closure residuals.
//!
//! This is deliberately independent of the closed-form inverse: it only evaluates the residual
//! equations, so it doubles as a verification oracle for the inverse kinematics.

use libm::fabs;

use super::chain::{loop_residuals, ChainState, JointVariables};
use super::geometry::LinkageGeometry;
use super::ik::Cylinder;
use super::{blade_height, CylinderExtensions, JointSolution, TaskTarget};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkOptions {
    /// Newton iteration cap per solve.
    pub max_iterations: usize,
    /// Convergence threshold on the largest residual, in mm.
    pub tolerance: f64,
    /// Maximum number of continuation sub-steps from the seed to the target.
    pub max_substeps: usize,
    pub enforce_strokes: bool,
}

impl Default for FkOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-10,
            max_substeps: 256,
            enforce_strokes: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FkError {
    #[error("no convergence after {iterations} iterations (residual {residual:e} mm)")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("linkage cannot close (residual stalled at {residual:e} mm)")]
    Assembly { residual: f64 },
    #[error("{cylinder} cylinder extension {value:.6} mm outside stroke")]
    Stroke { cylinder: Cylinder, value: f64 },
    #[error("invalid geometry: {0}")]
    Geometry(#[from] super::GeometryError),
}

pub fn forward_kinematics(
    ext: CylinderExtensions,
    geom: &LinkageGeometry,
) -> Result<(TaskTarget, JointSolution), FkError> {
    forward_kinematics_with(ext, geom, FkOptions::default())
}

/// Solves the six loop-closure residuals for `(θ3, θ9, θ4, θ5, θ6, θ8)` at the given cylinder
/// lengths, starting from the geometry's seed configuration.
pub fn forward_kinematics_with(
    ext: CylinderExtensions,
    g: &LinkageGeometry,
    opts: FkOptions,
) -> Result<(TaskTarget, JointSolution), FkError> {
    g.validate()?;
    if opts.enforce_strokes {
        if !g.stroke_lift.contains(ext.s1) {
            return Err(FkError::Stroke {
                cylinder: Cylinder::Lift,
                value: ext.s1,
            });
        }
        if !g.stroke_tilt.contains(ext.s2) {
            return Err(FkError::Stroke {
                cylinder: Cylinder::Tilt,
                value: ext.s2,
            });
        }
    }

    let seed = project_seed(&g.fk_seed, g, &opts)?;
    let from = [seed.s_lift, seed.s_tilt];
    let to = [ext.s_lift, ext.s_tilt];

    let mut substeps = 1;
    let mut last_err;
    loop {
        match continuation(&seed, from, to, substeps, g, &opts) {
            Ok(vars) => {
                let state = ChainState::from_variables(&vars, g);
                let joints = JointSolution::from_state(&state, g);
                let target = TaskTarget {
                    theta4: joints.theta4,
                    y_p8: blade_height(&joints, g),
                };
                return Ok((target, joints));
            }
            Err(e) => last_err = e,
        }
        substeps *= 2;
        if substeps > opts.max_substeps {
            return Err(last_err);
        }
    }
}

fn continuation(
    seed: &JointVariables,
    from: [f64; 2],
    to: [f64; 2],
    substeps: usize,
    g: &LinkageGeometry,
    opts: &FkOptions,
) -> Result<JointVariables, FkError> {
    let mut x = free_vars(seed);
    for k in 1..=substeps {
        let t = k as f64 / substeps as f64;
        let lengths = [
            from[0] + t * (to[0] - from[0]),
            from[1] + t * (to[1] - from[1]),
        ];
        // The last sub-step lands exactly on the requested lengths.
        let lengths = if k == substeps { to } else { lengths };
        x = newton(x, |x| residual_at_lengths(x, lengths, g), opts)?;
    }
    Ok(assemble(x, to))
}

/// `(θ3, θ9, θ4, θ5, θ6, θ8)`.
fn free_vars(v: &JointVariables) -> [f64; 6] {
    [v.theta3, v.theta9, v.theta4, v.theta5, v.theta6, v.theta8]
}

fn assemble(x: [f64; 6], lengths: [f64; 2]) -> JointVariables {
    JointVariables {
        theta3: x[0],
        theta9: x[1],
        s_lift: lengths[0],
        theta4: x[2],
        theta5: x[3],
        theta6: x[4],
        theta8: x[5],
        s_tilt: lengths[1],
    }
}

fn residual_at_lengths(x: &[f64; 6], lengths: [f64; 2], g: &LinkageGeometry) -> [f64; 6] {
    let v = assemble(*x, lengths);
    loop_residuals(&ChainState::from_variables(&v, g), g).as_array()
}

/// Pins the seed's arm and bucket angles and solves for the other six variables, so that
/// continuation starts on the constraint manifold even when the seed is only approximate.
fn project_seed(
    seed: &JointVariables,
    g: &LinkageGeometry,
    opts: &FkOptions,
) -> Result<JointVariables, FkError> {
    let pinned = (seed.theta3, seed.theta4);
    let y0 = [
        seed.theta9,
        seed.s_lift,
        seed.theta5,
        seed.theta6,
        seed.theta8,
        seed.s_tilt,
    ];
    let unpack = |y: &[f64; 6]| JointVariables {
        theta3: pinned.0,
        theta9: y[0],
        s_lift: y[1],
        theta4: pinned.1,
        theta5: y[2],
        theta6: y[3],
        theta8: y[4],
        s_tilt: y[5],
    };
    let y = newton(
        y0,
        |y| loop_residuals(&ChainState::from_variables(&unpack(y), g), g).as_array(),
        opts,
    )?;
    Ok(unpack(&y))
}

fn max_abs(r: &[f64; 6]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(fabs(*v)))
}

fn norm2(r: &[f64; 6]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Damped Newton with a central-difference Jacobian and backtracking on `‖r‖²`.
fn newton<F>(mut x: [f64; 6], f: F, opts: &FkOptions) -> Result<[f64; 6], FkError>
where
    F: Fn(&[f64; 6]) -> [f64; 6],
{
    let mut r = f(&x);
    for _ in 0..opts.max_iterations {
        if max_abs(&r) < opts.tolerance {
            return Ok(x);
        }
        let mut jac = [[0.0; 6]; 6];
        for j in 0..6 {
            let h = 1e-6 * (1.0 + fabs(x[j]));
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let rp = f(&xp);
            let rm = f(&xm);
            for i in 0..6 {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rhs = r.map(|v| -v);
        let Some(dx) = linalg::solve(jac, rhs) else {
            return Err(FkError::Assembly {
                residual: max_abs(&r),
            });
        };

        let current = norm2(&r);
        let mut step = 1.0;
        loop {
            let mut trial = x;
            for i in 0..6 {
                trial[i] += step * dx[i];
            }
            let rt = f(&trial);
            if norm2(&rt) < current || max_abs(&rt) < opts.tolerance {
                x = trial;
                r = rt;
                break;
            }
            step *= 0.5;
            if step < 1e-6 {
                return Err(FkError::Assembly {
                    residual: max_abs(&r),
                });
            }
        }
    }
    if max_abs(&r) < opts.tolerance {
        Ok(x)
    } else {
        Err(FkError::NoConvergence {
            iterations: opts.max_iterations,
            residual: max_abs(&r),
        })
    }
}
