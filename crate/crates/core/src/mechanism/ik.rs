//! Closed-form inverse kinematics: bucket pose to cylinder lengths.

use core::f64::consts::{FRAC_PI_2, PI};
use core::fmt;

use libm::{acos, atan2, cos, fabs, sin, sqrt};

use super::chain::{arm_p11, arm_p12, blade_point, lift_chain_end, link_a_anchor, ChainState};
use super::geometry::{GeometryError, LinkageGeometry, StrokeRange};
use super::trig::{solve_cos_sin_system, solve_linear_trig, Branch, TrigError};
use super::{JointSolution, TaskTarget};

/// Sign of `θ6`, the turning angle between the bell crank and link A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkBranch {
    /// `θ6 ∈ [0, π]`, the law-of-cosines value.
    #[default]
    Positive,
    /// Mirror assembly `θ6 ∈ [−π, 0]`.
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IkOptions {
    pub arm: Branch,
    pub lift: Branch,
    pub link: LinkBranch,
    pub enforce_strokes: bool,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            arm: Branch::Principal,
            lift: Branch::Principal,
            link: LinkBranch::Positive,
            enforce_strokes: true,
        }
    }
}

/// The solution stage at which inverse kinematics failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IkStage {
    /// Arm angle from the blade-height equation.
    ArmAngle,
    /// Lift-cylinder length from the lift loop.
    LiftLoop,
    /// Bell-crank/link-A dyad from the law of cosines.
    LinkDyad,
    /// Bell-crank angle from the bucket loop.
    BellCrank,
    /// Tilt-cylinder length from the tilt loop.
    TiltLoop,
}

impl fmt::Display for IkStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IkStage::ArmAngle => "arm angle (blade-height equation)",
            IkStage::LiftLoop => "lift loop (s_lift, theta9)",
            IkStage::LinkDyad => "link dyad (law of cosines for theta6)",
            IkStage::BellCrank => "bell crank (theta7 from the bucket loop)",
            IkStage::TiltLoop => "tilt loop (s_tilt, theta8)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cylinder {
    Lift,
    Tilt,
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cylinder::Lift => "lift",
            Cylinder::Tilt => "tilt",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IkError {
    #[error("target outside workspace at stage {stage}: {detail}")]
    Workspace { stage: IkStage, detail: WorkspaceDetail },
    #[error("{cylinder} cylinder extension {value:.6} mm outside stroke [{}, {}] mm", range.min, range.max)]
    Stroke {
        cylinder: Cylinder,
        value: f64,
        range: StrokeRange,
    },
    #[error("degenerate geometry: {0}")]
    Geometry(GeometryError),
    #[error("non-finite target")]
    NonFiniteTarget,
    #[error("selected branch does not close the loops (max residual {max_residual:e} mm)")]
    BranchRejected { max_residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkspaceDetail {
    Trig(TrigError),
    /// Law-of-cosines argument outside `[−1, 1]`.
    CosineArgument(f64),
}

impl fmt::Display for WorkspaceDetail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkspaceDetail::Trig(e) => write!(f, "{e}"),
            WorkspaceDetail::CosineArgument(a) => {
                write!(f, "law-of-cosines argument {a} outside [-1, 1]")
            }
        }
    }
}

fn workspace(stage: IkStage) -> impl Fn(TrigError) -> IkError {
    move |e| IkError::Workspace {
        stage,
        detail: WorkspaceDetail::Trig(e),
    }
}

/// Inverse kinematics on the default branches with stroke limits enforced.
pub fn inverse_kinematics(target: TaskTarget, geom: &LinkageGeometry) -> Result<JointSolution, IkError> {
    inverse_kinematics_with(target, geom, IkOptions::default())
}

/// Maps a bucket pose to joint angles and cylinder lengths.
///
/// The chain is solved link by link: arm angle from the blade height, the lift-cylinder axis
/// from the bell-crank pivot, the lift loop, the bell-crank/link-A dyad, the bell-crank angle
/// and finally the tilt loop. The result is checked against every loop-closure equation before
/// it is returned.
pub fn inverse_kinematics_with(
    target: TaskTarget,
    g: &LinkageGeometry,
    opts: IkOptions,
) -> Result<JointSolution, IkError> {
    g.validate().map_err(IkError::Geometry)?;
    if !(target.theta4.is_finite() && target.y_p8.is_finite()) {
        return Err(IkError::NonFiniteTarget);
    }
    let theta4 = target.theta4;

    // Arm: A1 = B1 sin θ̄3 − C1 cos θ̄3 with θ̄3 = β0 − θ3.
    let a1 = target.y_p8 - g.l7 * sin(g.beta0);
    let b1 = g.l8 + g.l9 * cos(theta4);
    let c1 = g.l9 * sin(theta4);
    let arm = solve_linear_trig(a1, b1, c1, opts.arm).map_err(workspace(IkStage::ArmAngle))?;
    let theta3 = g.beta0 - arm;
    let theta10 = theta3 - g.beta5;

    // Lift-cylinder axis from the direction of P12.
    let p12_arm = arm_p12(theta10, g);
    let angle_p0_p12_x = atan2(p12_arm[1], p12_arm[0]);
    let axis = angle_p0_p12_x - g.angle_p0_p12_p2;
    let theta0 = FRAC_PI_2 - axis;

    // Lift loop, matched term by term to
    //   A2 x1 − B2 cos x2 = C2,  D2 x1 + E2 sin x2 = F2,
    // with x1 = s_lift and x2 = π − (θ9 + α).
    let p11 = arm_p11(theta10, g);
    let (a2, b2, c2) = (cos(axis), g.l10, p11[0]);
    let (d2, e2, f2) = (sin(axis), g.l10, p11[1]);
    let g2 = f2 * a2 - d2 * c2;
    // D2 B2 cos x2 + A2 E2 sin x2 = G2.
    let x2 = solve_linear_trig(g2, a2 * e2, -d2 * b2, opts.lift)
        .map_err(workspace(IkStage::LiftLoop))?;
    // Back-substitute through the better-conditioned of the two loop equations.
    let s_lift = if fabs(a2) >= fabs(d2) {
        (c2 + b2 * cos(x2)) / a2
    } else {
        (f2 - e2 * sin(x2)) / d2
    };
    let theta9 = PI - axis - x2;

    // Bell-crank pivot reached through the lift chain, and link-A anchor on the bucket.
    let lift_end = lift_chain_end(s_lift, theta0, theta9, g);
    let crank_offset = g.beta2 + (g.beta0 - theta10);
    let p12 = [
        lift_end[0] + g.l12 * cos(crank_offset),
        lift_end[1] + g.l12 * sin(crank_offset),
    ];
    let p7 = link_a_anchor(theta3, theta4, g);
    let p8 = blade_point(theta3, theta4, g);

    // Dyad l16 / l5 between P12 and P7.
    let dx = p7[0] - p12[0];
    let dy = p7[1] - p12[1];
    let l_theta6 = sqrt(dx * dx + dy * dy);
    let denom = -2.0 * g.l16 * g.l5;
    if denom == 0.0 {
        return Err(IkError::Geometry(GeometryError(
            "l16 * l5 vanishes in the law of cosines".into(),
        )));
    }
    let cos_arg = (l_theta6 * l_theta6 - g.l16 * g.l16 - g.l5 * g.l5) / denom;
    if !(fabs(cos_arg) <= 1.0) {
        return Err(IkError::Workspace {
            stage: IkStage::LinkDyad,
            detail: WorkspaceDetail::CosineArgument(cos_arg),
        });
    }
    let theta6_mag = PI - acos(cos_arg);
    let theta6 = match opts.link {
        LinkBranch::Positive => theta6_mag,
        LinkBranch::Negative => -theta6_mag,
    };

    // Bucket loop with θ5 + θ8 eliminated; x4 is the bell-crank direction. Matching
    //   A3 cos x4 + B3 cos(x4 − θ6) = C3,  D3 sin x4 + E3 sin(x4 − θ6) = F3
    // gives A3 = l16, B3 = l5, D3 = −l16, E3 = −l5, and the link-6 term is constant.
    let k = g.beta0 - theta3 - theta4 - g.beta4;
    let c3 = p8[0] - p12[0] - g.l6 * cos(k);
    let f3 = p8[1] - p12[1] - g.l6 * sin(k);
    let (a3, b3, d3, e3) = (g.l16, g.l5, -g.l16, -g.l5);
    let p = a3 + b3 * cos(theta6);
    let q = b3 * sin(theta6);
    let r = d3 + e3 * cos(theta6);
    let s = -e3 * sin(theta6);
    let x4 = solve_cos_sin_system(p, q, r, s, c3, f3)
        .map_err(workspace(IkStage::BellCrank))?
        .angle;
    let theta7 = theta6 - x4 - k;
    let theta5_plus_theta8 = g.beta1 + theta6 - theta7 - k;

    // Tilt loop: x6 cos x7 = A4, x6 sin x7 = B4 with x6 = s_tilt, x7 = β1 − θ8.
    let crank = theta5_plus_theta8 - g.beta1;
    let a4 = p12[0] - g.l1 * cos(g.beta1) - g.l15 * cos(crank);
    let b4 = p12[1] - g.l1 * sin(g.beta1) + g.l15 * sin(crank);
    let s_tilt = sqrt(a4 * a4 + b4 * b4);
    if s_tilt == 0.0 {
        return Err(IkError::Workspace {
            stage: IkStage::TiltLoop,
            detail: WorkspaceDetail::Trig(TrigError::Degenerate),
        });
    }
    let x7 = atan2(b4, a4);
    let theta8 = g.beta1 - x7;
    let theta5 = theta5_plus_theta8 - theta8;

    let state = ChainState {
        theta0,
        theta3,
        theta4,
        theta5,
        theta6,
        theta7,
        theta8,
        theta9,
        theta10,
        s_lift,
        s_tilt,
    };
    let solution = JointSolution::from_state(&state, g);

    let max_residual = solution.residuals(g).max_abs();
    if !(max_residual < 1e-9) {
        return Err(IkError::BranchRejected { max_residual });
    }

    if opts.enforce_strokes {
        let ext = solution.extensions;
        if !g.stroke_lift.contains(ext.s1) {
            return Err(IkError::Stroke {
                cylinder: Cylinder::Lift,
                value: ext.s1,
                range: g.stroke_lift,
            });
        }
        if !g.stroke_tilt.contains(ext.s2) {
            return Err(IkError::Stroke {
                cylinder: Cylinder::Tilt,
                value: ext.s2,
                range: g.stroke_tilt,
            });
        }
    }
    Ok(solution)
}
