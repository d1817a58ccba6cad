//! Mapping between mechanism poses and bucket trajectories in the soil-bed frame.
//!
//! The bed floor `y = 0` is the ground the machine stands on, so the blade tip height in metres
//! is `y_p8 / 1000`. The hinge-to-blade segment points at `ψ = (β₀ − θ₃) − θ₄`.

use alloc::vec::Vec;

use libm::{asin, sin};

use crate::mechanism::{blade_point, wrap_angle, JointSolution, LinkageGeometry};
use crate::terrain::{BucketPose, BucketProfile, TerrainError, Trajectory};
use crate::trace::{PoseSample, PoseTrace, TraceError};

/// One mechanism sample: time (s), machine travel (m) and the solved linkage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSample {
    pub t: f64,
    pub machine_x: f64,
    pub joints: JointSolution,
}

/// Bucket keyframes that follow the blade tip and orientation of a joint-space path.
pub fn trajectory_from_joints(
    samples: &[JointSample],
    profile: &BucketProfile,
    geom: &LinkageGeometry,
) -> Result<Trajectory, TerrainError> {
    let keyframes = samples
        .iter()
        .map(|s| {
            let j = &s.joints;
            let tip = blade_point(j.theta3, j.theta4, geom);
            let psi = geom.beta0 - j.theta3 - j.theta4;
            BucketPose {
                t: s.t,
                x: s.machine_x + tip[0] / 1000.0,
                y: tip[1] / 1000.0,
                angle: profile.rotation_for_blade_direction(psi),
            }
        })
        .collect();
    Trajectory::new(keyframes)
}

/// Pose trace (blade height, θ₄) implied by a bucket trajectory.
///
/// The arm angle follows from the height relation
/// `y = l₇ sin β₀ + l₈ sin(β₀ − θ₃) + l₉ sin ψ` on its principal branch; keyframes the arm
/// cannot reach are rejected.
pub fn pose_trace_from_trajectory(
    trajectory: &Trajectory,
    profile: &BucketProfile,
    geom: &LinkageGeometry,
) -> Result<PoseTrace, TraceError> {
    let samples: Vec<PoseSample> = trajectory
        .keyframes()
        .iter()
        .enumerate()
        .map(|(index, k)| {
            let y_p8 = 1000.0 * k.y;
            let psi = k.angle + profile.blade_direction();
            let s = (y_p8 - geom.l7 * sin(geom.beta0) - geom.l9 * sin(psi)) / geom.l8;
            if !(-1.0..=1.0).contains(&s) {
                return Err(TraceError::InvalidValue { index });
            }
            let arm = asin(s);
            Ok(PoseSample {
                t: k.t,
                y_p8,
                theta4: wrap_angle(arm - psi),
            })
        })
        .collect::<Result<_, _>>()?;
    PoseTrace::new(samples)
}
