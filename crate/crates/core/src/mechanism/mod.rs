//! End-loader linkage: geometry, closed-form inverse kinematics and numeric forward kinematics.
//!
//! The mechanism has two degrees of freedom, actuated by the lift and tilt cylinders. The task
//! space is the bucket orientation `θ4` and the blade height `y_P8` above ground. Lengths are in
//! mm, angles in rad, and every angle returned by a solver is wrapped into `(−π, π]`.

mod chain;
mod fk;
mod geometry;
mod ik;
mod trig;

pub use chain::{
    arm_p11, arm_p12, arm_pivot, blade_height_from, blade_point, bucket_hinge, lift_axis_theta0,
    lift_chain_end, link_a_anchor, loop_residuals, ChainState, JointVariables, LoopResiduals,
    Point,
};
pub use fk::{forward_kinematics, forward_kinematics_with, FkError, FkOptions};
pub use geometry::{GeometryError, LinkageGeometry, StrokeRange, DEFAULT_MASSES};
pub use ik::{
    inverse_kinematics, inverse_kinematics_with, Cylinder, IkError, IkOptions, IkStage,
    LinkBranch,
};
pub use trig::{
    solve_cos_sin_system, solve_linear_trig, wrap_angle, Branch, CosSinSolution, TrigError,
};

/// Requested bucket pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskTarget {
    /// Bucket orientation in rad.
    pub theta4: f64,
    /// Blade height above ground in mm.
    pub y_p8: f64,
}

/// Cylinder extensions; total lengths add the retracted base lengths `l17`, `l18`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderExtensions {
    pub s1: f64,
    pub s2: f64,
    pub s_lift: f64,
    pub s_tilt: f64,
}

impl CylinderExtensions {
    pub fn from_extensions(s1: f64, s2: f64, g: &LinkageGeometry) -> Self {
        Self {
            s1,
            s2,
            s_lift: s1 + g.l17,
            s_tilt: s2 + g.l18,
        }
    }

    pub fn from_lengths(s_lift: f64, s_tilt: f64, g: &LinkageGeometry) -> Self {
        Self {
            s1: s_lift - g.l17,
            s2: s_tilt - g.l18,
            s_lift,
            s_tilt,
        }
    }
}

/// A fully solved chain configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSolution {
    pub theta0: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub theta5: f64,
    pub theta5_plus_theta8: f64,
    pub theta6: f64,
    pub theta7: f64,
    pub theta8: f64,
    pub theta9: f64,
    pub theta10: f64,
    pub p7: Point,
    pub p8: Point,
    pub p12: Point,
    pub extensions: CylinderExtensions,
}

impl JointSolution {
    pub(crate) fn from_state(st: &ChainState, g: &LinkageGeometry) -> Self {
        let w = wrap_angle;
        Self {
            theta0: w(st.theta0),
            theta3: w(st.theta3),
            theta4: w(st.theta4),
            theta5: w(st.theta5),
            theta5_plus_theta8: w(st.theta5 + st.theta8),
            theta6: w(st.theta6),
            theta7: w(st.theta7),
            theta8: w(st.theta8),
            theta9: w(st.theta9),
            theta10: w(st.theta10),
            p7: link_a_anchor(st.theta3, st.theta4, g),
            p8: blade_point(st.theta3, st.theta4, g),
            p12: arm_p12(st.theta10, g),
            extensions: CylinderExtensions::from_lengths(st.s_lift, st.s_tilt, g),
        }
    }

    pub fn chain_state(&self) -> ChainState {
        ChainState {
            theta0: self.theta0,
            theta3: self.theta3,
            theta4: self.theta4,
            theta5: self.theta5,
            theta6: self.theta6,
            theta7: self.theta7,
            theta8: self.theta8,
            theta9: self.theta9,
            theta10: self.theta10,
            s_lift: self.extensions.s_lift,
            s_tilt: self.extensions.s_tilt,
        }
    }

    /// Loop-closure residuals evaluated with the stored angles.
    pub fn residuals(&self, g: &LinkageGeometry) -> LoopResiduals {
        loop_residuals(&self.chain_state(), g)
    }

    pub fn variables(&self) -> JointVariables {
        JointVariables {
            theta3: self.theta3,
            theta9: self.theta9,
            s_lift: self.extensions.s_lift,
            theta4: self.theta4,
            theta5: self.theta5,
            theta6: self.theta6,
            theta8: self.theta8,
            s_tilt: self.extensions.s_tilt,
        }
    }
}

/// Blade height of a solved configuration.
pub fn blade_height(joints: &JointSolution, geom: &LinkageGeometry) -> f64 {
    blade_height_from(joints.theta3, joints.theta4, geom)
}
