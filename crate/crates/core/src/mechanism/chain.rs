//! Point positions and loop-closure equations of the end-loader chain.
//!
//! All angle conventions follow the kinematic model of the machine: `θ̄3 = β0 − θ3` is the
//! direction of the main arm (pivot to bucket hinge), `θ4 − θ̄3` is the clockwise direction of
//! the bucket hinge-to-blade segment, and `α = π/2 − θ0` is the lift-cylinder axis.

use core::f64::consts::{FRAC_PI_2, PI};

use libm::{atan2, cos, fabs, sin};

use super::geometry::LinkageGeometry;

pub type Point = [f64; 2];

/// The eight independent variables of the chain; the remaining angles (`θ0`, `θ7`, `θ10`)
/// follow from them through the rigid-body constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointVariables {
    pub theta3: f64,
    pub theta9: f64,
    pub s_lift: f64,
    pub theta4: f64,
    pub theta5: f64,
    pub theta6: f64,
    pub theta8: f64,
    pub s_tilt: f64,
}

impl JointVariables {
    /// Mid-stroke configuration of the default geometry (s1 = 180 mm, s2 = 180 mm).
    pub const DEFAULT_SEED: JointVariables = JointVariables {
        theta3: 1.123_713_014_072_8,
        theta9: 2.482_248_450_472_726,
        s_lift: 1480.0,
        theta4: 0.640_791_907_763_933,
        theta5: 1.093_757_563_522_964,
        theta6: 1.584_789_516_699_316,
        theta8: 1.216_751_558_921_731,
        s_tilt: 1280.0,
    };
}

/// Every angle and length of a chain configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainState {
    pub theta0: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub theta5: f64,
    pub theta6: f64,
    pub theta7: f64,
    pub theta8: f64,
    pub theta9: f64,
    pub theta10: f64,
    pub s_lift: f64,
    pub s_tilt: f64,
}

impl ChainState {
    /// Completes the independent variables with `θ10 = θ3 − β5`, `θ0` from the lift-cylinder
    /// axis constraint and `θ7` from the bucket/link angle constraint.
    pub fn from_variables(v: &JointVariables, g: &LinkageGeometry) -> Self {
        let theta10 = v.theta3 - g.beta5;
        let theta0 = lift_axis_theta0(theta10, g);
        let theta7 = g.beta1 - v.theta8 - v.theta5 + v.theta6
            - (g.beta0 - v.theta3 - v.theta4 - g.beta4);
        Self {
            theta0,
            theta3: v.theta3,
            theta4: v.theta4,
            theta5: v.theta5,
            theta6: v.theta6,
            theta7,
            theta8: v.theta8,
            theta9: v.theta9,
            theta10,
            s_lift: v.s_lift,
            s_tilt: v.s_tilt,
        }
    }
}

fn polar(len: f64, angle: f64) -> Point {
    [len * cos(angle), len * sin(angle)]
}

fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

/// Main-arm pivot, `l7` from `P0` along `β0`.
pub fn arm_pivot(g: &LinkageGeometry) -> Point {
    polar(g.l7, g.beta0)
}

/// `P11`: lift-link attachment on the main arm.
pub fn arm_p11(theta10: f64, g: &LinkageGeometry) -> Point {
    add(arm_pivot(g), polar(g.l11, g.beta0 - theta10))
}

/// `P12`: bell-crank pivot on the main arm.
pub fn arm_p12(theta10: f64, g: &LinkageGeometry) -> Point {
    add(arm_p11(theta10, g), polar(g.l12, g.beta2 + (g.beta0 - theta10)))
}

/// `θ0` such that the lift-cylinder axis makes the configured angle with `P0→P12`.
pub fn lift_axis_theta0(theta10: f64, g: &LinkageGeometry) -> f64 {
    let p12 = arm_p12(theta10, g);
    let angle_p0_p12_x = atan2(p12[1], p12[0]);
    FRAC_PI_2 - (angle_p0_p12_x - g.angle_p0_p12_p2)
}

/// Endpoint of the lift cylinder plus its link `l10`, reached from `P0`.
pub fn lift_chain_end(s_lift: f64, theta0: f64, theta9: f64, g: &LinkageGeometry) -> Point {
    let axis = FRAC_PI_2 - theta0;
    let link = PI - (theta9 + axis);
    [
        s_lift * cos(axis) - g.l10 * cos(link),
        s_lift * sin(axis) + g.l10 * sin(link),
    ]
}

/// Bucket hinge at the end of the main arm.
pub fn bucket_hinge(theta3: f64, g: &LinkageGeometry) -> Point {
    add(arm_pivot(g), polar(g.l8, g.beta0 - theta3))
}

/// `P8`: bucket blade tip.
pub fn blade_point(theta3: f64, theta4: f64, g: &LinkageGeometry) -> Point {
    let arm = g.beta0 - theta3;
    let hinge = bucket_hinge(theta3, g);
    [
        hinge[0] + g.l9 * cos(theta4 - arm),
        hinge[1] - g.l9 * sin(theta4 - arm),
    ]
}

/// `P7`: link-A attachment on the bucket, `l6` back from the blade at `β4` to the blade segment.
pub fn link_a_anchor(theta3: f64, theta4: f64, g: &LinkageGeometry) -> Point {
    let p8 = blade_point(theta3, theta4, g);
    let k = g.beta0 - theta3 - theta4 - g.beta4;
    [p8[0] - g.l6 * cos(k), p8[1] - g.l6 * sin(k)]
}

/// Blade height above ground: `l7 sin β0 + l8 sin(β0 − θ3) − l9 sin(θ4 − (β0 − θ3))`.
pub fn blade_height_from(theta3: f64, theta4: f64, g: &LinkageGeometry) -> f64 {
    let arm = g.beta0 - theta3;
    g.l7 * sin(g.beta0) + g.l8 * sin(arm) - g.l9 * sin(theta4 - arm)
}

/// Left-minus-right values of the three vector loop-closure equations, in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopResiduals {
    /// Loop `s_lift, l10, l7, l11`.
    pub lift: [f64; 2],
    /// Loop through the bell crank and link A to the blade.
    pub bucket: [f64; 2],
    /// Loop `l1, s_tilt, l15` back to the bell-crank pivot.
    pub tilt: [f64; 2],
}

impl LoopResiduals {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.lift[0],
            self.lift[1],
            self.bucket[0],
            self.bucket[1],
            self.tilt[0],
            self.tilt[1],
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, r| m.max(fabs(*r)))
    }
}

/// Evaluates both sides of every loop-closure equation at `st`.
pub fn loop_residuals(st: &ChainState, g: &LinkageGeometry) -> LoopResiduals {
    let axis = FRAC_PI_2 - st.theta0;
    let link = PI - (st.theta9 + axis);
    let arm_l11 = g.beta0 - st.theta10;
    let crank_offset = g.beta2 + (g.beta0 - st.theta10);

    // s_lift, l10 against l7, l11.
    let lift_x = st.s_lift * cos(axis) - g.l10 * cos(link);
    let lift_y = st.s_lift * sin(axis) + g.l10 * sin(link);
    let lift = [
        lift_x - (g.l7 * cos(g.beta0) + g.l11 * cos(arm_l11)),
        lift_y - (g.l7 * sin(g.beta0) + g.l11 * sin(arm_l11)),
    ];

    // ... + l12, l16, l5, l6 against l7, l8, l9.
    let crank = st.theta5 - (g.beta1 - st.theta8);
    let link_a = st.theta6 - crank;
    let bucket_side = st.theta7 - link_a;
    let arm = g.beta0 - st.theta3;
    let bucket = [
        lift_x
            + g.l12 * cos(crank_offset)
            + g.l16 * cos(crank)
            + g.l5 * cos(link_a)
            + g.l6 * cos(bucket_side)
            - (g.l7 * cos(g.beta0) + g.l8 * cos(arm) + g.l9 * cos(st.theta4 - arm)),
        lift_y + g.l12 * sin(crank_offset) - g.l16 * sin(crank) + g.l5 * sin(link_a)
            - g.l6 * sin(bucket_side)
            - (g.l7 * sin(g.beta0) + g.l8 * sin(arm) - g.l9 * sin(st.theta4 - arm)),
    ];

    // l1, s_tilt, l15 against the lift chain up to the bell-crank pivot.
    let tilt = [
        g.l1 * cos(g.beta1) + st.s_tilt * cos(g.beta1 - st.theta8) + g.l15 * cos(crank)
            - (lift_x + g.l12 * cos(crank_offset)),
        g.l1 * sin(g.beta1) + st.s_tilt * sin(g.beta1 - st.theta8) - g.l15 * sin(crank)
            - (lift_y + g.l12 * sin(crank_offset)),
    ];

    LoopResiduals { lift, bucket, tilt }
}
