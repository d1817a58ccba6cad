use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use super::chain::JointVariables;

/// Admissible extension interval of one hydraulic cylinder, in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrokeRange {
    pub min: f64,
    pub max: f64,
}

impl StrokeRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.min && s <= self.max
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }
}

/// Part masses of the end-loader model in kg, keyed by part name.
pub const DEFAULT_MASSES: [(&str, f64); 9] = [
    ("bucket", 205.8),
    ("bucket_base", 84.8),
    ("link_b", 8.99),
    ("link_a", 33.9),
    ("main_arm", 294.6),
    ("hydraulic_rod_a1", 20.3),
    ("hydraulic_rod_a2", 13.1),
    ("hydraulic_rod_b1", 19.6),
    ("hydraulic_rod_b2", 14.7),
];

/// Constant dimensions of the end-loader linkage.
///
/// Lengths are in mm, angles in rad. `P0` (the lift-cylinder base) is the origin of the chain;
/// `p0` places it in the machine body frame and is only used when blade coordinates are handed
/// to other frames.
///
/// `beta0`, `beta1`, `l17`, `l18` and `angle_p0_p12_p2` are not part of the measured machine
/// data and must be configured; [`LinkageGeometry::default`] carries a fixture for which every
/// in-stroke extension pair assembles on the principal branches.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkageGeometry {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
    pub l6: f64,
    pub l7: f64,
    pub l8: f64,
    pub l9: f64,
    pub l10: f64,
    pub l11: f64,
    pub l12: f64,
    pub l13: f64,
    pub l14: f64,
    pub l15: f64,
    pub l16: f64,
    /// Retracted length of the lift cylinder.
    pub l17: f64,
    /// Retracted length of the tilt cylinder.
    pub l18: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub beta5: f64,
    /// Angle at `P0` between `P0→P12` and the lift-cylinder axis `P0→P2`.
    pub angle_p0_p12_p2: f64,
    pub p0: [f64; 2],
    pub stroke_lift: StrokeRange,
    pub stroke_tilt: StrokeRange,
    pub masses: BTreeMap<String, f64>,
    /// Starting configuration of the forward-kinematics solver.
    pub fk_seed: JointVariables,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct GeometryError(pub String);

impl Default for LinkageGeometry {
    fn default() -> Self {
        let deg = core::f64::consts::PI / 180.0;
        Self {
            l1: 348.76,
            l2: 796.91,
            l3: 770.0,
            l4: 840.0,
            l5: 560.0,
            l6: 982.0,
            l7: 334.23,
            l8: 2030.0,
            l9: 772.33,
            l10: 272.41,
            l11: 1068.88,
            l12: 279.50,
            l13: 973.13,
            l14: 320.88,
            l15: 320.0,
            l16: 520.0,
            l17: 1300.0,
            l18: 1100.0,
            beta0: 75.0 * deg,
            beta1: 100.0 * deg,
            beta2: 26.8 * deg,
            beta3: 12.31 * deg,
            beta4: 16.06 * deg,
            beta5: 5.86 * deg,
            angle_p0_p12_p2: 10.0 * deg,
            p0: [0.0, 0.0],
            stroke_lift: StrokeRange::new(115.0, 245.0),
            stroke_tilt: StrokeRange::new(120.0, 240.0),
            masses: DEFAULT_MASSES
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            fk_seed: JointVariables::DEFAULT_SEED,
        }
    }
}

impl LinkageGeometry {
    pub fn lengths(&self) -> [(&'static str, f64); 18] {
        [
            ("l1", self.l1),
            ("l2", self.l2),
            ("l3", self.l3),
            ("l4", self.l4),
            ("l5", self.l5),
            ("l6", self.l6),
            ("l7", self.l7),
            ("l8", self.l8),
            ("l9", self.l9),
            ("l10", self.l10),
            ("l11", self.l11),
            ("l12", self.l12),
            ("l13", self.l13),
            ("l14", self.l14),
            ("l15", self.l15),
            ("l16", self.l16),
            ("l17", self.l17),
            ("l18", self.l18),
        ]
    }

    pub fn angles(&self) -> [(&'static str, f64); 7] {
        [
            ("beta0", self.beta0),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
            ("beta4", self.beta4),
            ("beta5", self.beta5),
            ("angle_p0_p12_p2", self.angle_p0_p12_p2),
        ]
    }

    pub fn mass(&self, part: &str) -> Option<f64> {
        self.masses.get(part).copied()
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        for (name, value) in self.lengths() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(GeometryError(format!("{name} must be positive")));
            }
        }
        for (name, value) in self.angles() {
            if !value.is_finite() {
                return Err(GeometryError(format!("{name} must be finite")));
            }
        }
        if !(self.p0[0].is_finite() && self.p0[1].is_finite()) {
            return Err(GeometryError("p0 must be finite".into()));
        }
        for (name, range) in [("stroke_lift", self.stroke_lift), ("stroke_tilt", self.stroke_tilt)] {
            if !(range.min.is_finite() && range.max.is_finite() && range.min <= range.max) {
                return Err(GeometryError(format!("{name} must satisfy min <= max")));
            }
            if range.min + if name == "stroke_lift" { self.l17 } else { self.l18 } <= 0.0 {
                return Err(GeometryError(format!(
                    "{name} must keep the total cylinder length positive"
                )));
            }
        }
        for (part, mass) in &self.masses {
            if !(*mass > 0.0 && mass.is_finite()) {
                return Err(GeometryError(format!("mass of {part} must be positive")));
            }
        }
        Ok(())
    }
}
