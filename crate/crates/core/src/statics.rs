//! Bucket statics: free-body balance, load-pin shears and cylinder pressures.
//!
//! The bucket (with its base) is a planar free body loaded by the main-arm pin, the link-A pin,
//! its weight and the soil. Forces are in N, lengths on the load pin in mm, load distributions
//! in N/mm.

use alloc::vec::Vec;

use libm::sqrt;

use crate::GRAVITY;

/// Pin forces on the bucket from the main arm (`mp`) and link A (`sp`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HingeForces {
    pub f_mp_x: f64,
    pub f_mp_y: f64,
    pub f_sp_x: f64,
    pub f_sp_y: f64,
}

/// Soil reaction on the bucket.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SoilForce {
    pub f_s_x: f64,
    pub f_s_y: f64,
}

impl SoilForce {
    pub fn magnitude(&self) -> f64 {
        sqrt(self.f_s_x * self.f_s_x + self.f_s_y * self.f_s_y)
    }
}

/// Mass and acceleration of the free body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketBody {
    pub mass: f64,
    pub a_x: f64,
    pub a_y: f64,
}

impl BucketBody {
    /// Bucket plus bucket base, the part carried by the instrumented pins.
    pub const DEFAULT_MASS: f64 = 205.8 + 84.8;

    pub fn at_rest(mass: f64) -> Self {
        Self {
            mass,
            a_x: 0.0,
            a_y: 0.0,
        }
    }

    pub fn weight(&self) -> f64 {
        self.mass * GRAVITY
    }
}

/// Soil force closing the bucket's free-body balance:
/// `F_s_x = F_mp_x + F_sp_x − m a_x`, `F_s_y = W + m a_y − F_mp_y − F_sp_y`.
pub fn soil_force_from_hinges(h: &HingeForces, b: &BucketBody) -> SoilForce {
    SoilForce {
        f_s_x: h.f_mp_x + h.f_sp_x - b.mass * b.a_x,
        f_s_y: b.weight() + b.mass * b.a_y - h.f_mp_y - h.f_sp_y,
    }
}

/// Static-equilibrium residual `(F_mp_x + F_sp_x − F_s_x, F_mp_y + F_sp_y + F_s_y − W)`.
pub fn static_residual(h: &HingeForces, s: &SoilForce, b: &BucketBody) -> (f64, f64) {
    (
        h.f_mp_x + h.f_sp_x - s.f_s_x,
        h.f_mp_y + h.f_sp_y + s.f_s_y - b.weight(),
    )
}

/// A load distribution sampled at increasing positions along the pin.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampledLoad {
    /// `(s [mm], q [N/mm])`.
    pub samples: Vec<(f64, f64)>,
}

impl SampledLoad {
    pub fn new(samples: Vec<(f64, f64)>) -> Self {
        Self { samples }
    }

    /// Samples `q` at `n` evenly spaced points over `[a, b]`.
    pub fn from_fn(a: f64, b: f64, n: usize, q: impl Fn(f64) -> f64) -> Self {
        let samples = (0..n)
            .map(|i| {
                let s = if n == 1 {
                    a
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                };
                (s, q(s))
            })
            .collect();
        Self { samples }
    }

    /// Trapezoidal integral over the sampled span.
    pub fn integral(&self) -> Option<f64> {
        if self.samples.len() < 2 {
            return None;
        }
        Some(
            self.samples
                .windows(2)
                .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
                .sum(),
        )
    }
}

/// Instrumented hinge pin with two contact spans: the bucket base over `[0, span_base]` and
/// link A over `[length − span_link, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadPin {
    pub length: f64,
    pub span_base: f64,
    pub span_link: f64,
    /// Groove positions between the contact spans, where the shear gauges sit.
    pub grooves: [f64; 2],
    pub q_base: SampledLoad,
    pub q_link: SampledLoad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum StaticsError {
    #[error("{0} contact span has fewer than two samples")]
    EmptySpan(PinSpan),
    #[error("piston area must be positive")]
    NonPositiveArea,
    #[error("load pin layout invalid: {0}")]
    InvalidPin(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinSpan {
    BucketBase,
    LinkA,
}

impl core::fmt::Display for PinSpan {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            PinSpan::BucketBase => "bucket-base",
            PinSpan::LinkA => "link-A",
        })
    }
}

impl LoadPin {
    pub fn validate(&self) -> Result<(), StaticsError> {
        if !(self.length > 0.0) {
            return Err(StaticsError::InvalidPin("length must be positive"));
        }
        if !(self.span_base > 0.0 && self.span_link > 0.0) {
            return Err(StaticsError::InvalidPin("contact spans must be positive"));
        }
        if self.span_base + self.span_link > self.length {
            return Err(StaticsError::InvalidPin("contact spans overlap"));
        }
        let link_start = self.length - self.span_link;
        for g in self.grooves {
            if !(g > self.span_base && g < link_start) {
                return Err(StaticsError::InvalidPin(
                    "grooves must lie between the contact spans",
                ));
            }
        }
        Ok(())
    }
}

/// Shear forces at the two gauge grooves: `V1 = ∫₀^{s1} q_bb ds`, `V2 = ∫_{l−s2}^{l} q_lA ds`.
pub fn pin_shears(pin: &LoadPin) -> Result<(f64, f64), StaticsError> {
    let v1 = pin
        .q_base
        .integral()
        .ok_or(StaticsError::EmptySpan(PinSpan::BucketBase))?;
    let v2 = pin
        .q_link
        .integral()
        .ok_or(StaticsError::EmptySpan(PinSpan::LinkA))?;
    Ok((v1, v2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Contact resultants `(bucket_side, link_side)` on one measuring axis.
///
/// The gauges sit on the neutral axis between the two contact spans, so each measured shear is
/// carried entirely by the adjacent contact span and equals its resultant.
pub fn resultant_from_shears(v1: f64, v2: f64, _axis: Axis) -> (f64, f64) {
    (v1, v2)
}

/// Planar resultants from dual-axis shear readings `(v1, v2)` per axis.
pub fn planar_resultants(x: (f64, f64), y: (f64, f64)) -> ([f64; 2], [f64; 2]) {
    let (bx, lx) = resultant_from_shears(x.0, x.1, Axis::X);
    let (by, ly) = resultant_from_shears(y.0, y.1, Axis::Y);
    ([bx, by], [lx, ly])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PistonSide {
    Head,
    Rod,
}

/// Quasi-static chamber pressure in Pa for a cylinder force in N over the given side's area
/// in m².
pub fn cylinder_pressure(force: f64, piston_area: f64, _side: PistonSide) -> Result<f64, StaticsError> {
    if !(piston_area > 0.0) {
        return Err(StaticsError::NonPositiveArea);
    }
    Ok(force / piston_area)
}
