//! Planar discrete-element soil bed driven by the five calibratable terrain parameters.
//!
//! Particles are unit-depth disks in a container with a floor at `y = 0` and side walls at
//! `x = 0` and `x = width`. A rigid bucket profile moves along a prescribed trajectory; the force
//! it receives per unit depth is scaled by the bucket width to give Newtons.

mod bucket;
mod contact;
mod sim;

pub use bucket::{BucketPose, BucketProfile, PoseState, Trajectory};
pub use contact::{
    damping_ratio_for_restitution, hertz_mindlin_contact, normalized_restitution, ContactForces,
    ContactKinematics, ContactModel, SpringState,
};
pub use sim::{
    combine_slices, combined_force, dig_from, fill_bed, fill_bed_with, run_dig_cycle, run_dig_slice, settle_bed,
    stable_dt, step, BedSpec, BucketState, DigScenario, Particle, SettleOptions, SimOptions,
    SimState, SliceForces, StepDiagnostics,
};

pub use crate::trace::ForceTrace;

/// Soil parameters. The first five are the calibrated set; density and Poisson ratio are fixed
/// auxiliaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainParams {
    /// Young's modulus in Pa.
    pub young_modulus: f64,
    pub friction: f64,
    pub restitution: f64,
    /// Particle diameter in m.
    pub particle_size: f64,
    pub rolling_resistance: f64,
    /// Particle density in kg/m³.
    pub density: f64,
    pub poisson: f64,
}

impl TerrainParams {
    /// Parameter set reported after calibration.
    pub const CALIBRATED: Self = Self {
        young_modulus: 20.0e6,
        friction: 0.68,
        restitution: 0.25,
        particle_size: 0.06,
        rolling_resistance: 0.3,
        density: 1500.0,
        poisson: 0.3,
    };

    pub fn validate(&self) -> Result<(), TerrainError> {
        let checks: [(bool, &'static str); 7] = [
            (self.young_modulus > 0.0, "young_modulus must be positive"),
            (self.friction >= 0.0, "friction must be non-negative"),
            (
                (0.0..=1.0).contains(&self.restitution),
                "restitution must lie in [0, 1]",
            ),
            (self.particle_size > 0.0, "particle_size must be positive"),
            (
                self.rolling_resistance >= 0.0,
                "rolling_resistance must be non-negative",
            ),
            (self.density > 0.0, "density must be positive"),
            (
                (0.0..0.5).contains(&self.poisson),
                "poisson must lie in [0, 0.5)",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(TerrainError::InvalidParams(msg));
            }
        }
        let all_finite = [
            self.young_modulus,
            self.friction,
            self.restitution,
            self.particle_size,
            self.rolling_resistance,
            self.density,
            self.poisson,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(TerrainError::InvalidParams("parameters must be finite"));
        }
        Ok(())
    }
}

impl Default for TerrainParams {
    /// Pre-calibration values.
    fn default() -> Self {
        Self {
            young_modulus: 1.0e6,
            friction: 0.67,
            restitution: 0.25,
            particle_size: 0.06,
            rolling_resistance: 0.1,
            density: 1500.0,
            poisson: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TerrainError {
    #[error("invalid terrain parameters: {0}")]
    InvalidParams(&'static str),
    #[error("bed extent {width} m x {height} m is smaller than one particle")]
    ExtentTooSmall { width: f64, height: f64 },
    #[error("particle {particle} reached {speed:.3} m/s at t = {time:.6} s; time step too large")]
    UnstableStep {
        particle: usize,
        speed: f64,
        time: f64,
    },
    #[error("invalid bucket profile: {0}")]
    InvalidProfile(&'static str),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(&'static str),
    #[error("time step must be positive and finite")]
    InvalidTimeStep,
}
