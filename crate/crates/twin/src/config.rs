//! Twin configuration file.
//!
//! The file is TOML. Every section and key is optional; omitted values take the machine and
//! soil defaults. Lengths of the linkage are in mm, linkage angles in degrees, everything else
//! in SI units. Unknown keys are rejected.
//!
//! ```toml
//! [geometry]
//! l5 = 560.0
//! beta0_deg = 75.0
//!
//! [terrain]
//! young_modulus = 20e6
//!
//! [calibration.bounds]
//! restitution = [0.25, 0.25]
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use loadertwin_core::calibration::{ParamBounds, Weights};
use loadertwin_core::mechanism::{LinkageGeometry, StrokeRange};
use loadertwin_core::statics::{BucketBody, LoadPin, SampledLoad};
use loadertwin_core::terrain::{BedSpec, BucketProfile, DigScenario, SettleOptions, SimOptions, TerrainParams, Trajectory};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sensor::ColumnMapping;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

fn validation(msg: impl Into<String>) -> ConfigError {
    ConfigError::Validation(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
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
    pub l17: f64,
    pub l18: f64,
    pub beta0_deg: f64,
    pub beta1_deg: f64,
    pub beta2_deg: f64,
    pub beta3_deg: f64,
    pub beta4_deg: f64,
    pub beta5_deg: f64,
    pub angle_p0_p12_p2_deg: f64,
    pub p0: [f64; 2],
    /// Cylinder extension range `[min, max]` in mm.
    pub stroke_lift: [f64; 2],
    pub stroke_tilt: [f64; 2],
    /// Part masses in kg.
    pub masses: BTreeMap<String, f64>,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = LinkageGeometry::default();
        Self {
            l1: g.l1,
            l2: g.l2,
            l3: g.l3,
            l4: g.l4,
            l5: g.l5,
            l6: g.l6,
            l7: g.l7,
            l8: g.l8,
            l9: g.l9,
            l10: g.l10,
            l11: g.l11,
            l12: g.l12,
            l13: g.l13,
            l14: g.l14,
            l15: g.l15,
            l16: g.l16,
            l17: g.l17,
            l18: g.l18,
            beta0_deg: 75.0,
            beta1_deg: 100.0,
            beta2_deg: 26.8,
            beta3_deg: 12.31,
            beta4_deg: 16.06,
            beta5_deg: 5.86,
            angle_p0_p12_p2_deg: 10.0,
            p0: g.p0,
            stroke_lift: [g.stroke_lift.min, g.stroke_lift.max],
            stroke_tilt: [g.stroke_tilt.min, g.stroke_tilt.max],
            masses: g.masses,
        }
    }
}

impl GeometrySection {
    pub fn to_geometry(&self) -> LinkageGeometry {
        LinkageGeometry {
            l1: self.l1,
            l2: self.l2,
            l3: self.l3,
            l4: self.l4,
            l5: self.l5,
            l6: self.l6,
            l7: self.l7,
            l8: self.l8,
            l9: self.l9,
            l10: self.l10,
            l11: self.l11,
            l12: self.l12,
            l13: self.l13,
            l14: self.l14,
            l15: self.l15,
            l16: self.l16,
            l17: self.l17,
            l18: self.l18,
            beta0: self.beta0_deg.to_radians(),
            beta1: self.beta1_deg.to_radians(),
            beta2: self.beta2_deg.to_radians(),
            beta3: self.beta3_deg.to_radians(),
            beta4: self.beta4_deg.to_radians(),
            beta5: self.beta5_deg.to_radians(),
            angle_p0_p12_p2: self.angle_p0_p12_p2_deg.to_radians(),
            p0: self.p0,
            stroke_lift: StrokeRange::new(self.stroke_lift[0], self.stroke_lift[1]),
            stroke_tilt: StrokeRange::new(self.stroke_tilt[0], self.stroke_tilt[1]),
            masses: self.masses.clone(),
            ..LinkageGeometry::default()
        }
    }
}

/// Load-pin layout in mm: contact spans at both ends, gauge grooves between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PinGeometry {
    pub length: f64,
    pub span_base: f64,
    pub span_link: f64,
    pub grooves: [f64; 2],
}

impl Default for PinGeometry {
    fn default() -> Self {
        Self {
            length: 180.0,
            span_base: 60.0,
            span_link: 60.0,
            grooves: [75.0, 105.0],
        }
    }
}

impl PinGeometry {
    pub fn to_load_pin(&self) -> LoadPin {
        LoadPin {
            length: self.length,
            span_base: self.span_base,
            span_link: self.span_link,
            grooves: self.grooves,
            q_base: SampledLoad::default(),
            q_link: SampledLoad::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PinsSection {
    pub main_arm: PinGeometry,
    pub link_a: PinGeometry,
}

/// Piston areas in m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PistonSection {
    pub lift_head_area: f64,
    pub lift_rod_area: f64,
    pub tilt_head_area: f64,
    pub tilt_rod_area: f64,
}

impl Default for PistonSection {
    fn default() -> Self {
        let disk = |d: f64| std::f64::consts::PI * d * d / 4.0;
        Self {
            lift_head_area: disk(0.09),
            lift_rod_area: disk(0.09) - disk(0.05),
            tilt_head_area: disk(0.10),
            tilt_rod_area: disk(0.10) - disk(0.056),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BucketSection {
    /// Mass carried by the instrumented pins, kg.
    pub mass: f64,
    /// m.
    pub width: f64,
    /// Cross-section polyline in m, starting at the blade tip.
    pub vertices: Vec<[f64; 2]>,
    pub pivot: [f64; 2],
}

impl Default for BucketSection {
    fn default() -> Self {
        let p = BucketProfile::default();
        Self {
            mass: BucketBody::DEFAULT_MASS,
            width: 1.0,
            vertices: p.vertices,
            pivot: p.pivot,
        }
    }
}

impl BucketSection {
    pub fn profile(&self) -> BucketProfile {
        BucketProfile {
            vertices: self.vertices.clone(),
            pivot: self.pivot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BedSection {
    pub width: f64,
    pub height: f64,
}

impl Default for BedSection {
    fn default() -> Self {
        Self { width: 2.0, height: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainSection {
    pub young_modulus: f64,
    pub friction: f64,
    pub restitution: f64,
    pub particle_size: f64,
    pub rolling_resistance: f64,
    pub density: f64,
    pub poisson: f64,
}

impl Default for TerrainSection {
    fn default() -> Self {
        Self::from(TerrainParams::default())
    }
}

impl From<TerrainParams> for TerrainSection {
    fn from(p: TerrainParams) -> Self {
        Self {
            young_modulus: p.young_modulus,
            friction: p.friction,
            restitution: p.restitution,
            particle_size: p.particle_size,
            rolling_resistance: p.rolling_resistance,
            density: p.density,
            poisson: p.poisson,
        }
    }
}

impl From<TerrainSection> for TerrainParams {
    fn from(s: TerrainSection) -> Self {
        Self {
            young_modulus: s.young_modulus,
            friction: s.friction,
            restitution: s.restitution,
            particle_size: s.particle_size,
            rolling_resistance: s.rolling_resistance,
            density: s.density,
            poisson: s.poisson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub seed: u64,
    /// Independent bed realisations across the bucket width.
    pub slices: usize,
    /// Fixed time step in s; omitted means the stability bound for the parameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub blowup_speed: f64,
    pub settle_max_speed: f64,
    pub settle_max_steps: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let settle = SettleOptions::default();
        Self {
            seed: 7,
            slices: 8,
            dt: None,
            blowup_speed: SimOptions::default().blowup_speed,
            settle_max_speed: settle.max_speed,
            settle_max_steps: settle.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub young_modulus: [f64; 2],
    pub friction: [f64; 2],
    pub restitution: [f64; 2],
    pub particle_size: [f64; 2],
    pub rolling_resistance: [f64; 2],
}

impl Default for BoundsSection {
    fn default() -> Self {
        let b = ParamBounds::default().freezing_restitution_and_size(&TerrainParams::default());
        let pair = |x: (f64, f64)| [x.0, x.1];
        Self {
            young_modulus: pair(b.young_modulus),
            friction: pair(b.friction),
            restitution: pair(b.restitution),
            particle_size: pair(b.particle_size),
            rolling_resistance: pair(b.rolling_resistance),
        }
    }
}

impl BoundsSection {
    pub fn to_bounds(&self) -> ParamBounds {
        let pair = |x: [f64; 2]| (x[0], x[1]);
        ParamBounds {
            young_modulus: pair(self.young_modulus),
            friction: pair(self.friction),
            restitution: pair(self.restitution),
            particle_size: pair(self.particle_size),
            rolling_resistance: pair(self.rolling_resistance),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsSection {
    pub peak: f64,
    pub avg: f64,
}

impl Default for WeightsSection {
    fn default() -> Self {
        let w = Weights::default();
        Self { peak: w.peak, avg: w.avg }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub budget: usize,
    pub tolerance: f64,
    pub weights: WeightsSection,
    pub bounds: BoundsSection,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            budget: 100,
            tolerance: 1e-3,
            weights: WeightsSection::default(),
            bounds: BoundsSection::default(),
        }
    }
}

/// Complete twin configuration, in file units.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwinConfig {
    pub geometry: GeometrySection,
    pub pins: PinsSection,
    pub pistons: PistonSection,
    pub bucket: BucketSection,
    pub bed: BedSection,
    pub terrain: TerrainSection,
    pub simulation: SimulationSection,
    pub calibration: CalibrationSection,
    pub sensors: ColumnMapping,
}

fn line_column(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

impl TwinConfig {
    /// Parses and validates configuration text.
    pub fn from_toml_str(src: &str) -> Result<Self, ConfigError> {
        let cfg: TwinConfig = toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_column(src, s.start));
            ConfigError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML text; parsing it gives back an equal configuration.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always serialisable")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn fingerprint(&self) -> String {
        Sha256::digest(self.to_toml_string().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn geometry(&self) -> LinkageGeometry {
        self.geometry.to_geometry()
    }

    pub fn terrain(&self) -> TerrainParams {
        self.terrain.into()
    }

    pub fn bucket_body(&self) -> BucketBody {
        BucketBody::at_rest(self.bucket.mass)
    }

    pub fn bed(&self) -> BedSpec {
        BedSpec {
            width: self.bed.width,
            height: self.bed.height,
        }
    }

    /// Dig scenario for a trajectory with the configured bed, bucket and simulation settings.
    pub fn scenario(&self, trajectory: Trajectory) -> DigScenario {
        let s = &self.simulation;
        DigScenario {
            profile: self.bucket.profile(),
            bucket_width: self.bucket.width,
            slices: s.slices,
            dt: s.dt,
            settle: SettleOptions {
                max_speed: s.settle_max_speed,
                max_steps: s.settle_max_steps,
                ..SettleOptions::default()
            },
            blowup_speed: s.blowup_speed,
            ..DigScenario::new(self.bed(), trajectory, s.seed)
        }
    }

    pub fn bounds(&self) -> ParamBounds {
        self.calibration.bounds.to_bounds()
    }

    pub fn weights(&self) -> Weights {
        let w = self.calibration.weights;
        Weights { peak: w.peak, avg: w.avg }
    }

    /// Re-checks every invariant of the embedded types.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.geometry().validate().map_err(|e| validation(e.0))?;
        for (name, pin) in [("pins.main_arm", &self.pins.main_arm), ("pins.link_a", &self.pins.link_a)] {
            pin.to_load_pin()
                .validate()
                .map_err(|e| validation(format!("{name}: {e}")))?;
        }
        let p = &self.pistons;
        for (name, area) in [
            ("lift_head_area", p.lift_head_area),
            ("lift_rod_area", p.lift_rod_area),
            ("tilt_head_area", p.tilt_head_area),
            ("tilt_rod_area", p.tilt_rod_area),
        ] {
            if !(area > 0.0 && area.is_finite()) {
                return Err(validation(format!("{name} must be positive")));
            }
        }
        if !(self.bucket.mass > 0.0 && self.bucket.mass.is_finite()) {
            return Err(validation("bucket mass must be positive"));
        }
        if !(self.bucket.width > 0.0 && self.bucket.width.is_finite()) {
            return Err(validation("bucket width must be positive"));
        }
        self.bucket.profile().validate().map_err(|e| validation(e.to_string()))?;
        if !(self.bed.width > 0.0 && self.bed.height > 0.0 && self.bed.width.is_finite() && self.bed.height.is_finite()) {
            return Err(validation("bed extent must be positive"));
        }
        self.terrain().validate().map_err(|e| validation(e.to_string()))?;
        let s = &self.simulation;
        if s.slices == 0 {
            return Err(validation("slices must be at least 1"));
        }
        if let Some(dt) = s.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(validation("dt must be positive"));
            }
        }
        if !(s.blowup_speed > 0.0) {
            return Err(validation("blowup_speed must be positive"));
        }
        if !(s.settle_max_speed > 0.0) {
            return Err(validation("settle_max_speed must be positive"));
        }
        let c = &self.calibration;
        self.bounds().validate().map_err(|e| validation(e.to_string()))?;
        if !(c.weights.peak >= 0.0 && c.weights.avg >= 0.0 && c.weights.peak + c.weights.avg > 0.0) {
            return Err(validation("weights must be non-negative and not both zero"));
        }
        if c.budget == 0 {
            return Err(validation("budget must be at least 1"));
        }
        if !(c.tolerance > 0.0) {
            return Err(validation("tolerance must be positive"));
        }
        self.sensors.validate().map_err(|e| validation(e.to_string()))?;
        Ok(())
    }
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<TwinConfig, ConfigError> {
    let path = path.as_ref();
    let src = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    TwinConfig::from_toml_str(&src)
}
