//! Sensor logs: mapping-driven CSV ingestion, trace extraction and synthetic logs.
//!
//! A [`ColumnMapping`] binds CSV header names to channel roles and units. Values are converted
//! to SI on read (time s, pressure Pa, length m, angle rad, force N). The synthetic log written
//! by [`write_sensor_log`] uses the identity mapping: the header is the role names and the
//! values are SI.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use loadertwin_core::calibration::pose_trace_from_trajectory;
use loadertwin_core::statics::{resultant_from_shears, soil_force_from_hinges, Axis, HingeForces, SoilForce};
use loadertwin_core::terrain::{combined_force, run_dig_slice, TerrainError, TerrainParams, Trajectory};
use loadertwin_core::trace::{ForceTrace, PoseSample, PoseTrace, TraceError};
use serde::{Deserialize, Serialize};

use crate::config::TwinConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Time,
    LiftPressure,
    TiltPressure,
    /// Bucket angle θ₄.
    Inclinometer,
    /// Machine travel.
    EncoderPosition,
    /// Blade tip height above ground.
    BladeHeight,
    /// Bucket-side shear of the main-arm load pin, per axis.
    PinMainX,
    PinMainY,
    /// Bucket-side shear of the link-A load pin, per axis.
    PinLinkX,
    PinLinkY,
}

impl Role {
    pub const ALL: [Role; 10] = [
        Role::Time,
        Role::LiftPressure,
        Role::TiltPressure,
        Role::Inclinometer,
        Role::EncoderPosition,
        Role::BladeHeight,
        Role::PinMainX,
        Role::PinMainY,
        Role::PinLinkX,
        Role::PinLinkY,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::Time => "time",
            Role::LiftPressure => "lift_pressure",
            Role::TiltPressure => "tilt_pressure",
            Role::Inclinometer => "inclinometer",
            Role::EncoderPosition => "encoder_position",
            Role::BladeHeight => "blade_height",
            Role::PinMainX => "pin_main_x",
            Role::PinMainY => "pin_main_y",
            Role::PinLinkX => "pin_link_x",
            Role::PinLinkY => "pin_link_y",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Role::Time => Dimension::Time,
            Role::LiftPressure | Role::TiltPressure => Dimension::Pressure,
            Role::Inclinometer => Dimension::Angle,
            Role::EncoderPosition | Role::BladeHeight => Dimension::Length,
            Role::PinMainX | Role::PinMainY | Role::PinLinkX | Role::PinLinkY => Dimension::Force,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Time,
    Pressure,
    Angle,
    Length,
    Force,
}

impl Dimension {
    fn si_unit(self) -> Unit {
        match self {
            Dimension::Time => Unit::S,
            Dimension::Pressure => Unit::Pa,
            Dimension::Angle => Unit::Rad,
            Dimension::Length => Unit::M,
            Dimension::Force => Unit::N,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    S,
    Ms,
    Pa,
    KPa,
    MPa,
    Bar,
    Rad,
    Deg,
    M,
    Mm,
    N,
    KN,
}

impl Unit {
    pub fn dimension(self) -> Dimension {
        match self {
            Unit::S | Unit::Ms => Dimension::Time,
            Unit::Pa | Unit::KPa | Unit::MPa | Unit::Bar => Dimension::Pressure,
            Unit::Rad | Unit::Deg => Dimension::Angle,
            Unit::M | Unit::Mm => Dimension::Length,
            Unit::N | Unit::KN => Dimension::Force,
        }
    }

    pub fn to_si(self, v: f64) -> f64 {
        match self {
            Unit::S | Unit::Pa | Unit::Rad | Unit::M | Unit::N => v,
            Unit::Ms | Unit::Mm => v / 1000.0,
            Unit::KPa | Unit::KN => v * 1000.0,
            Unit::MPa => v * 1e6,
            Unit::Bar => v * 1e5,
            Unit::Deg => v.to_radians(),
        }
    }
}

impl FromStr for Unit {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "s" => Unit::S,
            "ms" => Unit::Ms,
            "Pa" => Unit::Pa,
            "kPa" => Unit::KPa,
            "MPa" => Unit::MPa,
            "bar" => Unit::Bar,
            "rad" => Unit::Rad,
            "deg" => Unit::Deg,
            "m" => Unit::M,
            "mm" => Unit::Mm,
            "N" => Unit::N,
            "kN" => Unit::KN,
            _ => return Err(()),
        })
    }
}

/// One CSV column bound to a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    /// Header name in the CSV file.
    pub column: String,
    pub role: Role,
    pub unit: String,
}

/// Column-mapping descriptor. An empty mapping reads every column whose header is a role name,
/// in SI units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub columns: Vec<ColumnSpec>,
}

impl ColumnMapping {
    /// Every role, under its own name, in SI units.
    pub fn identity() -> Self {
        Self::identity_for(Role::ALL)
    }

    /// Identity mapping restricted to some roles, e.g. those a written log contains.
    pub fn identity_for(roles: impl IntoIterator<Item = Role>) -> Self {
        Self {
            columns: roles
                .into_iter()
                .map(|role| ColumnSpec {
                    column: role.name().to_string(),
                    role,
                    unit: unit_name(role.dimension().si_unit()).to_string(),
                })
                .collect(),
        }
    }

    /// Checks units against roles, duplicate roles and the presence of a time column.
    pub fn validate(&self) -> Result<(), SensorError> {
        if self.columns.is_empty() {
            return Ok(());
        }
        let mut seen = BTreeMap::new();
        for c in &self.columns {
            let unit = c.unit.parse::<Unit>().map_err(|_| SensorError::UnitError {
                column: c.column.clone(),
                unit: c.unit.clone(),
                role: c.role,
            })?;
            if unit.dimension() != c.role.dimension() {
                return Err(SensorError::UnitError {
                    column: c.column.clone(),
                    unit: c.unit.clone(),
                    role: c.role,
                });
            }
            if seen.insert(c.role, ()).is_some() {
                return Err(SensorError::DuplicateRole(c.role));
            }
        }
        if !seen.contains_key(&Role::Time) {
            return Err(SensorError::MissingChannel(Role::Time));
        }
        Ok(())
    }
}

fn unit_name(u: Unit) -> &'static str {
    match u {
        Unit::S => "s",
        Unit::Ms => "ms",
        Unit::Pa => "Pa",
        Unit::KPa => "kPa",
        Unit::MPa => "MPa",
        Unit::Bar => "bar",
        Unit::Rad => "rad",
        Unit::Deg => "deg",
        Unit::M => "m",
        Unit::Mm => "mm",
        Unit::N => "N",
        Unit::KN => "kN",
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SensorError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` is not in the log header")]
    MissingColumn(String),
    #[error("channel `{0}` is required but not mapped")]
    MissingChannel(Role),
    #[error("role `{0}` is mapped twice")]
    DuplicateRole(Role),
    #[error("unit `{unit}` of column `{column}` does not fit role `{role}`")]
    UnitError { column: String, unit: String, role: Role },
    #[error("row {row}, column `{column}`: `{value}` is not a finite number")]
    BadValue { row: usize, column: String, value: String },
    #[error("time does not increase at row {row}")]
    NonMonotoneTime { row: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Time-stamped sensor channels in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorLog {
    channels: BTreeMap<Role, Vec<f64>>,
}

impl SensorLog {
    /// Builds a log from SI channels of equal length; time must be present and increasing.
    pub fn new(channels: BTreeMap<Role, Vec<f64>>) -> Result<Self, SensorError> {
        let t = channels.get(&Role::Time).ok_or(SensorError::MissingChannel(Role::Time))?;
        if let Some((role, _)) = channels.iter().find(|(_, v)| v.len() != t.len()) {
            return Err(SensorError::MissingChannel(*role));
        }
        for (role, v) in &channels {
            if let Some(row) = v.iter().position(|x| !x.is_finite()) {
                return Err(SensorError::BadValue {
                    row: row + 1,
                    column: role.name().to_string(),
                    value: v[row].to_string(),
                });
            }
        }
        if let Some(k) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(SensorError::NonMonotoneTime { row: k + 2 });
        }
        Ok(Self { channels })
    }

    pub fn len(&self) -> usize {
        self.channels[&Role::Time].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self) -> &[f64] {
        &self.channels[&Role::Time]
    }

    pub fn channel(&self, role: Role) -> Option<&[f64]> {
        self.channels.get(&role).map(Vec::as_slice)
    }

    fn require(&self, role: Role) -> Result<&[f64], SensorError> {
        self.channel(role).ok_or(SensorError::MissingChannel(role))
    }

    pub fn roles(&self) -> impl Iterator<Item = Role> + '_ {
        self.channels.keys().copied()
    }
}

/// Parses a CSV log with a header row. Rows are numbered from 1 after the header.
pub fn parse_sensor_log(reader: impl Read, mapping: &ColumnMapping) -> Result<SensorLog, SensorError> {
    mapping.validate()?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let resolved;
    let mapping = if mapping.columns.is_empty() {
        resolved = ColumnMapping::identity_for(Role::ALL.into_iter().filter(|r| header.iter().any(|h| h == r.name())));
        resolved.validate()?;
        &resolved
    } else {
        mapping
    };
    let mut bound = Vec::with_capacity(mapping.columns.len());
    for c in &mapping.columns {
        let idx = header
            .iter()
            .position(|h| h == c.column)
            .ok_or_else(|| SensorError::MissingColumn(c.column.clone()))?;
        let unit: Unit = c.unit.parse().expect("validated");
        bound.push((idx, c, unit));
    }
    let mut channels: BTreeMap<Role, Vec<f64>> = mapping.columns.iter().map(|c| (c.role, Vec::new())).collect();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        for (idx, c, unit) in &bound {
            let raw = record.get(*idx).unwrap_or("");
            let v = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| SensorError::BadValue {
                    row: r + 1,
                    column: c.column.clone(),
                    value: raw.to_string(),
                })?;
            channels.get_mut(&c.role).expect("mapped").push(unit.to_si(v));
        }
    }
    SensorLog::new(channels)
}

pub fn read_sensor_log(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<SensorLog, SensorError> {
    parse_sensor_log(File::open(path)?, mapping)
}

/// Writes every channel of the log under its role name, in SI units.
pub fn write_sensor_log(log: &SensorLog, out: impl Write) -> Result<(), SensorError> {
    let mut w = csv::Writer::from_writer(out);
    let roles: Vec<Role> = log.roles().collect();
    w.write_record(roles.iter().map(|r| r.name()))?;
    for k in 0..log.len() {
        w.write_record(roles.iter().map(|r| log.channels[r][k].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Soil force at every row from the two pins' bucket-side shear readings, bucket at rest.
pub fn soil_forces(log: &SensorLog, config: &TwinConfig) -> Result<Vec<SoilForce>, SensorError> {
    let mx = log.require(Role::PinMainX)?;
    let my = log.require(Role::PinMainY)?;
    let lx = log.require(Role::PinLinkX)?;
    let ly = log.require(Role::PinLinkY)?;
    let body = config.bucket_body();
    Ok((0..log.len())
        .map(|k| {
            let (mp_x, _) = resultant_from_shears(mx[k], 0.0, Axis::X);
            let (mp_y, _) = resultant_from_shears(my[k], 0.0, Axis::Y);
            let (sp_x, _) = resultant_from_shears(lx[k], 0.0, Axis::X);
            let (sp_y, _) = resultant_from_shears(ly[k], 0.0, Axis::Y);
            let h = HingeForces {
                f_mp_x: mp_x,
                f_mp_y: mp_y,
                f_sp_x: sp_x,
                f_sp_y: sp_y,
            };
            soil_force_from_hinges(&h, &body)
        })
        .collect())
}

/// Pose trace (blade height in mm, θ₄ from the inclinometer) and soil-force magnitude trace.
pub fn extract_traces(log: &SensorLog, config: &TwinConfig) -> Result<(PoseTrace, ForceTrace), SensorError> {
    let t = log.time();
    let height = log.require(Role::BladeHeight)?;
    let theta4 = log.require(Role::Inclinometer)?;
    let pose = PoseTrace::new(
        (0..log.len())
            .map(|k| PoseSample {
                t: t[k],
                y_p8: 1000.0 * height[k],
                theta4: theta4[k],
            })
            .collect(),
    )?;
    let force = ForceTrace::new(
        "measured",
        soil_forces(log, config)?
            .iter()
            .zip(t)
            .map(|(s, &t)| (t, s.magnitude()))
            .collect(),
    )?;
    Ok((pose, force))
}

/// Share of the supported load carried by the main-arm pin in synthetic logs.
pub const MAIN_PIN_SHARE: f64 = 0.6;

/// Pin shears that close the bucket balance for a given soil force, bucket at rest.
pub fn hinge_forces_for(soil: SoilForce, config: &TwinConfig) -> HingeForces {
    let w = config.bucket_body().weight();
    let support_y = w - soil.f_s_y;
    let f_mp_x = MAIN_PIN_SHARE * soil.f_s_x;
    let f_mp_y = MAIN_PIN_SHARE * support_y;
    HingeForces {
        f_mp_x,
        f_mp_y,
        f_sp_x: soil.f_s_x - f_mp_x,
        f_sp_y: support_y - f_mp_y,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRun {
    pub log: SensorLog,
    pub pose: PoseTrace,
    pub force: ForceTrace,
}

#[derive(Debug, thiserror::Error)]
pub enum SyntheticError {
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
}

/// Simulates a dig and writes what the sensors would have recorded.
///
/// One row per trajectory keyframe. The soil force is the simulated bucket force; it is split
/// between the two pins with [`MAIN_PIN_SHARE`]. Pressures are not modelled and are omitted.
pub fn generate_synthetic(
    config: &TwinConfig,
    params: &TerrainParams,
    trajectory: &Trajectory,
) -> Result<SyntheticRun, SyntheticError> {
    let scenario = config.scenario(trajectory.clone());
    let slices = (0..scenario.slices.max(1))
        .map(|k| run_dig_slice(&scenario, params, k))
        .collect::<Result<Vec<_>, _>>()?;
    let forces = combined_force(&scenario, &slices);
    let pose = pose_trace_from_trajectory(trajectory, &scenario.profile, &config.geometry())?;

    let mut ch: BTreeMap<Role, Vec<f64>> = BTreeMap::new();
    let mut push = |r: Role, v: f64| ch.entry(r).or_default().push(v);
    let mut force_samples = Vec::with_capacity(forces.len());
    for ((t, f), (key, p)) in forces.iter().zip(trajectory.keyframes().iter().zip(pose.samples())) {
        let soil = SoilForce {
            f_s_x: f[0],
            f_s_y: f[1],
        };
        let h = hinge_forces_for(soil, config);
        push(Role::Time, *t);
        push(Role::EncoderPosition, key.x);
        push(Role::BladeHeight, p.y_p8 / 1000.0);
        push(Role::Inclinometer, p.theta4);
        push(Role::PinMainX, h.f_mp_x);
        push(Role::PinMainY, h.f_mp_y);
        push(Role::PinLinkX, h.f_sp_x);
        push(Role::PinLinkY, h.f_sp_y);
        force_samples.push((*t, soil.magnitude()));
    }
    Ok(SyntheticRun {
        log: SensorLog::new(ch)?,
        pose,
        force: ForceTrace::new("simulated", force_samples)?,
    })
}
