//! Emitted files: calibration reports (JSON), trace and trajectory CSVs, gnuplot data.
//!
//! Every JSON document carries `schema_version`. Keys are written in declaration order and
//! floats in shortest round-trip form, so equal inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use loadertwin_core::calibration::CalibrationResult;
use loadertwin_core::terrain::{BucketPose, TerrainError, Trajectory};
use loadertwin_core::trace::{ForceTrace, PoseSample, PoseTrace, TraceError};
use serde::{Deserialize, Serialize};

use crate::config::TerrainSection;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Stream(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub index: usize,
    pub params: TerrainSection,
    /// `null` when the evaluation failed.
    pub objective: Option<f64>,
    pub peak_error_pct: Option<f64>,
    pub avg_error_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub schema_version: u32,
    /// SHA-256 of the canonical configuration text.
    pub config_fingerprint: String,
    pub initial: TerrainSection,
    pub fitted: TerrainSection,
    pub initial_peak_error_pct: Option<f64>,
    pub initial_avg_error_pct: Option<f64>,
    pub objective: f64,
    pub peak_error_pct: f64,
    pub avg_error_pct: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub history: Vec<EvaluationRecord>,
}

impl CalibrationReport {
    pub fn new(result: &CalibrationResult, config_fingerprint: impl Into<String>) -> Self {
        let first = result.initial();
        Self {
            schema_version: SCHEMA_VERSION,
            config_fingerprint: config_fingerprint.into(),
            initial: first.params.into(),
            fitted: result.fitted.into(),
            initial_peak_error_pct: finite(first.peak_error),
            initial_avg_error_pct: finite(first.avg_error),
            objective: result.objective,
            peak_error_pct: result.peak_error_pct,
            avg_error_pct: result.avg_error_pct,
            evaluations: result.evaluations,
            converged: result.converged,
            history: result
                .history
                .iter()
                .enumerate()
                .map(|(index, e)| EvaluationRecord {
                    index,
                    params: e.params.into(),
                    objective: finite(e.objective),
                    peak_error_pct: finite(e.peak_error),
                    avg_error_pct: finite(e.avg_error),
                    failure: e.failure.as_ref().map(ToString::to_string),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serialisable");
        s.push('\n');
        s
    }

    pub fn from_json(src: &str) -> Result<Self, ReportError> {
        let r: Self = serde_json::from_str(src)?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(ReportError::Schema(r.schema_version));
        }
        Ok(r)
    }
}

pub fn write_report(report: &CalibrationReport, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    fs::write(path, report.to_json()).map_err(io_err(path))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<CalibrationReport, ReportError> {
    let path = path.as_ref();
    CalibrationReport::from_json(&fs::read_to_string(path).map_err(io_err(path))?)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// One row per evaluation with the running best objective.
pub fn write_iterations_csv(report: &CalibrationReport, out: impl Write) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "index",
        "young_modulus",
        "friction",
        "restitution",
        "particle_size",
        "rolling_resistance",
        "objective",
        "peak_error_pct",
        "avg_error_pct",
        "best_objective",
    ])?;
    let mut best = f64::INFINITY;
    for e in &report.history {
        best = best.min(e.objective.unwrap_or(f64::INFINITY));
        let p = &e.params;
        w.write_record([
            e.index.to_string(),
            p.young_modulus.to_string(),
            p.friction.to_string(),
            p.restitution.to_string(),
            p.particle_size.to_string(),
            p.rolling_resistance.to_string(),
            opt(e.objective),
            opt(e.peak_error_pct),
            opt(e.avg_error_pct),
            opt(finite(best)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(trace: &ForceTrace, out: impl Write) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "force_n"])?;
    for (t, f) in trace.samples() {
        w.write_record([t.to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn numeric_rows<const N: usize>(reader: impl Read, header: [&str; N]) -> Result<Vec<[f64; N]>, ReportError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let head = rdr.headers()?.clone();
    let idx: Vec<usize> = header
        .iter()
        .map(|h| {
            head.iter().position(|x| x == *h).ok_or_else(|| {
                ReportError::Format(format!("missing column `{h}`"))
            })
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = [0.0; N];
        for (k, &i) in idx.iter().enumerate() {
            let raw = rec.get(i).unwrap_or("");
            row[k] = raw.parse().map_err(|_| {
                ReportError::Format(format!("row {}: `{raw}` in column `{}` is not a number", r + 1, header[k]))
            })?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a `t_s,force_n` CSV.
pub fn parse_trace_csv(reader: impl Read, label: &str) -> Result<ForceTrace, ReportError> {
    let rows = numeric_rows(reader, ["t_s", "force_n"])?;
    Ok(ForceTrace::new(label, rows.into_iter().map(|[t, f]| (t, f)).collect())?)
}

pub fn read_trace_csv(path: impl AsRef<Path>, label: &str) -> Result<ForceTrace, ReportError> {
    let path = path.as_ref();
    parse_trace_csv(fs::File::open(path).map_err(io_err(path))?, label)
}

pub fn write_pose_csv(trace: &PoseTrace, out: impl Write) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "y_p8_mm", "theta4_rad"])?;
    for s in trace.samples() {
        w.write_record([s.t.to_string(), s.y_p8.to_string(), s.theta4.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_pose_csv(reader: impl Read) -> Result<PoseTrace, ReportError> {
    let rows = numeric_rows(reader, ["t_s", "y_p8_mm", "theta4_rad"])?;
    Ok(PoseTrace::new(
        rows.into_iter()
            .map(|[t, y_p8, theta4]| PoseSample { t, y_p8, theta4 })
            .collect(),
    )?)
}

/// Bucket keyframes: `t_s,x_m,y_m,angle_rad` (blade tip in bed coordinates).
pub fn parse_trajectory_csv(reader: impl Read) -> Result<Trajectory, ReportError> {
    let rows = numeric_rows(reader, ["t_s", "x_m", "y_m", "angle_rad"])?;
    Ok(Trajectory::new(
        rows.into_iter()
            .map(|[t, x, y, angle]| BucketPose { t, x, y, angle })
            .collect(),
    )?)
}

pub fn read_trajectory_csv(path: impl AsRef<Path>) -> Result<Trajectory, ReportError> {
    let path = path.as_ref();
    parse_trajectory_csv(fs::File::open(path).map_err(io_err(path))?)
}

pub fn write_trajectory_csv(trajectory: &Trajectory, out: impl Write) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "x_m", "y_m", "angle_rad"])?;
    for k in trajectory.keyframes() {
        w.write_record([k.t.to_string(), k.x.to_string(), k.y.to_string(), k.angle.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<stem>.dat` (one index block per trace) and `<stem>.gp` plotting them.
pub fn write_gnuplot(dir: &Path, stem: &str, title: &str, traces: &[&ForceTrace]) -> Result<(), ReportError> {
    let mut dat = String::new();
    for (k, tr) in traces.iter().enumerate() {
        if k > 0 {
            dat.push_str("\n\n");
        }
        let _ = writeln!(dat, "# {}", tr.label());
        for (t, f) in tr.samples() {
            let _ = writeln!(dat, "{t} {f}");
        }
    }
    let mut gp = String::new();
    let _ = writeln!(gp, "set title '{title}'");
    gp.push_str("set xlabel 'time [s]'\nset ylabel 'bucket force [N]'\nset grid\n");
    let series: Vec<String> = traces
        .iter()
        .enumerate()
        .map(|(k, tr)| format!("'{stem}.dat' index {k} with linespoints title '{}'", tr.label()))
        .collect();
    let _ = writeln!(gp, "plot {}", series.join(", \\\n     "));
    let dat_path = dir.join(format!("{stem}.dat"));
    fs::write(&dat_path, dat).map_err(io_err(&dat_path))?;
    let gp_path = dir.join(format!("{stem}.gp"));
    fs::write(&gp_path, gp).map_err(io_err(&gp_path))?;
    Ok(())
}

/// Parameter and error tables before and after calibration.
pub fn comparison_tables(r: &CalibrationReport) -> String {
    let pct = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
    let mut s = String::new();
    s.push_str("Soil parameters\n");
    let _ = writeln!(s, "{:<28}{:>16}{:>16}", "parameter", "initial", "calibrated");
    let rows = [
        ("Young's modulus [MPa]", r.initial.young_modulus / 1e6, r.fitted.young_modulus / 1e6),
        ("friction coefficient", r.initial.friction, r.fitted.friction),
        ("restitution coefficient", r.initial.restitution, r.fitted.restitution),
        ("particle size [m]", r.initial.particle_size, r.fitted.particle_size),
        ("rolling resistance", r.initial.rolling_resistance, r.fitted.rolling_resistance),
    ];
    for (name, a, b) in rows {
        let _ = writeln!(s, "{name:<28}{a:>16.4}{b:>16.4}");
    }
    s.push_str("\nForce errors [%]\n");
    let _ = writeln!(s, "{:<28}{:>16}{:>16}", "metric", "initial", "calibrated");
    let _ = writeln!(s, "{:<28}{:>16}{:>16}", "peak error", pct(r.initial_peak_error_pct), pct(Some(r.peak_error_pct)));
    let _ = writeln!(s, "{:<28}{:>16}{:>16}", "average error", pct(r.initial_avg_error_pct), pct(Some(r.avg_error_pct)));
    let _ = writeln!(s, "\nevaluations: {}, converged: {}", r.evaluations, r.converged);
    s
}
