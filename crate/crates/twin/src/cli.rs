//! Command-line front-end.
//!
//! Exit codes: 0 success, 1 I/O, usage or configuration error, 2 domain error (unreachable
//! pose, failed simulation or calibration).

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use loadertwin_core::calibration::{calibrate_with, CalibrationProblem};
use loadertwin_core::mechanism::{
    forward_kinematics, inverse_kinematics, CylinderExtensions, JointSolution, TaskTarget,
};
use loadertwin_core::terrain::{DigScenario, TerrainParams};
use loadertwin_core::trace::ForceTrace;
use serde_json::{json, Value};

use crate::config::{load_config, TerrainSection, TwinConfig};
use crate::parallel::ParallelEvaluator;
use crate::report::{
    comparison_tables, read_report, read_trace_csv, read_trajectory_csv, write_gnuplot, write_iterations_csv,
    write_pose_csv, write_report, write_trace_csv, CalibrationReport,
};
use crate::sensor::{extract_traces, generate_synthetic, read_sensor_log, write_sensor_log};

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "LOADERTWIN_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "loadertwin", version, about = "Wheel-loader end-loader digital twin")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Twin configuration file (TOML)
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Overrides the simulation seed of the configuration
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for emitted files
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// More log output (repeat for debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker threads for simulations (default: one per core)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint solution and cylinder extensions for a bucket pose
    Ik {
        /// Bucket angle θ4 in rad
        #[arg(long, allow_negative_numbers = true)]
        theta4: f64,
        /// Blade height in mm
        #[arg(long, allow_negative_numbers = true)]
        height: f64,
    },
    /// Bucket pose for given cylinder extensions
    Fk {
        /// Lift cylinder extension in mm
        #[arg(long)]
        s1: f64,
        /// Tilt cylinder extension in mm
        #[arg(long)]
        s2: f64,
    },
    /// Bucket force trace for a dig trajectory
    Simulate {
        /// Keyframe CSV: t_s,x_m,y_m,angle_rad
        #[arg(long)]
        trajectory: PathBuf,
        /// Terrain parameter override, e.g. young_modulus=20e6
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Fits the terrain parameters to a measured force trace
    Calibrate {
        /// Measured force CSV: t_s,force_n
        #[arg(long, required_unless_present = "sensor_log", conflicts_with = "sensor_log")]
        measured: Option<PathBuf>,
        /// Sensor log bound through the configured column mapping
        #[arg(long)]
        sensor_log: Option<PathBuf>,
        #[arg(long)]
        trajectory: PathBuf,
        /// Maximum objective evaluations
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Parameter and error tables from a calibration report
    Report {
        #[arg(long)]
        result: PathBuf,
    },
    /// Sensor log that a dig with the given parameters would produce
    GenSynthetic {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Domain(_) => 2,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs a parsed command and returns what it prints on stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Ik { theta4, height } => cmd_ik(g, *theta4, *height),
        Command::Fk { s1, s2 } => cmd_fk(g, *s1, *s2),
        Command::Simulate { trajectory, params } => cmd_simulate(g, trajectory, params),
        Command::Calibrate {
            measured,
            sensor_log,
            trajectory,
            budget,
        } => cmd_calibrate(g, measured.as_deref(), sensor_log.as_deref(), trajectory, *budget),
        Command::Report { result } => cmd_report(g, result),
        Command::GenSynthetic { trajectory, params } => cmd_gen_synthetic(g, trajectory, params),
    }
}

fn config_or_default(g: &GlobalArgs) -> Result<TwinConfig, CliError> {
    match &g.config {
        Some(p) => load_config(p).map_err(input),
        None => Ok(TwinConfig::default()),
    }
}

fn required_config(g: &GlobalArgs) -> Result<TwinConfig, CliError> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| CliError::Input(format!("--config (or {CONFIG_ENV}) is required for this command")))?;
    let mut cfg = load_config(path).map_err(input)?;
    if let Some(seed) = g.seed {
        cfg.simulation.seed = seed;
    }
    Ok(cfg)
}

fn apply_overrides(base: TerrainSection, overrides: &[String]) -> Result<TerrainParams, CliError> {
    let mut s = base;
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("parameter override `{o}` is not KEY=VALUE")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("`{value}` is not a number")))?;
        let field = match key.trim() {
            "young_modulus" => &mut s.young_modulus,
            "friction" => &mut s.friction,
            "restitution" => &mut s.restitution,
            "particle_size" => &mut s.particle_size,
            "rolling_resistance" => &mut s.rolling_resistance,
            "density" => &mut s.density,
            "poisson" => &mut s.poisson,
            other => return Err(CliError::Input(format!("unknown terrain parameter `{other}`"))),
        };
        *field = v;
    }
    let p = TerrainParams::from(s);
    p.validate().map_err(input)?;
    Ok(p)
}

fn out_path(g: &GlobalArgs, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&g.out_dir).map_err(|e| CliError::Input(format!("{}: {e}", g.out_dir.display())))?;
    Ok(g.out_dir.join(name))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn render(g: &GlobalArgs, value: &Value, text: impl FnOnce() -> String) -> String {
    match g.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("JSON value");
            s.push('\n');
            s
        }
        Format::Text => text(),
    }
}

fn solution_json(target: TaskTarget, j: &JointSolution) -> Value {
    let e = &j.extensions;
    json!({
        "theta4": target.theta4,
        "height_mm": target.y_p8,
        "joints": {
            "theta0": j.theta0,
            "theta3": j.theta3,
            "theta4": j.theta4,
            "theta5": j.theta5,
            "theta6": j.theta6,
            "theta7": j.theta7,
            "theta8": j.theta8,
            "theta9": j.theta9,
            "theta10": j.theta10,
        },
        "points_mm": { "p7": j.p7, "p8": j.p8, "p12": j.p12 },
        "extensions_mm": { "s1": e.s1, "s2": e.s2, "s_lift": e.s_lift, "s_tilt": e.s_tilt },
    })
}

fn solution_text(target: TaskTarget, j: &JointSolution) -> String {
    let e = &j.extensions;
    format!(
        "theta4 {:.9} rad, height {:.6} mm\n\
         theta0 {:.9}  theta3 {:.9}  theta5 {:.9}  theta6 {:.9}\n\
         theta7 {:.9}  theta8 {:.9}  theta9 {:.9}  theta10 {:.9}\n\
         s1 {:.6} mm  s2 {:.6} mm  s_lift {:.6} mm  s_tilt {:.6} mm\n",
        target.theta4, target.y_p8, j.theta0, j.theta3, j.theta5, j.theta6, j.theta7, j.theta8, j.theta9,
        j.theta10, e.s1, e.s2, e.s_lift, e.s_tilt
    )
}

fn cmd_ik(g: &GlobalArgs, theta4: f64, height: f64) -> Result<String, CliError> {
    let geom = config_or_default(g)?.geometry();
    let target = TaskTarget { theta4, y_p8: height };
    let j = inverse_kinematics(target, &geom).map_err(domain)?;
    Ok(render(g, &solution_json(target, &j), || solution_text(target, &j)))
}

fn cmd_fk(g: &GlobalArgs, s1: f64, s2: f64) -> Result<String, CliError> {
    let geom = config_or_default(g)?.geometry();
    let (target, j) = forward_kinematics(CylinderExtensions::from_extensions(s1, s2, &geom), &geom).map_err(domain)?;
    Ok(render(g, &solution_json(target, &j), || solution_text(target, &j)))
}

fn evaluator(g: &GlobalArgs) -> Result<ParallelEvaluator, CliError> {
    ParallelEvaluator::new(g.jobs).map_err(input)
}

fn simulate_parallel(
    pool: &ParallelEvaluator,
    scenario: &DigScenario,
    params: &TerrainParams,
) -> Result<ForceTrace, CliError> {
    pool.run_dig_cycle(scenario, params).map_err(domain)
}

fn cmd_simulate(g: &GlobalArgs, trajectory: &Path, overrides: &[String]) -> Result<String, CliError> {
    let cfg = required_config(g)?;
    let params = apply_overrides(cfg.terrain, overrides)?;
    let traj = read_trajectory_csv(trajectory).map_err(input)?;
    let scenario = cfg.scenario(traj);
    let trace = simulate_parallel(&evaluator(g)?, &scenario, &params)?;
    let csv_path = out_path(g, "force.csv")?;
    write_trace_csv(&trace, create(&csv_path)?).map_err(input)?;
    write_gnuplot(&g.out_dir, "force", "Simulated bucket force", &[&trace]).map_err(input)?;
    let value = json!({
        "samples": trace.samples().len(),
        "peak_force_n": trace.peak(),
        "seed": scenario.seed,
        "slices": scenario.slices,
        "output": csv_path.display().to_string(),
    });
    Ok(render(g, &value, || {
        format!(
            "{} samples, peak force {:.3} N, written to {}\n",
            trace.samples().len(),
            trace.peak(),
            csv_path.display()
        )
    }))
}

fn cmd_calibrate(
    g: &GlobalArgs,
    measured: Option<&Path>,
    sensor_log: Option<&Path>,
    trajectory: &Path,
    budget: Option<usize>,
) -> Result<String, CliError> {
    let cfg = required_config(g)?;
    let measured = match (measured, sensor_log) {
        (Some(p), _) => read_trace_csv(p, "measured").map_err(input)?,
        (None, Some(p)) => {
            let log = read_sensor_log(p, &cfg.sensors).map_err(input)?;
            extract_traces(&log, &cfg).map_err(input)?.1
        }
        (None, None) => return Err(CliError::Input("a measured trace is required".into())),
    };
    let traj = read_trajectory_csv(trajectory).map_err(input)?;
    let problem = CalibrationProblem {
        initial: cfg.terrain(),
        bounds: cfg.bounds(),
        scenario: cfg.scenario(traj),
        measured,
        weights: cfg.weights(),
        budget: budget.unwrap_or(cfg.calibration.budget),
        tolerance: cfg.calibration.tolerance,
    };
    let pool = evaluator(g)?;
    log::info!("calibrating on {} threads", pool.threads());
    let result = calibrate_with(&problem, &pool).map_err(domain)?;
    let report = CalibrationReport::new(&result, cfg.fingerprint());

    let report_path = out_path(g, "report.json")?;
    write_report(&report, &report_path).map_err(input)?;
    let iter_path = out_path(g, "iterations.csv")?;
    write_iterations_csv(&report, create(&iter_path)?).map_err(input)?;
    let fitted = simulate_parallel(&pool, &problem.scenario, &result.fitted)?.with_label("calibrated");
    write_trace_csv(&fitted, create(&out_path(g, "fitted_force.csv")?)?).map_err(input)?;
    write_gnuplot(&g.out_dir, "calibration", "Measured and calibrated bucket force", &[&problem.measured, &fitted])
        .map_err(input)?;

    let value = serde_json::to_value(&report).expect("report is serialisable");
    Ok(render(g, &value, || comparison_tables(&report)))
}

fn cmd_report(g: &GlobalArgs, result: &Path) -> Result<String, CliError> {
    let report = read_report(result).map_err(input)?;
    let value = json!({
        "schema_version": report.schema_version,
        "parameters": { "initial": report.initial, "calibrated": report.fitted },
        "errors_pct": {
            "initial": { "peak": report.initial_peak_error_pct, "average": report.initial_avg_error_pct },
            "calibrated": { "peak": report.peak_error_pct, "average": report.avg_error_pct },
        },
        "evaluations": report.evaluations,
        "converged": report.converged,
    });
    Ok(render(g, &value, || comparison_tables(&report)))
}

fn cmd_gen_synthetic(g: &GlobalArgs, trajectory: &Path, overrides: &[String]) -> Result<String, CliError> {
    let cfg = required_config(g)?;
    let params = apply_overrides(cfg.terrain, overrides)?;
    let traj = read_trajectory_csv(trajectory).map_err(input)?;
    let run = generate_synthetic(&cfg, &params, &traj).map_err(domain)?;
    let log_path = out_path(g, "synthetic_log.csv")?;
    write_sensor_log(&run.log, create(&log_path)?).map_err(input)?;
    write_trace_csv(&run.force, create(&out_path(g, "synthetic_force.csv")?)?).map_err(input)?;
    write_pose_csv(&run.pose, create(&out_path(g, "synthetic_pose.csv")?)?).map_err(input)?;
    let value = json!({
        "rows": run.log.len(),
        "peak_force_n": run.force.peak(),
        "output": log_path.display().to_string(),
    });
    Ok(render(g, &value, || {
        format!("{} rows, peak force {:.3} N, written to {}\n", run.log.len(), run.force.peak(), log_path.display())
    }))
}
