//! Files, configuration and command-line front-end of the wheel-loader digital twin.
//!
//! * [`config`]: the TOML twin configuration.
//! * [`sensor`]: mapping-driven sensor-log ingestion, trace extraction and synthetic logs.
//! * [`report`]: calibration reports, trace CSVs and gnuplot files.
//! * [`parallel`]: a rayon-backed batch evaluator for calibration.
//! * [`cli`]: the `loadertwin` command.

pub mod cli;
pub mod config;
pub mod parallel;
pub mod report;
pub mod sensor;

pub use config::{load_config, ConfigError, TwinConfig};
pub use parallel::ParallelEvaluator;
pub use report::{read_report, write_report, write_trace_csv, CalibrationReport};
pub use sensor::{extract_traces, read_sensor_log, ColumnMapping, SensorError, SensorLog};
