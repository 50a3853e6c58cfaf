//! Experiment harness for conformal Ricci flow runs on the square torus:
//! JSON configuration, the end-to-end runner with measured-inequality
//! checks, bit-exact field snapshots, and plot/CSV emission.

pub mod config;
pub mod experiment;
pub mod plots;
pub mod snapshot;

pub use config::{parse_config, serialize_config, ExperimentConfig, PointKind, PointsConfig};
pub use experiment::{
    evaluate_checks, parse_report, run_experiment, sample_schedule, serialize_report,
    CheckResult, Cmp, ExperimentReport, RunReport,
};
pub use plots::{diagnostics_csv, emit_plots};
pub use snapshot::{read_snapshot, read_snapshot_header, write_snapshot};
