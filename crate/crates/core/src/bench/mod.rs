//! Fixtures, configuration, metrics and the benchmark driver behind the CLI.

pub mod config;
pub mod metrics;
pub mod run;
pub mod synth;

pub use config::{parse_levels, ImageSource, RunConfig};
pub use metrics::{
    aggregate, parse_raw, render_csv, render_markdown, write_raw, MetricsRow, RepeatRecord, Stat, BYTES_PER_MB,
};
pub use run::{
    cell_label, ledger_lines, regenerate_reports, run_bench, run_cell, run_register, run_secure, session_config,
    write_reports, CellOutcome, ImagePair, RegisterOutput, SecureRun, BENCH_TITLE, REGISTER_TITLE,
};
pub use synth::{load_truth_displacement, Fixture, FixtureKind, GroundTruth};
