//! Experiment plumbing: configuration, seeded sweeps and replayable trace
//! files.
//!
//! Seeds fan out as master → grid point → trial through
//! [`seeds::derive`](crate::seeds::derive), so adding grid points or trials
//! never changes the seeds of existing ones.

mod config;
mod sweep;
mod trace;

pub use config::{parse_kv, Density, ExperimentConfig, Probe, StopKind};
pub use sweep::{
    point_seed, run_sweep, write_summary_csv, write_trials_csv, GridPoint, SummaryRow, SweepGrid,
    SweepResult, TrialRow, SCHEMA_VERSION,
};
pub use trace::{
    read_trace, record, replay, replay_reader, replay_trace, write_trace, AlgorithmSpec, FormulaSpec,
    RecordedTrace, ReplayReport, TraceSpec, TRACE_FORMAT,
};
