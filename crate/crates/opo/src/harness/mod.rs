//! Ensemble orchestration: configuration, block execution, persistence and reporting.

pub mod compare;
pub mod config;
pub mod output;
pub mod runner;
pub mod sweep;

pub use compare::{compare_runs, compare_with_theory, CompareReport, Tolerances};
pub use config::RunConfig;
pub use output::{run_ensemble, replay_manifest, RunManifest, RunOutcome};
pub use runner::{ExecOptions, Plan, Shard};
pub use sweep::{preset, sweep, Preset, SweepAxis, SweepTemplate, Table};
