//! Scenario ingestion, experiment orchestration, metrics and file output.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod output;

pub use config::{load_scenario, resolve_seed, ScenarioConfig};
pub use experiment::{run_experiment, ExperimentOutput};
pub use metrics::{compute_report, MetricsReport};
pub use output::{emit_report, Formats};
