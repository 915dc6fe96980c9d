//! Experiment configuration, execution and CSV metrics.

pub mod config;
pub mod metrics;
pub mod run;

pub use config::{ExperimentConfig, PolicyKind, RegretMode};
pub use metrics::{checkpoints, regret_series, Checkpoint, MetricsSeries, PolicySeries, RegretPoint};
pub use run::{hindsight_for, run, run_detailed, RunOutput};
