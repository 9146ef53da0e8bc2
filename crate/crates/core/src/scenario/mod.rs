//! Scenario files, the end-to-end pipeline, artifacts and sweeps.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod sweep;

pub use config::{parse_config, ScenarioConfig};
pub use output::{run_to_dir, RunSummary};
pub use pipeline::{run_scenario, ScenarioError, ScenarioOutcome};
pub use sweep::{parse_values, run_sweep, SweepParam};
