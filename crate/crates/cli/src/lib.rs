//! Configuration, presets, experiment orchestration and file output for the
//! `swarmfp` command-line tool.

pub mod config;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod report;

pub use config::{parse_config, parse_config_str, resolved_config, ExperimentSpec, InitSpec, ParticleSpec};
pub use experiment::{run_experiment, ExperimentReport, KindRun, ParticleRun, RunChecks};
pub use presets::{preset, preset_config, PRESET_NAMES};
pub use report::fit_report;
