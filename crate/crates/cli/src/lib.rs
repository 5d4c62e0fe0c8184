//! Configuration, exports, and the end-to-end simulation pipeline behind
//! the `porevox` command-line tool.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod vtk;

pub use config::{parse_config, parse_config_str, SimulationConfig};
pub use pipeline::{prepare, run_flow_only, run_pipeline, RunSummary};
