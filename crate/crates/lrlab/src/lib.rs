//! Scenario harness: config loading, ensemble runs, sweeps and exports.

pub mod config;
pub mod error;
pub mod export;
pub mod results;
pub mod runner;

pub use config::{Mode, ScenarioConfig};
pub use error::{HarnessError, Result};
pub use results::ResultSet;
pub use runner::{run_scenario, run_sweep, RunOptions};
