//! Scenario ingestion, sweeps and CSV output for the NOMA relay engine.

pub mod error;
pub mod scenario_file;
pub mod sweep;

pub use error::CliError;
pub use scenario_file::{derived_quantities, load_scenario, ScenarioFile};
pub use sweep::{report_achievable, run_sweep, write_csv, Mode, ResultRow, SweepOptions};
