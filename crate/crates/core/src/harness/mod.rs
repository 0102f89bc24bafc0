//! Monte-Carlo sweeps, scenario files and CSV output.

pub mod config_file;
pub mod output;
pub mod sweep;

pub use config_file::{format_config, parse_config, read_config, ScenarioFile};
pub use output::{write_csv, write_rows, write_trace};
pub use sweep::{
    run_sweep, run_sweep_with_threads, run_trial, CellResult, Method, ResultRow, SweepSpec,
    SweepVariable,
};
