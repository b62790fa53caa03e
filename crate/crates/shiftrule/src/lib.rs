//! File formats, experiment runners and the command line for `shiftrule-core`.

pub mod commands;
pub mod error;
pub mod executor;
pub mod experiments;
pub mod schema;
pub mod table;

pub use error::{CliError, CliResult};
pub use executor::{thread_pool, ParallelShots};
pub use experiments::{run_experiment, ExperimentName, ExperimentSpec};
pub use table::Table;
