//! Command-line front end for the discrete Dirac integrators: reads a TOML
//! run description, integrates one of the built-in systems and writes the
//! trajectory as CSV or JSON.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, Formulation, OutputFormat, OutputSpec, RunConfig, SystemSpec};
pub use error::{ConfigError, RunError};
pub use run::{run, simulate, RunSummary, Simulation};
