//! File formats and commands behind the `unitdemand` binary.

pub mod commands;
pub mod document;
pub mod error;
pub mod output;

pub use commands::{run, Cli, Command};
pub use document::{load_equilibrium, load_market, EquilibriumDocument, MarketDocument, SCHEMA_VERSION};
pub use error::{CliError, CliResult};
