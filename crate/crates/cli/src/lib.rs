//! Configuration-driven front end for the splitwave solver: simulations,
//! reference runs, experiment tables and step-size checks.

pub mod commands;
pub mod config;
mod error;
pub mod output;
pub mod registry;

pub use error::{CliError, CliResult};
