//! Command-line front end for `g2flow-core`: profile files, reports and
//! the `g2flow` commands.

pub mod cli;
pub mod expr;
pub mod format;
pub mod report;

pub use cli::{run, CliError, RunConfig};
