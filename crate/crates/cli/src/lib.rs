//! Command-line front end: simulation, analysis, PCA comparison and tail
//! checks over CSV data, with JSON results.

pub mod args;
pub mod commands;
pub mod csvio;
pub mod error;

use args::{Cli, Command};
use error::Result;

/// Runs one parsed command; file outputs are written by the command itself.
pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => commands::run_simulate(a).map(|_| ()),
        Command::Analyze(a) => commands::run_analyze(a).map(|_| ()),
        Command::ComparePca(a) => commands::run_compare_pca(a).map(|_| ()),
        Command::Tailcheck(a) => commands::run_tailcheck(a).map(|_| ()),
    }
}
