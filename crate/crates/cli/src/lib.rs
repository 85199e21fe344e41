//! Command-line front end: CSV ingestion, model persistence, and the
//! fit / transform / evaluate / compare / gradcheck commands.
//!
//! Exit codes: 0 success, 1 input error, 2 parameter error, 3 numeric error.

pub mod args;
pub mod commands;
pub mod data;
pub mod error;
pub mod model_file;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

use std::io::Write;

/// Runs a parsed command, writing its report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Fit(a) => commands::cmd_fit(&a, out),
        Command::Transform(a) => commands::cmd_transform(&a, out),
        Command::Evaluate(a) => commands::cmd_evaluate(&a, out),
        Command::Compare(a) => commands::cmd_compare(&a, out),
        Command::Gradcheck(a) => commands::cmd_gradcheck(&a, out),
    }
}
