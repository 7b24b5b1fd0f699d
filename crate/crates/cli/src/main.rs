use std::process::ExitCode;

use clap::Parser;
use uavsense::cli::{run_command, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
