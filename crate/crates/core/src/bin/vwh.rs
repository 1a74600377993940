use std::process::ExitCode;

use clap::Parser;
use vwh::cli::{dispatch, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match dispatch(&cli, &mut stdout) {
        Ok(outcome) if outcome.passed() => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("failed: {}", outcome.failures.join(", "));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
