use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use galton_harness::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(outcome) => {
            if let Some(note) = &outcome.note {
                eprintln!("galton: {note}");
            }
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(outcome.stdout.as_bytes()).is_err() {
                return ExitCode::from(4);
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("galton: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
