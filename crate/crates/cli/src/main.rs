use std::process::ExitCode;

use clap::Parser;
use kai_cli::{execute, exit_code, Cli};

fn main() -> ExitCode {
    // Usage errors exit 1; 2 is reserved for a rejected quality gate.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(report) => {
            print!("{}", report.render());
            ExitCode::from(exit_code(&report) as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
