use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use meps_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let has_out = cli.command.output().out.is_some();
    match run(&cli) {
        Ok(report) => {
            if !has_out {
                let _ = std::io::stdout().write_all(report.csv.as_bytes());
            }
            if report.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                let err = CliError::Contract(report.violations.join("; "));
                eprintln!("{err}");
                ExitCode::from(err.exit_code() as u8)
            }
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
