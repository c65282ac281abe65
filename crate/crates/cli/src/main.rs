use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use qpkc_lab::args::Cli;
use qpkc_lab::{run_command, write_report, HarnessError};

/// Collapses a clap error into one line, keeping the list of valid values when there is one.
fn one_line(err: &clap::Error) -> String {
    err.to_string()
        .lines()
        .map(str::trim)
        .filter(|l| {
            !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn run() -> Result<(), HarnessError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            return Err(HarnessError::Usage(
                one_line(&e).trim_start_matches("error: ").to_owned(),
            ))
        }
    };
    let (config, command, show_config) = cli.resolve()?;
    if show_config {
        let text = config.to_toml()?;
        return std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| HarnessError::Io {
                path: "<stdout>".into(),
                source: e,
            });
    }
    let Some(command) = command else {
        return Err(HarnessError::Usage(
            "missing subcommand: table1, session, sweep or estimate-sim".into(),
        ));
    };
    let report = run_command(&command, &config)?;
    write_report(&report, config.out.as_deref(), config.format)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
