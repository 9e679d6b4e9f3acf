use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use ftg_cli::args::{Cli, Command, OutputArgs};
use ftg_cli::{run, CliError, Outcome, EXIT_DATA, EXIT_USAGE};

fn output_args(c: &Command) -> &OutputArgs {
    match c {
        Command::Fit(a) => &a.output,
        Command::Sample(a) => &a.output,
        Command::Risk(a) => &a.output,
        Command::Gof(a) => &a.output,
        Command::Plotdata(a) => &a.output,
    }
}

fn write(outcome: &Outcome, out: &OutputArgs) -> Result<(), CliError> {
    let io_err = |p: &PathBuf, e: std::io::Error| CliError { code: EXIT_DATA, message: format!("{}: {e}", p.display()) };
    match &out.out {
        Some(path) => std::fs::write(path, &outcome.primary).map_err(|e| io_err(path, e))?,
        None => std::io::stdout()
            .write_all(outcome.primary.as_bytes())
            .map_err(|e| CliError { code: EXIT_DATA, message: e.to_string() })?,
    }
    let target = out.manifest.clone().or_else(|| {
        out.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    match target {
        Some(path) => {
            let manifest = serde_json::to_string_pretty(&outcome.manifest).expect("manifest serializes") + "\n";
            std::fs::write(&path, manifest).map_err(|e| io_err(&path, e))?
        }
        None => eprintln!("manifest: {}", serde_json::to_string(&outcome.manifest).expect("manifest serializes")),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = run(&cli.command).and_then(|outcome| {
        for w in &outcome.warnings {
            eprintln!("{w}");
        }
        write(&outcome, output_args(&cli.command))?;
        Ok(outcome.exit_code)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
