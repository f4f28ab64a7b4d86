use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use momentflow_cli::args::{Cli, Command, Format};
use momentflow_cli::commands::{execute, exit_code, CliError};
use momentflow_cli::document::BracketDocument;
use momentflow_core::catalog;

fn write_out(path: Option<&std::path::Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn catalog_command(export: Option<&std::path::Path>) -> Result<(), CliError> {
    let entries = catalog::all();
    match export {
        None => {
            let mut out = String::new();
            for e in &entries {
                out.push_str(&format!("{:<16} n={:<2} {}\n", e.name, e.bracket.n(), e.description));
            }
            write_out(None, &out)
        }
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
            for e in &entries {
                let doc = BracketDocument::from_real(&e.bracket, Some(e.name.to_string()));
                write_out(Some(&dir.join(format!("{}.json", e.name))), &doc.to_json())?;
            }
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    if let Command::Catalog { export } = &cli.command {
        catalog_command(export.as_deref())?;
        return Ok(0);
    }
    let report = execute(&cli.command, &cli.opts)?;
    for r in &report.results {
        if let Some(e) = &r.error {
            log::warn!("{}: {e}", r.input);
        }
    }
    let text = match cli.opts.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    write_out(cli.opts.output.as_deref(), &text)?;
    Ok(exit_code(report.worst_status()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => 4,
    };
    ExitCode::from(code as u8)
}
