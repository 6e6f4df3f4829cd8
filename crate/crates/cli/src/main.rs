use std::process::ExitCode;

use clap::Parser;
use ssep_cli::cli::{run, write, Cli};
use ssep_cli::error::CliError;

fn fail(err: &CliError) -> ExitCode {
    let doc = serde_json::to_string(&err.to_document())
        .unwrap_or_else(|_| format!("{{\"error\":{{\"message\":{:?}}}}}", err.to_string()));
    eprintln!("{doc}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|r| write(&r).map(|_| r.exit_code)) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => fail(&e),
    }
}
