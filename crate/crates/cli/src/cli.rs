//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{self, Document, TableName, VerifyOptions};
use crate::config::{state_cap_from_env, OutputFormat, Overrides, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "ssep",
    version,
    about = "Multi-type symmetric exclusion process on an open 1D lattice"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the stationary law exactly and compare it with the product form.
    Exact(CommonArgs),
    /// Run seeded kinetic Monte Carlo replicas and estimate flux, sojourn times and marginals.
    Simulate(CommonArgs),
    /// Run the invariant battery; exits with status 1 if any check fails.
    Verify(VerifyArgs),
    /// Exact solve, simulation and their comparison in one document.
    Report(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file; missing keys take default values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the document here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// CSV table to emit; each command has a default.
    #[arg(long, value_enum)]
    pub table: Option<TableArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Events per replica, warm-up included.
    #[arg(long)]
    pub events: Option<u64>,
    #[arg(long)]
    pub replicas: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Test mode: scale the strongest stationary transition by this factor.
    #[arg(long, hide = true)]
    pub perturb: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableArg {
    Marginals,
    Distribution,
    Flux,
    Sojourn,
    Checks,
    Comparison,
}

impl From<TableArg> for TableName {
    fn from(t: TableArg) -> Self {
        match t {
            TableArg::Marginals => TableName::Marginals,
            TableArg::Distribution => TableName::Distribution,
            TableArg::Flux => TableName::Flux,
            TableArg::Sojourn => TableName::Sojourn,
            TableArg::Checks => TableName::Checks,
            TableArg::Comparison => TableName::Comparison,
        }
    }
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        config.apply(&Overrides {
            output: self.output.clone(),
            format: self.format.map(|f| match f {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Csv => OutputFormat::Csv,
            }),
            seed: self.seed,
            max_events: self.events,
            replicas: self.replicas,
        })?;
        Ok(config)
    }
}

/// Rendered document plus the exit status it implies.
#[derive(Debug)]
pub struct Rendered {
    pub text: String,
    pub output: Option<PathBuf>,
    pub exit_code: i32,
}

pub fn run(cli: &Cli) -> Result<Rendered> {
    let state_cap = state_cap_from_env()?;
    let (common, perturb) = match &cli.command {
        Command::Exact(a) | Command::Simulate(a) | Command::Report(a) => (a, None),
        Command::Verify(v) => (&v.common, v.perturb),
    };
    let config = common.resolve()?;
    let doc = match &cli.command {
        Command::Exact(_) => Document::Exact(commands::exact(&config, state_cap)?),
        Command::Simulate(_) => Document::Simulate(commands::simulate(&config, state_cap)?),
        Command::Verify(_) => Document::Verify(commands::verify(
            &config,
            state_cap,
            &VerifyOptions { perturb },
        )?),
        Command::Report(_) => Document::Report(Box::new(commands::report(&config, state_cap)?)),
    };
    let text = match config.format {
        OutputFormat::Json => doc.to_json()?,
        OutputFormat::Csv => {
            let table = common
                .table
                .map(TableName::from)
                .unwrap_or_else(|| doc.default_table());
            doc.table(table)?.to_csv()?
        }
    };
    Ok(Rendered {
        text,
        output: config.output,
        exit_code: doc.exit_code(),
    })
}

pub fn write(rendered: &Rendered) -> Result<()> {
    use std::io::Write;
    match &rendered.output {
        Some(path) => std::fs::write(path, &rendered.text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => std::io::stdout()
            .write_all(rendered.text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}
