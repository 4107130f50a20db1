//! `antimean`: antimeans, anticovariance, and anti-MANOVA for 3D projective
//! shape data from the command line.

mod commands;
mod config;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, ExtraArgs, Resolved};

#[derive(Parser)]
#[command(name = "antimean", version, about = "Extrinsic antimeans and anti-MANOVA for 3D projective shapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample antimean, eigenvalues, anticovariance, and gap diagnostics of one group.
    Antimean(Flags),
    /// Anti-MANOVA across two or more groups.
    Manova(Flags),
    /// One-sample test of a hypothesized antimean (`--null`).
    Test1(Flags),
    /// Two-sample test for equal antimeans.
    Test2(Flags),
    /// Projective coordinates of every configuration.
    Coords(Flags),
    /// Write a synthetic landmark file.
    Synth(Flags),
    /// Monte Carlo size, coverage, or power on synthetic data.
    Calibrate(Flags),
}

#[derive(clap::Args)]
struct Flags {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    extra: ExtraArgs,
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<antimean::Error> for CliError {
    fn from(e: antimean::Error) -> Self {
        use antimean::Error as E;
        let code = match &e {
            E::Io(_) | E::Parse { .. } | E::Schema(_) => 3,
            E::InvalidInput(_) | E::ShapeMismatch { .. } => 1,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, flags) = match &cli.command {
        Command::Antimean(f) => ("antimean", f),
        Command::Manova(f) => ("manova", f),
        Command::Test1(f) => ("test1", f),
        Command::Test2(f) => ("test2", f),
        Command::Coords(f) => ("coords", f),
        Command::Synth(f) => ("synth", f),
        Command::Calibrate(f) => ("calibrate", f),
    };
    let cfg = Resolved::new(&flags.common, &flags.extra, name)?;
    let result = match cli.command {
        Command::Antimean(_) => commands::antimean(&cfg)?,
        Command::Manova(_) => commands::manova(&cfg)?,
        Command::Test1(_) => commands::test1(&cfg)?,
        Command::Test2(_) => commands::test2(&cfg)?,
        Command::Coords(_) => commands::coords(&cfg)?,
        Command::Synth(_) => commands::synth(&cfg)?,
        Command::Calibrate(_) => commands::calibrate(&cfg)?,
    };
    report::emit(name, &cfg, result)
}
