mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Common, DistanceOpts, OrbitOpts, PsvOpts, RenderOpts, VerifyOpts};

#[derive(Parser)]
#[command(name = "merolab", version, about = "Iterate, render and check transcendental meromorphic maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Classify a grid of seeds and write a PNG or PPM image
    Render {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: RenderOpts,
    },
    /// Write one orbit as CSV
    Orbit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: OrbitOpts,
    },
    /// Write a truncated postsingular cloud as CSV
    Psv {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: PsvOpts,
    },
    /// Estimate the distance from a point to the boundary of its class
    Distance {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: DistanceOpts,
    },
    /// Run one check and write its JSON report
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: VerifyOpts,
    },
}

#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
    /// A check ran and did not pass; its report was written.
    CheckFailed,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::CheckFailed => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Render { common, opts } => commands::render(&common, opts),
        Command::Orbit { common, opts } => commands::orbit(&common, opts),
        Command::Psv { common, opts } => commands::psv(&common, opts),
        Command::Distance { common, opts } => commands::distance(&common, opts),
        Command::Verify { common, opts } => commands::verify(&common, opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(e) => eprintln!("usage error: {e:#}"),
                Failure::Runtime(e) => eprintln!("error: {e:#}"),
                Failure::CheckFailed => {}
            }
            ExitCode::from(f.code())
        }
    }
}
