//! Command-line front end for `pottslab`: flag parsing, replayable run
//! manifests and the per-command output files.

pub mod args;
pub mod config;
pub mod run;

use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;
use pottslab::PottsError;

use args::Cli;
use config::RunConfig;
use run::{execute, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DEGENERATE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<PottsError>() {
        Some(PottsError::DegenerateData(_)) => EXIT_DEGENERATE,
        _ => EXIT_USAGE,
    }
}

fn load_manifest(path: &PathBuf) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let config = match (cli.config, cli.command) {
        (Some(path), None) => match load_manifest(&path) {
            Ok(mut c) => {
                if let Some(seed) = cli.seed {
                    c.seed = seed;
                }
                c
            }
            Err(e) => {
                eprintln!("error: cannot read manifest {}: {e:#}", path.display());
                return EXIT_USAGE;
            }
        },
        (None, Some(cmd)) => match cmd.into_config(cli.seed.unwrap_or(0)) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        },
        (Some(_), Some(_)) => {
            eprintln!("error: --config replays a manifest and takes no subcommand");
            return EXIT_USAGE;
        }
        (None, None) => {
            eprintln!("error: a subcommand or --config is required (see --help)");
            return EXIT_USAGE;
        }
    };
    match execute(config, cli.out.as_deref()) {
        Ok(Status::Ok) => EXIT_OK,
        Ok(Status::NotConverged) => {
            eprintln!("partial stepping did not converge; the report records the trace and diagnosis");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
