//! Command-line front end.
//!
//! Exit codes: `0` success, `1` systemic failure, `2` audit failure under
//! `--strict`, `64` usage error.

mod commands;
pub mod config;
pub mod output;
pub mod state_io;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};

use clap::error::ErrorKind;
use clap::Parser;

use crate::error::Error;
use config::{resolve, Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_AUDIT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::Domain(_)
            | Error::OnEssentialSpectrum { .. }
            | Error::GridMismatch(_)
            | Error::Parse(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

/// Parse `args` and run; diagnostics go to `err`, results to `--out` or `out`.
pub fn run<I, T, O, E>(args: I, out: &mut O, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    O: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let dump = match &cli.command {
        Command::OracleCompare(a) => a.dump_matrix.clone(),
        _ => None,
    };
    let out_path = cli.common.out.clone();
    let command = cli.command.clone();
    let cfg = match resolve(cli.common, cli.command) {
        Ok(cfg) => cfg,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let result = match command {
        Command::Dispersion => commands::dispersion(&cfg),
        Command::Effmass(_) => commands::effmass(&cfg),
        Command::Resolvent(_) => commands::resolvent(&cfg),
        Command::OracleCompare(_) => commands::oracle_compare(&cfg, dump.as_deref()),
        Command::BoundsAudit => commands::bounds_audit(&cfg),
    };
    let report = match result {
        Ok(r) => r,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
        Err(CliError::Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_FAILURE;
        }
    };
    let written = match &out_path {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            report.table.write(&cfg, &mut w)?;
            w.flush()
        }),
        None => report.table.write(&cfg, out),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write output: {e}");
        return EXIT_FAILURE;
    }
    for msg in &report.audit_failures {
        let _ = writeln!(err, "audit: {msg}");
    }
    if cfg.strict && !report.audit_failures.is_empty() {
        return EXIT_AUDIT;
    }
    EXIT_OK
}
