//! `cexp`: command-line front end. One JSON document per run on stdout (or
//! `--out`); errors as JSON objects on stderr.
//!
//! Exit codes: 0 success, 2 invalid input, 3 outside the convergence radius
//! (without `--force`), 4 resource cap exceeded.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use cexp_core::{Error, ErrorKind};
use clap::Parser;
use serde_json::json;

use args::Cli;

pub enum Failure {
    Core(Error),
    Usage(String),
    Io(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) => match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::OutsideRadius => 3,
                ErrorKind::Resource => 4,
            },
            Failure::Usage(_) | Failure::Io(_) => 2,
        }
    }

    fn report(&self) -> serde_json::Value {
        let (code, kind, message) = match self {
            Failure::Core(e) => {
                let kind = match e.kind() {
                    ErrorKind::Validation => "validation",
                    ErrorKind::OutsideRadius => "outside_radius",
                    ErrorKind::Resource => "resource",
                };
                (e.code(), kind, e.to_string())
            }
            Failure::Usage(m) => ("Usage", "validation", m.clone()),
            Failure::Io(m) => ("Io", "validation", m.clone()),
        };
        json!({"error": {"code": code, "kind": kind, "message": message}})
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return fail(&Failure::Usage(e.render().to_string().trim_end().to_string()));
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(&f),
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let common = cli.command.common();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.workers {
        if n == 0 {
            return Err(Failure::usage("--workers must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Io(e.to_string()))?;
    let value = pool.install(|| commands::run(&cli.command))?;
    let mut text = serde_json::to_string_pretty(&value).expect("JSON values always serialize");
    text.push('\n');
    match &common.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn fail(f: &Failure) -> ExitCode {
    eprintln!("{}", f.report());
    ExitCode::from(f.exit_code())
}
