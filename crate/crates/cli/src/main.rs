mod config;
mod run;
mod svg;

use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;

use config::Cli;

/// Failure reported as one JSON object on stderr.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub exit_code: u8,
}

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: "ConfigError".into(), message: message.into(), exit_code: EXIT_CONFIG }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        CliError { kind: "ParseError".into(), message: message.into(), exit_code: EXIT_CONFIG }
    }
}

impl From<pqflex::Error> for CliError {
    fn from(e: pqflex::Error) -> Self {
        use pqflex::Error as E;
        let exit_code = match &e {
            E::InfeasibleBase { .. }
            | E::BaseViolation(_)
            | E::InfeasibleSystem
            | E::EmptyRegion
            | E::UnboundedRegion
            | E::DegenerateReference
            | E::NoFeasibleSamples(_) => EXIT_INFEASIBLE,
            E::SingularVoltage { .. } | E::NonConvergence { .. } | E::Numerical(_) | E::DimensionMismatch(_) => {
                EXIT_NUMERICAL
            }
            _ => EXIT_CONFIG,
        };
        CliError { kind: e.kind().into(), message: e.to_string(), exit_code }
    }
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PQFLEX_LOG", "warn"))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(CliError::config(e.render().to_string().trim_end())),
    };
    init_logging();
    match run::dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    let json = serde_json::to_string(&e).unwrap_or_else(|_| format!("{{\"kind\":\"{}\"}}", e.kind));
    eprintln!("{json}");
    ExitCode::from(e.exit_code)
}
