mod args;
mod commands;
mod manifest;
mod plot;

use std::process::ExitCode;

use clap::Parser;
use multinet_core::Error;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) | Error::Infeasible(_) => 2,
        Error::Parse { .. } | Error::Validation(_) | Error::Io { .. } => 3,
        Error::Numerical { .. } => 4,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("MULTINET_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Argument(format!("MULTINET_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Argument(format!("cannot size thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let result = configure_threads().and_then(|()| commands::run(cli.command, argv));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
