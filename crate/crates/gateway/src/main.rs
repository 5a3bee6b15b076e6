use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use paperassign_core::workflow::SystemClock;
use paperassign_gateway::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    let result = run(cli, Arc::new(SystemClock));
    let _ = std::io::stdout().write_all(result.stdout.as_bytes());
    let _ = std::io::stderr().write_all(result.stderr.as_bytes());
    ExitCode::from(result.exit_code as u8)
}
