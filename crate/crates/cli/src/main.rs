mod args;
mod commands;
mod config;
mod error;
mod validate;

use std::ffi::OsString;
use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use twophoton_core::io::RunManifest;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| execute(&cli))
}

fn execute(cli: &Cli) -> CliResult<()> {
    let out = cli.common.out_dir.clone();
    fs::create_dir_all(&out)?;
    let start = Instant::now();
    let common = &cli.common;
    let (outcome, args) = match &cli.command {
        Command::Noise(a) => (commands::noise(a, common, &out)?, json!(a)),
        Command::Floquet(a) => (commands::floquet(a, &out)?, json!(a)),
        Command::Dynamics(a) => (commands::dynamics(a, common, &out)?, json!(a)),
        Command::Correlator(a) => (commands::correlator(a, common, &out)?, json!(a)),
        Command::Spectrum(a) => (commands::spectrum(a, common, &out)?, json!(a)),
        Command::ReproduceFig2(a) => (commands::reproduce_fig2(a, &out)?, json!(a)),
        Command::Validate(a) => (validate::run(a, common.seed, &out)?, json!(a)),
    };
    let name = cli.command.name();
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: name.to_string(),
        parameters: json!({ "arguments": args, "common": common, "derived": outcome.derived }),
        seed: Some(common.seed),
        beta_convention: outcome.beta_convention.map(|c| c.as_str().to_string()),
        outputs: outcome.outputs,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    manifest.write(&out.join(format!("{name}_manifest.json")))?;
    match outcome.failure {
        Some(msg) => Err(CliError::Validation(msg)),
        None => Ok(()),
    }
}

/// Parses `argv`, runs the command and returns the process exit status.
fn launch(argv: Vec<OsString>) -> u8 {
    let argv = match config::expand(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    ExitCode::from(launch(std::env::args_os().collect()))
}

#[cfg(test)]
mod tests;
