#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use config::RunConfig;
use error::CliError;

/// Closed-form solutions, kernels and Monte Carlo checks for Brownian first
/// passage to a moving boundary.
#[derive(Parser, Debug)]
#[command(name = "hitting", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    config: RunConfig,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Tabulate heat-kernel derivatives k_n(t, x) into kernels.csv
    Kernels,
    /// Tabulate the closed-form w(t, x) and kappa(x)
    Solution,
    /// Residual, quadrature and transform checks with asserted tolerances
    Verify,
    /// Run the Bluman-Shtelen transform on analytic or sampled fields
    Transform,
    /// First-passage histogram and Bessel-bridge Feynman-Kac estimate
    Simulate,
    /// Closed-form w(0, x) next to the Feynman-Kac estimate
    Compare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Kernels => "kernels",
            Command::Solution => "solution",
            Command::Verify => "verify",
            Command::Transform => "transform",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = cli.config.resolve(cli.command.name())?;
    let out = cfg.out_dir();
    std::fs::create_dir_all(&out).map_err(|e| CliError::usage(format!("cannot create {}: {e}", out.display())))?;

    let job = || match cli.command {
        Command::Kernels => commands::kernels(&cfg, &out),
        Command::Solution => commands::solution(&cfg, &out),
        Command::Verify => commands::verify(&cfg, &out),
        Command::Transform => commands::transform(&cfg, &out),
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Compare => commands::compare(&cfg, &out),
    };
    let result = match cfg.threads {
        Some(0) => return Err(CliError::usage("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    };
    cfg.write_sidecar(&out)?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CliError::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
