//! `denoise`: batch front end for the denoising toolkit.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "denoise", version, about = "Denoisers as building blocks: batch experiments")]
struct Cli {
    /// Seed for every random draw in the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON experiment config; relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving outputs and the manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Denoise a PGM or CSV signal.
    Denoise,
    /// Split a signal into a smooth base and residual layers.
    Decompose,
    /// Decompose, then reweight the layers.
    Recombine,
    /// Check the ideal-denoiser properties and print a JSON report.
    Verify {
        /// Denoiser name (identity, map_l1, mmse, map, nlm, nlm_sinkhorn, nlm_taylor) or inline JSON.
        #[arg(long)]
        denoiser: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Draw samples with the probability flow.
    Sample,
    /// Solve a linear inverse problem with a denoiser prior.
    Solve,
    /// Flag residual outliers with false-discovery-rate control.
    Anomaly,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl From<denoise_core::Error> for CliError {
    fn from(e: denoise_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= log::Level::Warn
    }

    fn log(&self, r: &log::Record) {
        if self.enabled(r.metadata()) {
            eprintln!("warning: {}", r.args());
        }
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

fn main() -> ExitCode {
    let _ = log::set_logger(&LOGGER).map(|()| log::set_max_level(log::LevelFilter::Warn));
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let ctx = commands::Context {
        seed: cli.seed,
        config: cli.config,
        out_dir: cli.out_dir,
    };
    let result = match cli.command {
        Command::Denoise => commands::denoise(&ctx),
        Command::Decompose => commands::decompose(&ctx),
        Command::Recombine => commands::recombine(&ctx),
        Command::Verify { denoiser, alpha } => commands::verify(&ctx, denoiser, alpha),
        Command::Sample => commands::sample(&ctx),
        Command::Solve => commands::solve(&ctx),
        Command::Anomaly => commands::anomaly(&ctx),
    };
    match result {
        Ok(()) => {
            eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
    }
}
