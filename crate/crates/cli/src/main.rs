mod commands;
mod config;
mod output;
mod verify;

use clap::{Parser, Subcommand};
use config::RunConfig;
use output::{Failure, Run};
use std::path::PathBuf;
use std::process::ExitCode;

/// Bath-assisted cooling of a dephasing spin: kernels, pulse protocols,
/// optimization and dense-simulation checks.
#[derive(Parser)]
#[command(name = "spincool", version)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Tabulate F(t), ξ(t) and e^{-ξ(t)}.
    Kernels,
    /// Polarization curves for the ohmic and 1/f panels.
    Fig1,
    /// Optimized polarizations for the table rows and columns.
    Table1,
    /// Optimize one protocol or a greedy block sequence.
    Optimize,
    /// Evaluate one pulse sequence.
    Evolve,
    /// Dense-oracle comparison and invariant checks.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Kernels => "kernels",
            Command::Fig1 => "fig1",
            Command::Table1 => "table1",
            Command::Optimize => "optimize",
            Command::Evolve => "evolve",
            Command::Verify => "verify",
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    let threads = rayon::current_num_threads();
    let mut r = Run::new(&cli.out, cli.command.name())?;
    let result = match cli.command {
        Command::Kernels => commands::kernels(&cfg, &mut r),
        Command::Fig1 => commands::fig1(&cfg, &mut r),
        Command::Table1 => commands::table1(&cfg, &mut r),
        Command::Optimize => commands::optimize(&cfg, &mut r),
        Command::Evolve => commands::evolve(&cfg, &mut r),
        Command::Verify => verify::verify(&cfg, &mut r),
    };
    // A failed verification still leaves a manifest behind.
    if result.is_ok() || matches!(result, Err(Failure::Verification(_))) {
        r.finish(&cfg, threads)?;
    }
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spincool: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
