use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tailwait_cli::commands;
use tailwait_cli::config::RunConfig;
use tailwait_cli::CliError;

/// Max-stable velocity simulation and tail waiting-time inference.
#[derive(Parser)]
#[command(name = "tailwait", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a panel from the configured process.
    Simulate(CommonArgs),
    /// Extract marginal and pairwise waiting times from a panel.
    Waits(CommonArgs),
    /// Fit the waiting-time mixture per site and per pair.
    Fit(CommonArgs),
    /// Compute the tail-dependence index and p_d for every pair.
    Gamma(CommonArgs),
    /// Run simulate, waits, fit, and gamma end to end with plot-ready output.
    Simstudy(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the metric (rkhs | ks | both).
    #[arg(long)]
    metric: Option<String>,
    /// Override the simulation-study scale factor.
    #[arg(long)]
    scale: Option<f64>,
}

fn load(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = Some(out.clone());
    }
    if let Some(metric) = &args.metric {
        cfg.gamma.metric = commands::metric_override(metric)?;
    }
    if let Some(scale) = args.scale {
        cfg.simstudy.scale = scale;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let out = commands::cmd_simulate(&load(&args)?)?;
            println!("wrote {}", out.panel_path.display());
        }
        Command::Waits(args) => {
            let out = commands::cmd_waits(&load(&args)?)?;
            println!("wrote {}", out.marginal_path.display());
            if let Some(p) = out.pair_path {
                println!("wrote {}", p.display());
            }
        }
        Command::Fit(args) => {
            let out = commands::cmd_fit(&load(&args)?)?;
            println!(
                "fitted {} site chains and {} pair chains",
                out.site_chains.len(),
                out.pair_chains.len()
            );
        }
        Command::Gamma(args) => {
            let out = commands::cmd_gamma(&load(&args)?)?;
            println!("wrote {} ({} rows)", out.gamma_path.display(), out.rows.len());
        }
        Command::Simstudy(args) => {
            let out = commands::cmd_simstudy(&load(&args)?)?;
            println!(
                "simulation study complete: {} pairs in {}",
                out.gamma_rows.len(),
                out.out_dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
