use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use sirfit::commands;
use sirfit::{ConfigArgs, Result, RunConfig};

/// Fit the SIR epidemic model to daily case counts with Metropolis-Hastings.
///
/// Settings come from built-in defaults, then `--config FILE`, then flags.
#[derive(Debug, Parser)]
#[command(name = "sirfit", version, allow_negative_numbers = true)]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    settings: ConfigArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a noisy outbreak and write the dataset CSV.
    #[command(allow_negative_numbers = true)]
    Simulate {
        /// Output dataset (default: data_path).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the posterior for a dataset and write the chain CSV.
    #[command(allow_negative_numbers = true)]
    Fit {
        /// Input dataset (default: data_path).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output chain (default: chain_path).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a chain: summary JSON plus post-burn-in samples CSV.
    #[command(allow_negative_numbers = true)]
    Summarize {
        /// Input chain (default: chain_path).
        #[arg(long)]
        chain: Option<PathBuf>,
        /// Output summary (default: summary_path).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output samples (default: samples_path).
        #[arg(long)]
        samples_out: Option<PathBuf>,
    },
    /// Posterior predictive check: band CSV and coverage of the data.
    #[command(allow_negative_numbers = true)]
    Ppc {
        /// Input chain (default: chain_path).
        #[arg(long)]
        chain: Option<PathBuf>,
        /// Input dataset (default: data_path).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output band (default: ppc_path).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output per-draw curves (default: draws_path, if set).
        #[arg(long)]
        draws_out: Option<PathBuf>,
    },
    /// Print the effective configuration in config-file syntax.
    #[command(allow_negative_numbers = true)]
    ShowConfig,
}

fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.settings)?;
    match cli.command {
        Command::Simulate { out } => {
            let out = out.unwrap_or_else(|| cfg.data_path.clone());
            let data = commands::simulate(&cfg, &out)?;
            println!("wrote {} observations to {}", data.len(), out.display());
        }
        Command::Fit { data, out } => {
            let data = data.unwrap_or_else(|| cfg.data_path.clone());
            let out = out.unwrap_or_else(|| cfg.chain_path.clone());
            let report = commands::fit(&cfg, &data, &out)?;
            println!("{report}");
            info!("chain written to {}", out.display());
        }
        Command::Summarize {
            chain,
            out,
            samples_out,
        } => {
            let chain = chain.unwrap_or_else(|| cfg.chain_path.clone());
            let out = out.unwrap_or_else(|| cfg.summary_path.clone());
            let samples_out = samples_out.unwrap_or_else(|| cfg.samples_path.clone());
            let r = commands::summarize(&cfg, &chain, &out, &samples_out)?;
            for (name, s) in [("beta", r.beta), ("gamma", r.gamma), ("r0", r.r0)] {
                println!(
                    "{name:>5}: mean {:.4}  std {:.4}  {:.0}% CI [{:.4}, {:.4}]",
                    s.mean,
                    s.std,
                    100.0 * s.level,
                    s.ci_low,
                    s.ci_high
                );
            }
            println!("samples: {}  acceptance rate: {:.4}", r.n_samples, r.acceptance_rate);
        }
        Command::Ppc {
            chain,
            data,
            out,
            draws_out,
        } => {
            let chain = chain.unwrap_or_else(|| cfg.chain_path.clone());
            let data = data.unwrap_or_else(|| cfg.data_path.clone());
            let out = out.unwrap_or_else(|| cfg.ppc_path.clone());
            let draws_out = draws_out.or_else(|| cfg.draws_path.clone());
            let report = commands::ppc(&cfg, &chain, &data, &out, draws_out.as_deref())?;
            println!("{report}");
        }
        Command::ShowConfig => print!("{}", cfg.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
