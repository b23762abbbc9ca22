use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use tvfwi_core::harness::{self, ExperimentConfig};
use tvfwi_core::{io, models};

#[derive(Parser)]
#[command(
    name = "tvfwi",
    about = "TV- and box-constrained full-waveform inversion toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Shared config handling: optional config file plus key=value overrides.
/// Flags win over file values.
#[derive(Args)]
struct ConfigArgs {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set iterations=100 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("override {kv:?} must be KEY=VALUE"))?;
            cfg.set(k.trim(), v.trim())
                .with_context(|| format!("applying override {kv:?}"))?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize observed data from the ground-truth model.
    Forward(ConfigArgs),
    /// Add seeded Gaussian noise to a gather file.
    Noise {
        input: PathBuf,
        output: PathBuf,
        /// Noise variance.
        #[arg(long, default_value_t = 1.0)]
        variance: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Gaussian-smooth a grid file (initial-model recipe).
    Smooth {
        input: PathBuf,
        output: PathBuf,
        /// Standard deviation in grid points.
        #[arg(long, default_value_t = 80.0)]
        sigma: f64,
    },
    /// Run one inversion (method and parameters from the config).
    Invert {
        #[command(flatten)]
        config: ConfigArgs,
        /// Observed gather (TVFG).
        observed: PathBuf,
        /// Initial model (TVFW).
        initial: PathBuf,
        /// Run output directory.
        #[arg(long, default_value = "runs/invert")]
        run_dir: PathBuf,
    },
    /// Run PDS for every alpha in the config plus the GD baseline.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        observed: PathBuf,
        initial: PathBuf,
    },
    /// RMSE and SSIM between two grid files.
    Metrics {
        #[command(flatten)]
        config: ConfigArgs,
        a: PathBuf,
        b: PathBuf,
    },
    /// Write the bundled ground-truth models as grid files.
    MakeModels {
        /// Output directory.
        #[arg(long, default_value = "data")]
        dir: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Forward(args) => {
            let cfg = args.resolve()?;
            let path = harness::cmd_forward(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Noise { input, output, variance, seed } => {
            harness::cmd_noise(&input, &output, variance, seed)?;
            println!("wrote {}", output.display());
        }
        Command::Smooth { input, output, sigma } => {
            harness::cmd_smooth(&input, &output, sigma)?;
            println!("wrote {}", output.display());
        }
        Command::Invert { config, observed, initial, run_dir } => {
            let cfg = config.resolve()?;
            let outcome = harness::cmd_invert(&cfg, &observed, &initial, &run_dir)?;
            let last = outcome.trace.last().expect("at least one record");
            println!(
                "finished {} iterations: E = {:.6e}, TV = {:.3}",
                last.iter, last.misfit, last.tv
            );
            if let (Some(r), Some(s)) = (last.rmse, last.ssim) {
                println!("RMSE = {r:.6}, SSIM = {s:.6}");
            }
            println!("artifacts in {}", outcome.run_dir.display());
        }
        Command::Sweep { config, observed, initial } => {
            let cfg = config.resolve()?;
            let (summary, rows) = harness::cmd_sweep(&cfg, &observed, &initial)?;
            for row in rows {
                match row.alpha {
                    Some(a) => println!(
                        "pds alpha={a:>5}: RMSE = {:.6}, SSIM = {:.6}",
                        row.rmse, row.ssim
                    ),
                    None => println!(
                        "gd  baseline:  RMSE = {:.6}, SSIM = {:.6}",
                        row.rmse, row.ssim
                    ),
                }
            }
            println!("summary in {}", summary.display());
        }
        Command::Metrics { config, a, b } => {
            let cfg = config.resolve()?;
            let (rmse, ssim) = harness::cmd_metrics(&a, &b, &cfg.metric_config())?;
            println!("RMSE = {rmse:.6}");
            println!("SSIM = {ssim:.6}");
        }
        Command::MakeModels { dir } => {
            std::fs::create_dir_all(&dir)?;
            for (name, model) in [("salt", models::salt()?), ("overthrust", models::overthrust()?)]
            {
                let path = dir.join(format!("{name}.tvfw"));
                io::write_grid(&model, &path)?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
