use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};

use mmwave_highway::sweep::{simulate, CODE_VERSION};
use mmwave_highway::{validate_config, ScenarioConfig};

#[derive(Debug, Parser)]
#[command(name = "mmwave-highway", about = "Monte Carlo simulator for mmWave D2D links on a highway")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured sweep and write CSVs plus a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `run.output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        snapshots: Option<usize>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Check a config file and print it with defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    Version,
}

fn load(path: &PathBuf) -> anyhow::Result<ScenarioConfig> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    validate_config(&raw).map_err(|errs| {
        let list: Vec<String> = errs.iter().map(|e| format!("  - {e}")).collect();
        anyhow!("{} rejected:\n{}", path.display(), list.join("\n"))
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Version => println!("mmwave-highway {CODE_VERSION}"),
        Command::Validate { config } => {
            let cfg = load(&config)?;
            print!("{}", cfg.canonical_toml());
        }
        Command::Simulate {
            config,
            out,
            seed,
            snapshots,
            workers,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(n) = snapshots {
                cfg.num_snapshots = n;
            }
            let Some(out) = out.or_else(|| cfg.output_dir.clone()) else {
                bail!("no output directory: pass --out or set run.output_dir");
            };
            let (manifest, _) = simulate(&cfg, &out, workers)?;
            for p in &manifest.points {
                println!(
                    "point {}: lambda={} psi={} evaluated={} skipped={} truncations={}",
                    p.sweep_id, p.lambda, p.psi_deg, p.evaluated, p.skipped, p.truncations
                );
            }
            println!(
                "wrote {} ({} points, {:.1} s, config sha256 {})",
                out.display(),
                manifest.points.len(),
                manifest.wall_clock_s,
                manifest.config_sha256
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
