use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mtt_fisher_core::experiments::{catalog, default_settings, write_csv, ExperimentConfig};
use mtt_fisher_core::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "mtt-fisher", version, about = "Information-loss experiments for multi-target tracking")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment and write results.csv and manifest.json.
    Run {
        config: PathBuf,
        /// Multiplies every Monte Carlo sample count.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Output directory; overrides the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, env = "MTT_FISHER_THREADS")]
        threads: Option<usize>,
    },
    /// Check a config without running it and print it with defaults filled in.
    Validate { config: PathBuf },
    /// List experiment ids, descriptions and default settings.
    ListExperiments,
}

/// Marks errors that come from a bad configuration.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    Ok(ExperimentConfig::from_str(&text)?)
}

fn git_hash() -> String {
    Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn run(config: &Path, scale: f64, out: Option<PathBuf>, threads: Option<usize>) -> Result<()> {
    let cfg = load(config)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let dir = out
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results").join(cfg.settings.id()));
    let start = Instant::now();
    let rows = cfg.run(scale)?;
    let wall = start.elapsed().as_secs_f64();

    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv_path = dir.join("results.csv");
    let file = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_csv(&rows, file)?;
    let manifest = json!({
        "config": cfg.to_json(),
        "seed": cfg.seed,
        "scale": scale,
        "threads": rayon::current_num_threads(),
        "git_hash": git_hash(),
        "wall_time_seconds": wall,
        "rows": rows.len(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    let manifest_path = dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    eprintln!("{}: {} rows in {wall:.1}s -> {}", cfg.settings.id(), rows.len(), dir.display());
    Ok(())
}

fn validate(config: &Path) -> Result<()> {
    let cfg = load(config)?;
    println!("OK");
    println!("{}", serde_json::to_string_pretty(&cfg.to_json())?);
    Ok(())
}

fn list() -> Result<()> {
    for e in catalog() {
        println!("{:<24} {}", e.id, e.description);
        println!("{:<24} defaults: {}", "", default_settings(e.id)?.to_json());
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 2,
        Some(Error::NumericalCollapse(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run { config, scale, out, threads } => run(&config, scale, out, threads),
        Cmd::Validate { config } => validate(&config),
        Cmd::ListExperiments => list(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
