use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use wge_core::dataset::Split;
use wge_core::encoder::Variant;

use wge::commands;
use wge::config::RunConfig;

/// Two-view quaternion graph network embeddings for knowledge-graph link prediction.
#[derive(Parser)]
#[command(name = "wge", version)]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true, env = "WGE_CONFIG")]
    config: Option<PathBuf>,
    /// Directory with train.txt, valid.txt and test.txt.
    #[arg(long, global = true)]
    dataset_dir: Option<PathBuf>,
    /// Directory for all outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Encoder variant; `ablate` also accepts `all` or a comma-separated list.
    #[arg(long, global = true)]
    variant: Option<String>,
    /// Split to evaluate.
    #[arg(long, global = true, default_value = "test")]
    split: String,
    /// Any config key, e.g. `--set lr=0.001`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the vocabulary, graph views and relation-pair statistics.
    Prepare,
    /// Train one model and save its best checkpoint.
    Train,
    /// Rank a split with a saved checkpoint.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train several encoder variants under one config and compare them.
    Ablate,
}

fn resolve(cli: &Cli, variant_from_flag: bool) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_env(std::env::vars().filter(|(k, _)| k != "WGE_CONFIG"))?;
    cfg.apply_overrides(&cli.overrides)?;
    if let Some(d) = &cli.dataset_dir {
        cfg.dataset_dir = d.clone();
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
    }
    if variant_from_flag {
        if let Some(v) = &cli.variant {
            cfg.set("variant", v, "--variant")?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_variants(spec: Option<&str>) -> Result<Vec<Variant>> {
    match spec {
        None | Some("all") => Ok(std::iter::once(Variant::TwoView).chain(Variant::ABLATIONS).collect()),
        Some(list) => list
            .split(',')
            .map(|name| Variant::from_name(name.trim()).ok_or_else(|| anyhow!("unknown variant `{name}`")))
            .collect(),
    }
}

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let mut progress = |line: &str| eprintln!("{line}");
    match &cli.command {
        Command::Prepare => {
            let cfg = resolve(&cli, true)?;
            print!("{}", commands::prepare(&cfg)?);
        }
        Command::Train => {
            let cfg = resolve(&cli, true)?;
            let report = commands::train(&cfg, &mut progress)?;
            let summary = std::fs::read_to_string(report.out_dir.join(commands::SUMMARY_FILE))?;
            print!("{summary}");
            println!(
                "best epoch {} of {}; outputs in {}",
                report.best_epoch,
                report.epochs_run,
                report.out_dir.display()
            );
        }
        Command::Evaluate { checkpoint } => {
            let split = Split::from_name(&cli.split).ok_or_else(|| anyhow!("unknown split `{}`", cli.split))?;
            let out = commands::evaluate(checkpoint, cli.dataset_dir.as_deref(), split, cli.out_dir.as_deref())?;
            print!("{}", out.table);
        }
        Command::Ablate => {
            let variants = parse_variants(cli.variant.as_deref())?;
            let cfg = resolve(&cli, false)?;
            commands::ablate(&cfg, &variants, &mut progress)?;
            print!("{}", std::fs::read_to_string(cfg.out_dir.join("ablation.txt"))?);
        }
    }
    eprintln!("finished in {:.1}s", started.elapsed().as_secs_f64());
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
