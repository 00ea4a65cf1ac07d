use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ergolab_cli::cache::write_atomic;
use ergolab_cli::{plot_csv, run, Cache, ExperimentConfig, LabResult, PlotStyle, RunOptions};

#[derive(Parser)]
#[command(name = "ergolab", version, about = "Run ergodic-theory experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and print its report.
    Run {
        config: PathBuf,
        /// Recompute even if a cached report exists.
        #[arg(long)]
        no_cache: bool,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a curve CSV as SVG.
    Plot {
        csv: PathBuf,
        /// Defaults to the CSV path with an `.svg` extension.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "")]
        title: String,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Inspect or empty the run cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    Ls,
    Clear,
}

fn dispatch(cli: Cli) -> LabResult<()> {
    match cli.command {
        Command::Run { config, no_cache, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run(&cfg, &Cache::from_env(), &RunOptions { no_cache, output_dir: out })?;
            let summary = serde_json::json!({
                "kind": report.kind,
                "config_hash": report.config_hash,
                "payload_hash": report.payload_hash,
                "cache_hit": report.cache_hit,
                "wall_clock_ms": report.wall_clock_ms,
                "output": report.output,
                "gates": report.gates,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            report.check()
        }
        Command::Plot { csv, output, title } => {
            let text = std::fs::read_to_string(&csv)?;
            let svg = plot_csv(&text, &PlotStyle { title, ..PlotStyle::default() })?;
            let out = output.unwrap_or_else(|| csv.with_extension("svg"));
            write_atomic(&out, svg.as_bytes())?;
            println!("{}", out.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!("ok {} {}", cfg.kind.name(), cfg.hash());
            Ok(())
        }
        Command::Cache { action } => {
            let cache = Cache::from_env();
            match action {
                CacheAction::Ls => {
                    for e in cache.ls()? {
                        println!("{}  {:<14} {} bytes", e.hash, e.kind, e.bytes);
                    }
                }
                CacheAction::Clear => println!("removed {} entries from {}", cache.clear()?, cache.dir().display()),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
