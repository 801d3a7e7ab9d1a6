use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bubblefield::experiment::{self, presets, ExperimentError, RunConfig};
use clap::{Args, Parser, Subcommand};

/// Bubble formation and transport experiments.
#[derive(Debug, Parser)]
#[command(name = "bubblefield", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its output files.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory (defaults to `output-dir` from the config, then
        /// `bubblefield-out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the fully resolved configuration as TOML and exit. The
        /// printout is a valid `--config` file to start from.
        #[arg(long)]
        seed_doc: bool,
    },
    /// Print the fitted ellipse of every bubble.
    Table {
        #[command(flatten)]
        source: Source,
        /// Comma-separated output with full precision.
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in experiment: exp1, exp2, exp-2bubble, exp10 or exp-efield.
    #[arg(long)]
    preset: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<RunConfig, ExperimentError> {
        match (&self.preset, &self.config) {
            (Some(name), _) => presets::preset(name).ok_or_else(|| ExperimentError::Config {
                key: "preset".into(),
                message: format!(
                    "unknown preset `{name}`, expected one of {}",
                    presets::PRESET_NAMES.join(", ")
                ),
            }),
            (None, Some(path)) => RunConfig::from_file(path),
            (None, None) => unreachable!("clap requires one source"),
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("BUBBLEFIELD_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().with_context(|| {
        format!("BUBBLEFIELD_THREADS must be a positive integer, got `{value}`")
    })?;
    anyhow::ensure!(threads > 0, "BUBBLEFIELD_THREADS must be at least 1");
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("cannot size the worker pool")?;
    Ok(())
}

fn print_table(rows: &[experiment::TableRow], csv: bool) {
    if csv {
        println!("id,delta_p_over_alpha,a,b");
        for r in rows {
            println!("{},{},{},{}", r.id, r.delta_p_over_alpha, r.a, r.b);
        }
    } else {
        println!(
            "{:>4}  {:>10}  {:>10}  {:>10}",
            "id", "dp/alpha", "a_bubble", "b_bubble"
        );
        for r in rows {
            println!(
                "{:>4}  {:>10.4}  {:>10.4}  {:>10.4}",
                r.id, r.delta_p_over_alpha, r.a, r.b
            );
        }
    }
}

fn execute(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Run {
            source,
            out,
            seed_doc,
        } => {
            let config = source.load()?;
            config.validate()?;
            if seed_doc {
                print!("{}", config.to_toml());
                return Ok(());
            }
            let out = out
                .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("bubblefield-out"));
            let summary = experiment::run(&config, &out)?;
            if !summary.table.is_empty() {
                print_table(&summary.table, false);
            }
            for id in &summary.lost {
                log::warn!("bubble {id} is no longer in the field");
            }
            println!("wrote {} files to {}", summary.files.len(), out.display());
            Ok(())
        }
        Command::Table { source, csv } => {
            let config = source.load()?;
            let rows = experiment::table(&config)?;
            print_table(&rows, csv);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
