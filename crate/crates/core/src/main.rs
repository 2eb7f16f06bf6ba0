use std::fs::File;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use explore_go::cross::CrossEnv;
use explore_go::env::ContextualEnv;
use explore_go::harness::{self, parse_seed_range, Algorithm, ExperimentConfig, SeedOutcome};
use explore_go::reachability::{analyze_cross, write_table_csv, Reachability};

#[derive(Parser)]
#[command(version, about = "Explore-Go experiments on the cross environment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Ppo,
    ExploreGo,
}

#[derive(Subcommand)]
enum Command {
    /// Train one or more seeds and write per-seed metric files.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the algorithm chosen in the config.
        #[arg(long)]
        algo: Option<Algo>,
        /// `a..b`, `a..=b`, `n` or `a,b,c`; overrides the config.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reachability and state-abstraction tables of the task set.
    Analyze {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate training directories into one CSV plus `curves.svg`.
    Aggregate {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(config: Option<&PathBuf>) -> anyhow::Result<ExperimentConfig> {
    match config {
        Some(path) => ExperimentConfig::from_file(path).with_context(|| format!("loading {}", path.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Train { config, algo, seeds, out } => {
            let mut cfg = load(config.as_ref())?;
            if let Some(algo) = algo {
                cfg = cfg.with_algorithm(match algo {
                    Algo::Ppo => Algorithm::Ppo,
                    Algo::ExploreGo => Algorithm::ExploreGo,
                });
            }
            if let Some(seeds) = seeds {
                cfg.seeds = parse_seed_range(&seeds)?;
            }
            cfg.validate()?;
            log::info!("training {} on seeds {:?}", cfg.algorithm().name(), cfg.seeds);
            let outcomes = harness::run_experiment(&cfg, &out)?;
            let failed: Vec<u64> = outcomes
                .iter()
                .filter_map(|o| match o {
                    SeedOutcome::Failed { seed, .. } => Some(*seed),
                    _ => None,
                })
                .collect();
            if !failed.is_empty() {
                bail!("seeds {failed:?} failed; see failed_seed<N>.txt in {}", out.display());
            }
        }
        Command::Analyze { config, out } => {
            let cfg = load(config.as_ref())?;
            let env = CrossEnv::new(cfg.env.clone())?;
            std::fs::create_dir_all(&out)?;
            let analysis = analyze_cross(&env, cfg.ppo.gamma)?;
            let mut w = csv::Writer::from_path(out.join("reachability.csv"))?;
            w.write_record(["task", "color", "start", "split", "reachable"])?;
            for (task, train, r) in &analysis.classification {
                w.write_record([
                    task.id.to_string(),
                    task.color.to_string(),
                    task.start.to_string(),
                    (if *train { "train" } else { "test" }).to_string(),
                    (*r == Reachability::Reachable).to_string(),
                ])?;
                println!(
                    "task {} {} start {}: {}",
                    task.id,
                    if *train { "train" } else { "test" },
                    task.start,
                    if *r == Reachability::Reachable { "reachable" } else { "unreachable" }
                );
            }
            w.flush()?;
            write_table_csv(&analysis.full_table, File::create(out.join("abstraction_table.csv"))?)?;
            write_table_csv(&analysis.on_policy_table, File::create(out.join("abstraction_table_on_policy.csv"))?)?;
            println!(
                "reachable states: {}; full table {} states in {} columns; on-policy table {} states in {} columns; timeout {}",
                analysis.reachable.len(),
                analysis.full_table.num_states(),
                analysis.full_table.columns.len(),
                analysis.on_policy_table.num_states(),
                analysis.on_policy_table.columns.len(),
                env.timeout(),
            );
        }
        Command::Aggregate { inputs, out } => {
            let rows = harness::aggregate_dirs(&inputs, &out)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
    }
    Ok(())
}
