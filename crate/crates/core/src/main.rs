use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ricepo::config::{RunConfig, SeedRange};
use ricepo::harness::{self, Suite};
use ricepo::{Error, Result, Strategy};

#[derive(Parser)]
#[command(name = "ricepo", version, about = "Critic-free credit assignment for retrieval agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic bridge-term retrieval task.
    GenTask {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train one strategy over a range of seeds.
    Train {
        #[arg(long)]
        task: PathBuf,
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Compare a strategy suite over matched seeds and emit a CSV.
    Ablate {
        #[arg(long)]
        task: PathBuf,
        #[arg(long)]
        suite: String,
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Print the branch report of one audited anchor.
    InspectBranches {
        #[arg(long)]
        audit: PathBuf,
        #[arg(long)]
        anchor: u64,
    },
}

fn settings(config: Option<PathBuf>, seeds: Option<String>, iterations: Option<usize>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load_or_default(config.as_deref())?;
    if let Some(s) = seeds {
        cfg.seeds = s.parse::<SeedRange>()?;
    }
    if let Some(n) = iterations {
        cfg.train.iterations = n;
    }
    cfg.check()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenTask { seed, out, config } => {
            let cfg = RunConfig::load_or_default(config.as_deref())?;
            let m = harness::gen_task(seed, &out, &cfg)?;
            println!("wrote {} queries to {}", m.queries.len(), out.display());
        }
        Command::Train { task, strategy, seeds, out, config, iterations } => {
            let strategy: Strategy = strategy.parse()?;
            let cfg = settings(config, seeds, iterations)?;
            let out = out.unwrap_or_else(harness::default_out_dir);
            for e in harness::train(&task, strategy, cfg.seeds, &out, &cfg)? {
                println!("{} seed {}: {:.6}", e.strategy, e.seed, e.mean_final_reward);
            }
        }
        Command::Ablate { task, suite, seeds, out, config, iterations } => {
            let suite: Suite = suite.parse()?;
            let cfg = settings(config, seeds, iterations)?;
            let out = out.unwrap_or_else(harness::default_out_dir);
            let env = harness::open_task(&task, &cfg)?;
            let table = harness::run_ablation(&env, suite.strategies(), cfg.seeds, &cfg, Some(&out))?;
            let csv = harness::ablation_csv(&table);
            std::fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
            let path = out.join(format!("ablation-{suite}.csv"));
            std::fs::write(&path, &csv).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            print!("{csv}");
        }
        Command::InspectBranches { audit, anchor } => {
            print!("{}", harness::inspect_branches(&audit, anchor)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = run(Cli::parse());
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(harness::exit_code(&result) as u8)
}
