//! Compare the gate ablations over a few seeds and print the CSV.
//!
//! ```bash
//! cargo run --release --example ablation_suite
//! ```

use ricepo::config::SeedRange;
use ricepo::harness::{ablation_csv, run_ablation, Suite};
use ricepo::retrieval::generate_synthetic_task;
use ricepo::{RetrievalEnv, RunConfig};

fn main() -> ricepo::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.train.iterations = 10;
    cfg.ppo.learning_rate = 1.0;
    cfg.credit.normalize_summary = true;
    let (task, _) = generate_synthetic_task(0, &cfg.task, &cfg.env)?;
    let env = RetrievalEnv::new(task, cfg.env)?;

    let seeds = SeedRange { first: 0, last: 2 };
    let table = run_ablation(&env, Suite::Gates.strategies(), seeds, &cfg, None)?;
    print!("{}", ablation_csv(&table));
    Ok(())
}
