//! Train a short rice-po run and print the per-iteration metrics.
//!
//! ```bash
//! cargo run --release --example train_rice_po -- 20
//! ```

use ricepo::optimizer::train_run;
use ricepo::retrieval::generate_synthetic_task;
use ricepo::{RetrievalEnv, RunConfig, Strategy};

fn main() -> ricepo::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let mut cfg = RunConfig::default();
    cfg.train.iterations = iterations;
    cfg.ppo.learning_rate = 1.0;
    cfg.credit.normalize_summary = true;
    let (task, _) = generate_synthetic_task(0, &cfg.task, &cfg.env)?;
    let env = RetrievalEnv::new(task, cfg.env)?;

    let run = train_run(&cfg, &env, Strategy::RicePo, 0)?;
    for m in &run.metrics {
        println!(
            "iter {:>3}  R_T {:.4}  anchors {:>2}  open {:>2}  σ̂² {:.4}  ResVar {:.4}  KL {:.2e}",
            m.iteration, m.mean_final_reward, m.anchors, m.gates_open, m.mean_sigma2, m.mean_resvar, m.kl
        );
    }
    println!("held-out episodes: mean final NDCG@10 {:.4}", run.evaluation.mean_final_reward);
    Ok(())
}
