//! How the branch estimate σ̂² settles as the number of branches grows.
//!
//! ```bash
//! cargo run --release --example branch_variance
//! ```

use ricepo::config::PolicySettings;
use ricepo::credit::{mean_and_variance, select_anchors, spawn_branches};
use ricepo::optimizer::rollout_batch;
use ricepo::policy::PolicyParams;
use ricepo::retrieval::{generate_synthetic_task, EnvConfig, RetrievalEnv, TaskConfig};
use ricepo::rng::substream;

fn main() -> ricepo::Result<()> {
    let (task, _) = generate_synthetic_task(0, &TaskConfig::default(), &EnvConfig::default())?;
    let env = RetrievalEnv::new(task, EnvConfig::default())?;
    let params = PolicyParams::random(PolicySettings::default().for_task(&env.task), 1.0, &mut substream(1, &[0]));
    let group = rollout_batch(&params, &env, &[2], 8, 0, 0)?.remove(0);
    let anchor = select_anchors(&group, 1)?[0];

    let reference = spawn_branches(&anchor, &group, &params, &env, 2000, 99, &[0])?;
    let (_, truth) = mean_and_variance(&reference.local_rewards());
    println!("anchor (traj {}, step {}), σ² ≈ {truth:.4} from 2000 branches", anchor.traj, anchor.step);
    for k in [5, 20, 100] {
        let estimates: Vec<f64> = (0..50)
            .map(|trial| {
                let set = spawn_branches(&anchor, &group, &params, &env, k, trial, &[k as u64])?;
                Ok(mean_and_variance(&set.local_rewards()).1)
            })
            .collect::<ricepo::Result<_>>()?;
        let (mean, var) = mean_and_variance(&estimates);
        println!("K = {k:>3}: mean σ̂² {mean:.4}, spread {:.4}", var.sqrt());
    }
    Ok(())
}
