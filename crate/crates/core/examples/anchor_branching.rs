//! Pick high-entropy anchors in a sampled group and branch from each one.
//!
//! ```bash
//! cargo run --example anchor_branching
//! ```

use ricepo::config::PolicySettings;
use ricepo::credit::{select_anchors, spawn_branches, CreditStats};
use ricepo::optimizer::rollout_batch;
use ricepo::policy::PolicyParams;
use ricepo::retrieval::{generate_synthetic_task, EnvConfig, RetrievalEnv, TaskConfig};
use ricepo::rng::substream;

fn main() -> ricepo::Result<()> {
    let (task, _) = generate_synthetic_task(0, &TaskConfig::default(), &EnvConfig::default())?;
    let env = RetrievalEnv::new(task, EnvConfig::default())?;
    let params = PolicyParams::random(PolicySettings::default().for_task(&env.task), 0.5, &mut substream(1, &[0]));

    let group = rollout_batch(&params, &env, &[0], 8, 0, 0)?.remove(0);
    println!("final rewards: {:?}", group.final_rewards());
    for anchor in select_anchors(&group, 4)? {
        let set = spawn_branches(&anchor, &group, &params, &env, 5, 0, &[0])?;
        let stats = CreditStats::of(&set)?;
        println!(
            "anchor (traj {}, step {}) entropy {:.3}: r = {:?}",
            anchor.traj,
            anchor.step,
            anchor.entropy,
            set.local_rewards().iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        );
        println!(
            "    R_T = {:?}, σ̂² = {:.4}, ResVar = {:.4}",
            set.final_rewards().iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>(),
            stats.sigma2_hat,
            stats.res_var
        );
    }
    Ok(())
}
