//! Sample one episode from a random softmax policy and print its steps.
//!
//! ```bash
//! cargo run --example sample_policy
//! ```

use ricepo::config::PolicySettings;
use ricepo::policy::PolicyParams;
use ricepo::retrieval::{generate_synthetic_task, EnvConfig, RetrievalEnv, TaskConfig};
use ricepo::rng::substream;
use ricepo::rollout::rollout;

fn main() -> ricepo::Result<()> {
    let (task, _) = generate_synthetic_task(0, &TaskConfig::default(), &EnvConfig::default())?;
    let env = RetrievalEnv::new(task, EnvConfig::default())?;
    let cfg = PolicySettings::default().for_task(&env.task);
    let params = PolicyParams::random(cfg, 0.5, &mut substream(1, &[0]));

    let traj = rollout(&params, &env, 0, &mut substream(2, &[0]))?;
    for step in &traj.steps {
        let z: Vec<u32> = traj.segment_tokens(&step.reasoning).collect();
        let s: Vec<u32> = traj.segment_tokens(&step.summary).collect();
        println!(
            "step {}: reasoning {z:?} summary {s:?} -> {:?} (NDCG@10 {:.3}, summary entropy {:.3})",
            step.index,
            step.retrieved,
            step.local_reward,
            traj.mean_token_entropy(step.index)?
        );
    }
    println!("final reward {:.3}", traj.final_reward);
    Ok(())
}
