//! Gate decisions and token-level advantages for one group, per strategy.
//!
//! ```bash
//! cargo run --example gate_and_assembly
//! ```

use ricepo::config::PolicySettings;
use ricepo::credit::{assign_credit, Annotation, CreditConfig, Strategy};
use ricepo::optimizer::{group_normalized_advantage, rollout_batch};
use ricepo::policy::PolicyParams;
use ricepo::retrieval::{generate_synthetic_task, EnvConfig, RetrievalEnv, TaskConfig};
use ricepo::rng::substream;

fn main() -> ricepo::Result<()> {
    let (task, _) = generate_synthetic_task(0, &TaskConfig::default(), &EnvConfig::default())?;
    let env = RetrievalEnv::new(task, EnvConfig::default())?;
    let params = PolicyParams::random(PolicySettings::default().for_task(&env.task), 0.5, &mut substream(1, &[0]));
    let group = rollout_batch(&params, &env, &[1], 8, 0, 0)?.remove(0);
    let a_i = group_normalized_advantage(&group.final_rewards())?;

    for strategy in Strategy::ALL {
        let credit = assign_credit(&group, &a_i, &params, &env, strategy, &CreditConfig::default(), 0, &[0])?;
        let m = &credit.advantages;
        println!(
            "{strategy:>15}: {} tokens, {} summary-local, {} propagated, {} trajectory-level",
            m.n_tokens(),
            m.count(Annotation::SummaryLocal),
            m.count(Annotation::ReasoningPropagated),
            m.count(Annotation::TrajectoryLevel)
        );
        for o in &credit.anchors {
            println!(
                "    ({}, {}) σ̂² {:.4} ResVar {:.4} gate {} -> A_sum {:+.3} A_think {}",
                o.anchor.traj,
                o.anchor.step,
                o.stats.sigma2_hat,
                o.stats.res_var,
                o.decision.reason,
                o.credit.summary_advantage,
                o.credit.reasoning_advantage.map_or("A_i".to_string(), |a| format!("{a:+.3}"))
            );
        }
    }
    Ok(())
}
