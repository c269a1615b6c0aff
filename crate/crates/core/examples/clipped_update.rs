//! One clipped policy-gradient step on a sampled batch, checked against a
//! finite difference of the objective.
//!
//! ```bash
//! cargo run --release --example clipped_update
//! ```

use ricepo::config::PolicySettings;
use ricepo::credit::{assemble_token_advantages, AdvantageMap};
use ricepo::optimizer::{group_normalized_advantage, objective_and_gradient, rollout_batch, PpoBatch, PpoConfig};
use ricepo::policy::PolicyParams;
use ricepo::retrieval::{generate_synthetic_task, EnvConfig, RetrievalEnv, TaskConfig};
use ricepo::rng::substream;

fn main() -> ricepo::Result<()> {
    let (task, _) = generate_synthetic_task(0, &TaskConfig::default(), &EnvConfig::default())?;
    let env = RetrievalEnv::new(task, EnvConfig::default())?;
    let cfg = PolicySettings::default().for_task(&env.task);
    let old = PolicyParams::random(cfg, 0.3, &mut substream(1, &[0]));
    let groups = rollout_batch(&old, &env, &[0, 1, 2, 3], 8, 0, 0)?;
    let maps: Vec<AdvantageMap> = groups
        .iter()
        .map(|g| assemble_token_advantages(g, &[], &group_normalized_advantage(&g.final_rewards())?))
        .collect::<ricepo::Result<_>>()?;
    let batch = PpoBatch::build(&old, &groups, &maps, &env.task.corpus)?;
    let ppo = PpoConfig { learning_rate: 1.0, ..PpoConfig::default() };

    let mut params = old.clone();
    for epoch in 0..4 {
        let eval = objective_and_gradient(&params, &old, &batch, &ppo)?;
        println!(
            "epoch {epoch}: J = {:.6} (surrogate {:.6}, KL {:.2e}), {} of {} tokens clipped",
            eval.objective,
            eval.surrogate,
            eval.kl,
            eval.clipped,
            batch.tokens.len()
        );
        // Directional finite difference along the gradient.
        let h = 1e-6;
        let up = objective_and_gradient(&params.updated(&eval.gradient, h), &old, &batch, &ppo)?.objective;
        let down = objective_and_gradient(&params.updated(&eval.gradient, -h), &old, &batch, &ppo)?.objective;
        let norm2: f64 = eval.gradient.iter().map(|g| g * g).sum();
        println!("    ‖∇J‖² = {norm2:.6e}, finite difference {:.6e}", (up - down) / (2.0 * h));
        params = params.updated(&eval.gradient, ppo.learning_rate);
    }
    Ok(())
}
