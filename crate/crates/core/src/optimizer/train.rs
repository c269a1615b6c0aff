use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::advantage::group_normalized_advantage;
use super::metrics::{write_metrics, Evaluation, IterationMetrics};
use super::ppo::{objective_and_gradient, PpoBatch};
use crate::config::{RunConfig, CONFIG_FILE};
use crate::credit::{assign_credit, AdvantageMap, Annotation, AuditRecord, GroupCredit, ReasoningSource, Strategy};
use crate::error::{Error, Result};
use crate::policy::{save_checkpoint, PolicyParams};
use crate::retrieval::io::write_atomic;
use crate::retrieval::RetrievalEnv;
use crate::rng;
use crate::rollout::rollout;
use crate::trajectory::{QueryId, TrajectoryGroup};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const AUDIT_FILE: &str = "audit.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const EVAL_FILE: &str = "eval.json";

/// Query assigned to group `g` of iteration `it`: queries are visited
/// round-robin so every query is trained on equally often.
pub fn batch_queries(env: &RetrievalEnv, groups: usize, iteration: usize) -> Vec<QueryId> {
    let ids = env.task.query_ids();
    (0..groups).map(|g| ids[(iteration * groups + g) % ids.len()]).collect()
}

/// Samples `group_size` trajectories per query. Streams depend only on
/// `(seed, iteration, group, member)`, never on the training strategy.
pub fn rollout_batch(
    params: &PolicyParams,
    env: &RetrievalEnv,
    queries: &[QueryId],
    group_size: usize,
    seed: u64,
    iteration: usize,
) -> Result<Vec<TrajectoryGroup>> {
    queries
        .par_iter()
        .enumerate()
        .map(|(g, &q)| {
            let trajs = (0..group_size)
                .map(|n| {
                    let mut r = rng::substream(seed, &[rng::tag::ROLLOUT, iteration as u64, g as u64, n as u64]);
                    rollout(params, env, q, &mut r)
                })
                .collect::<Result<Vec<_>>>()?;
            TrajectoryGroup::new(trajs)
        })
        .collect()
}

/// Result of one update.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub params: PolicyParams,
    pub metrics: IterationMetrics,
    pub advantages: Vec<AdvantageMap>,
    pub audit: Vec<AuditRecord>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Credit assignment plus clipped policy update on an already sampled batch.
#[allow(clippy::too_many_arguments)]
pub fn train_step(
    params: &PolicyParams,
    reference: &PolicyParams,
    groups: &[TrajectoryGroup],
    strategy: Strategy,
    cfg: &RunConfig,
    env: &RetrievalEnv,
    seed: u64,
    iteration: usize,
) -> Result<StepOutput> {
    let credits: Vec<(Vec<f64>, GroupCredit)> = groups
        .par_iter()
        .enumerate()
        .map(|(g, group)| {
            let a_i = group_normalized_advantage(&group.final_rewards())?;
            let key = [iteration as u64, g as u64];
            let credit = assign_credit(group, &a_i, params, env, strategy, &cfg.credit, seed, &key)?;
            Ok((a_i, credit))
        })
        .collect::<Result<_>>()?;

    let maps: Vec<AdvantageMap> = credits.iter().map(|(_, c)| c.advantages.clone()).collect();
    let batch = PpoBatch::build(params, groups, &maps, &env.task.corpus)?;

    let mut current = params.clone();
    let mut first = None;
    for _ in 0..cfg.ppo.epochs {
        let eval = objective_and_gradient(&current, reference, &batch, &cfg.ppo)?;
        current = current.updated(&eval.gradient, cfg.ppo.learning_rate);
        first.get_or_insert(eval);
    }
    let first = first.expect("at least one epoch");

    let outcomes: Vec<_> = credits.iter().flat_map(|(_, c)| &c.anchors).collect();
    let metrics = IterationMetrics {
        iteration,
        strategy,
        seed,
        mean_final_reward: mean(groups.iter().flat_map(|g| &g.trajectories).map(|t| t.final_reward)),
        mean_local_reward: mean(
            groups
                .iter()
                .flat_map(|g| &g.trajectories)
                .flat_map(|t| &t.steps)
                .map(|s| s.local_reward),
        ),
        anchors: outcomes.len(),
        gates_open: outcomes.iter().filter(|o| o.decision.open).count(),
        mean_sigma2: mean(outcomes.iter().map(|o| o.stats.sigma2_hat)),
        mean_resvar: mean(outcomes.iter().map(|o| o.stats.res_var)),
        kl: first.kl,
        objective: first.objective,
    };

    let mut audit = Vec::new();
    for (g, (a_i, credit)) in credits.iter().enumerate() {
        for o in &credit.anchors {
            let traj_adv = a_i[o.anchor.traj];
            audit.push(AuditRecord {
                anchor_id: 0,
                iteration,
                strategy,
                query_id: groups[g].query_id,
                traj: o.anchor.traj,
                step: o.anchor.step,
                entropy: o.anchor.entropy,
                local_rewards: o.rewards.local.clone(),
                final_rewards: o.rewards.fin.clone(),
                mu_hat: o.stats.mu_hat,
                sigma2_hat: o.stats.sigma2_hat,
                eps_bar: o.stats.eps_bar,
                res_var: o.stats.res_var,
                gate_open: o.decision.open,
                gate_reason: o.decision.reason,
                summary_advantage: o.credit.summary_advantage,
                reasoning_advantage: o.credit.reasoning_advantage.unwrap_or(traj_adv),
                reasoning_annotation: match o.source {
                    ReasoningSource::Trajectory => Annotation::TrajectoryLevel,
                    _ => Annotation::ReasoningPropagated,
                },
                trajectory_advantage: traj_adv,
            });
        }
    }

    Ok(StepOutput { params: current, metrics, advantages: maps, audit })
}

/// Mean rewards of `episodes` fresh rollouts per query. Streams depend on
/// `(seed, query, episode)` only, so two policies evaluated with the same
/// seed face identical sampling noise.
pub fn evaluate(params: &PolicyParams, env: &RetrievalEnv, episodes: usize, seed: u64) -> Result<(f64, f64)> {
    let per_query: Vec<(f64, f64, usize)> = env
        .task
        .query_ids()
        .par_iter()
        .map(|&q| {
            let mut fin = 0.0;
            let mut local = 0.0;
            let mut steps = 0;
            for e in 0..episodes {
                let mut r = rng::substream(seed, &[rng::tag::EVAL, q as u64, e as u64]);
                let t = rollout(params, env, q, &mut r)?;
                fin += t.final_reward;
                local += t.steps.iter().map(|s| s.local_reward).sum::<f64>();
                steps += t.steps.len();
            }
            Ok((fin, local, steps))
        })
        .collect::<Result<_>>()?;
    let n = (per_query.len() * episodes).max(1) as f64;
    let fin: f64 = per_query.iter().map(|p| p.0).sum::<f64>() / n;
    let steps: usize = per_query.iter().map(|p| p.2).sum();
    let local = per_query.iter().map(|p| p.1).sum::<f64>() / steps.max(1) as f64;
    Ok((fin, local))
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub params: PolicyParams,
    pub metrics: Vec<IterationMetrics>,
    pub audit: Vec<AuditRecord>,
    pub evaluation: Evaluation,
}

/// Trains from the all-zero (uniform) policy, which also serves as the
/// frozen KL reference.
pub fn train_run(cfg: &RunConfig, env: &RetrievalEnv, strategy: Strategy, seed: u64) -> Result<RunArtifacts> {
    cfg.check()?;
    let init = PolicyParams::zeros(cfg.policy.for_task(&env.task));
    let reference = init.clone();
    let mut params = init;
    let groups = cfg.ppo.groups_per_batch();
    let mut metrics = Vec::with_capacity(cfg.train.iterations);
    let mut audit = Vec::new();
    for it in 0..cfg.train.iterations {
        let queries = batch_queries(env, groups, it);
        let batch = rollout_batch(&params, env, &queries, cfg.ppo.group_size, seed, it)?;
        let out = train_step(&params, &reference, &batch, strategy, cfg, env, seed, it)?;
        log::debug!(
            "{strategy} seed {seed} it {it}: R={:.4} anchors={} open={}",
            out.metrics.mean_final_reward,
            out.metrics.anchors,
            out.metrics.gates_open
        );
        params = out.params;
        metrics.push(out.metrics);
        for mut rec in out.audit {
            rec.anchor_id = audit.len() as u64;
            audit.push(rec);
        }
    }
    let (fin, local) = evaluate(&params, env, cfg.train.eval_episodes, seed)?;
    let evaluation = Evaluation {
        strategy,
        seed,
        iterations: cfg.train.iterations,
        episodes: cfg.train.eval_episodes * env.task.queries.len(),
        mean_final_reward: fin,
        mean_local_reward: local,
    };
    Ok(RunArtifacts { params, metrics, audit, evaluation })
}

pub fn seed_dir(out: &Path, strategy: Strategy, seed: u64) -> PathBuf {
    out.join(strategy.name()).join(format!("seed-{seed}"))
}

/// Writes a run's artifacts into `dir`; every file goes through a
/// temp-file rename.
pub fn write_run(dir: &Path, cfg: &RunConfig, run: &RunArtifacts) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut buf = Vec::new();
    write_metrics(&mut buf, &run.metrics).map_err(|e| Error::io(dir.join(METRICS_FILE), e))?;
    write_atomic(&dir.join(METRICS_FILE), &buf)?;
    let mut buf = Vec::new();
    crate::credit::write_audit(&mut buf, &run.audit).map_err(|e| Error::io(dir.join(AUDIT_FILE), e))?;
    write_atomic(&dir.join(AUDIT_FILE), &buf)?;
    let mut json = serde_json::to_vec_pretty(&run.evaluation)?;
    json.push(b'\n');
    write_atomic(&dir.join(EVAL_FILE), &json)?;
    save_checkpoint(&dir.join(CHECKPOINT_FILE), &run.params)?;
    cfg.save(&dir.join(CONFIG_FILE))
}

/// Trains and, when `out` is given, writes artifacts under
/// `out/<strategy>/seed-<seed>/`.
pub fn train_loop(
    cfg: &RunConfig,
    env: &RetrievalEnv,
    strategy: Strategy,
    seed: u64,
    out: Option<&Path>,
) -> Result<RunArtifacts> {
    let run = train_run(cfg, env, strategy, seed)?;
    if let Some(out) = out {
        write_run(&seed_dir(out, strategy, seed), cfg, &run)?;
    }
    Ok(run)
}
