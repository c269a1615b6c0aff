//! Random instances shared by the integration tests.

use std::collections::BTreeMap;

use rand::Rng;
use ricepo::credit::{assemble_token_advantages, AdvantageMap, AnchorCredit};
use ricepo::optimizer::{group_normalized_advantage, PpoBatch};
use ricepo::policy::{GenerationBudget, PolicyConfig, PolicyParams};
use ricepo::retrieval::{Corpus, EnvConfig, Qrels, RetrievalEnv, Task};
use ricepo::rng::{substream, Rng as Stream};
use ricepo::rollout::rollout;
use ricepo::trajectory::{TokenRecord, TrajectoryBuilder, TrajectoryGroup};
use ricepo::Vocab;

pub fn stream(seed: u64) -> Stream {
    substream(seed, &[0xfeed])
}

/// `n_docs` documents of 1..=6 terms drawn from `0..n_terms`.
pub fn random_docs<R: Rng>(rng: &mut R, n_docs: usize, n_terms: u32) -> BTreeMap<u32, Vec<u32>> {
    (0..n_docs as u32)
        .map(|d| {
            let len = rng.random_range(1..=6);
            (d, (0..len).map(|_| rng.random_range(0..n_terms)).collect())
        })
        .collect()
}

/// Graded judgments on a random subset of docs (possibly none).
pub fn random_rels<R: Rng>(rng: &mut R, n_docs: u32) -> BTreeMap<u32, u32> {
    let mut rels = BTreeMap::new();
    for d in 0..n_docs {
        if rng.random_bool(0.3) {
            rels.insert(d, rng.random_range(1..=3));
        }
    }
    rels
}

/// Group of `n` trajectories with 1..=4 steps, 1..=3 tokens per span and
/// entropies from a small set so ties are common.
pub fn random_group<R: Rng>(rng: &mut R, n: usize) -> TrajectoryGroup {
    let levels = [0.25, 0.5, 1.0, 1.5];
    let trajs = (0..n)
        .map(|_| {
            let mut b = TrajectoryBuilder::new(0, vec![0]);
            for _ in 0..rng.random_range(1..=4) {
                let span = |rng: &mut R| -> Vec<TokenRecord> {
                    (0..rng.random_range(1..=3))
                        .map(|_| TokenRecord {
                            token_id: 0,
                            logprob: -rng.random_range(0.0..2.0),
                            entropy: levels[rng.random_range(0..levels.len())],
                        })
                        .collect()
                };
                let z = span(rng);
                let s = span(rng);
                let r = rng.random_range(0..=4) as f64 / 4.0;
                b.push_step(&z, &s, vec![0], r);
            }
            b.finish()
        })
        .collect();
    TrajectoryGroup::new(trajs).unwrap()
}

/// Random anchors (distinct steps) with random gate outcomes.
pub fn random_credits<R: Rng>(rng: &mut R, group: &TrajectoryGroup) -> Vec<AnchorCredit> {
    let mut out = Vec::new();
    for (i, traj) in group.trajectories.iter().enumerate() {
        for step in &traj.steps {
            if rng.random_bool(0.4) {
                let sum = rng.random_range(-1.0..1.0);
                let reasoning = match rng.random_range(0..3) {
                    0 => None,
                    1 => Some(sum),
                    _ => Some(rng.random_range(-1.0..1.0)),
                };
                out.push(AnchorCredit { traj: i, step: step.index, summary_advantage: sum, reasoning_advantage: reasoning });
            }
        }
    }
    out
}

/// Small random retrieval task: one query per id in `0..n_queries`.
pub fn random_env<R: Rng>(rng: &mut R, n_terms: u32, n_docs: usize, n_queries: u32, depth: usize, cutoff: usize) -> RetrievalEnv {
    let docs = random_docs(rng, n_docs, n_terms);
    let mut qrels = Qrels::new();
    let mut queries = BTreeMap::new();
    for q in 0..n_queries {
        queries.insert(q, vec![rng.random_range(0..n_terms)]);
        for d in 0..n_docs as u32 {
            if rng.random_bool(0.35) {
                qrels.insert(q, d, rng.random_range(1..=2));
            }
        }
    }
    let task = Task { vocab: Vocab::new(n_terms), corpus: Corpus::new(docs), qrels, queries };
    let cfg = EnvConfig { cutoff, max_depth: depth, ..EnvConfig::default() };
    RetrievalEnv::new(task, cfg).unwrap()
}

pub fn policy_config(env: &RetrievalEnv, window: usize, max_reasoning: usize, max_summary: usize) -> PolicyConfig {
    PolicyConfig { vocab: env.vocab(), window, budget: GenerationBudget { max_reasoning, max_summary } }
}

/// A sampled group for query 0.
pub fn sampled_group(params: &PolicyParams, env: &RetrievalEnv, n: usize, seed: u64) -> TrajectoryGroup {
    let trajs = (0..n)
        .map(|k| rollout(params, env, 0, &mut substream(seed, &[1, k as u64])).unwrap())
        .collect();
    TrajectoryGroup::new(trajs).unwrap()
}

/// Everything needed to evaluate the clipped objective on a random batch.
pub struct BatchCase {
    pub env: RetrievalEnv,
    pub old: PolicyParams,
    pub params: PolicyParams,
    pub reference: PolicyParams,
    pub groups: Vec<TrajectoryGroup>,
    pub maps: Vec<AdvantageMap>,
    pub batch: PpoBatch,
}

/// Random environment and policy, two groups of three sampled
/// trajectories with random anchors, and `params` offset from the behaviour
/// policy by up to `drift` per weight.
pub fn batch_case(seed: u64, drift: f64) -> BatchCase {
    let mut rng = stream(seed);
    let env = random_env(&mut rng, 4, 6, 2, 2, 2);
    let cfg = policy_config(&env, 2, 2, 2);
    let old = PolicyParams::random(cfg, 0.8, &mut rng);
    let reference = PolicyParams::random(cfg, 0.8, &mut rng);
    let noise: Vec<f64> = (0..old.dim()).map(|_| rng.random_range(-drift..=drift)).collect();
    let params = old.updated(&noise, 1.0);
    let mut groups = Vec::new();
    let mut maps = Vec::new();
    for g in 0..2 {
        let trajs = (0..3)
            .map(|n| rollout(&old, &env, g, &mut substream(seed, &[2, g as u64, n])).unwrap())
            .collect();
        let group = TrajectoryGroup::new(trajs).unwrap();
        let a_i = group_normalized_advantage(&group.final_rewards()).unwrap();
        let a_i: Vec<f64> = a_i.iter().map(|a| a + rng.random_range(-0.5..0.5)).collect();
        let credits = random_credits(&mut rng, &group);
        maps.push(assemble_token_advantages(&group, &credits, &a_i).unwrap());
        groups.push(group);
    }
    let batch = PpoBatch::build(&old, &groups, &maps, &env.task.corpus).unwrap();
    BatchCase { env, old, params, reference, groups, maps, batch }
}

/// Central finite difference of `f` along every coordinate of `params`.
pub fn finite_difference(params: &PolicyParams, h: f64, f: impl Fn(&PolicyParams) -> f64) -> Vec<f64> {
    let mut grad = vec![0.0; params.dim()];
    let mut e = vec![0.0; params.dim()];
    for i in 0..params.dim() {
        e[i] = h;
        let up = f(&params.updated(&e, 1.0));
        let down = f(&params.updated(&e, -1.0));
        e[i] = 0.0;
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// `‖a − b‖ / max(‖b‖, 1e-8)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-8)
}
