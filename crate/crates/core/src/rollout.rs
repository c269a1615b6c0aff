//! Agent-environment interaction loop.

use rand::Rng;

use crate::error::Result;
use crate::policy::{sample_step, PolicyParams, SampledStep};
use crate::retrieval::{EpisodeState, RetrievalEnv};
use crate::trajectory::{History, PastStep, QueryId, Trajectory, TrajectoryBuilder};

fn past(step: &SampledStep, retrieved: Vec<u32>) -> PastStep {
    PastStep {
        reasoning: step.reasoning.iter().map(|r| r.token_id).collect(),
        summary: step.summary.iter().map(|r| r.token_id).collect(),
        retrieved,
    }
}

fn run_to_end<R: Rng>(
    params: &PolicyParams,
    env: &RetrievalEnv,
    mut state: EpisodeState,
    mut history: History,
    mut builder: TrajectoryBuilder,
    rng: &mut R,
) -> Result<Trajectory> {
    let vocab = env.vocab();
    while !state.terminated {
        let step = sample_step(params, &history, &env.task.corpus, rng);
        let (next, reward) = env.step(&state, &step.summary_content(&vocab))?;
        builder.push_step(&step.reasoning, &step.summary, next.current_docs.clone(), reward);
        history.push(past(&step, next.current_docs.clone()));
        state = next;
    }
    Ok(builder.finish())
}

/// Samples a full episode for `query_id` up to the environment's max depth.
pub fn rollout<R: Rng>(params: &PolicyParams, env: &RetrievalEnv, query_id: QueryId, rng: &mut R) -> Result<Trajectory> {
    let (state, _) = env.reset(query_id)?;
    let history = History::initial(query_id, state.current_docs.clone());
    let builder = TrajectoryBuilder::new(query_id, state.current_docs.clone());
    run_to_end(params, env, state, history, builder, rng)
}

/// Keeps steps `1..t` of `traj`, resamples step `t` and continues to max depth.
pub fn resample_from<R: Rng>(
    params: &PolicyParams,
    env: &RetrievalEnv,
    traj: &Trajectory,
    t: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let history = traj.step_prefix(t)?;
    let state = EpisodeState {
        query_id: traj.query_id,
        current_docs: history.latest_docs().to_vec(),
        depth: t - 1,
        terminated: false,
    };
    let builder = TrajectoryBuilder::from_prefix(traj, t - 1);
    run_to_end(params, env, state, history, builder, rng)
}
