use serde::{Deserialize, Serialize};

use super::anchors::Anchor;
use crate::error::{Error, Result};
use crate::policy::PolicyParams;
use crate::retrieval::RetrievalEnv;
use crate::rng;
use crate::rollout::resample_from;
use crate::trajectory::{TokenId, Trajectory, TrajectoryGroup};

/// One local counterfactual at an anchor. Branch 0 is the original step.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub k: usize,
    pub reasoning: Vec<TokenId>,
    pub summary: Vec<TokenId>,
    /// `r_t^(k)`: reward of the step-`t` summary.
    pub local_reward: f64,
    /// `R_T^(k)`: reward of the last summary after continuing to max depth.
    pub final_reward: f64,
    pub continuation: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    pub anchor: Anchor,
    pub branches: Vec<BranchRecord>,
}

/// Just the reward pairs of a branch set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRewards {
    pub local: Vec<f64>,
    pub fin: Vec<f64>,
}

impl BranchSet {
    pub fn local_rewards(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.local_reward).collect()
    }

    pub fn final_rewards(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.final_reward).collect()
    }

    pub fn rewards(&self) -> BranchRewards {
        BranchRewards { local: self.local_rewards(), fin: self.final_rewards() }
    }
}

fn record(k: usize, traj: Trajectory, t: usize) -> Result<BranchRecord> {
    let step = traj.step(t)?;
    Ok(BranchRecord {
        k,
        reasoning: traj.segment_tokens(&step.reasoning).collect(),
        summary: traj.segment_tokens(&step.summary).collect(),
        local_reward: step.local_reward,
        final_reward: traj.final_reward,
        continuation: traj,
    })
}

/// Resamples `(z_t, s_t)` from the anchor's history `k_branches` times and
/// rolls each branch out to max depth. Branch `k` draws from the substream
/// `(seed, key.., k)`.
#[allow(clippy::too_many_arguments)]
pub fn spawn_branches(
    anchor: &Anchor,
    group: &TrajectoryGroup,
    params: &PolicyParams,
    env: &RetrievalEnv,
    k_branches: usize,
    seed: u64,
    key: &[u64],
) -> Result<BranchSet> {
    if k_branches == 0 {
        return Err(Error::TooFewBranches(1));
    }
    let traj = group.trajectories.get(anchor.traj).ok_or(Error::NoSuchTrajectory(anchor.traj))?;
    let step = traj.step(anchor.step)?;
    if step.reasoning.is_empty() {
        return Err(Error::EmptySegment(anchor.step));
    }
    if anchor.step == traj.len() {
        log::debug!("anchor ({}, {}) is the final step; R_T = r_t for every branch", anchor.traj, anchor.step);
    }
    let mut branches = Vec::with_capacity(k_branches + 1);
    branches.push(record(0, traj.clone(), anchor.step)?);
    for k in 1..=k_branches {
        let mut path = Vec::with_capacity(key.len() + 2);
        path.push(rng::tag::BRANCH);
        path.extend_from_slice(key);
        path.push(k as u64);
        let mut stream = rng::substream(seed, &path);
        let cont = resample_from(params, env, traj, anchor.step, &mut stream)?;
        branches.push(record(k, cont, anchor.step)?);
    }
    Ok(BranchSet { anchor: *anchor, branches })
}
