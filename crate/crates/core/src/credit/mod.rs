//! Critic-free credit assignment.
//!
//! Per group: pick high-entropy summary actions as anchors, resample each
//! anchor's reasoning/summary step from the same history, measure how much
//! the local retrieval reward moves (influence) and how stable the future
//! residual is, then decide per anchor whether the summary advantage is
//! copied onto the paired reasoning span.

pub mod anchors;
pub mod assembly;
pub mod audit;
pub mod branches;
pub mod stats;
pub mod strategy;

pub use anchors::{entropy_pool, random_anchors, select_anchors, Anchor};
pub use assembly::{assemble_token_advantages, AdvantageMap, AnchorCredit, Annotation, TokenAdvantages};
pub use audit::{find_anchor, read_audit, render_report, write_audit, AuditRecord};
pub use branches::{spawn_branches, BranchRecord, BranchRewards, BranchSet};
pub use stats::{
    gate, local_stats, mean_and_variance, residual_stats, summary_advantage, CreditStats, GateDecision,
    GateReason, GateThresholds,
};
pub use strategy::{decide, ReasoningSource, Strategy};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::policy::PolicyParams;
use crate::retrieval::RetrievalEnv;
use crate::rng;
use crate::trajectory::TrajectoryGroup;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreditConfig {
    /// Anchors per group.
    pub k_anchors: usize,
    /// Fresh branches per anchor (the original step is branch 0).
    pub k_branches: usize,
    pub thresholds: GateThresholds,
    /// Divide step-level advantages by `σ̂ + 1e-8`.
    pub normalize_summary: bool,
}

impl Default for CreditConfig {
    fn default() -> Self {
        CreditConfig {
            k_anchors: 4,
            k_branches: 5,
            thresholds: GateThresholds::default(),
            normalize_summary: false,
        }
    }
}

/// Everything computed for one anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorOutcome {
    pub anchor: Anchor,
    pub rewards: BranchRewards,
    pub stats: CreditStats,
    pub decision: GateDecision,
    pub source: ReasoningSource,
    pub credit: AnchorCredit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupCredit {
    pub advantages: AdvantageMap,
    pub anchors: Vec<AnchorOutcome>,
}

/// Step-level credit for one anchor from its branch rewards.
pub fn credit_anchor<R: rand::Rng>(
    anchor: Anchor,
    rewards: BranchRewards,
    strategy: Strategy,
    cfg: &CreditConfig,
    rng: &mut R,
) -> Result<AnchorOutcome> {
    let stats = CreditStats::from_rewards(&rewards.local, &rewards.fin)?;
    let (decision, source) = decide(strategy, &stats, &cfg.thresholds, rng);
    let a_sum = stats::centered_advantage(&rewards.local, cfg.normalize_summary)?;
    let reasoning_advantage = match source {
        ReasoningSource::Summary => Some(a_sum),
        ReasoningSource::Trajectory => None,
        ReasoningSource::FinalSummary => Some(stats::centered_advantage(&rewards.fin, cfg.normalize_summary)?),
    };
    let credit = AnchorCredit {
        traj: anchor.traj,
        step: anchor.step,
        summary_advantage: a_sum,
        reasoning_advantage,
    };
    Ok(AnchorOutcome { anchor, rewards, stats, decision, source, credit })
}

/// Runs anchor selection, branching, gating and assembly for one group.
/// `key` identifies the group within the run (e.g. iteration and query) and
/// seeds every random choice made here.
#[allow(clippy::too_many_arguments)]
pub fn assign_credit(
    group: &TrajectoryGroup,
    traj_advantages: &[f64],
    params: &PolicyParams,
    env: &RetrievalEnv,
    strategy: Strategy,
    cfg: &CreditConfig,
    seed: u64,
    key: &[u64],
) -> Result<GroupCredit> {
    if !strategy.uses_anchors() {
        let advantages = assemble_token_advantages(group, &[], traj_advantages)?;
        return Ok(GroupCredit { advantages, anchors: Vec::new() });
    }
    let tagged = |tag: u64, extra: &[u64]| -> Vec<u64> {
        let mut p = vec![tag];
        p.extend_from_slice(key);
        p.extend_from_slice(extra);
        p
    };
    let anchors = if strategy.random_trigger() {
        let mut r = rng::substream(seed, &tagged(rng::tag::RANDOM_TRIGGER, &[]));
        random_anchors(group, cfg.k_anchors, &mut r)?
    } else {
        select_anchors(group, cfg.k_anchors)?
    };
    let mut outcomes = Vec::with_capacity(anchors.len());
    for anchor in anchors {
        let ids = [anchor.traj as u64, anchor.step as u64];
        let mut branch_key = key.to_vec();
        branch_key.extend_from_slice(&ids);
        let set = spawn_branches(&anchor, group, params, env, cfg.k_branches, seed, &branch_key)?;
        let mut coin = rng::substream(seed, &tagged(rng::tag::RANDOM_CASE, &ids));
        outcomes.push(credit_anchor(anchor, set.rewards(), strategy, cfg, &mut coin)?);
    }
    let credits: Vec<AnchorCredit> = outcomes.iter().map(|o| o.credit).collect();
    let advantages = assemble_token_advantages(group, &credits, traj_advantages)?;
    Ok(GroupCredit { advantages, anchors: outcomes })
}
