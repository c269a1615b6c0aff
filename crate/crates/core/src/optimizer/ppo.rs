//! Token-level importance ratios and the clipped surrogate with KL penalty.
//!
//! ```text
//! ρ_u  = π_θ(a_u|h_u) / π_θold(a_u|h_u)
//! J(θ) = 1/B Σ_u min(ρ_u A_u, clip(ρ_u, 1−ε, 1+ε) A_u) − β_KL · mean_pos KL(π_θ ‖ π_ref)
//! ```

use serde::{Deserialize, Serialize};

use crate::credit::AdvantageMap;
use crate::error::{Error, Result};
use crate::policy::{
    accumulate_grad_kl, accumulate_grad_logprob, kl_to_reference, log_probs, score_trajectory, PolicyParams,
    TokenContext,
};
use crate::retrieval::Corpus;
use crate::trajectory::{TokenId, Trajectory, TrajectoryGroup};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip_eps: f64,
    pub kl_coeff: f64,
    pub learning_rate: f64,
    /// Trajectories per update.
    pub batch_size: usize,
    /// Trajectories per group (`N`).
    pub group_size: usize,
    pub epochs: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_eps: 0.2,
            kl_coeff: 0.001,
            learning_rate: 0.05,
            batch_size: 128,
            group_size: 8,
            epochs: 1,
        }
    }
}

impl PpoConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(Error::InvalidConfig(format!("clip_eps {} outside (0, 1)", self.clip_eps)));
        }
        if self.kl_coeff.is_nan() || self.kl_coeff < 0.0 {
            return Err(Error::InvalidConfig("kl_coeff must be non-negative".into()));
        }
        if self.group_size < 2 {
            return Err(Error::GroupTooSmall(self.group_size));
        }
        if self.batch_size < self.group_size || self.epochs == 0 {
            return Err(Error::InvalidConfig("batch_size must hold one group and epochs must be positive".into()));
        }
        Ok(())
    }

    pub fn groups_per_batch(&self) -> usize {
        self.batch_size / self.group_size
    }
}

/// `exp(log π_θ(a_u) − log π_θold(a_u))` for token `u` of `traj`.
pub fn importance_ratio(
    params: &PolicyParams,
    old: &PolicyParams,
    traj: &Trajectory,
    corpus: &Corpus,
    u: usize,
) -> Result<f64> {
    let new = score_trajectory(params, traj, corpus)?;
    let old = score_trajectory(old, traj, corpus)?;
    let i = new.iter().position(|s| s.index == u).ok_or(Error::NotPolicyToken(u))?;
    Ok((new[i].logprob - old[i].logprob).exp())
}

/// Value and per-token gradient weights of the clipped surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct ClippedObjective {
    /// Surrogate minus the KL penalty.
    pub objective: f64,
    pub surrogate: f64,
    /// `w_u` such that `∇ surrogate = Σ_u w_u ∇ log π_θ(a_u)`.
    pub weights: Vec<f64>,
    pub clipped: usize,
}

pub fn clipped_objective(
    ratios: &[f64],
    advantages: &[f64],
    n_trajectories: usize,
    kl: f64,
    cfg: &PpoConfig,
) -> Result<ClippedObjective> {
    if ratios.len() != advantages.len() {
        return Err(Error::Misaligned { what: "ratios vs advantages", left: ratios.len(), right: advantages.len() });
    }
    let scale = 1.0 / n_trajectories.max(1) as f64;
    let (lo, hi) = (1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    let mut surrogate = 0.0;
    let mut clipped = 0;
    let weights = ratios
        .iter()
        .zip(advantages)
        .map(|(&rho, &a)| {
            let unclipped = rho * a;
            let flat = rho.clamp(lo, hi) * a;
            if flat < unclipped {
                surrogate += flat;
                clipped += 1;
                0.0
            } else {
                surrogate += unclipped;
                scale * unclipped
            }
        })
        .collect();
    let surrogate = surrogate * scale;
    Ok(ClippedObjective { objective: surrogate - cfg.kl_coeff * kl, surrogate, weights, clipped })
}

/// One teacher-forced token with its behaviour log-prob and advantage.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchToken {
    pub context: TokenContext,
    pub token: TokenId,
    pub old_logprob: f64,
    pub advantage: f64,
}

/// Flattened update batch scored under `θ_old`.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoBatch {
    pub tokens: Vec<BatchToken>,
    pub n_trajectories: usize,
}

impl PpoBatch {
    pub fn build(old: &PolicyParams, groups: &[TrajectoryGroup], maps: &[AdvantageMap], corpus: &Corpus) -> Result<Self> {
        if groups.len() != maps.len() {
            return Err(Error::Misaligned { what: "groups vs advantage maps", left: groups.len(), right: maps.len() });
        }
        let mut tokens = Vec::new();
        let mut n = 0;
        for (g, m) in groups.iter().zip(maps) {
            if g.len() != m.trajectories.len() {
                return Err(Error::Misaligned { what: "group vs map", left: g.len(), right: m.trajectories.len() });
            }
            for (traj, adv) in g.trajectories.iter().zip(&m.trajectories) {
                n += 1;
                let scored = score_trajectory(old, traj, corpus)?;
                if scored.len() != adv.values.len() {
                    return Err(Error::Misaligned { what: "tokens vs advantages", left: scored.len(), right: adv.values.len() });
                }
                tokens.extend(scored.into_iter().map(|s| BatchToken {
                    advantage: adv.values[s.index],
                    context: s.context,
                    token: s.token,
                    old_logprob: s.logprob,
                }));
            }
        }
        Ok(PpoBatch { tokens, n_trajectories: n })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub objective: f64,
    pub surrogate: f64,
    /// Mean per-position KL to the reference policy.
    pub kl: f64,
    pub clipped: usize,
    /// `∇_θ J`.
    pub gradient: Vec<f64>,
}

/// Objective and its exact gradient at `params`.
pub fn objective_and_gradient(
    params: &PolicyParams,
    reference: &PolicyParams,
    batch: &PpoBatch,
    cfg: &PpoConfig,
) -> Result<ObjectiveEval> {
    let ratios: Vec<f64> = batch
        .tokens
        .iter()
        .map(|t| (log_probs(params, &t.context)[t.token as usize] - t.old_logprob).exp())
        .collect();
    let advantages: Vec<f64> = batch.tokens.iter().map(|t| t.advantage).collect();
    let positions = batch.tokens.len().max(1) as f64;
    let mut kl = 0.0;
    for t in &batch.tokens {
        kl += kl_to_reference(params, reference, &t.context)?;
    }
    kl /= positions;
    let clipped = clipped_objective(&ratios, &advantages, batch.n_trajectories, kl, cfg)?;
    let mut gradient = vec![0.0; params.dim()];
    for (t, &w) in batch.tokens.iter().zip(&clipped.weights) {
        accumulate_grad_logprob(params, &t.context, t.token, w, &mut gradient);
    }
    if cfg.kl_coeff > 0.0 {
        let w = -cfg.kl_coeff / positions;
        for t in &batch.tokens {
            accumulate_grad_kl(params, reference, &t.context, w, &mut gradient);
        }
    }
    Ok(ObjectiveEval {
        objective: clipped.objective,
        surrogate: clipped.surrogate,
        kl,
        clipped: clipped.clipped,
        gradient,
    })
}
