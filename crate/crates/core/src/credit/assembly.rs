//! Token-level advantage assembly.
//!
//! For token `u` of trajectory `i`:
//! * inside an anchored summary span: `A_t^sum`;
//! * inside the paired reasoning span: `A_t^think` (`A_t^sum` when the
//!   gate is open, `A_i` otherwise, or the strategy's replacement);
//! * anywhere else: `A_i`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::TrajectoryGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Annotation {
    TrajectoryLevel,
    SummaryLocal,
    ReasoningPropagated,
}

/// Step-level credit for one anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorCredit {
    pub traj: usize,
    pub step: usize,
    pub summary_advantage: f64,
    /// `None` keeps the trajectory advantage on the reasoning span.
    pub reasoning_advantage: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenAdvantages {
    pub values: Vec<f64>,
    pub annotations: Vec<Annotation>,
}

/// Per-trajectory, per-token advantages for one group.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdvantageMap {
    pub trajectories: Vec<TokenAdvantages>,
}

impl AdvantageMap {
    pub fn count(&self, ann: Annotation) -> usize {
        self.trajectories
            .iter()
            .flat_map(|t| &t.annotations)
            .filter(|&&a| a == ann)
            .count()
    }

    pub fn n_tokens(&self) -> usize {
        self.trajectories.iter().map(|t| t.values.len()).sum()
    }
}

pub fn assemble_token_advantages(
    group: &TrajectoryGroup,
    anchors: &[AnchorCredit],
    traj_advantages: &[f64],
) -> Result<AdvantageMap> {
    if traj_advantages.len() != group.len() {
        return Err(Error::Misaligned {
            what: "trajectory advantages vs group",
            left: traj_advantages.len(),
            right: group.len(),
        });
    }
    let mut seen = BTreeSet::new();
    for a in anchors {
        if !seen.insert((a.traj, a.step)) {
            return Err(Error::AnchorCollision { traj: a.traj, step: a.step });
        }
        let traj = group.trajectories.get(a.traj).ok_or(Error::NoSuchTrajectory(a.traj))?;
        traj.step(a.step)?;
    }

    let mut out = AdvantageMap::default();
    for (i, traj) in group.trajectories.iter().enumerate() {
        let a_i = traj_advantages[i];
        let n = traj.tokens.len();
        let mut adv = TokenAdvantages {
            values: vec![a_i; n],
            annotations: vec![Annotation::TrajectoryLevel; n],
        };
        for a in anchors.iter().filter(|a| a.traj == i) {
            let step = traj.step(a.step)?;
            for u in step.summary.range() {
                adv.values[u] = a.summary_advantage;
                adv.annotations[u] = Annotation::SummaryLocal;
            }
            if let Some(think) = a.reasoning_advantage {
                for u in step.reasoning.range() {
                    adv.values[u] = think;
                    adv.annotations[u] = Annotation::ReasoningPropagated;
                }
            }
        }
        out.trajectories.push(adv);
    }
    Ok(out)
}
