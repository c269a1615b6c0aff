use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::TrajectoryGroup;

/// A summary action picked for counterfactual branching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    /// Trajectory index within the group.
    pub traj: usize,
    /// 1-based step index.
    pub step: usize,
    /// Mean token entropy of the step's summary span.
    pub entropy: f64,
}

/// Every summary action in the group with its entropy score, in (i, t) order.
pub fn entropy_pool(group: &TrajectoryGroup) -> Result<Vec<Anchor>> {
    if group.trajectories.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let mut pool = Vec::new();
    for (i, traj) in group.trajectories.iter().enumerate() {
        for step in &traj.steps {
            pool.push(Anchor { traj: i, step: step.index, entropy: traj.mean_token_entropy(step.index)? });
        }
    }
    Ok(pool)
}

/// The `k` highest-entropy summary actions pooled across the group.
/// Ties go to the lower trajectory index, then the lower step.
pub fn select_anchors(group: &TrajectoryGroup, k: usize) -> Result<Vec<Anchor>> {
    if k == 0 {
        return Err(Error::InvalidConfig("anchor count must be at least 1".into()));
    }
    let mut pool = entropy_pool(group)?;
    pool.sort_by(|a, b| {
        b.entropy
            .total_cmp(&a.entropy)
            .then(a.traj.cmp(&b.traj))
            .then(a.step.cmp(&b.step))
    });
    pool.truncate(k);
    Ok(pool)
}

/// `k` summary actions drawn uniformly without replacement, in (i, t) order.
pub fn random_anchors<R: Rng>(group: &TrajectoryGroup, k: usize, rng: &mut R) -> Result<Vec<Anchor>> {
    if k == 0 {
        return Err(Error::InvalidConfig("anchor count must be at least 1".into()));
    }
    let pool = entropy_pool(group)?;
    let mut picked: Vec<usize> = index::sample(rng, pool.len(), k.min(pool.len())).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| pool[i]).collect())
}
