use crate::credit::mean_and_variance;
use crate::error::{Error, Result};

pub const STD_EPS: f64 = 1e-8;

/// `A_i = (R_i − mean) / (std + 1e-8)` with population std; a group whose
/// rewards are all equal gets all-zero advantages.
pub fn group_normalized_advantage(rewards: &[f64]) -> Result<Vec<f64>> {
    if rewards.len() < 2 {
        return Err(Error::GroupTooSmall(rewards.len()));
    }
    let (mean, var) = mean_and_variance(rewards);
    if rewards.iter().all(|&r| r == rewards[0]) {
        return Ok(vec![0.0; rewards.len()]);
    }
    let denom = var.sqrt() + STD_EPS;
    Ok(rewards.iter().map(|r| (r - mean) / denom).collect())
}
