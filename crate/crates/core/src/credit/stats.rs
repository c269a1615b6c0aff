//! Branch statistics and the propagation gate.
//!
//! ```text
//! μ̂      = 1/(K+1) Σ_k r^(k)              σ̂²     = 1/(K+1) Σ_k (r^(k) − μ̂)²
//! ε^(k)  = R_T^(k) − r^(k)                 ResVar = 1/(K+1) Σ_k (ε^(k) − ε̄)²
//! open  ⇔  σ̂² ≥ τ_var  ∧  ResVar ≤ τ_res
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use super::branches::BranchSet;
use crate::error::{Error, Result};

/// Mean and population variance via Welford's update.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (n, &x) in xs.iter().enumerate() {
        let d = x - mean;
        mean += d / (n + 1) as f64;
        m2 += d * (x - mean);
    }
    let n = xs.len().max(1) as f64;
    (mean, (m2 / n).max(0.0))
}

fn require_pairs(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::TooFewBranches(n))
    } else {
        Ok(())
    }
}

/// `(μ̂_t, σ̂²_t)` over local rewards of branches `0..=K`.
pub fn local_stats_of(local: &[f64]) -> Result<(f64, f64)> {
    require_pairs(local.len())?;
    Ok(mean_and_variance(local))
}

/// `(ε̄_t, ResVar_t)` from paired local and final rewards.
pub fn residual_stats_of(local: &[f64], fin: &[f64]) -> Result<(f64, f64)> {
    if local.len() != fin.len() {
        return Err(Error::Misaligned { what: "local vs final rewards", left: local.len(), right: fin.len() });
    }
    require_pairs(local.len())?;
    let eps: Vec<f64> = fin.iter().zip(local).map(|(f, l)| f - l).collect();
    Ok(mean_and_variance(&eps))
}

pub fn local_stats(set: &BranchSet) -> Result<(f64, f64)> {
    local_stats_of(&set.local_rewards())
}

pub fn residual_stats(set: &BranchSet) -> Result<(f64, f64)> {
    residual_stats_of(&set.local_rewards(), &set.final_rewards())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CreditStats {
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub eps_bar: f64,
    pub res_var: f64,
}

impl CreditStats {
    pub fn from_rewards(local: &[f64], fin: &[f64]) -> Result<Self> {
        let (mu_hat, sigma2_hat) = local_stats_of(local)?;
        let (eps_bar, res_var) = residual_stats_of(local, fin)?;
        Ok(CreditStats { mu_hat, sigma2_hat, eps_bar, res_var })
    }

    pub fn of(set: &BranchSet) -> Result<Self> {
        Self::from_rewards(&set.local_rewards(), &set.final_rewards())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateThresholds {
    pub tau_var: f64,
    pub tau_res: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        GateThresholds { tau_var: 0.05, tau_res: 0.03 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateReason {
    LowInfluence,
    UnstableResidual,
    Open,
}

impl fmt::Display for GateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateReason::LowInfluence => "low-influence",
            GateReason::UnstableResidual => "unstable-residual",
            GateReason::Open => "open",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDecision {
    pub open: bool,
    pub reason: GateReason,
}

/// Opens iff `σ̂² ≥ τ_var` and `ResVar ≤ τ_res`; the influence check is
/// reported first when both fail.
pub fn gate(stats: &CreditStats, thr: &GateThresholds) -> GateDecision {
    let influential = stats.sigma2_hat >= thr.tau_var;
    let stable = stats.res_var <= thr.tau_res;
    let reason = match (influential, stable) {
        (false, _) => GateReason::LowInfluence,
        (true, false) => GateReason::UnstableResidual,
        (true, true) => GateReason::Open,
    };
    GateDecision { open: influential && stable, reason }
}

/// `r^(0) − μ̂`, optionally divided by `σ̂ + 1e-8`.
pub fn summary_advantage_of(local: &[f64], normalize: bool) -> Result<f64> {
    centered_advantage(local, normalize)
}

pub fn summary_advantage(set: &BranchSet, normalize: bool) -> Result<f64> {
    centered_advantage(&set.local_rewards(), normalize)
}

/// Branch-0 value centered against all branches.
pub(crate) fn centered_advantage(values: &[f64], normalize: bool) -> Result<f64> {
    let (mu, var) = local_stats_of(values)?;
    let a = values[0] - mu;
    Ok(if normalize { a / (var.sqrt() + 1e-8) } else { a })
}
