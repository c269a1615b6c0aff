//! Branch audit log: one JSON line per anchor.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::assembly::Annotation;
use super::stats::GateReason;
use super::strategy::Strategy;
use crate::error::{Error, Result};
use crate::trajectory::QueryId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditRecord {
    pub anchor_id: u64,
    pub iteration: usize,
    pub strategy: Strategy,
    pub query_id: QueryId,
    /// Trajectory index `i` within the group.
    pub traj: usize,
    /// Step index `t` (1-based).
    pub step: usize,
    pub entropy: f64,
    pub local_rewards: Vec<f64>,
    pub final_rewards: Vec<f64>,
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub eps_bar: f64,
    pub res_var: f64,
    pub gate_open: bool,
    pub gate_reason: GateReason,
    pub summary_advantage: f64,
    pub reasoning_advantage: f64,
    pub reasoning_annotation: Annotation,
    pub trajectory_advantage: f64,
}

pub fn write_audit<W: Write>(mut w: W, records: &[AuditRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}

pub fn read_audit(path: &Path) -> Result<Vec<AuditRecord>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn find_anchor(records: &[AuditRecord], anchor_id: u64) -> Result<&AuditRecord> {
    records.iter().find(|r| r.anchor_id == anchor_id).ok_or(Error::AnchorNotFound(anchor_id))
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")
}

fn annotation(a: Annotation) -> &'static str {
    match a {
        Annotation::TrajectoryLevel => "trajectory-level",
        Annotation::SummaryLocal => "summary-local",
        Annotation::ReasoningPropagated => "reasoning-propagated",
    }
}

/// Human-readable report. Numbers are printed with shortest round-trip
/// formatting so they parse back to the audited values exactly.
pub fn render_report(r: &AuditRecord) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "anchor {} (iteration {}, strategy {})", r.anchor_id, r.iteration, r.strategy);
    let _ = writeln!(s, "query {}  trajectory {}  step {}", r.query_id, r.traj, r.step);
    let _ = writeln!(s, "entropy: {}", r.entropy);
    let _ = writeln!(s, "local rewards: [{}]", list(&r.local_rewards));
    let _ = writeln!(s, "final rewards: [{}]", list(&r.final_rewards));
    let _ = writeln!(s, "mu_hat: {}", r.mu_hat);
    let _ = writeln!(s, "sigma2_hat: {}", r.sigma2_hat);
    let _ = writeln!(s, "eps_bar: {}", r.eps_bar);
    let _ = writeln!(s, "res_var: {}", r.res_var);
    let _ = writeln!(s, "gate: {} ({})", if r.gate_open { "open" } else { "closed" }, r.gate_reason);
    let _ = writeln!(s, "summary span advantage: {}", r.summary_advantage);
    let _ = writeln!(s, "reasoning span advantage: {} ({})", r.reasoning_advantage, annotation(r.reasoning_annotation));
    let _ = writeln!(s, "trajectory advantage: {}", r.trajectory_advantage);
    s
}
