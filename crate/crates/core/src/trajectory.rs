//! Trajectory records: tokens, segments, steps and groups.
//!
//! A trajectory is a passive record written once by the sampler. Token
//! log-probabilities and entropies are those of the generating policy and
//! are never recomputed here.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = u32;
pub type DocId = u32;
pub type QueryId = u32;

/// One policy-generated token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub token_id: TokenId,
    /// Natural-log probability under the generating policy.
    pub logprob: f64,
    /// Entropy (nats) of the full next-token distribution at this position.
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Reasoning,
    Summary,
    ToolResponse,
}

/// Half-open token range `[start, end)` with its role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn new(kind: SegmentKind, span: Range<usize>) -> Self {
        Segment { kind, start: span.start, end: span.end }
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, u: usize) -> bool {
        self.start <= u && u < self.end
    }
}

/// One reasoning/summary/retrieval round. `index` is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub index: usize,
    pub reasoning: Segment,
    pub summary: Segment,
    /// Documents returned by the retriever for this step's summary.
    pub retrieved: Vec<DocId>,
    /// Retrieval reward of this step's summary.
    pub local_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub query_id: QueryId,
    /// `D_0`, retrieved with the bare query before the first step.
    pub initial_docs: Vec<DocId>,
    pub steps: Vec<Step>,
    pub tokens: Vec<TokenRecord>,
    pub final_reward: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Step `t` (1-based).
    pub fn step(&self, t: usize) -> Result<&Step> {
        if t == 0 {
            return Err(Error::NoSuchStep(t));
        }
        self.steps.get(t - 1).ok_or(Error::NoSuchStep(t))
    }

    pub fn segment_tokens(&self, seg: &Segment) -> impl Iterator<Item = TokenId> + '_ {
        self.tokens[seg.range()].iter().map(|r| r.token_id)
    }

    /// Step and segment owning token `u`, if it is policy-generated.
    pub fn locate(&self, u: usize) -> Option<(usize, &Segment)> {
        self.steps.iter().find_map(|s| {
            if s.reasoning.contains(u) {
                Some((s.index, &s.reasoning))
            } else if s.summary.contains(u) {
                Some((s.index, &s.summary))
            } else {
                None
            }
        })
    }

    /// Mean stored entropy over the summary span of step `t`.
    pub fn mean_token_entropy(&self, t: usize) -> Result<f64> {
        let step = self.step(t)?;
        if step.summary.is_empty() {
            return Err(Error::EmptySegment(t));
        }
        let records = self.tokens.get(step.summary.range()).ok_or(Error::NoSuchStep(t))?;
        Ok(records.iter().map(|r| r.entropy).sum::<f64>() / records.len() as f64)
    }

    /// Everything the agent had seen before step `t`'s reasoning span.
    pub fn step_prefix(&self, t: usize) -> Result<History> {
        self.step(t)?;
        let steps = self.steps[..t - 1]
            .iter()
            .map(|s| PastStep {
                reasoning: self.segment_tokens(&s.reasoning).collect(),
                summary: self.segment_tokens(&s.summary).collect(),
                retrieved: s.retrieved.clone(),
            })
            .collect();
        Ok(History { query_id: self.query_id, initial_docs: self.initial_docs.clone(), steps })
    }

    /// Keeps steps `1..t` and drops the rest, including their tokens.
    pub fn truncated(&self, t: usize) -> Trajectory {
        let steps: Vec<Step> = self.steps[..t.min(self.steps.len())].to_vec();
        let end = steps.last().map_or(0, |s| s.summary.end);
        Trajectory {
            query_id: self.query_id,
            initial_docs: self.initial_docs.clone(),
            final_reward: steps.last().map_or(0.0, |s| s.local_reward),
            steps,
            tokens: self.tokens[..end].to_vec(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate_trajectory(self)
    }
}

/// Interaction history `h_{t-1}` together with the input `x = (q_0, D_0)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct History {
    pub query_id: QueryId,
    pub initial_docs: Vec<DocId>,
    pub steps: Vec<PastStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PastStep {
    pub reasoning: Vec<TokenId>,
    pub summary: Vec<TokenId>,
    pub retrieved: Vec<DocId>,
}

impl History {
    pub fn initial(query_id: QueryId, initial_docs: Vec<DocId>) -> Self {
        History { query_id, initial_docs, steps: Vec::new() }
    }

    /// Number of completed steps.
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    /// Latest tool response (`D_0` when no step has been taken).
    pub fn latest_docs(&self) -> &[DocId] {
        self.steps.last().map_or(&self.initial_docs, |s| &s.retrieved)
    }

    /// All generated tokens in emission order.
    pub fn generated(&self) -> impl DoubleEndedIterator<Item = TokenId> + '_ {
        self.steps
            .iter()
            .flat_map(|s| s.reasoning.iter().chain(s.summary.iter()).copied())
    }

    pub fn push(&mut self, step: PastStep) {
        self.steps.push(step);
    }

    /// True when `self` is `other` plus at least one more step.
    pub fn strictly_extends(&self, other: &History) -> bool {
        self.query_id == other.query_id
            && self.initial_docs == other.initial_docs
            && self.steps.len() > other.steps.len()
            && self.steps[..other.steps.len()] == other.steps[..]
    }
}

/// Trajectories sampled for the same input.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryGroup {
    pub query_id: QueryId,
    pub trajectories: Vec<Trajectory>,
}

impl TrajectoryGroup {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self> {
        if trajectories.len() < 2 {
            return Err(Error::GroupTooSmall(trajectories.len()));
        }
        let first = &trajectories[0];
        if trajectories
            .iter()
            .any(|t| t.query_id != first.query_id || t.initial_docs != first.initial_docs)
        {
            return Err(Error::MixedGroup);
        }
        Ok(TrajectoryGroup { query_id: first.query_id, trajectories })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn final_rewards(&self) -> Vec<f64> {
        self.trajectories.iter().map(|t| t.final_reward).collect()
    }
}

/// Appends steps to a trajectory while keeping spans consistent.
#[derive(Debug, Clone)]
pub struct TrajectoryBuilder {
    traj: Trajectory,
}

impl TrajectoryBuilder {
    pub fn new(query_id: QueryId, initial_docs: Vec<DocId>) -> Self {
        TrajectoryBuilder {
            traj: Trajectory {
                query_id,
                initial_docs,
                steps: Vec::new(),
                tokens: Vec::new(),
                final_reward: 0.0,
            },
        }
    }

    /// Resume from the first `t` steps of an existing trajectory.
    pub fn from_prefix(traj: &Trajectory, t: usize) -> Self {
        TrajectoryBuilder { traj: traj.truncated(t) }
    }

    pub fn depth(&self) -> usize {
        self.traj.steps.len()
    }

    pub fn push_step(
        &mut self,
        reasoning: &[TokenRecord],
        summary: &[TokenRecord],
        retrieved: Vec<DocId>,
        local_reward: f64,
    ) -> &mut Self {
        let t = &mut self.traj;
        let r0 = t.tokens.len();
        t.tokens.extend_from_slice(reasoning);
        let s0 = t.tokens.len();
        t.tokens.extend_from_slice(summary);
        let s1 = t.tokens.len();
        t.steps.push(Step {
            index: t.steps.len() + 1,
            reasoning: Segment::new(SegmentKind::Reasoning, r0..s0),
            summary: Segment::new(SegmentKind::Summary, s0..s1),
            retrieved,
            local_reward,
        });
        t.final_reward = local_reward;
        self
    }

    pub fn finish(self) -> Trajectory {
        self.traj
    }
}

/// A single invariant violation found by [`validate_trajectory`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, rule: &'static str, detail: String) {
        self.violations.push(Violation { rule, detail });
    }
}

pub fn validate_trajectory(traj: &Trajectory) -> ValidationReport {
    let mut report = ValidationReport::default();
    if traj.steps.is_empty() {
        report.push("empty trajectory", "no steps".into());
    }
    if !(0.0..=1.0).contains(&traj.final_reward) {
        report.push("reward range", format!("final reward {}", traj.final_reward));
    }
    let n = traj.tokens.len();
    let mut owner: Vec<u32> = vec![0; n];
    let mut prev_end = 0usize;
    for (pos, step) in traj.steps.iter().enumerate() {
        let t = step.index;
        if t != pos + 1 {
            report.push("step index", format!("expected {}, found {}", pos + 1, t));
        }
        if step.reasoning.kind != SegmentKind::Reasoning || step.summary.kind != SegmentKind::Summary {
            report.push("segment kind", format!("step {t}"));
        }
        if step.retrieved.is_empty() {
            report.push("empty retrieval", format!("step {t}"));
        }
        if !(0.0..=1.0).contains(&step.local_reward) {
            report.push("reward range", format!("step {t} local reward {}", step.local_reward));
        }
        if step.summary.start < step.reasoning.end {
            report.push("segment order", format!("step {t}: summary does not follow reasoning"));
        }
        for seg in [&step.reasoning, &step.summary] {
            if seg.start >= seg.end {
                report.push("empty span", format!("step {t} {:?} [{}, {})", seg.kind, seg.start, seg.end));
                continue;
            }
            if seg.end > n {
                report.push("span bounds", format!("step {t} {:?} ends at {} > {n}", seg.kind, seg.end));
            }
            if seg.start < prev_end {
                report.push("segment order", format!("step {t} {:?} starts before previous segment ends", seg.kind));
            }
            prev_end = prev_end.max(seg.end);
            let end = seg.end.min(n);
            for o in &mut owner[seg.start.min(end)..end] {
                *o += 1;
            }
        }
    }
    let overlaps: Vec<usize> = (0..n).filter(|&u| owner[u] > 1).collect();
    if !overlaps.is_empty() {
        report.push("span overlap", format!("tokens {overlaps:?}"));
    }
    let orphans: Vec<usize> = (0..n).filter(|&u| owner[u] == 0).collect();
    if !orphans.is_empty() {
        report.push("token outside segments", format!("tokens {orphans:?}"));
    }
    for (u, r) in traj.tokens.iter().enumerate() {
        if r.logprob.is_nan() || r.logprob > 0.0 {
            report.push("logprob range", format!("token {u}: {}", r.logprob));
        }
        if !r.entropy.is_finite() || r.entropy < 0.0 {
            report.push("entropy range", format!("token {u}: {}", r.entropy));
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Line-delimited dump format.

#[derive(Debug, Serialize, Deserialize)]
struct StepRecord {
    reasoning_tokens: Vec<TokenRecord>,
    summary_tokens: Vec<TokenRecord>,
    retrieved_doc_ids: Vec<DocId>,
    local_reward: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRecord {
    query_id: QueryId,
    initial_doc_ids: Vec<DocId>,
    steps: Vec<StepRecord>,
    final_reward: f64,
}

impl From<&Trajectory> for TrajectoryRecord {
    fn from(t: &Trajectory) -> Self {
        TrajectoryRecord {
            query_id: t.query_id,
            initial_doc_ids: t.initial_docs.clone(),
            steps: t
                .steps
                .iter()
                .map(|s| StepRecord {
                    reasoning_tokens: t.tokens[s.reasoning.range()].to_vec(),
                    summary_tokens: t.tokens[s.summary.range()].to_vec(),
                    retrieved_doc_ids: s.retrieved.clone(),
                    local_reward: s.local_reward,
                })
                .collect(),
            final_reward: t.final_reward,
        }
    }
}

impl From<TrajectoryRecord> for Trajectory {
    fn from(r: TrajectoryRecord) -> Self {
        let mut b = TrajectoryBuilder::new(r.query_id, r.initial_doc_ids);
        for s in r.steps {
            b.push_step(&s.reasoning_tokens, &s.summary_tokens, s.retrieved_doc_ids, s.local_reward);
        }
        let mut t = b.finish();
        t.final_reward = r.final_reward;
        t
    }
}

/// Serializes one trajectory as a single JSON line (no trailing newline).
pub fn to_json_line(traj: &Trajectory) -> String {
    serde_json::to_string(&TrajectoryRecord::from(traj)).expect("trajectory record serializes")
}

pub fn from_json_line(line: &str) -> Result<Trajectory> {
    let rec: TrajectoryRecord = serde_json::from_str(line)?;
    Ok(rec.into())
}

pub fn write_trajectories<W: Write>(mut w: W, trajs: &[Trajectory]) -> std::io::Result<()> {
    for t in trajs {
        writeln!(w, "{}", to_json_line(t))?;
    }
    Ok(())
}

pub fn read_trajectories<R: BufRead>(r: R) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<trajectories>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(from_json_line(&line).map_err(|e| Error::Parse {
            path: "<trajectories>".into(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}
