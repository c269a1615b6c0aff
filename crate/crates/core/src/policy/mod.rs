//! Feature-linear softmax policy over the synthetic token language.
//!
//! The logit of output token `y` in context `c` is a sum of weight rows
//! selected by the context: one row for the current segment kind, one per
//! window offset (the token seen `j` positions back), and one per distinct
//! term in the documents of the latest tool response. Each row holds one
//! weight per output token,
//! so `∂ log π(a|c) / ∂θ[row, y] = 1[y = a] − π(y|c)` for every active row.
//!
//! The grammar is enforced by masking: a segment's first token must be a
//! term, the closing delimiter becomes legal after that, and it is the only
//! legal token once the segment budget is used up.

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::retrieval::Corpus;
use crate::trajectory::{History, SegmentKind, TokenId, TokenRecord, Trajectory};
use crate::vocab::Vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationBudget {
    /// Maximum reasoning terms per step (`n_z`).
    pub max_reasoning: usize,
    /// Maximum summary terms per step (`n_s`).
    pub max_summary: usize,
}

impl Default for GenerationBudget {
    fn default() -> Self {
        GenerationBudget { max_reasoning: 2, max_summary: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub vocab: Vocab,
    /// Number of previous tokens visible to the policy (`m`).
    pub window: usize,
    pub budget: GenerationBudget,
}

impl PolicyConfig {
    pub fn check(&self) -> Result<()> {
        if self.budget.max_reasoning == 0 || self.budget.max_summary == 0 {
            return Err(Error::InvalidConfig("generation budgets must be at least 1".into()));
        }
        if self.vocab.n_terms == 0 {
            return Err(Error::InvalidConfig("vocabulary has no terms".into()));
        }
        Ok(())
    }

    fn n_out(&self) -> usize {
        self.vocab.n_outputs()
    }

    fn window_offset(&self) -> usize {
        2 * self.n_out()
    }

    fn response_offset(&self) -> usize {
        self.window_offset() + self.window * self.vocab.n_inputs() * self.n_out()
    }

    pub fn dim(&self) -> usize {
        self.response_offset() + self.vocab.n_terms as usize * self.n_out()
    }

    /// Stable digest of the configuration, stored in checkpoints.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("policy config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Immutable parameter snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    config: PolicyConfig,
    weights: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(config: PolicyConfig) -> Self {
        PolicyParams { weights: vec![0.0; config.dim()], config }
    }

    pub fn from_weights(config: PolicyConfig, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != config.dim() {
            return Err(Error::Dimension { expected: config.dim(), got: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig("non-finite policy weight".into()));
        }
        Ok(PolicyParams { config, weights })
    }

    /// Weights drawn uniformly from `[-scale, scale]`.
    pub fn random<R: Rng>(config: PolicyConfig, scale: f64, rng: &mut R) -> Self {
        let weights = (0..config.dim()).map(|_| rng.random_range(-scale..=scale)).collect();
        PolicyParams { config, weights }
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// New snapshot `θ + step · direction`.
    pub fn updated(&self, direction: &[f64], step: f64) -> Self {
        let weights = self.weights.iter().zip(direction).map(|(w, d)| w + step * d).collect();
        PolicyParams { config: self.config, weights }
    }
}

/// Generation state at one token position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenContext {
    pub kind: SegmentKind,
    /// Tokens already emitted in the current segment.
    pub position: usize,
    /// The last `m` generated tokens, oldest first, left-padded.
    pub window: Vec<TokenId>,
    /// Distinct terms of the latest tool response, ascending.
    pub response: Vec<TokenId>,
}

/// Distinct in-vocabulary terms of `docs`, ascending.
pub fn response_terms(docs: &[crate::trajectory::DocId], corpus: &Corpus, vocab: &Vocab) -> Vec<TokenId> {
    let mut terms: Vec<TokenId> = docs
        .iter()
        .filter_map(|&d| corpus.get(d))
        .flatten()
        .copied()
        .filter(|&t| vocab.is_term(t))
        .collect();
    terms.sort_unstable();
    terms.dedup();
    terms
}

impl TokenContext {
    /// Context for the first reasoning token of the step following `history`.
    pub fn at_step_start(history: &History, config: &PolicyConfig, corpus: &Corpus) -> Self {
        let mut window: Vec<TokenId> = history.generated().rev().take(config.window).collect();
        window.resize(config.window, config.vocab.pad());
        window.reverse();
        TokenContext {
            kind: SegmentKind::Reasoning,
            position: 0,
            window,
            response: response_terms(history.latest_docs(), corpus, &config.vocab),
        }
    }

    /// Context after emitting `tok`. Closing a segment moves to the next one.
    pub fn advance(&mut self, tok: TokenId, vocab: &Vocab) {
        if !self.window.is_empty() {
            self.window.remove(0);
            self.window.push(tok);
        }
        if tok == vocab.think_close() {
            self.kind = SegmentKind::Summary;
            self.position = 0;
        } else {
            self.position += 1;
        }
    }

    pub fn close_token(&self, vocab: &Vocab) -> TokenId {
        match self.kind {
            SegmentKind::Summary => vocab.summary_close(),
            _ => vocab.think_close(),
        }
    }
}

/// Legal-token mask at a context.
fn legal(ctx: &TokenContext, config: &PolicyConfig, tok: TokenId) -> bool {
    let vocab = &config.vocab;
    let max = match ctx.kind {
        SegmentKind::Reasoning => config.budget.max_reasoning,
        SegmentKind::Summary => config.budget.max_summary,
        SegmentKind::ToolResponse => return false,
    };
    if vocab.is_term(tok) {
        ctx.position < max
    } else {
        tok == ctx.close_token(vocab) && ctx.position >= 1
    }
}

pub fn legal_tokens(ctx: &TokenContext, config: &PolicyConfig) -> Vec<TokenId> {
    (0..config.n_out() as TokenId).filter(|&t| legal(ctx, config, t)).collect()
}

/// Start offsets of the weight rows active in `ctx`.
fn active_rows(ctx: &TokenContext, config: &PolicyConfig) -> Vec<usize> {
    let n_out = config.n_out();
    let n_in = config.vocab.n_inputs();
    let mut rows = Vec::with_capacity(1 + ctx.window.len() + ctx.response.len());
    let kind = usize::from(ctx.kind == SegmentKind::Summary);
    rows.push(kind * n_out);
    for (j, &tok) in ctx.window.iter().rev().enumerate() {
        let tok = (tok as usize).min(n_in - 1);
        rows.push(config.window_offset() + (j * n_in + tok) * n_out);
    }
    for &term in &ctx.response {
        rows.push(config.response_offset() + term as usize * n_out);
    }
    rows
}

/// Raw feature dot-products for every output token (illegal ones included).
pub fn logits(params: &PolicyParams, ctx: &TokenContext) -> Vec<f64> {
    let n_out = params.config.n_out();
    let mut out = vec![0.0; n_out];
    for row in active_rows(ctx, &params.config) {
        for (o, w) in out.iter_mut().zip(&params.weights[row..row + n_out]) {
            *o += w;
        }
    }
    out
}

/// Log-probabilities over output tokens; `-inf` for illegal tokens.
pub fn log_probs(params: &PolicyParams, ctx: &TokenContext) -> Vec<f64> {
    let z = logits(params, ctx);
    let mask: Vec<bool> = (0..z.len()).map(|t| legal(ctx, &params.config, t as TokenId)).collect();
    let max = z
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let lse = max
        + z.iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| (v - max).exp())
            .sum::<f64>()
            .ln();
    z.iter()
        .zip(&mask)
        .map(|(v, &m)| if m { v - lse } else { f64::NEG_INFINITY })
        .collect()
}

/// Next-token distribution at `ctx`; zero mass on illegal tokens.
pub fn next_token_dist(params: &PolicyParams, ctx: &TokenContext) -> Vec<f64> {
    log_probs(params, ctx).into_iter().map(f64::exp).collect()
}

/// Distribution for the first token of the step that follows `history`.
pub fn step_start_dist(params: &PolicyParams, history: &History, corpus: &Corpus) -> Vec<f64> {
    next_token_dist(params, &TokenContext::at_step_start(history, &params.config, corpus))
}

pub fn entropy_of(log_probs: &[f64]) -> f64 {
    log_probs
        .iter()
        .filter(|l| l.is_finite())
        .map(|&l| -l.exp() * l)
        .sum::<f64>()
        .max(0.0)
}

/// Output of one `(reasoning, summary)` generation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledStep {
    /// Reasoning tokens including the closing delimiter.
    pub reasoning: Vec<TokenRecord>,
    /// Summary tokens including the closing delimiter.
    pub summary: Vec<TokenRecord>,
}

impl SampledStep {
    pub fn summary_content(&self, vocab: &Vocab) -> Vec<TokenId> {
        vocab.content(self.summary.iter().map(|r| r.token_id))
    }

    pub fn reasoning_content(&self, vocab: &Vocab) -> Vec<TokenId> {
        vocab.content(self.reasoning.iter().map(|r| r.token_id))
    }
}

fn sample_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Samples one reasoning segment followed by one summary segment.
pub fn sample_step<R: Rng>(params: &PolicyParams, history: &History, corpus: &Corpus, rng: &mut R) -> SampledStep {
    let vocab = params.config.vocab;
    let mut ctx = TokenContext::at_step_start(history, &params.config, corpus);
    let mut reasoning = Vec::new();
    let mut summary = Vec::new();
    loop {
        let lp = log_probs(params, &ctx);
        let probs: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
        let tok = sample_index(&probs, rng) as TokenId;
        let rec = TokenRecord { token_id: tok, logprob: lp[tok as usize], entropy: entropy_of(&lp) };
        let closing = tok == ctx.close_token(&vocab);
        if closing && lp[tok as usize] == 0.0 && ctx.position > 0 {
            log::trace!("{:?} segment force-closed at budget {}", ctx.kind, ctx.position);
        }
        let kind = ctx.kind;
        match kind {
            SegmentKind::Summary => summary.push(rec),
            _ => reasoning.push(rec),
        }
        ctx.advance(tok, &vocab);
        if closing && kind == SegmentKind::Summary {
            break;
        }
    }
    SampledStep { reasoning, summary }
}

/// One scored position of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredToken {
    pub index: usize,
    pub context: TokenContext,
    pub token: TokenId,
    pub logprob: f64,
}

/// Teacher-forces `traj` through the policy, checking the grammar.
pub fn score_trajectory(params: &PolicyParams, traj: &Trajectory, corpus: &Corpus) -> Result<Vec<ScoredToken>> {
    let config = &params.config;
    let vocab = config.vocab;
    let mut out = Vec::with_capacity(traj.tokens.len());
    let mut history = History::initial(traj.query_id, traj.initial_docs.clone());
    for step in &traj.steps {
        let mut ctx = TokenContext::at_step_start(&history, config, corpus);
        for seg in [&step.reasoning, &step.summary] {
            if seg.is_empty() {
                return Err(Error::GrammarViolation { index: seg.start, reason: "empty segment".into() });
            }
            for u in seg.range() {
                let rec = traj.tokens.get(u).ok_or(Error::GrammarViolation {
                    index: u,
                    reason: "span past end of token list".into(),
                })?;
                let tok = rec.token_id;
                if !legal(&ctx, config, tok) {
                    return Err(Error::GrammarViolation {
                        index: u,
                        reason: format!("token {tok} illegal in {:?} position {}", ctx.kind, ctx.position),
                    });
                }
                let is_close = tok == ctx.close_token(&vocab);
                if is_close != (u + 1 == seg.end) {
                    return Err(Error::GrammarViolation {
                        index: u,
                        reason: "segment must end exactly at its closing delimiter".into(),
                    });
                }
                let lp = log_probs(params, &ctx)[tok as usize];
                out.push(ScoredToken { index: u, context: ctx.clone(), token: tok, logprob: lp });
                if is_close && ctx.kind == SegmentKind::Summary {
                    break;
                }
                ctx.advance(tok, &vocab);
            }
        }
        history.push(crate::trajectory::PastStep {
            reasoning: traj.segment_tokens(&step.reasoning).collect(),
            summary: traj.segment_tokens(&step.summary).collect(),
            retrieved: step.retrieved.clone(),
        });
    }
    Ok(out)
}

/// Per-token log-probabilities of the recorded tokens under `params`.
pub fn logprob_trajectory(params: &PolicyParams, traj: &Trajectory, corpus: &Corpus) -> Result<Vec<f64>> {
    Ok(score_trajectory(params, traj, corpus)?.into_iter().map(|s| s.logprob).collect())
}

/// Adds `weight · ∂ log π(tok|ctx)/∂θ` into `grad`.
pub fn accumulate_grad_logprob(
    params: &PolicyParams,
    ctx: &TokenContext,
    tok: TokenId,
    weight: f64,
    grad: &mut [f64],
) {
    if weight == 0.0 {
        return;
    }
    let n_out = params.config.n_out();
    let probs = next_token_dist(params, ctx);
    for row in active_rows(ctx, &params.config) {
        let g = &mut grad[row..row + n_out];
        for (y, (gy, p)) in g.iter_mut().zip(&probs).enumerate() {
            let ind = if y == tok as usize { 1.0 } else { 0.0 };
            *gy += weight * (ind - p);
        }
    }
}

/// `∂ log π_θ(a_u | h_u) / ∂θ` for policy-generated token `u`.
pub fn grad_logprob(params: &PolicyParams, traj: &Trajectory, corpus: &Corpus, u: usize) -> Result<Vec<f64>> {
    if traj.locate(u).is_none() {
        return Err(Error::NotPolicyToken(u));
    }
    let scored = score_trajectory(params, traj, corpus)?;
    let s = scored.iter().find(|s| s.index == u).ok_or(Error::NotPolicyToken(u))?;
    let mut grad = vec![0.0; params.dim()];
    accumulate_grad_logprob(params, &s.context, s.token, 1.0, &mut grad);
    Ok(grad)
}

/// Exact categorical `KL(π_θ(·|ctx) ‖ π_ref(·|ctx))`.
pub fn kl_to_reference(params: &PolicyParams, reference: &PolicyParams, ctx: &TokenContext) -> Result<f64> {
    if params.config != reference.config {
        return Err(Error::Dimension { expected: params.dim(), got: reference.dim() });
    }
    let lp = log_probs(params, ctx);
    let lq = log_probs(reference, ctx);
    let kl: f64 = lp
        .iter()
        .zip(&lq)
        .filter(|(p, _)| p.is_finite())
        .map(|(&p, &q)| p.exp() * (p - q))
        .sum();
    Ok(kl.max(0.0))
}

/// Adds `weight · ∂ KL(π_θ ‖ π_ref)/∂θ` at `ctx` into `grad`.
pub fn accumulate_grad_kl(
    params: &PolicyParams,
    reference: &PolicyParams,
    ctx: &TokenContext,
    weight: f64,
    grad: &mut [f64],
) {
    if weight == 0.0 {
        return;
    }
    let n_out = params.config.n_out();
    let lp = log_probs(params, ctx);
    let lq = log_probs(reference, ctx);
    let terms: Vec<f64> = lp
        .iter()
        .zip(&lq)
        .map(|(&p, &q)| if p.is_finite() { p.exp() * (p - q) } else { 0.0 })
        .collect();
    let kl: f64 = terms.iter().sum();
    for row in active_rows(ctx, &params.config) {
        let g = &mut grad[row..row + n_out];
        for (y, gy) in g.iter_mut().enumerate() {
            if lp[y].is_finite() {
                *gy += weight * (terms[y] - lp[y].exp() * kl);
            }
        }
    }
}
