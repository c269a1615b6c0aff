//! Exact expectations on tiny instances by walking every token sequence the
//! grammar allows.

use ricepo::policy::{next_token_dist, PolicyParams, TokenContext};
use ricepo::retrieval::{EpisodeState, RetrievalEnv};
use ricepo::trajectory::{History, PastStep, SegmentKind, TokenId};

/// One complete `(reasoning, summary)` step with its probability.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub prob: f64,
    pub reasoning: Vec<TokenId>,
    pub summary: Vec<TokenId>,
}

/// Every step the policy can emit after `history`.
pub fn step_outcomes(params: &PolicyParams, env: &RetrievalEnv, history: &History) -> Vec<StepOutcome> {
    let ctx = TokenContext::at_step_start(history, params.config(), &env.task.corpus);
    let mut out = Vec::new();
    walk(params, ctx, 1.0, Vec::new(), Vec::new(), &mut out);
    out
}

fn walk(
    params: &PolicyParams,
    ctx: TokenContext,
    prob: f64,
    reasoning: Vec<TokenId>,
    summary: Vec<TokenId>,
    out: &mut Vec<StepOutcome>,
) {
    let vocab = params.config().vocab;
    for (tok, p) in next_token_dist(params, &ctx).into_iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let tok = tok as TokenId;
        let (mut z, mut s) = (reasoning.clone(), summary.clone());
        match ctx.kind {
            SegmentKind::Summary => s.push(tok),
            _ => z.push(tok),
        }
        if ctx.kind == SegmentKind::Summary && tok == vocab.summary_close() {
            out.push(StepOutcome { prob: prob * p, reasoning: z, summary: s });
            continue;
        }
        let mut next = ctx.clone();
        next.advance(tok, &vocab);
        walk(params, next, prob * p, z, s, out);
    }
}

/// Applies `outcome` to `(state, history)`; returns the local reward.
pub fn apply(
    env: &RetrievalEnv,
    state: &EpisodeState,
    history: &History,
    outcome: &StepOutcome,
) -> (EpisodeState, History, f64) {
    let content = env.vocab().content(outcome.summary.iter().copied());
    let (next, r) = env.step(state, &content).unwrap();
    let mut h = history.clone();
    h.push(PastStep {
        reasoning: outcome.reasoning.clone(),
        summary: outcome.summary.clone(),
        retrieved: next.current_docs.clone(),
    });
    (next, h, r)
}

/// `E[R_T | state, history]` under the policy.
pub fn expected_final(params: &PolicyParams, env: &RetrievalEnv, state: &EpisodeState, history: &History) -> f64 {
    step_outcomes(params, env, history)
        .iter()
        .map(|o| {
            let (next, h, r) = apply(env, state, history, o);
            let v = if next.terminated { r } else { expected_final(params, env, &next, &h) };
            o.prob * v
        })
        .sum()
}

/// Exact credit quantities for one reasoning span `z` at the current step.
#[derive(Debug, Clone)]
pub struct ReasoningCredit {
    pub reasoning: Vec<TokenId>,
    pub prob: f64,
    /// `E[R | h, z]`.
    pub final_given: f64,
    /// `E[r(s) | h, z]`.
    pub local_given: f64,
    /// `E[R − r(s) | h, z]`.
    pub residual_given: f64,
}

/// Groups the step outcomes by reasoning span and computes conditional
/// expectations of local, final and residual reward for each.
pub fn reasoning_credits(params: &PolicyParams, env: &RetrievalEnv, state: &EpisodeState, history: &History) -> Vec<ReasoningCredit> {
    let mut out: Vec<ReasoningCredit> = Vec::new();
    for o in step_outcomes(params, env, history) {
        let (next, h, r) = apply(env, state, history, &o);
        let fin = if next.terminated { r } else { expected_final(params, env, &next, &h) };
        let slot = match out.iter().position(|c| c.reasoning == o.reasoning) {
            Some(i) => i,
            None => {
                out.push(ReasoningCredit {
                    reasoning: o.reasoning.clone(),
                    prob: 0.0,
                    final_given: 0.0,
                    local_given: 0.0,
                    residual_given: 0.0,
                });
                out.len() - 1
            }
        };
        let c = &mut out[slot];
        c.prob += o.prob;
        c.final_given += o.prob * fin;
        c.local_given += o.prob * r;
        c.residual_given += o.prob * (fin - r);
    }
    for c in &mut out {
        c.final_given /= c.prob;
        c.local_given /= c.prob;
        c.residual_given /= c.prob;
    }
    out
}

/// Exact distribution of the local reward at the next step: `(prob, r)`.
pub fn local_reward_distribution(
    params: &PolicyParams,
    env: &RetrievalEnv,
    state: &EpisodeState,
    history: &History,
) -> Vec<(f64, f64)> {
    step_outcomes(params, env, history)
        .iter()
        .map(|o| (o.prob, apply(env, state, history, o).2))
        .collect()
}
