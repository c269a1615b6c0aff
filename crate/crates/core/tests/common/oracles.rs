//! Brute-force reference implementations, written without reusing any
//! library arithmetic.

use std::collections::BTreeMap;

use ricepo::credit::AnchorCredit;
use ricepo::trajectory::TrajectoryGroup;

/// BM25 straight from the formula: count every term occurrence by scanning
/// the raw documents.
pub fn bm25_rank(query: &[u32], docs: &BTreeMap<u32, Vec<u32>>, k: usize, k1: f64, b: f64) -> Vec<u32> {
    let n = docs.len() as f64;
    let avgdl = docs.values().map(|d| d.len() as f64).sum::<f64>() / n;
    let mut scored: Vec<(u32, f64)> = docs
        .iter()
        .map(|(&id, doc)| {
            let mut s = 0.0;
            for &q in query {
                let df = docs.values().filter(|d| d.contains(&q)).count() as f64;
                if df == 0.0 {
                    continue;
                }
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                let tf = doc.iter().filter(|&&t| t == q).count() as f64;
                let len = doc.len() as f64;
                s += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * len / avgdl));
            }
            (id, s)
        })
        .collect();
    // Selection sort: best score first, lower id on ties.
    let take = k.min(scored.len());
    let mut out = Vec::new();
    while out.len() < take {
        let mut best = 0;
        for j in 1..scored.len() {
            let (bj, bb) = (scored[j], scored[best]);
            if bj.1 > bb.1 || (bj.1 == bb.1 && bj.0 < bb.0) {
                best = j;
            }
        }
        out.push(scored.remove(best).0);
    }
    out
}

/// NDCG@k from the definition, ideal ordering by explicit sort.
pub fn ndcg(ranked: &[u32], rels: &BTreeMap<u32, u32>, k: usize) -> f64 {
    let gain = |r: u32, pos: usize| r as f64 / (pos as f64 + 2.0).log2();
    let mut dcg = 0.0;
    for (pos, d) in ranked.iter().enumerate().take(k) {
        dcg += gain(*rels.get(d).unwrap_or(&0), pos);
    }
    let mut ideal: Vec<u32> = rels.values().copied().collect();
    ideal.sort();
    ideal.reverse();
    let idcg: f64 = ideal.iter().take(k).enumerate().map(|(p, &r)| gain(r, p)).sum();
    if idcg > 0.0 {
        dcg / idcg
    } else {
        0.0
    }
}

/// Two-pass population mean and variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// `(μ̂, σ̂², ε̄, ResVar)` for branch rewards.
pub fn branch_stats(local: &[f64], fin: &[f64]) -> (f64, f64, f64, f64) {
    let (mu, s2) = mean_var(local);
    let eps: Vec<f64> = fin.iter().zip(local).map(|(f, l)| f - l).collect();
    let (eb, rv) = mean_var(&eps);
    (mu, s2, eb, rv)
}

pub fn group_norm(rewards: &[f64]) -> Vec<f64> {
    let (m, v) = mean_var(rewards);
    if rewards.iter().all(|&r| r == rewards[0]) {
        return vec![0.0; rewards.len()];
    }
    rewards.iter().map(|r| (r - m) / (v.sqrt() + 1e-8)).collect()
}

/// Top-`k` `(traj, step)` pairs by summary entropy, found by scanning all
/// candidates `k` times. Ties prefer the lower trajectory, then step.
pub fn top_k_anchors(entropy: &[Vec<f64>], k: usize) -> Vec<(usize, usize)> {
    let mut taken: Vec<(usize, usize)> = Vec::new();
    for _ in 0..k {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, steps) in entropy.iter().enumerate() {
            for (j, &h) in steps.iter().enumerate() {
                let key = (i, j + 1);
                if taken.contains(&key) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((_, _, bh)) => h > bh,
                };
                if better {
                    best = Some((i, j + 1, h));
                }
            }
        }
        match best {
            Some((i, t, _)) => taken.push((i, t)),
            None => break,
        }
    }
    taken
}

/// Token advantage looked up position by position: find the step whose
/// summary or reasoning span holds `u`, then the anchor for that step.
pub fn token_advantage(group: &TrajectoryGroup, anchors: &[AnchorCredit], a_i: &[f64], i: usize, u: usize) -> f64 {
    let traj = &group.trajectories[i];
    for step in &traj.steps {
        let anchor = anchors.iter().find(|a| a.traj == i && a.step == step.index);
        let in_summary = step.summary.start <= u && u < step.summary.end;
        let in_reasoning = step.reasoning.start <= u && u < step.reasoning.end;
        if let Some(a) = anchor {
            if in_summary {
                return a.summary_advantage;
            }
            if in_reasoning {
                return a.reasoning_advantage.unwrap_or(a_i[i]);
            }
        }
    }
    a_i[i]
}
