//! Randomized equivalence and invariant checks. Each returns a summary
//! with the worst deviation seen so callers can both assert and report.

use rand::Rng;
use ricepo::credit::stats::{local_stats_of, residual_stats_of};
use ricepo::credit::{
    assemble_token_advantages, gate, mean_and_variance, select_anchors,
    spawn_branches, Anchor, Annotation, CreditStats, GateThresholds,
};
use ricepo::optimizer::{group_normalized_advantage, objective_and_gradient, PpoConfig};
use ricepo::policy::{accumulate_grad_kl, grad_logprob, logprob_trajectory, PolicyParams};
use ricepo::retrieval::{bm25_rank, ndcg_at_k, Bm25Params, Corpus, RetrievalEnv};
use ricepo::rng::substream;
use ricepo::rollout::rollout;
use ricepo::trajectory::{History, TrajectoryGroup};

use super::enumerate::{local_reward_distribution, reasoning_credits, step_outcomes, apply};
use super::fixtures::{self, batch_case, finite_difference, relative_error};
use super::oracles;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

/// Library vs brute force on `n` random instances of each kind.
pub fn oracle_suite(n: usize) -> Outcome {
    let tol = 1e-10;
    let mut worst: f64 = 0.0;
    let mut mismatches = 0usize;
    let mut rng = fixtures::stream(1);
    for _ in 0..n {
        // Ranking: exact list equality.
        let n_docs = rng.random_range(1..12);
        let docs = fixtures::random_docs(&mut rng, n_docs, 6);
        let corpus = Corpus::new(docs.clone());
        let q: Vec<u32> = (0..rng.random_range(0..4)).map(|_| rng.random_range(0..8)).collect();
        let k = rng.random_range(1..6);
        let lib = bm25_rank(&q, &corpus, k, Bm25Params::default()).unwrap();
        if lib != oracles::bm25_rank(&q, &docs, k, 1.2, 0.75) {
            mismatches += 1;
        }

        // NDCG.
        let n_docs = rng.random_range(1..15);
        let rels = fixtures::random_rels(&mut rng, n_docs);
        let mut ranked: Vec<u32> = (0..n_docs).collect();
        for i in (1..ranked.len()).rev() {
            ranked.swap(i, rng.random_range(0..=i));
        }
        ranked.truncate(rng.random_range(1..=ranked.len()));
        let cut = rng.random_range(1..12);
        worst = worst.max((ndcg_at_k(&ranked, &rels, cut) - oracles::ndcg(&ranked, &rels, cut)).abs());

        // Anchor selection: exact (i, t) sequence.
        let n_traj = rng.random_range(2..6);
        let group = fixtures::random_group(&mut rng, n_traj);
        let entropies: Vec<Vec<f64>> = group
            .trajectories
            .iter()
            .map(|t| (1..=t.len()).map(|s| t.mean_token_entropy(s).unwrap()).collect())
            .collect();
        let k = rng.random_range(1..8);
        let lib: Vec<(usize, usize)> = select_anchors(&group, k).unwrap().iter().map(|a| (a.traj, a.step)).collect();
        if lib != oracles::top_k_anchors(&entropies, k) {
            mismatches += 1;
        }

        // Branch statistics.
        let m = rng.random_range(2..10);
        let local: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let fin: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let (mu, s2) = local_stats_of(&local).unwrap();
        let (eb, rv) = residual_stats_of(&local, &fin).unwrap();
        let (omu, os2, oeb, orv) = oracles::branch_stats(&local, &fin);
        for (a, b) in [(mu, omu), (s2, os2), (eb, oeb), (rv, orv)] {
            worst = worst.max((a - b).abs());
        }

        // Group-normalized advantages.
        let g = rng.random_range(2..10);
        let rewards: Vec<f64> = (0..g).map(|_| rng.random_range(0..5) as f64 / 4.0).collect();
        let lib = group_normalized_advantage(&rewards).unwrap();
        for (a, b) in lib.iter().zip(oracles::group_norm(&rewards)) {
            worst = worst.max((a - b).abs());
        }
    }
    Outcome::new(
        mismatches == 0 && worst <= tol,
        format!("{n} instances per kind, ordering mismatches {mismatches}, max abs error {worst:.2e}"),
    )
}

/// Analytic vs central-difference gradients of token log-probs and of the
/// clipped objective with `β ∈ {0, 0.001}`.
pub fn gradient_suite(n: usize) -> Outcome {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for case in 0..n as u64 {
        let c = batch_case(case, 0.15);
        let mut rng = fixtures::stream(1000 + case);
        let traj = &c.groups[0].trajectories[rng.random_range(0..3)];
        let u = rng.random_range(0..traj.tokens.len());
        let corpus = &c.env.task.corpus;
        let analytic = grad_logprob(&c.params, traj, corpus, u).unwrap();
        let numeric = finite_difference(&c.params, h, |p| logprob_trajectory(p, traj, corpus).unwrap()[u]);
        worst = worst.max(relative_error(&numeric, &analytic));

        for beta in [0.0, 0.001] {
            let cfg = PpoConfig { kl_coeff: beta, ..PpoConfig::default() };
            let eval = objective_and_gradient(&c.params, &c.reference, &c.batch, &cfg).unwrap();
            let numeric = finite_difference(&c.params, h, |p| {
                objective_and_gradient(p, &c.reference, &c.batch, &cfg).unwrap().objective
            });
            worst = worst.max(relative_error(&numeric, &eval.gradient));
        }
    }
    Outcome::new(worst < 1e-4, format!("{n} random (params, batch) pairs, max relative error {worst:.2e}"))
}

/// At `θ = θ_old`: every ratio is 1 and the clipped gradient is the plain
/// policy gradient `Σ_u (A_u / B) ∇ log π(a_u)` minus the KL gradient.
pub fn on_policy_identity(n: usize) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ratio_dev: f64 = 0.0;
    for case in 0..n as u64 {
        let c = batch_case(500 + case, 0.0);
        let cfg = PpoConfig::default();
        let eval = objective_and_gradient(&c.old, &c.reference, &c.batch, &cfg).unwrap();
        assert_eq!(eval.clipped, 0);
        let corpus = &c.env.task.corpus;
        let b = c.batch.n_trajectories as f64;
        let mut expected = vec![0.0; c.old.dim()];
        for (group, map) in c.groups.iter().zip(&c.maps) {
            for (traj, adv) in group.trajectories.iter().zip(&map.trajectories) {
                let lp = logprob_trajectory(&c.old, traj, corpus).unwrap();
                for (u, rec) in traj.tokens.iter().enumerate() {
                    ratio_dev = ratio_dev.max(((lp[u] - rec.logprob).exp() - 1.0).abs());
                    let g = grad_logprob(&c.old, traj, corpus, u).unwrap();
                    for (e, gi) in expected.iter_mut().zip(g) {
                        *e += adv.values[u] / b * gi;
                    }
                }
            }
        }
        let positions = c.batch.tokens.len() as f64;
        for t in &c.batch.tokens {
            accumulate_grad_kl(&c.old, &c.reference, &t.context, -cfg.kl_coeff / positions, &mut expected);
        }
        for (a, e) in eval.gradient.iter().zip(&expected) {
            worst = worst.max((a - e).abs());
        }
    }
    Outcome::new(
        worst <= 1e-10 && ratio_dev <= 1e-12,
        format!("{n} batches, max |ρ − 1| {ratio_dev:.1e}, max gradient deviation {worst:.2e}"),
    )
}

/// All four threshold-relative quadrants, including equality on each side.
pub fn gate_truth_table() -> Outcome {
    let thr = GateThresholds::default();
    let (v, r) = (thr.tau_var, thr.tau_res);
    let sigma = [v - 0.01, v, v + 0.01, 0.0, 1.0];
    let resvar = [r - 0.01, r, r + 0.01, 0.0, 1.0];
    let mut cases = 0;
    let mut wrong = 0;
    for &s in &sigma {
        for &rv in &resvar {
            let stats = CreditStats { mu_hat: 0.0, sigma2_hat: s, eps_bar: 0.0, res_var: rv };
            let expect = s >= 0.05 && rv <= 0.03;
            cases += 1;
            if gate(&stats, &thr).open != expect {
                wrong += 1;
            }
        }
    }
    Outcome::new(wrong == 0, format!("{cases} cases incl. both equalities, {wrong} wrong"))
}

/// Library token advantages vs position-by-position lookup on random groups.
pub fn assembly_partition(n: usize) -> Outcome {
    let mut rng = fixtures::stream(7);
    let mut wrong_values = 0usize;
    let mut conflicts = 0usize;
    let mut tokens = 0usize;
    for _ in 0..n {
        let n_traj = rng.random_range(2..6);
        let group = fixtures::random_group(&mut rng, n_traj);
        let credits = fixtures::random_credits(&mut rng, &group);
        let a_i: Vec<f64> = (0..group.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let map = assemble_token_advantages(&group, &credits, &a_i).unwrap();
        for (i, (traj, adv)) in group.trajectories.iter().zip(&map.trajectories).enumerate() {
            for u in 0..traj.tokens.len() {
                tokens += 1;
                if adv.values[u] != oracles::token_advantage(&group, &credits, &a_i, i, u) {
                    wrong_values += 1;
                }
                let (t, seg) = traj.locate(u).unwrap();
                let anchor = credits.iter().find(|c| c.traj == i && c.step == t);
                let expect = match (anchor, seg.kind) {
                    (Some(_), ricepo::trajectory::SegmentKind::Summary) => Annotation::SummaryLocal,
                    (Some(c), ricepo::trajectory::SegmentKind::Reasoning) if c.reasoning_advantage.is_some() => {
                        Annotation::ReasoningPropagated
                    }
                    _ => Annotation::TrajectoryLevel,
                };
                if adv.annotations[u] != expect {
                    conflicts += 1;
                }
            }
        }
    }
    Outcome::new(
        wrong_values == 0 && conflicts == 0,
        format!("{n} groups, {tokens} tokens, {wrong_values} value mismatches, {conflicts} annotation conflicts"),
    )
}

/// Tiny instance: 3 terms, one-token reasoning and summary, depth 2. The
/// two-token window lets the reasoning term condition the summary.
pub fn micro_instance(seed: u64) -> (RetrievalEnv, PolicyParams) {
    let mut rng = fixtures::stream(10_000 + seed);
    let env = fixtures::random_env(&mut rng, 3, 5, 1, 2, 2);
    let cfg = fixtures::policy_config(&env, 2, 1, 1);
    let params = PolicyParams::random(cfg, 1.5, &mut rng);
    (env, params)
}

/// Exhaustive check that `|A_think − A_sum| ≤ max_z |Δ_ε|` at both steps of
/// `n` micro-instances, where every quantity is an exact expectation.
pub fn proposition_bound(n: usize) -> Outcome {
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut identity_err: f64 = 0.0;
    let mut max_delta: f64 = 0.0;
    let mut max_gap: f64 = 0.0;
    let mut max_branching = (0usize, 0usize);
    for seed in 0..n as u64 {
        let (env, params) = micro_instance(seed);
        let (state, _) = env.reset(0).unwrap();
        let h1 = History::initial(0, state.current_docs.clone());
        let first = step_outcomes(&params, &env, &h1);
        // Step 1 from the initial history, step 2 after the likeliest first step.
        let pick = first.iter().max_by(|a, b| a.prob.total_cmp(&b.prob)).unwrap();
        let (s2, h2, _) = apply(&env, &state, &h1, pick);
        for (st, h) in [(&state, &h1), (&s2, &h2)] {
            let credits = reasoning_credits(&params, &env, st, h);
            let n_z = credits.len();
            let n_s = step_outcomes(&params, &env, h).len() / n_z.max(1);
            max_branching = (max_branching.0.max(n_z), max_branching.1.max(n_s));
            let mean = |f: &dyn Fn(&super::enumerate::ReasoningCredit) -> f64| -> f64 {
                credits.iter().map(|c| c.prob * f(c)).sum()
            };
            let e_final = mean(&|c| c.final_given);
            let e_local = mean(&|c| c.local_given);
            let e_res = mean(&|c| c.residual_given);
            let deltas: Vec<f64> = credits.iter().map(|c| c.residual_given - e_res).collect();
            let delta = deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            max_delta = max_delta.max(delta);
            for (c, d) in credits.iter().zip(&deltas) {
                let a_think = c.final_given - e_final;
                let a_sum = c.local_given - e_local;
                checked += 1;
                identity_err = identity_err.max((a_think - (a_sum + d)).abs());
                max_gap = max_gap.max((a_think - a_sum).abs());
                if (a_think - a_sum).abs() > delta + 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    Outcome::new(
        violations == 0 && identity_err < 1e-12 && max_delta > 0.0 && max_branching.0 <= 4 && max_branching.1 <= 3,
        format!(
            "{n} instances, {checked} reasoning actions, ≤{} reasoning × ≤{} summary continuations, \
             {violations} violations, decomposition error {identity_err:.1e}, \
             largest gap {max_gap:.3}, largest δ {max_delta:.3}",
            max_branching.0, max_branching.1
        ),
    )
}

/// True `(σ², sd of (r − μ)²)` of the first-step local reward.
pub fn true_local_moments(env: &RetrievalEnv, params: &PolicyParams) -> (f64, f64, usize) {
    let (state, _) = env.reset(0).unwrap();
    let h = History::initial(0, state.current_docs.clone());
    let dist = local_reward_distribution(params, env, &state, &h);
    let mu: f64 = dist.iter().map(|(p, r)| p * r).sum();
    let var: f64 = dist.iter().map(|(p, r)| p * (r - mu).powi(2)).sum();
    let m4: f64 = dist.iter().map(|(p, r)| p * (r - mu).powi(4)).sum();
    let mut values: Vec<f64> = dist.iter().filter(|(p, _)| *p > 1e-3).map(|(_, r)| *r).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    (var, (m4 - var * var).max(0.0).sqrt(), values.len())
}

/// First micro-instance whose first-step local reward takes at least three
/// distinct values, so the squared deviation is itself random.
pub fn convergence_instance() -> (u64, RetrievalEnv, PolicyParams) {
    (0..)
        .find_map(|seed| {
            let (env, params) = micro_instance(seed);
            let (var, _, distinct) = true_local_moments(&env, &params);
            (distinct >= 3 && var > 0.01).then_some((seed, env, params))
        })
        .unwrap()
}

/// Branch σ̂² against the enumerated conditional variance.
pub fn mc_convergence(trials: usize, ks: &[usize]) -> Outcome {
    let (seed, env, params) = convergence_instance();
    let (var, sd_sq, _) = true_local_moments(&env, &params);
    let mut pass = true;
    let mut parts = Vec::new();
    for &k in ks {
        let bound = 3.0 * sd_sq / ((k + 1) as f64).sqrt();
        let mut within = 0;
        for trial in 0..trials as u64 {
            let trajs = (0..2)
                .map(|n| rollout(&params, &env, 0, &mut substream(trial, &[9, k as u64, n])).unwrap())
                .collect();
            let group = TrajectoryGroup::new(trajs).unwrap();
            let anchor = Anchor { traj: 0, step: 1, entropy: 0.0 };
            let set = spawn_branches(&anchor, &group, &params, &env, k, trial, &[k as u64]).unwrap();
            let (_, s2) = mean_and_variance(&set.local_rewards());
            if (s2 - var).abs() < bound {
                within += 1;
            }
        }
        let frac = within as f64 / trials as f64;
        pass &= frac >= 0.95;
        parts.push(format!("K={k}: {:.1}%", 100.0 * frac));
    }
    Outcome::new(
        pass,
        format!("instance {seed}, σ² = {var:.4}, {trials} trials each; within bound {}", parts.join(", ")),
    )
}

/// Writes every artifact kind to disk, reads it back and compares with the
/// in-memory value.
pub fn format_roundtrips(cfg: &ricepo::RunConfig, env: &RetrievalEnv, dir: &std::path::Path) -> Outcome {
    use ricepo::credit::read_audit;
    use ricepo::optimizer::{read_metrics, train_run, write_run};
    use ricepo::optimizer::train::{AUDIT_FILE, CHECKPOINT_FILE, METRICS_FILE};
    use ricepo::policy::load_checkpoint;
    use ricepo::retrieval::io::{load_task, save_task};
    use ricepo::trajectory::{read_trajectories, write_trajectories};
    use std::io::BufReader;

    let mut failed = Vec::new();
    let task_dir = dir.join("task");
    save_task(&task_dir, &env.task, None).unwrap();
    let loaded = load_task(&task_dir).unwrap();
    if loaded.corpus != env.task.corpus || loaded.qrels != env.task.qrels || loaded.queries != env.task.queries {
        failed.push("task");
    }

    let run = train_run(cfg, env, ricepo::Strategy::RicePo, 0).unwrap();
    let run_dir = dir.join("run");
    write_run(&run_dir, cfg, &run).unwrap();
    let f = std::fs::File::open(run_dir.join(METRICS_FILE)).unwrap();
    if read_metrics(BufReader::new(f)).unwrap() != run.metrics {
        failed.push("metrics");
    }
    if read_audit(&run_dir.join(AUDIT_FILE)).unwrap() != run.audit || run.audit.is_empty() {
        failed.push("audit");
    }
    if load_checkpoint(&run_dir.join(CHECKPOINT_FILE), run.params.config()).unwrap() != run.params {
        failed.push("checkpoint");
    }

    let trajs: Vec<_> = (0..16)
        .map(|n| rollout(&run.params, env, n % 4, &mut substream(n as u64, &[3])).unwrap())
        .collect();
    let path = dir.join("trajectories.jsonl");
    let mut buf = Vec::new();
    write_trajectories(&mut buf, &trajs).unwrap();
    std::fs::write(&path, &buf).unwrap();
    let back = read_trajectories(BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    if back != trajs {
        failed.push("trajectories");
    }
    Outcome::new(
        failed.is_empty(),
        if failed.is_empty() {
            "task, metrics, audit, checkpoint and trajectory files round-trip".to_string()
        } else {
            format!("lossy round-trip: {}", failed.join(", "))
        },
    )
}

/// Two runs of the same (config, seed) write byte-identical logs.
pub fn determinism(cfg: &ricepo::RunConfig, env: &RetrievalEnv, dir: &std::path::Path) -> Outcome {
    use ricepo::optimizer::train::{AUDIT_FILE, CHECKPOINT_FILE, METRICS_FILE};
    use ricepo::optimizer::{train_run, write_run};

    let mut differing = Vec::new();
    for strategy in [ricepo::Strategy::RicePo, ricepo::Strategy::Random, ricepo::Strategy::RandomTrigger] {
        let (a, b) = (dir.join(format!("{strategy}-a")), dir.join(format!("{strategy}-b")));
        write_run(&a, cfg, &train_run(cfg, env, strategy, 1).unwrap()).unwrap();
        write_run(&b, cfg, &train_run(cfg, env, strategy, 1).unwrap()).unwrap();
        for f in [METRICS_FILE, AUDIT_FILE, CHECKPOINT_FILE] {
            if std::fs::read(a.join(f)).unwrap() != std::fs::read(b.join(f)).unwrap() {
                differing.push(format!("{strategy}/{f}"));
            }
        }
    }
    Outcome::new(
        differing.is_empty(),
        if differing.is_empty() {
            "metrics, audit and checkpoint bytes identical across reruns (3 strategies)".to_string()
        } else {
            format!("differing files: {}", differing.join(", "))
        },
    )
}
