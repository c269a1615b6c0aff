//! Paired one-sided tests for "treatment ≥ baseline" over matched seeds.

/// One-sided sign test: probability, under a fair coin, of at least as many
/// positive differences as observed. Zero differences are dropped.
pub fn sign_test(diffs: &[f64]) -> f64 {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return 1.0;
    }
    let wins = nonzero.iter().filter(|d| **d > 0.0).count();
    let tail: f64 = (wins..=n).map(|k| binomial(n, k)).sum();
    tail / 2f64.powi(n as i32)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Average ranks (1-based) of `xs`, ties sharing their mean rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = r;
        }
        i = j + 1;
    }
    out
}

/// Exact one-sided Wilcoxon signed-rank p-value for `H1: median(diff) > 0`,
/// by enumerating every sign assignment of the ranked absolute differences.
/// Zero differences are dropped; ties get average ranks. Practical up to ~25
/// pairs.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> f64 {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return 1.0;
    }
    assert!(n <= 25, "exact enumeration limited to 25 pairs");
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let r = ranks(&abs);
    let observed: f64 = nonzero.iter().zip(&r).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = 1u64 << n;
    let mut hits = 0u64;
    for mask in 0..total {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| r[i]).sum();
        if w >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_positive_ten_pairs() {
        let d = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert!((wilcoxon_signed_rank(&d) - 1.0 / 1024.0).abs() < 1e-15);
        assert!((sign_test(&d) - 1.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn small_table_value() {
        // n = 5, W+ = 14 of 15: only {all} and {-1} reach it, so 2/32.
        let d = [-1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((wilcoxon_signed_rank(&d) - 2.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn zeros_dropped() {
        assert_eq!(sign_test(&[0.0, 0.0]), 1.0);
        assert!((sign_test(&[0.0, 1.0]) - 0.5).abs() < 1e-15);
    }
}
