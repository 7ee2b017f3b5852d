//! Two-sided Wilcoxon rank-sum (Mann-Whitney) test.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::metrics::midranks;
use crate::error::{Error, Result};

/// Samples with fewer elements than this on the smaller side use the exact
/// null distribution.
pub const EXACT_BELOW: usize = 10;
/// Largest pooled size for which the exact distribution is enumerated.
pub const EXACT_MAX_POOLED: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankSumTest {
    /// Rank sum of the first sample.
    pub statistic: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Counts size-`k` subsets of doubled midranks by their sum.
fn subset_sum_counts(doubled: &[usize], k: usize) -> Vec<u128> {
    let max_sum: usize = doubled.iter().sum();
    let mut dp = vec![vec![0u128; max_sum + 1]; k + 1];
    dp[0][0] = 1;
    for (seen, &r) in doubled.iter().enumerate() {
        for j in (1..=k.min(seen + 1)).rev() {
            let (lower, upper) = dp.split_at_mut(j);
            let (from, to) = (&lower[j - 1], &mut upper[0]);
            for s in (r..=max_sum).rev() {
                to[s] += from[s - r];
            }
        }
    }
    dp.swap_remove(k)
}

fn exact_p(ranks: &[f64], n: usize, observed: f64) -> f64 {
    let total = ranks.len();
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let counts = subset_sum_counts(&doubled, n);
    let twice_expected = (n * (total + 1)) as i64;
    let observed_dev = ((2.0 * observed).round() as i64 - twice_expected).abs();
    let mut extreme = 0u128;
    let mut all = 0u128;
    for (s, &c) in counts.iter().enumerate() {
        all += c;
        if (s as i64 - twice_expected).abs() >= observed_dev {
            extreme += c;
        }
    }
    (extreme as f64 / all as f64).min(1.0)
}

/// Rank-sum test of `a` against `b`. Small samples use the exact
/// permutation distribution of the midrank sum; larger ones a normal
/// approximation with tie-corrected variance and continuity correction.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(
            "rank-sum test needs two nonempty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "rank-sum test received non-finite values".into(),
        ));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let statistic: f64 = ranks[..n].iter().sum();
    let total = n + m;
    if pooled.iter().all(|v| *v == pooled[0]) {
        return Ok(RankSumTest {
            statistic,
            p_value: 1.0,
            exact: false,
        });
    }
    if n.min(m) < EXACT_BELOW && total <= EXACT_MAX_POOLED {
        let p_value = if n <= m {
            exact_p(&ranks, n, statistic)
        } else {
            let mut swapped = ranks[n..].to_vec();
            swapped.extend_from_slice(&ranks[..n]);
            exact_p(&swapped, m, ranks[n..].iter().sum())
        };
        return Ok(RankSumTest {
            statistic,
            p_value,
            exact: true,
        });
    }
    let (nf, mf, tf) = (n as f64, m as f64, total as f64);
    let expected = nf * (tf + 1.0) / 2.0;
    let mut sorted = pooled;
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut start = 0;
    while start < total {
        let mut end = start + 1;
        while end < total && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    let variance = nf * mf / 12.0 * ((tf + 1.0) - ties / (tf * (tf - 1.0)));
    if variance <= 0.0 {
        return Ok(RankSumTest {
            statistic,
            p_value: 1.0,
            exact: false,
        });
    }
    let z = ((statistic - expected).abs() - 0.5).max(0.0) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(RankSumTest {
        statistic,
        p_value: (2.0 * normal.sf(z)).min(1.0),
        exact: false,
    })
}
