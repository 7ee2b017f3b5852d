//! AUC, NSS and LCC.

use crate::error::{Error, Result};
use crate::warning::Warning;

/// 1-based ranks with ties sharing their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Sorted, deduplicated union of all selections.
pub fn fixation_set(participants: &[Vec<usize>]) -> Vec<usize> {
    let mut all: Vec<usize> = participants.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    all
}

/// Area under the ROC curve of `values` against the `positives` vertex set,
/// with tied values counted as half.
pub fn roc_auc(values: &[f64], positives: &[usize]) -> Result<f64> {
    let n = values.len();
    let mut is_positive = vec![false; n];
    for &p in positives {
        *is_positive
            .get_mut(p)
            .ok_or(Error::IndexOutOfRange { index: p, len: n })? = true;
    }
    let p = is_positive.iter().filter(|x| **x).count();
    if p == 0 || p == n {
        return Err(Error::DegeneratePositiveSet {
            positives: p,
            total: n,
        });
    }
    let ranks = midranks(values);
    let rank_sum: f64 = ranks
        .iter()
        .zip(&is_positive)
        .filter(|(_, pos)| **pos)
        .map(|(r, _)| r)
        .sum();
    let (p, neg) = (p as f64, (n - p) as f64);
    Ok(((rank_sum - p * (p + 1.0) / 2.0) / (p * neg)).clamp(0.0, 1.0))
}

/// Mean over participants of the mean z-scored saliency at their selections.
/// Participants without selections are skipped with a warning.
pub fn nss(values: &[f64], participants: &[Vec<usize>]) -> Result<(f64, Vec<Warning>)> {
    let n = values.len();
    if participants.is_empty() {
        return Err(Error::NoParticipants);
    }
    let mut warnings = Vec::new();
    let mut scores = Vec::new();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
    for (id, sel) in participants.iter().enumerate() {
        let mut sel = sel.clone();
        sel.sort_unstable();
        sel.dedup();
        if sel.is_empty() {
            warnings.push(Warning::EmptySelection { participant: id });
            continue;
        }
        if let Some(&bad) = sel.iter().find(|&&v| v >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        let score = if sd > 0.0 {
            sel.iter().map(|&v| (values[v] - mean) / sd).sum::<f64>() / sel.len() as f64
        } else {
            0.0
        };
        scores.push(score);
    }
    if scores.is_empty() {
        return Err(Error::EmptySelections);
    }
    Ok((scores.iter().sum::<f64>() / scores.len() as f64, warnings))
}

/// Absolute Pearson correlation; 0 when either input is constant.
pub fn lcc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter(
            "correlation needs at least 2 values".into(),
        ));
    }
    let constant = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi <= lo
    };
    if constant(x) || constant(y) {
        return Ok(0.0);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(0.0);
    }
    Ok((sxy.abs() / (sxx * syy).sqrt()).min(1.0))
}
