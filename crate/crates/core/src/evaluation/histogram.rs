//! Reference CDF and histogram matching.

use crate::error::{Error, Result};
use crate::saliency::SaliencyMap;
use crate::warning::Warning;

pub const DEFAULT_BINS: usize = 256;

/// Absorbs rounding in accumulated bin masses.
const CDF_TOLERANCE: f64 = 1e-12;

fn bin_of(value: f64, bins: usize) -> usize {
    ((value.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
}

/// Cumulative distribution over `[0, 1]` at bin resolution. Entry `b` is the
/// mass at or below the upper edge of bin `b`; the CDF is linear inside bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCdf {
    cumulative: Vec<f64>,
}

impl ReferenceCdf {
    /// Builds the CDF of a histogram whose entries sum to one.
    pub fn from_histogram(histogram: &[f64]) -> Result<Self> {
        if histogram.len() < 2 {
            return Err(Error::InvalidParameter(
                "at least 2 histogram bins required".into(),
            ));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = histogram
            .iter()
            .map(|h| {
                acc += h;
                acc.min(1.0)
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self { cumulative })
    }

    pub fn bins(&self) -> usize {
        self.cumulative.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.cumulative
    }

    /// CDF at `x`, interpolated linearly within bins.
    pub fn cdf(&self, x: f64) -> f64 {
        let bins = self.bins();
        let pos = x.clamp(0.0, 1.0) * bins as f64;
        let b = (pos as usize).min(bins - 1);
        let below = if b == 0 { 0.0 } else { self.cumulative[b - 1] };
        below + (self.cumulative[b] - below) * (pos - b as f64)
    }

    /// Smallest `x` with `cdf(x) >= q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let bins = self.bins();
        let q = q.clamp(0.0, 1.0);
        let b = self
            .cumulative
            .partition_point(|c| *c < q - CDF_TOLERANCE)
            .min(bins - 1);
        let below = if b == 0 { 0.0 } else { self.cumulative[b - 1] };
        let mass = self.cumulative[b] - below;
        let frac = if mass > 0.0 {
            ((q - below) / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (b as f64 + frac) / bins as f64
    }
}

/// Normalized histogram of values in `[0, 1]`; the value 1 falls in the last bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for v in values {
        h[bin_of(*v, bins)] += 1.0;
    }
    let n = values.len().max(1) as f64;
    h.iter_mut().for_each(|x| *x /= n);
    h
}

/// CDF of the mean of the per-field normalized histograms.
pub fn reference_histogram(fields: &[Vec<f64>], bins: usize) -> Result<ReferenceCdf> {
    if bins < 2 {
        return Err(Error::InvalidParameter(
            "at least 2 histogram bins required".into(),
        ));
    }
    let usable: Vec<&Vec<f64>> = fields.iter().filter(|f| !f.is_empty()).collect();
    if usable.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut mean = vec![0.0; bins];
    for f in &usable {
        for (m, h) in mean.iter_mut().zip(histogram(f, bins)) {
            *m += h;
        }
    }
    let k = usable.len() as f64;
    mean.iter_mut().for_each(|m| *m /= k);
    ReferenceCdf::from_histogram(&mean)
}

/// Maps each value `v` to `reference.quantile(F(v))`, where `F` is the
/// empirical CDF of the map. Constant maps go to the reference median.
pub fn histogram_match(
    map: &SaliencyMap,
    reference: &ReferenceCdf,
) -> Result<(SaliencyMap, Vec<Warning>)> {
    let values = &map.values;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "map contains non-finite values".into(),
        ));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = map.clone();
    if values.is_empty() {
        return Ok((out, Vec::new()));
    }
    if hi <= lo {
        let median = reference.quantile(0.5);
        out.values.iter_mut().for_each(|v| *v = median);
        return Ok((out, vec![Warning::ConstantMap]));
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let matched = reference.quantile(end as f64 / n as f64);
        for &i in &order[start..end] {
            out.values[i] = matched;
        }
        start = end;
    }
    Ok((out, Vec::new()))
}
