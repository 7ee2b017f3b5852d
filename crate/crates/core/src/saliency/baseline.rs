//! Random and human baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ModelOutput, ModelTag, SaliencyMap};
use crate::error::{Error, Result};
use crate::geometry::{bounding_sphere, NeighborIndex, Point};

/// Gaussian support cut-off in units of sigma.
const TRUNCATION: f64 = 4.0;

/// I.i.d. uniform saliency, deterministic for a given seed.
pub fn compute_rs(shape_id: &str, count: usize, seed: u64) -> Result<SaliencyMap> {
    if count == 0 {
        return Err(Error::EmptyPointSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..count).map(|_| rng.gen::<f64>()).collect();
    SaliencyMap::normalized(shape_id, ModelTag::RS, &raw)
}

/// Selection frequency of the `chosen` participants, smoothed by a Euclidean
/// Gaussian of width `sigma * R`. A zero `sigma` returns the raw frequency.
pub fn selection_field(
    points: &[Point],
    selections: &[Vec<usize>],
    chosen: &[usize],
    sigma: f64,
) -> Result<Vec<f64>> {
    if chosen.is_empty() {
        return Err(Error::NoParticipants);
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "smoothing sigma {sigma} must be >= 0"
        )));
    }
    let n = points.len();
    let mut freq = vec![0.0; n];
    for &p in chosen {
        let picked = selections.get(p).ok_or(Error::IndexOutOfRange {
            index: p,
            len: selections.len(),
        })?;
        let mut seen = picked.clone();
        seen.sort_unstable();
        seen.dedup();
        for v in seen {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, len: n });
            }
            freq[v] += 1.0;
        }
    }
    let share = 1.0 / chosen.len() as f64;
    freq.iter_mut().for_each(|f| *f *= share);
    let scale = bounding_sphere(points)?.radius;
    let sigma_abs = sigma * scale;
    if sigma_abs <= 0.0 {
        return Ok(freq);
    }
    let index = NeighborIndex::build(points)?;
    let sources: Vec<usize> = (0..n).filter(|&v| freq[v] > 0.0).collect();
    let two_s2 = 2.0 * sigma_abs * sigma_abs;
    let field = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut acc = 0.0;
            if sources.len() < 64 {
                for &u in &sources {
                    let d2 = (points[v] - points[u]).norm_squared();
                    if d2 < (TRUNCATION * sigma_abs).powi(2) {
                        acc += freq[u] * (-d2 / two_s2).exp();
                    }
                }
            } else {
                for (u, d) in index.within(&points[v], TRUNCATION * sigma_abs, None) {
                    acc += freq[u] * (-d * d / two_s2).exp();
                }
            }
            acc
        })
        .collect();
    Ok(field)
}

/// Map predicted from the selections of the `chosen` participants.
pub fn compute_hs(
    shape_id: &str,
    points: &[Point],
    selections: &[Vec<usize>],
    chosen: &[usize],
    sigma: f64,
) -> Result<ModelOutput> {
    let field = selection_field(points, selections, chosen, sigma)?;
    Ok(ModelOutput {
        map: SaliencyMap::normalized(shape_id, ModelTag::HS, &field)?,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::fibonacci_sphere;

    #[test]
    fn rs_is_seeded_and_uniform() {
        let a = compute_rs("s", 100_000, 9).unwrap();
        let b = compute_rs("s", 100_000, 9).unwrap();
        assert_eq!(a, b);
        let mean = a.values.iter().sum::<f64>() / a.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
        assert_ne!(a, compute_rs("s", 100_000, 10).unwrap());
        assert!(compute_rs("s", 0, 1).is_err());
    }

    #[test]
    fn hs_peaks_at_selected_vertex() {
        let pts = fibonacci_sphere(300);
        let out = compute_hs("s", &pts, &[vec![42]], &[0], 0.03).unwrap();
        let argmax = (0..pts.len())
            .max_by(|&a, &b| out.map.values[a].total_cmp(&out.map.values[b]))
            .unwrap();
        assert_eq!(argmax, 42);
        assert_eq!(out.map.values[42], 1.0);
    }

    #[test]
    fn identical_participants_match_single() {
        let pts = fibonacci_sphere(200);
        let sel = vec![vec![1, 5, 77], vec![1, 5, 77]];
        let one = compute_hs("s", &pts, &sel, &[0], 0.1).unwrap();
        let two = compute_hs("s", &pts, &sel, &[0, 1], 0.1).unwrap();
        for (a, b) in one.map.values.iter().zip(&two.map.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_sigma_is_raw_frequency() {
        let pts = fibonacci_sphere(100);
        let sel = vec![vec![3, 4], vec![4], vec![4, 9, 9]];
        let field = selection_field(&pts, &sel, &[0, 1, 2], 0.0).unwrap();
        let mut counts = vec![0.0; 100];
        for s in &sel {
            let mut u = s.clone();
            u.dedup();
            for v in u {
                counts[v] += 1.0 / 3.0;
            }
        }
        assert_eq!(field, counts);
    }

    #[test]
    fn dense_and_indexed_smoothing_agree() {
        let pts = fibonacci_sphere(400);
        let many: Vec<usize> = (0..400).step_by(5).collect();
        let indexed = selection_field(&pts, std::slice::from_ref(&many), &[0], 0.05).unwrap();
        let sigma = 0.05 * bounding_sphere(&pts).unwrap().radius;
        for v in 0..pts.len() {
            let brute: f64 = many
                .iter()
                .map(|&u| (pts[v] - pts[u]).norm_squared())
                .filter(|d2| *d2 < (TRUNCATION * sigma).powi(2))
                .map(|d2| (-d2 / (2.0 * sigma * sigma)).exp())
                .sum();
            assert!((indexed[v] - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn hs_errors() {
        let pts = fibonacci_sphere(10);
        assert!(matches!(
            compute_hs("s", &pts, &[vec![1]], &[], 0.03),
            Err(Error::NoParticipants)
        ));
        assert!(matches!(
            compute_hs("s", &pts, &[vec![10]], &[0], 0.03),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            compute_hs("s", &pts, &[vec![1]], &[3], 0.03),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
