//! Brute-force reference implementations used as independent oracles.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use salbench::descriptor::Descriptor33;
use salbench::evaluation::ReferenceCdf;
use salbench::geometry::{Point, PointCloud, TriangleMesh, Vector};

pub type V3 = [f64; 3];

pub fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn unit(a: V3) -> V3 {
    scale(a, 1.0 / dot(a, a).sqrt())
}

pub fn arr(v: &Vector) -> V3 {
    [v.x, v.y, v.z]
}

/// Direct evaluation of the angle triple for a non-degenerate pair.
pub fn oracle_angles(pi: V3, ni: V3, pj: V3, nj: V3) -> V3 {
    let d = unit([pj[0] - pi[0], pj[1] - pi[1], pj[2] - pi[2]]);
    let u = ni;
    let v = unit(cross(u, d));
    let w = cross(u, v);
    [
        dot(v, nj).abs(),
        dot(u, d).abs(),
        dot(w, nj).atan2(dot(u, nj)).abs(),
    ]
}

pub fn oracle_bin(value: f64, max: f64) -> usize {
    let mut b = 0;
    while b < 10 && value >= (b + 1) as f64 * max / 11.0 {
        b += 1;
    }
    b
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let v = Vector::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    let points: Vec<Point> = (0..n)
        .map(|_| Point::new(rng.gen(), rng.gen(), rng.gen()))
        .collect();
    let normals = (0..n).map(|_| random_unit(rng)).collect();
    PointCloud::new(points).with_normals(normals).unwrap()
}

/// Percent-normalized SPFH by looping over every other point.
pub fn oracle_spfh(cloud: &PointCloud, i: usize, r: f64) -> [f64; 33] {
    let n = cloud.normals.as_ref().unwrap();
    let p = &cloud.points;
    let mut h = [0.0; 33];
    let mut count = 0.0;
    for j in 0..p.len() {
        if j == i || (p[j] - p[i]).norm() >= r {
            continue;
        }
        let a = oracle_angles(arr(&p[i].coords), arr(&n[i]), arr(&p[j].coords), arr(&n[j]));
        h[oracle_bin(a[0], 1.0)] += 1.0;
        h[11 + oracle_bin(a[1], 1.0)] += 1.0;
        h[22 + oracle_bin(a[2], PI)] += 1.0;
        count += 1.0;
    }
    if count > 0.0 {
        for b in &mut h {
            *b *= 100.0 / count;
        }
    }
    h
}

pub fn oracle_fpfh(cloud: &PointCloud, i: usize, r: f64) -> [f64; 33] {
    let p = &cloud.points;
    let own = oracle_spfh(cloud, i, r);
    let neighbors: Vec<usize> = (0..p.len())
        .filter(|&j| j != i && (p[j] - p[i]).norm() < r)
        .collect();
    let mut out = own;
    for &j in &neighbors {
        let w = 1.0 / (p[j] - p[i]).norm() / neighbors.len() as f64;
        let s = oracle_spfh(cloud, j, r);
        for b in 0..33 {
            out[b] += w * s[b];
        }
    }
    out
}

pub fn assert_bins(actual: &Descriptor33, expected: &[f64; 33], tol: f64) {
    for b in 0..33 {
        assert!(
            (actual[b] - expected[b]).abs() <= tol * (1.0 + expected[b].abs()),
            "bin {b}: {} vs {}",
            actual[b],
            expected[b]
        );
    }
}

pub fn random_descriptor(rng: &mut ChaCha8Rng) -> Descriptor33 {
    let mut d = Descriptor33::zeros();
    for b in d.0.iter_mut() {
        *b = if rng.gen_bool(0.3) {
            0.0
        } else {
            rng.gen_range(0.0..50.0)
        };
    }
    d
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// First principal axis projection from the 33x33 covariance eigendecomposition.
pub fn covariance_projection(rows: &[Descriptor33]) -> Vec<f64> {
    let n = rows.len();
    let x = DMatrix::from_fn(n, 33, |i, j| rows[i].0[j]);
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(n, 33, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = cov.symmetric_eigen();
    let top = (0..33)
        .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .unwrap();
    let axis = eig.eigenvectors.column(top);
    (0..n)
        .map(|i| centered.row(i).dot(&axis.transpose()).abs())
        .collect()
}

/// Probability that a random positive outranks a random negative, ties counting half.
pub fn pair_auc(values: &[f64], positives: &[usize]) -> f64 {
    let is_pos: Vec<bool> = (0..values.len()).map(|i| positives.contains(&i)).collect();
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &pi) in is_pos.iter().enumerate() {
        for (j, &pj) in is_pos.iter().enumerate() {
            if pi && !pj {
                pairs += 1.0;
                if values[i] > values[j] {
                    wins += 1.0;
                } else if values[i] == values[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, ties: bool) -> (Vec<f64>, Vec<usize>) {
    let values: Vec<f64> = (0..n)
        .map(|_| {
            if ties {
                rng.gen_range(0..5) as f64 / 4.0
            } else {
                rng.gen()
            }
        })
        .collect();
    let k = rng.gen_range(1..n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    let mut positives = idx[..k].to_vec();
    positives.sort_unstable();
    (values, positives)
}

/// Midranks computed by counting smaller and equal values.
pub fn count_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let less = values.iter().filter(|w| *w < v).count() as f64;
            let equal = values.iter().filter(|w| *w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided p by enumerating every assignment of pooled ranks to the first sample.
pub fn enumerated_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = count_ranks(&pooled);
    let (n, total) = (a.len(), pooled.len());
    let observed: f64 = ranks[..n].iter().sum();
    let mean = n as f64 * (total as f64 + 1.0) / 2.0;
    let deviation = (observed - mean).abs();
    let (mut extreme, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let sum: f64 = (0..total)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        all += 1;
        if (sum - mean).abs() >= deviation - 1e-9 {
            extreme += 1;
        }
    }
    extreme as f64 / all as f64
}

pub fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let power = rng.gen_range(0.3..3.0);
    (0..n).map(|_| rng.gen::<f64>().powf(power)).collect()
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and `reference`.
pub fn ks_distance(values: &[f64], reference: &ReferenceCdf) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        let f = reference.cdf(*v);
        worst = worst
            .max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    worst
}

pub fn matched_has_ties(values: &[f64]) -> bool {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2).any(|w| w[0] == w[1])
}

/// Nearest ray parameter over every triangle.
pub fn brute_force_hit(mesh: &TriangleMesh, origin: &Point, dir: &Vector) -> Option<f64> {
    let mut best: Option<f64> = None;
    for f in &mesh.faces {
        let (a, b, c) = (
            mesh.vertices[f[0]],
            mesh.vertices[f[1]],
            mesh.vertices[f[2]],
        );
        let (e1, e2) = (b - a, c - a);
        let p = dir.cross(&e2);
        let det = e1.dot(&p);
        if det.abs() < 1e-14 {
            continue;
        }
        let s = origin - a;
        let u = s.dot(&p) / det;
        let q = s.cross(&e1);
        let v = dir.dot(&q) / det;
        let t = e2.dot(&q) / det;
        if u >= -1e-12
            && v >= -1e-12
            && u + v <= 1.0 + 1e-12
            && t > 1e-12
            && best.is_none_or(|b| t < b)
        {
            best = Some(t);
        }
    }
    best
}
