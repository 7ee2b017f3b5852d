//! SPFH / FPFH local shape descriptors and the chi-squared histogram distance.
//!
//! Each point pair is encoded by three Darboux-frame angles taken in absolute
//! value. An SPFH is three 11-bin histograms of those angles over a point's
//! neighborhood (each block normalized to sum to 100), and the FPFH adds the
//! inverse-distance-weighted mean of the neighbors' SPFHs.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Index, Mul};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{least_aligned_axis, NeighborIndex, Point, PointCloud, Vector};
use crate::warning::Warning;

pub const BINS_PER_ANGLE: usize = 11;
pub const DESCRIPTOR_LEN: usize = 3 * BINS_PER_ANGLE;

const PARALLEL_EPS: f64 = 1e-12;
const BASELINE_NUDGE: f64 = 1e-8;

/// Absolute Darboux angles of a point pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleTriple {
    /// |v . n_j|, in [0, 1].
    pub alpha: f64,
    /// |u . d|, in [0, 1].
    pub phi: f64,
    /// |atan2(w . n_j, u . n_j)|, in [0, pi].
    pub theta: f64,
}

/// Angles between `(p_i, n_i)` and `(p_j, n_j)` in the frame
/// `u = n_i`, `v = u x d`, `w = u x v`, with `d` the unit baseline.
///
/// When `n_i` is parallel to the baseline the baseline is nudged by 1e-8 along
/// its smallest-magnitude axis so the frame stays defined.
pub fn darboux_angles(p_i: &Point, n_i: &Vector, p_j: &Point, n_j: &Vector) -> Result<AngleTriple> {
    let delta = p_j - p_i;
    let len = delta.norm();
    if len == 0.0 || !len.is_finite() {
        return Err(Error::ZeroBaseline);
    }
    let mut d = delta / len;
    let u = *n_i;
    let mut v = u.cross(&d);
    if v.norm() < PARALLEL_EPS {
        d = (d + BASELINE_NUDGE * least_aligned_axis(&d)).normalize();
        v = u.cross(&d);
    }
    let v = v.normalize();
    let w = u.cross(&v);
    let alpha = v.dot(n_j);
    let phi = u.dot(&d);
    let theta = w.dot(n_j).atan2(u.dot(n_j));
    Ok(AngleTriple {
        alpha: alpha.abs().min(1.0),
        phi: phi.abs().min(1.0),
        theta: theta.abs(),
    })
}

/// 33-bin descriptor: alpha, phi and theta histograms concatenated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptor33(pub [f64; DESCRIPTOR_LEN]);

impl Default for Descriptor33 {
    fn default() -> Self {
        Self([0.0; DESCRIPTOR_LEN])
    }
}

impl Descriptor33 {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn bins(&self) -> &[f64; DESCRIPTOR_LEN] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|b| *b == 0.0)
    }

    /// Scales the bins to sum to one; zero descriptors are returned unchanged.
    pub fn unit_mass(&self) -> Self {
        let total = self.total();
        if total > 0.0 {
            *self * (1.0 / total)
        } else {
            *self
        }
    }
}

impl Index<usize> for Descriptor33 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Descriptor33 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for Descriptor33 {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a += b;
        }
    }
}

impl Mul<f64> for Descriptor33 {
    type Output = Self;
    fn mul(mut self, s: f64) -> Self {
        for a in &mut self.0 {
            *a *= s;
        }
        self
    }
}

/// Histogram bin of `value` over `[0, max]`; the upper edge falls in the last bin.
pub fn bin_index(value: f64, max: f64) -> usize {
    let b = (value / max * BINS_PER_ANGLE as f64).floor();
    if b.is_nan() || b < 0.0 {
        0
    } else {
        (b as usize).min(BINS_PER_ANGLE - 1)
    }
}

/// How each 11-bin SPFH block is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockNormalization {
    /// Each nonempty block sums to 100.
    Percent,
    /// Raw pair counts.
    Counts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorConfig {
    pub normalization: BlockNormalization,
    /// Length unit for the FPFH `1 / |p - q|` weights. Saliency models pass
    /// the bounding radius so descriptors do not depend on model scale.
    pub distance_unit: f64,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            normalization: BlockNormalization::Percent,
            distance_unit: 1.0,
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "support radius {r} must be positive"
        )))
    }
}

fn spfh_inner(
    i: usize,
    points: &[Point],
    normals: &[Vector],
    neighbors: &[(usize, f64)],
    cfg: &DescriptorConfig,
    warnings: &mut Vec<Warning>,
) -> Descriptor33 {
    let mut h = Descriptor33::zeros();
    let mut pairs = 0usize;
    for &(j, _) in neighbors {
        match darboux_angles(&points[i], &normals[i], &points[j], &normals[j]) {
            Ok(t) => {
                h.0[bin_index(t.alpha, 1.0)] += 1.0;
                h.0[BINS_PER_ANGLE + bin_index(t.phi, 1.0)] += 1.0;
                h.0[2 * BINS_PER_ANGLE + bin_index(t.theta, PI)] += 1.0;
                pairs += 1;
            }
            Err(_) => warnings.push(Warning::CoincidentNeighbor {
                point: i,
                neighbor: j,
            }),
        }
    }
    if pairs == 0 {
        warnings.push(Warning::IsolatedPoint { point: i });
    } else if cfg.normalization == BlockNormalization::Percent {
        h = h * (100.0 / pairs as f64);
    }
    h
}

fn fpfh_combine(
    own: &Descriptor33,
    neighbors: &[(usize, f64)],
    spfhs: impl Fn(usize) -> Descriptor33,
    cfg: &DescriptorConfig,
) -> Descriptor33 {
    let usable: Vec<&(usize, f64)> = neighbors.iter().filter(|(_, d)| *d > 0.0).collect();
    if usable.is_empty() {
        return *own;
    }
    let mut acc = Descriptor33::zeros();
    for &&(j, d) in &usable {
        acc += spfhs(j) * (cfg.distance_unit / d);
    }
    *own + acc * (1.0 / usable.len() as f64)
}

/// Simplified point feature histogram of point `i` over neighbors strictly
/// within `r`. Isolated points yield a zero descriptor and a warning.
pub fn spfh(
    i: usize,
    cloud: &PointCloud,
    index: &NeighborIndex,
    r: f64,
    cfg: &DescriptorConfig,
) -> Result<(Descriptor33, Vec<Warning>)> {
    check_radius(r)?;
    let normals = cloud.normals()?;
    let mut warnings = Vec::new();
    let neighbors = index.radius_neighbors(i, r);
    let h = spfh_inner(i, &cloud.points, normals, &neighbors, cfg, &mut warnings);
    Ok((h, warnings))
}

/// Fast point feature histogram of a single point. Recomputes the neighbor
/// SPFHs; use [`compute_fpfh`] for whole clouds.
pub fn fpfh(
    i: usize,
    cloud: &PointCloud,
    index: &NeighborIndex,
    r: f64,
    cfg: &DescriptorConfig,
) -> Result<(Descriptor33, Vec<Warning>)> {
    let (own, warnings) = spfh(i, cloud, index, r, cfg)?;
    let neighbors = index.radius_neighbors(i, r);
    let normals = cloud.normals()?;
    let h = fpfh_combine(
        &own,
        &neighbors,
        |j| {
            let nb = index.radius_neighbors(j, r);
            spfh_inner(j, &cloud.points, normals, &nb, cfg, &mut Vec::new())
        },
        cfg,
    );
    Ok((h, warnings))
}

/// FPFH descriptors for every point of a cloud.
#[derive(Debug, Clone)]
pub struct DescriptorSet {
    pub descriptors: Vec<Descriptor33>,
    pub warnings: Vec<Warning>,
}

pub fn compute_fpfh(
    cloud: &PointCloud,
    index: &NeighborIndex,
    r: f64,
    cfg: &DescriptorConfig,
) -> Result<DescriptorSet> {
    check_radius(r)?;
    let normals = cloud.normals()?;
    let n = cloud.len();
    let neighborhoods: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| index.radius_neighbors(i, r))
        .collect();
    let spfhs: Vec<(Descriptor33, Vec<Warning>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut w = Vec::new();
            let h = spfh_inner(i, &cloud.points, normals, &neighborhoods[i], cfg, &mut w);
            (h, w)
        })
        .collect();
    let descriptors: Vec<Descriptor33> = (0..n)
        .into_par_iter()
        .map(|i| fpfh_combine(&spfhs[i].0, &neighborhoods[i], |j| spfhs[j].0, cfg))
        .collect();
    let warnings = spfhs.into_iter().flat_map(|(_, w)| w).collect();
    Ok(DescriptorSet {
        descriptors,
        warnings,
    })
}

/// `1/2 * sum (a_i - b_i)^2 / (a_i + b_i)`, skipping empty bin pairs.
pub fn chi2_distance(a: &Descriptor33, b: &Descriptor33) -> f64 {
    let mut sum = 0.0;
    for (x, y) in a.0.iter().zip(b.0.iter()) {
        let s = x + y;
        if s != 0.0 {
            let d = x - y;
            sum += d * d / s;
        }
    }
    0.5 * sum
}
