//! Two-scale distinctiveness with focus-of-attention association.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{min_max_normalize, ModelOutput, ModelParams, ModelTag, SaliencyMap};
use crate::descriptor::{chi2_distance, compute_fpfh, Descriptor33};
use crate::error::{Error, Result};
use crate::geometry::{bounding_sphere, NeighborIndex, Point, PointCloud};

const FOCUS_FRACTION: f64 = 0.2;

/// Controls how many partners each point is compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistinctivenessOptions {
    /// Compare against every other point regardless of size.
    pub exact: bool,
    /// Point count above which partners are sampled.
    pub exact_limit: usize,
    pub near: usize,
    pub far: usize,
    pub seed: u64,
}

impl Default for DistinctivenessOptions {
    fn default() -> Self {
        Self::from(&ModelParams::default())
    }
}

impl From<&ModelParams> for DistinctivenessOptions {
    fn from(p: &ModelParams) -> Self {
        Self {
            exact: p.ls_exact,
            exact_limit: p.ls_exact_limit,
            near: p.ls_near_samples,
            far: p.ls_far_samples,
            seed: p.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LsIntermediate {
    pub d_low: Vec<f64>,
    pub d_high: Vec<f64>,
    pub a_low: Vec<f64>,
    pub foci: Vec<usize>,
}

fn partner_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn sampled_partners(index: &NeighborIndex, i: usize, opts: &DistinctivenessOptions) -> Vec<usize> {
    let n = index.len();
    let mut partners: Vec<usize> = index
        .k_nearest(i, opts.near.min(n - 1))
        .into_iter()
        .map(|(j, _)| j)
        .collect();
    partners.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(partner_seed(opts.seed, i));
    let budget = opts.far.min(n - 1 - partners.len());
    let mut far = Vec::with_capacity(budget);
    while far.len() < budget {
        let j = rng.gen_range(0..n);
        if j != i && partners.binary_search(&j).is_err() && !far.contains(&j) {
            far.push(j);
        }
    }
    partners.extend(far);
    partners
}

/// Unnormalized distinctiveness `1 - exp(-mean_j chi2(H_i, H_j) / (1 + |p_i - p_j| / R))`
/// on unit-mass descriptors.
pub(crate) fn raw_distinctiveness(
    points: &[Point],
    descriptors: &[Descriptor33],
    scale: f64,
    opts: &DistinctivenessOptions,
) -> Result<Vec<f64>> {
    let n = points.len();
    if descriptors.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: descriptors.len(),
        });
    }
    if n < 2 {
        return Ok(vec![0.0; n]);
    }
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let unit: Vec<Descriptor33> = descriptors.iter().map(|d| d.unit_mass()).collect();
    let dissimilarity = |i: usize, j: usize| {
        chi2_distance(&unit[i], &unit[j]) / (1.0 + (points[i] - points[j]).norm() / scale)
    };
    let sampled = !opts.exact && n > opts.exact_limit;
    let index = if sampled {
        Some(NeighborIndex::build(points)?)
    } else {
        None
    };
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mean = match &index {
                None => {
                    let sum: f64 = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| dissimilarity(i, j))
                        .sum();
                    sum / (n - 1) as f64
                }
                Some(index) => {
                    let partners = sampled_partners(index, i, opts);
                    let sum: f64 = partners.iter().map(|&j| dissimilarity(i, j)).sum();
                    sum / partners.len().max(1) as f64
                }
            };
            1.0 - (-mean).exp()
        })
        .collect())
}

/// Distinctiveness of every point at one descriptor scale, rescaled to [0, 1].
/// `scale` is the bounding-sphere radius used to make the distance weight unitless.
pub fn ls_distinctiveness(
    cloud: &PointCloud,
    descriptors: &[Descriptor33],
    scale: f64,
    opts: &DistinctivenessOptions,
) -> Result<Vec<f64>> {
    Ok(min_max_normalize(&raw_distinctiveness(
        &cloud.points,
        descriptors,
        scale,
        opts,
    )?))
}

/// Indices of the top 20% (rounded up) by `d_low`, ties to the lower index,
/// returned in ascending index order.
pub(crate) fn select_foci(d_low: &[f64]) -> Vec<usize> {
    let count = (FOCUS_FRACTION * d_low.len() as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..d_low.len()).collect();
    order.sort_by(|&a, &b| d_low[b].total_cmp(&d_low[a]).then(a.cmp(&b)));
    let mut foci = order[..count.min(order.len())].to_vec();
    foci.sort_unstable();
    foci
}

/// `exp(-d^2 / (2 sigma^2)) * d_low(f)` where `f` is the nearest focus at distance `d`.
pub fn focus_association(
    points: &[Point],
    d_low: &[f64],
    foci: &[usize],
    sigma: f64,
) -> Result<Vec<f64>> {
    if foci.is_empty() {
        return Ok(vec![0.0; points.len()]);
    }
    let focus_points: Vec<Point> = foci.iter().map(|&f| points[f]).collect();
    let index = NeighborIndex::build(&focus_points)?;
    let two_s2 = 2.0 * sigma * sigma;
    Ok(points
        .par_iter()
        .map(|p| {
            let (k, d) = index.nearest(p);
            (-(d * d) / two_s2).exp() * d_low[foci[k]]
        })
        .collect())
}

/// Foci of attention and the rescaled association field.
pub fn ls_foci_and_association(
    cloud: &PointCloud,
    d_low: &[f64],
    scale: f64,
    sigma_fraction: f64,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if d_low.len() != cloud.len() {
        return Err(Error::LengthMismatch {
            expected: cloud.len(),
            actual: d_low.len(),
        });
    }
    let foci = select_foci(d_low);
    let raw = focus_association(&cloud.points, d_low, &foci, sigma_fraction * scale)?;
    Ok((foci, min_max_normalize(&raw)))
}

/// `1/2 (D_low + D_high) + 1/2 A_low`.
pub fn combine_ls(d_low: f64, d_high: f64, a_low: f64) -> f64 {
    0.5 * (d_low + d_high) + 0.5 * a_low
}

pub(crate) fn ls_intermediate(
    cloud: &PointCloud,
    params: &ModelParams,
) -> Result<(LsIntermediate, Vec<crate::warning::Warning>)> {
    cloud.normals()?;
    let sphere = bounding_sphere(&cloud.points)?;
    let scale = sphere.radius;
    let index = NeighborIndex::build(&cloud.points)?;
    let cfg = params.descriptor_config(scale);
    let opts = DistinctivenessOptions::from(params);
    let low = compute_fpfh(cloud, &index, params.r_low * scale, &cfg)?;
    let high = compute_fpfh(cloud, &index, params.r_high * scale, &cfg)?;
    let d_low = ls_distinctiveness(cloud, &low.descriptors, scale, &opts)?;
    let d_high = ls_distinctiveness(cloud, &high.descriptors, scale, &opts)?;
    let (foci, a_low) = ls_foci_and_association(cloud, &d_low, scale, params.ls_focus_sigma)?;
    let mut warnings = low.warnings;
    warnings.extend(high.warnings);
    Ok((
        LsIntermediate {
            d_low,
            d_high,
            a_low,
            foci,
        },
        warnings,
    ))
}

/// LS saliency of an oriented point cloud.
pub fn compute_ls(shape_id: &str, cloud: &PointCloud, params: &ModelParams) -> Result<ModelOutput> {
    params.validate()?;
    let (parts, warnings) = ls_intermediate(cloud, params)?;
    let raw: Vec<f64> = (0..cloud.len())
        .map(|i| combine_ls(parts.d_low[i], parts.d_high[i], parts.a_low[i]))
        .collect();
    Ok(ModelOutput {
        map: SaliencyMap::normalized(shape_id, ModelTag::LS, &raw)?,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::DESCRIPTOR_LEN;

    fn random_descriptors(n: usize, seed: u64) -> Vec<Descriptor33> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut d = Descriptor33::zeros();
                for b in 0..DESCRIPTOR_LEN {
                    if rng.gen_bool(0.6) {
                        d.0[b] = rng.gen_range(0.0..60.0);
                    }
                }
                d
            })
            .collect()
    }

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point::new(rng.gen(), rng.gen(), rng.gen()))
            .collect()
    }

    #[test]
    fn identical_descriptors_have_zero_distinctiveness() {
        let pts = random_points(15, 1);
        let d = vec![random_descriptors(1, 2)[0]; 15];
        let raw = raw_distinctiveness(&pts, &d, 1.0, &DistinctivenessOptions::default()).unwrap();
        assert!(raw.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_point_is_zero() {
        let cloud = PointCloud::new(random_points(1, 1));
        let d = random_descriptors(1, 1);
        assert_eq!(
            ls_distinctiveness(&cloud, &d, 1.0, &Default::default()).unwrap(),
            vec![0.0]
        );
    }

    #[test]
    fn distinctiveness_is_scale_free() {
        let pts = random_points(25, 3);
        let d = random_descriptors(25, 4);
        let big: Vec<Point> = pts.iter().map(|p| Point::from(p.coords * 2.0)).collect();
        let a = ls_distinctiveness(
            &PointCloud::new(pts.clone()),
            &d,
            bounding_sphere(&pts).unwrap().radius,
            &Default::default(),
        )
        .unwrap();
        let b = ls_distinctiveness(
            &PointCloud::new(big.clone()),
            &d,
            bounding_sphere(&big).unwrap().radius,
            &Default::default(),
        )
        .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn sampled_partners_are_distinct_and_deterministic() {
        let pts = random_points(300, 5);
        let index = NeighborIndex::build(&pts).unwrap();
        let opts = DistinctivenessOptions {
            exact: false,
            exact_limit: 10,
            near: 20,
            far: 30,
            seed: 9,
        };
        let a = sampled_partners(&index, 7, &opts);
        let b = sampled_partners(&index, 7, &opts);
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 50);
        assert!(!a.contains(&7));
    }

    #[test]
    fn sampling_with_full_budget_equals_exact() {
        let pts = random_points(40, 6);
        let d = random_descriptors(40, 7);
        let exact = raw_distinctiveness(
            &pts,
            &d,
            1.0,
            &DistinctivenessOptions {
                exact: true,
                ..Default::default()
            },
        )
        .unwrap();
        let sampled = raw_distinctiveness(
            &pts,
            &d,
            1.0,
            &DistinctivenessOptions {
                exact: false,
                exact_limit: 5,
                near: 10,
                far: 100,
                seed: 1,
            },
        )
        .unwrap();
        for (a, b) in exact.iter().zip(&sampled) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ten_points_two_foci() {
        let d: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(select_foci(&d), vec![8, 9]);
        // ties break toward the lower index
        assert_eq!(select_foci(&[1.0; 10]), vec![0, 1]);
    }

    #[test]
    fn focus_has_own_value() {
        let pts = random_points(30, 8);
        let d: Vec<f64> = (0..30).map(|i| ((i * 7) % 30) as f64 / 29.0).collect();
        let foci = select_foci(&d);
        let a = focus_association(&pts, &d, &foci, 0.1).unwrap();
        for &f in &foci {
            assert_eq!(a[f], d[f]);
        }
    }

    #[test]
    fn combination_formula() {
        assert_eq!(combine_ls(1.0, 1.0, 1.0), 1.5);
        assert_eq!(combine_ls(0.2, 0.4, 0.0), 0.30000000000000004);
    }

    #[test]
    fn requires_normals() {
        let cloud = PointCloud::new(random_points(20, 1));
        assert!(matches!(
            compute_ls("x", &cloud, &ModelParams::default()),
            Err(Error::MissingNormals)
        ));
    }
}
