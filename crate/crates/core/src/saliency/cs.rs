//! Cluster-based saliency: k-means clusters scored by descriptor
//! distinctiveness and by the spatial spread of similar clusters, then
//! smoothed back onto points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{min_max_normalize, ModelOutput, ModelParams, ModelTag, SaliencyMap};
use crate::descriptor::{chi2_distance, compute_fpfh, Descriptor33};
use crate::error::{Error, Result};
use crate::geometry::{bounding_sphere, NeighborIndex, Point, PointCloud, Vector};
use crate::warning::Warning;

#[derive(Debug, Clone)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Point>,
    pub sizes: Vec<usize>,
}

fn nearest_center(p: &Point, centers: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, q) in centers.iter().enumerate() {
        let d = (p - q).norm_squared();
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's k-means with k-means++ seeding. Deterministic for a given seed.
pub fn kmeans(
    points: &[Point],
    k: usize,
    seed: u64,
    max_iterations: usize,
) -> Result<ClusterResult> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    if k == 0 || k > n {
        return Err(Error::TooManyClusters { k, points: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| (p - points[chosen[0]]).norm_squared())
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min((p - points[next]).norm_squared());
        }
    }
    let mut centroids: Vec<Point> = chosen.iter().map(|&i| points[i]).collect();
    let mut assignments = vec![usize::MAX; n];

    for _ in 0..max_iterations.max(1) {
        let next: Vec<(usize, f64)> = points
            .par_iter()
            .map(|p| nearest_center(p, &centroids))
            .collect();
        let changed = next.iter().zip(&assignments).any(|(a, b)| a.0 != *b);
        for (a, (c, _)) in assignments.iter_mut().zip(&next) {
            *a = *c;
        }
        let mut sums = vec![Vector::zeros(); k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            sums[c] += p.coords;
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = Point::from(sums[c] / counts[c] as f64);
            }
        }
        // Refill empty clusters with the point farthest from its own centroid.
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[assignments[i]] > 1)
                    .max_by(|&a, &b| {
                        let da = (points[a] - centroids[assignments[a]]).norm_squared();
                        let db = (points[b] - centroids[assignments[b]]).norm_squared();
                        da.total_cmp(&db).then(b.cmp(&a))
                    });
                if let Some(i) = far {
                    counts[assignments[i]] -= 1;
                    assignments[i] = c;
                    counts[c] = 1;
                    centroids[c] = points[i];
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut sizes = vec![0usize; k];
    for &c in &assignments {
        sizes[c] += 1;
    }
    Ok(ClusterResult {
        assignments,
        centroids,
        sizes,
    })
}

/// `1 - exp(-mean_{j != i} chi2(F_i, F_j) / (1 + |c_i - c_j| / scale))` per cluster.
pub fn cluster_distinctiveness(
    descriptors: &[Descriptor33],
    centroids: &[Point],
    scale: f64,
) -> Vec<f64> {
    let k = descriptors.len();
    if k < 2 {
        return vec![0.0; k];
    }
    (0..k)
        .map(|i| {
            let sum: f64 = (0..k)
                .filter(|&j| j != i)
                .map(|j| {
                    chi2_distance(&descriptors[i], &descriptors[j])
                        / (1.0 + (centroids[i] - centroids[j]).norm() / scale)
                })
                .sum();
            1.0 - (-sum / (k - 1) as f64).exp()
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

/// `1 - V_i / max V` where `V_i` is the similarity-weighted spatial variance of
/// cluster centroids around cluster `i`.
fn spatial_distribution(descriptors: &[Descriptor33], centroids: &[Point], sigma: f64) -> Vec<f64> {
    let k = descriptors.len();
    let variances: Vec<f64> = (0..k)
        .map(|i| {
            let w: Vec<f64> = (0..k)
                .map(|j| (-chi2_distance(&descriptors[i], &descriptors[j]) / sigma).exp())
                .collect();
            let total: f64 = w.iter().sum();
            let mean = w
                .iter()
                .zip(centroids)
                .fold(Vector::zeros(), |acc, (wj, c)| acc + c.coords * *wj)
                / total;
            w.iter()
                .zip(centroids)
                .map(|(wj, c)| wj * (c.coords - mean).norm_squared())
                .sum::<f64>()
                / total
        })
        .collect();
    let max = variances.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![1.0; k];
    }
    variances.iter().map(|v| 1.0 - v / max).collect()
}

/// Intermediate CS quantities, in positions normalized to the unit bounding sphere.
#[derive(Debug, Clone)]
pub struct CsDetail {
    pub clusters: ClusterResult,
    pub cluster_descriptors: Vec<Descriptor33>,
    pub distinctiveness: Vec<f64>,
    pub spatial: Vec<f64>,
    pub cluster_saliency: Vec<f64>,
    pub point_saliency: Vec<f64>,
    pub warnings: Vec<Warning>,
}

pub fn cs_detail(cloud: &PointCloud, params: &ModelParams) -> Result<CsDetail> {
    params.validate()?;
    cloud.normals()?;
    let n = cloud.len();
    let k = params.cs_clusters;
    if k > n {
        return Err(Error::TooManyClusters { k, points: n });
    }
    let sphere = bounding_sphere(&cloud.points)?;
    let scale = if sphere.radius > 0.0 {
        sphere.radius
    } else {
        1.0
    };
    let unit_points: Vec<Point> = cloud
        .points
        .iter()
        .map(|p| Point::from((p - sphere.center) / scale))
        .collect();
    let clusters = kmeans(&unit_points, k, params.seed, params.cs_max_iterations)?;
    if k == 1 {
        return Ok(CsDetail {
            clusters,
            cluster_descriptors: Vec::new(),
            distinctiveness: vec![0.0],
            spatial: vec![0.0],
            cluster_saliency: vec![0.0],
            point_saliency: vec![0.0; n],
            warnings: Vec::new(),
        });
    }

    let index = NeighborIndex::build(&cloud.points)?;
    let set = compute_fpfh(
        cloud,
        &index,
        params.cs_radius * scale,
        &params.descriptor_config(scale),
    )?;
    let mut sums = vec![Descriptor33::zeros(); k];
    for (d, &c) in set.descriptors.iter().zip(&clusters.assignments) {
        sums[c] += d.unit_mass();
    }
    let cluster_descriptors: Vec<Descriptor33> = sums
        .into_iter()
        .zip(&clusters.sizes)
        .map(|(s, &count)| s * (1.0 / count.max(1) as f64))
        .collect();

    let distinctiveness = cluster_distinctiveness(&cluster_descriptors, &clusters.centroids, 1.0);
    let sigma = if params.cs_similarity_sigma > 0.0 {
        params.cs_similarity_sigma
    } else {
        let mut pairwise = Vec::with_capacity(k * (k - 1) / 2);
        for i in 0..k {
            for j in i + 1..k {
                pairwise.push(chi2_distance(
                    &cluster_descriptors[i],
                    &cluster_descriptors[j],
                ));
            }
        }
        let m = median(pairwise);
        if m > 0.0 {
            m
        } else {
            1.0
        }
    };
    let spatial = spatial_distribution(&cluster_descriptors, &clusters.centroids, sigma);
    let d_hat = min_max_normalize(&distinctiveness);
    let combined: Vec<f64> = d_hat.iter().zip(&spatial).map(|(d, s)| d + s).collect();
    let cluster_saliency = min_max_normalize(&combined);

    let sigma_s = params.cs_smoothing_sigma;
    let point_saliency: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            if sigma_s <= 0.0 {
                return cluster_saliency[clusters.assignments[i]];
            }
            let d2: Vec<f64> = clusters
                .centroids
                .iter()
                .map(|c| (unit_points[i] - c).norm_squared())
                .collect();
            let min = d2.iter().copied().fold(f64::INFINITY, f64::min);
            let mut num = 0.0;
            let mut den = 0.0;
            for (c, d) in d2.iter().enumerate() {
                let w = (-(d - min) / (2.0 * sigma_s * sigma_s)).exp();
                num += w * cluster_saliency[c];
                den += w;
            }
            num / den
        })
        .collect();

    Ok(CsDetail {
        clusters,
        cluster_descriptors,
        distinctiveness,
        spatial,
        cluster_saliency,
        point_saliency,
        warnings: set.warnings,
    })
}

/// CS saliency of an oriented point cloud.
pub fn compute_cs(shape_id: &str, cloud: &PointCloud, params: &ModelParams) -> Result<ModelOutput> {
    let detail = cs_detail(cloud, params)?;
    Ok(ModelOutput {
        map: SaliencyMap::normalized(shape_id, ModelTag::CS, &detail.point_saliency)?,
        warnings: detail.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(n: usize, center: Vector, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Point::from(
                    center
                        + Vector::new(
                            rng.gen_range(-0.3..0.3),
                            rng.gen_range(-0.3..0.3),
                            rng.gen_range(-0.3..0.3),
                        ),
                )
            })
            .collect()
    }

    #[test]
    fn partition_covers_all_points() {
        let pts = blob(120, Vector::zeros(), 1);
        let r = kmeans(&pts, 7, 3, 50).unwrap();
        assert_eq!(r.sizes.iter().sum::<usize>(), 120);
        assert!(r.sizes.iter().all(|&s| s > 0));
        assert!(r.assignments.iter().all(|&a| a < 7));
        let again = kmeans(&pts, 7, 3, 50).unwrap();
        assert_eq!(r.assignments, again.assignments);
    }

    #[test]
    fn kmeans_separates_blobs() {
        let mut pts = blob(50, Vector::zeros(), 2);
        pts.extend(blob(50, Vector::new(10.0, 0.0, 0.0), 3));
        let r = kmeans(&pts, 2, 0, 50).unwrap();
        assert!(r.assignments[..50].iter().all(|&a| a == r.assignments[0]));
        assert!(r.assignments[50..].iter().all(|&a| a == r.assignments[50]));
        assert_ne!(r.assignments[0], r.assignments[50]);
    }

    #[test]
    fn kmeans_with_duplicates() {
        let pts = vec![Point::origin(); 5];
        let r = kmeans(&pts, 3, 0, 10).unwrap();
        assert_eq!(r.sizes.iter().sum::<usize>(), 5);
    }

    #[test]
    fn too_many_clusters() {
        let pts = blob(5, Vector::zeros(), 1);
        let cloud = PointCloud::new(pts)
            .with_normals(vec![Vector::z(); 5])
            .unwrap();
        let params = ModelParams {
            cs_clusters: 6,
            ..Default::default()
        };
        assert!(matches!(
            compute_cs("s", &cloud, &params),
            Err(Error::TooManyClusters { .. })
        ));
    }

    #[test]
    fn single_cluster_is_flat() {
        let pts = blob(40, Vector::zeros(), 4);
        let cloud = PointCloud::new(pts)
            .with_normals(vec![Vector::z(); 40])
            .unwrap();
        let params = ModelParams {
            cs_clusters: 1,
            ..Default::default()
        };
        let out = compute_cs("s", &cloud, &params).unwrap();
        assert!(out.map.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
