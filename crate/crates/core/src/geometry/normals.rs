//! Normal estimation from k-nearest-neighbor covariance and consistent
//! orientation by propagation along a minimum spanning tree of the Riemann graph.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::{Matrix3, SymmetricEigen};
use ordered::Weight;
use rayon::prelude::*;

use super::{any_orthogonal, NeighborIndex, PointCloud, Vector};
use crate::error::{Error, Result};
use crate::warning::Warning;

const DEGENERATE_RATIO: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct NormalEstimate {
    pub cloud: PointCloud,
    pub warnings: Vec<Warning>,
}

/// Unit normals from the smallest-eigenvalue eigenvector of each point's
/// k-neighborhood covariance (the point itself included). Signs are arbitrary.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<NormalEstimate> {
    let n = cloud.len();
    if k < 3 || k >= n {
        return Err(Error::InsufficientNeighborhood { k, points: n });
    }
    let index = NeighborIndex::build(&cloud.points)?;
    let results: Vec<(Vector, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let neighbors = index.k_nearest(i, k);
            let members = std::iter::once(i).chain(neighbors.iter().map(|(j, _)| *j));
            let pts: Vec<Vector> = members.map(|j| cloud.points[j].coords).collect();
            let mean = pts.iter().sum::<Vector>() / pts.len() as f64;
            let mut cov = Matrix3::zeros();
            for p in &pts {
                let d = p - mean;
                cov += d * d.transpose();
            }
            cov /= pts.len() as f64;
            smallest_axis(cov)
        })
        .collect();

    let mut warnings = Vec::new();
    let mut normals = Vec::with_capacity(n);
    for (i, (normal, degenerate)) in results.into_iter().enumerate() {
        if degenerate {
            warnings.push(Warning::DegenerateCovariance { point: i });
        }
        normals.push(normal);
    }
    let out = PointCloud {
        points: cloud.points.clone(),
        normals: Some(normals),
        provenance: cloud.provenance.clone(),
    };
    Ok(NormalEstimate {
        cloud: out,
        warnings,
    })
}

/// Returns the eigenvector of the smallest eigenvalue and whether the
/// neighborhood was degenerate (collinear or coincident points).
fn smallest_axis(cov: Matrix3<f64>) -> (Vector, bool) {
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[2]];
    let middle = eig.eigenvalues[order[1]];
    if largest <= 0.0 {
        return (Vector::z(), true);
    }
    if middle <= DEGENERATE_RATIO * largest {
        let dominant: Vector = eig.eigenvectors.column(order[2]).into();
        return (any_orthogonal(&dominant), true);
    }
    let v: Vector = eig.eigenvectors.column(order[0]).into();
    (v.normalize(), false)
}

/// Oriented cloud plus the spanning-forest edges (parent, child) in the order
/// they were traversed.
#[derive(Debug, Clone)]
pub struct Orientation {
    pub cloud: PointCloud,
    pub tree: Vec<(usize, usize)>,
    pub flipped: usize,
}

mod ordered {
    /// Total-ordered edge weight for the priority queue.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Weight(pub f64);

    impl Eq for Weight {}

    impl PartialOrd for Weight {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }

    impl Ord for Weight {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }
}

/// Propagates a seed orientation through the minimum spanning tree of the
/// symmetric k-NN graph weighted by `1 - |n_i . n_j|`. Each connected
/// component is seeded at its highest-z point, whose normal is turned to
/// face away from the cloud centroid.
pub fn orient_normals_mst(cloud: &PointCloud, k: usize) -> Result<Orientation> {
    let mut normals = cloud.normals()?.to_vec();
    let n = cloud.len();
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let index = NeighborIndex::build(&cloud.points)?;
    let k = k.min(n - 1);
    let knn: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| index.k_nearest(i, k).into_iter().map(|(j, _)| j).collect())
        .collect();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, list) in knn.iter().enumerate() {
        for &j in list {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }

    let center = cloud.centroid().ok_or(Error::EmptyPointSet)?;
    let mut component = vec![usize::MAX; n];
    let mut seeds = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = seeds.len();
        let mut stack = vec![start];
        component[start] = id;
        let mut seed = start;
        while let Some(i) = stack.pop() {
            let better = cloud.points[i].z > cloud.points[seed].z
                || (cloud.points[i].z == cloud.points[seed].z && i < seed);
            if better {
                seed = i;
            }
            for &j in &adjacency[i] {
                if component[j] == usize::MAX {
                    component[j] = id;
                    stack.push(j);
                }
            }
        }
        seeds.push(seed);
    }

    let mut visited = vec![false; n];
    let mut tree = Vec::with_capacity(n.saturating_sub(seeds.len()));
    let mut flipped = 0;
    for seed in seeds {
        if normals[seed].dot(&(cloud.points[seed] - center)) < 0.0 {
            normals[seed] = -normals[seed];
            flipped += 1;
        }
        visited[seed] = true;
        let mut heap = BinaryHeap::new();
        let push_edges =
            |i: usize, heap: &mut BinaryHeap<_>, normals: &[Vector], visited: &[bool]| {
                for &j in &adjacency[i] {
                    if !visited[j] {
                        let w = 1.0 - normals[i].dot(&normals[j]).abs();
                        heap.push(Reverse((Weight(w), j, i)));
                    }
                }
            };
        push_edges(seed, &mut heap, &normals, &visited);
        while let Some(Reverse((_, child, parent))) = heap.pop() {
            if visited[child] {
                continue;
            }
            visited[child] = true;
            if normals[parent].dot(&normals[child]) < 0.0 {
                normals[child] = -normals[child];
                flipped += 1;
            }
            tree.push((parent, child));
            push_edges(child, &mut heap, &normals, &visited);
        }
    }

    Ok(Orientation {
        cloud: PointCloud {
            points: cloud.points.clone(),
            normals: Some(normals),
            provenance: cloud.provenance.clone(),
        },
        tree,
        flipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sphere_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| loop {
                let v = Vector::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let l = v.norm();
                if l > 0.1 && l <= 1.0 {
                    break Point::from(v / l);
                }
            })
            .collect()
    }

    fn plane_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point::new(rng.gen(), rng.gen(), 0.0))
            .collect()
    }

    #[test]
    fn planar_normals_are_vertical() {
        let cloud = PointCloud::new(plane_points(50, 1));
        let est = estimate_normals(&cloud, 10).unwrap();
        for n in est.cloud.normals().unwrap() {
            assert!((n.z.abs() - 1.0).abs() < 1e-6, "{n:?}");
        }
        assert!(est.warnings.is_empty());
    }

    #[test]
    fn sphere_normals_are_radial() {
        let cloud = PointCloud::new(crate::shapes::fibonacci_sphere(2000));
        let est = estimate_normals(&cloud, 10).unwrap();
        for (p, n) in cloud.points.iter().zip(est.cloud.normals().unwrap()) {
            let cos = n.dot(&p.coords.normalize()).abs().min(1.0);
            assert!(cos.acos().to_degrees() < 5.0, "{}", cos.acos().to_degrees());
        }
    }

    #[test]
    fn too_few_points_is_error() {
        let cloud = PointCloud::new(plane_points(4, 3));
        assert!(matches!(
            estimate_normals(&cloud, 5),
            Err(Error::InsufficientNeighborhood { .. })
        ));
        let cloud = PointCloud::new(plane_points(10, 3));
        assert!(estimate_normals(&cloud, 2).is_err());
    }

    #[test]
    fn collinear_neighborhood_is_flagged() {
        let pts: Vec<Point> = (0..8).map(|i| Point::new(i as f64, 0.0, 0.0)).collect();
        let est = estimate_normals(&PointCloud::new(pts), 3).unwrap();
        assert_eq!(est.warnings.len(), 8);
        for n in est.cloud.normals().unwrap() {
            assert!(n.x.abs() < 1e-12);
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normals_rotate_with_cloud() {
        let pts = sphere_points(300, 4);
        let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let rotated: Vec<Point> = pts.iter().map(|p| rot * p).collect();
        let a = estimate_normals(&PointCloud::new(pts), 10).unwrap();
        let b = estimate_normals(&PointCloud::new(rotated), 10).unwrap();
        for (na, nb) in a
            .cloud
            .normals()
            .unwrap()
            .iter()
            .zip(b.cloud.normals().unwrap())
        {
            let ra = rot * na;
            let diff = (ra - nb).norm().min((ra + nb).norm());
            assert!(diff < 1e-5);
        }
    }

    fn scrambled(cloud: &PointCloud, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normals = cloud
            .normals()
            .unwrap()
            .iter()
            .map(|n| if rng.gen_bool(0.5) { -n } else { *n })
            .collect();
        cloud.clone().with_normals(normals).unwrap()
    }

    #[test]
    fn sphere_orientation_is_consistent() {
        let cloud = PointCloud::new(sphere_points(1500, 5));
        let est = estimate_normals(&cloud, 10).unwrap();
        let mixed = scrambled(&est.cloud, 6);
        let oriented = orient_normals_mst(&mixed, 8).unwrap();
        let signs: Vec<bool> = oriented
            .cloud
            .points
            .iter()
            .zip(oriented.cloud.normals().unwrap())
            .map(|(p, n)| n.dot(&p.coords) > 0.0)
            .collect();
        assert!(signs.iter().all(|&s| s == signs[0]));
        // Seed faces away from the centroid, so everything points outward.
        assert!(signs[0]);
    }

    #[test]
    fn planar_orientation_aligns_all() {
        let cloud = PointCloud::new(plane_points(200, 7));
        let est = estimate_normals(&cloud, 10).unwrap();
        let oriented = orient_normals_mst(&scrambled(&est.cloud, 8), 8).unwrap();
        let normals = oriented.cloud.normals().unwrap();
        for n in normals {
            assert!((n - normals[0]).norm() < 1e-9);
        }
    }

    #[test]
    fn consistent_normals_are_left_alone() {
        let pts = sphere_points(600, 9);
        let normals: Vec<Vector> = pts.iter().map(|p| p.coords.normalize()).collect();
        let cloud = PointCloud::new(pts).with_normals(normals.clone()).unwrap();
        let oriented = orient_normals_mst(&cloud, 8).unwrap();
        assert_eq!(oriented.flipped, 0);
        assert_eq!(oriented.cloud.normals().unwrap(), normals.as_slice());
    }

    #[test]
    fn tree_edges_agree_after_propagation() {
        let cloud = PointCloud::new(sphere_points(800, 10));
        let est = estimate_normals(&cloud, 10).unwrap();
        let oriented = orient_normals_mst(&scrambled(&est.cloud, 11), 8).unwrap();
        let normals = oriented.cloud.normals().unwrap();
        assert_eq!(oriented.tree.len(), cloud.len() - 1);
        for &(a, b) in &oriented.tree {
            assert!(normals[a].dot(&normals[b]) >= 0.0);
        }
    }

    #[test]
    fn disconnected_components_each_seeded() {
        let mut pts = sphere_points(300, 12);
        let far: Vec<Point> = sphere_points(300, 13)
            .into_iter()
            .map(|p| p + Vector::new(100.0, 0.0, 0.0))
            .collect();
        pts.extend(far);
        let cloud = PointCloud::new(pts);
        let est = estimate_normals(&cloud, 10).unwrap();
        let oriented = orient_normals_mst(&scrambled(&est.cloud, 14), 8).unwrap();
        assert_eq!(oriented.tree.len(), cloud.len() - 2);
    }

    #[test]
    fn missing_normals_is_error() {
        let cloud = PointCloud::new(plane_points(10, 1));
        assert!(matches!(
            orient_normals_mst(&cloud, 8),
            Err(Error::MissingNormals)
        ));
    }
}
