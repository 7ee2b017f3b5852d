//! Greedy local-projection triangulation of oriented scan points.
//!
//! Every point projects its nearest neighbors onto its tangent plane and
//! proposes the Delaunay triangles incident to itself. Triangles proposed by
//! enough of their vertices are stitched into an edge-manifold, consistently
//! oriented mesh.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{any_orthogonal, NeighborIndex, PointCloud, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangulationConfig {
    /// Neighbors projected per point.
    pub neighbors: usize,
    /// Longest allowed edge as a multiple of the larger endpoint spacing,
    /// where spacing is the distance to the nearest other point.
    pub max_edge_factor: f64,
    /// Vertices that must propose a triangle before it is accepted.
    pub min_votes: usize,
}

impl Default for TriangulationConfig {
    fn default() -> Self {
        Self {
            neighbors: 12,
            max_edge_factor: 2.5,
            min_votes: 2,
        }
    }
}

type Local = (usize, [f64; 2]);

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive when `d` lies inside the circle through counter-clockwise `a, b, c`.
fn in_circle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let row = |p: [f64; 2]| {
        let (x, y) = (p[0] - d[0], p[1] - d[1]);
        (x, y, x * x + y * y)
    };
    let (ax, ay, aw) = row(a);
    let (bx, by, bw) = row(b);
    let (cx, cy, cw) = row(c);
    ax * (by * cw - bw * cy) - ay * (bx * cw - bw * cx) + aw * (bx * cy - by * cx)
}

fn local_triangles(
    i: usize,
    cloud: &PointCloud,
    index: &NeighborIndex,
    spacing: &[f64],
    cfg: &TriangulationConfig,
) -> Vec<[usize; 3]> {
    let points = &cloud.points;
    let normal = cloud.normals.as_ref().expect("normals checked")[i];
    let allowed = |a: usize, b: usize| {
        (points[a] - points[b]).norm() <= cfg.max_edge_factor * spacing[a].max(spacing[b])
    };
    let u = any_orthogonal(&normal);
    let v = normal.cross(&u);
    let project = |j: usize| {
        let d = points[j] - points[i];
        [d.dot(&u), d.dot(&v)]
    };
    let mut local: Vec<Local> = vec![(i, [0.0, 0.0])];
    for (j, d) in index.knn(&points[i], cfg.neighbors, Some(i)) {
        if d > 0.0 && allowed(i, j) {
            local.push((j, project(j)));
        }
    }
    let reach = local
        .iter()
        .map(|(_, p)| p[0] * p[0] + p[1] * p[1])
        .fold(0.0, f64::max);
    let area_tol = 1e-10 * reach;
    let circle_tol = 1e-9 * reach * reach;

    let mut out = Vec::new();
    for a in 1..local.len() {
        for b in a + 1..local.len() {
            let (ga, gb) = (local[a].0, local[b].0);
            if !allowed(ga, gb) {
                continue;
            }
            let (mut pa, mut pb) = (local[a].1, local[b].1);
            let area = orient(local[0].1, pa, pb);
            if area.abs() <= area_tol {
                continue;
            }
            if area < 0.0 {
                std::mem::swap(&mut pa, &mut pb);
            }
            let corners = [(i, local[0].1), (ga, local[a].1), (gb, local[b].1)];
            let low = (0..3).min_by_key(|&k| corners[k].0).unwrap_or(0);
            let (m, x, y) = (
                corners[low],
                corners[(low + 1) % 3].1,
                corners[(low + 2) % 3].1,
            );
            let empty = local.iter().enumerate().all(|(c, &(gc, pc))| {
                if c == 0 || c == a || c == b {
                    return true;
                }
                let det = in_circle(local[0].1, pa, pb, pc);
                if det.abs() <= circle_tol {
                    // Cocircular: keep the diagonal through the lowest index.
                    let beyond_far_edge = orient(x, y, pc) * orient(x, y, m.1) < 0.0;
                    gc > m.0 && !beyond_far_edge
                } else {
                    det < 0.0
                }
            });
            if empty {
                let mut key = [i, ga, gb];
                key.sort_unstable();
                out.push(key);
            }
        }
    }
    out
}

/// Triangulates an oriented point cloud. The result reuses the input points as
/// vertices and may be open or disconnected.
pub fn reconstruct_partial_mesh(
    cloud: &PointCloud,
    cfg: &TriangulationConfig,
) -> Result<TriangleMesh> {
    let n = cloud.len();
    if n < 3 {
        return Err(Error::InsufficientNeighborhood { k: 3, points: n });
    }
    if cfg.neighbors < 2 || cfg.max_edge_factor.is_nan() || cfg.max_edge_factor <= 0.0 {
        return Err(Error::InvalidParameter(
            "triangulation needs >= 2 neighbors and a positive edge factor".into(),
        ));
    }
    let normals = cloud.normals()?;
    let index = NeighborIndex::build(&cloud.points)?;
    let spacing: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            index
                .knn(&cloud.points[i], cfg.neighbors, Some(i))
                .into_iter()
                .map(|(_, d)| d)
                .find(|d| *d > 0.0)
                .unwrap_or(0.0)
        })
        .collect();
    let proposals: Vec<Vec<[usize; 3]>> = (0..n)
        .into_par_iter()
        .map(|i| local_triangles(i, cloud, &index, &spacing, cfg))
        .collect();
    let mut votes: BTreeMap<[usize; 3], usize> = BTreeMap::new();
    for key in proposals.into_iter().flatten() {
        *votes.entry(key).or_default() += 1;
    }
    let mut accepted: Vec<([usize; 3], usize)> = votes
        .into_iter()
        .filter(|(_, c)| *c >= cfg.min_votes)
        .collect();
    accepted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let points = &cloud.points;
    let mut directed: HashMap<(usize, usize), ()> = HashMap::new();
    let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces = Vec::new();
    for ([a, b, c], _) in accepted {
        let face_normal = (points[b] - points[a]).cross(&(points[c] - points[a]));
        let mean_normal = normals[a] + normals[b] + normals[c];
        let face = if face_normal.dot(&mean_normal) >= 0.0 {
            [a, b, c]
        } else {
            [a, c, b]
        };
        let edges = [(face[0], face[1]), (face[1], face[2]), (face[2], face[0])];
        let fits = edges.iter().all(|&(x, y)| {
            !directed.contains_key(&(x, y))
                && undirected.get(&(x.min(y), x.max(y))).copied().unwrap_or(0) < 2
        });
        if fits {
            for &(x, y) in &edges {
                directed.insert((x, y), ());
                *undirected.entry((x.min(y), x.max(y))).or_default() += 1;
            }
            faces.push(face);
        }
    }
    TriangleMesh::new(points.clone(), faces)
}
