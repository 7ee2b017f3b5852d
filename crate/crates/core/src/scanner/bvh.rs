//! Bounding volume hierarchy over mesh triangles for ray casting.

use crate::geometry::{Point, TriangleMesh, Vector};

const LEAF_SIZE: usize = 4;
const EDGE_EPS: f64 = 1e-12;
const T_MIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Point,
    max: Point,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Point) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    /// Entry distance of the ray into the box, if it hits before `t_max`.
    fn hit(&self, origin: &Point, inv_dir: &Vector, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            let mut near = (self.min[a] - origin[a]) * inv_dir[a];
            let mut far = (self.max[a] - origin[a]) * inv_dir[a];
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN from 0 * inf means the ray lies in the slab plane: keep it.
            if !near.is_nan() {
                t0 = t0.max(near);
            }
            if !far.is_nan() {
                t1 = t1.min(far * (1.0 + 4.0 * f64::EPSILON));
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        bounds: Aabb,
        start: usize,
        end: usize,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Closest intersection along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub triangle: usize,
    pub barycentric: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct Bvh<'a> {
    mesh: &'a TriangleMesh,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> Bvh<'a> {
    pub fn build(mesh: &'a TriangleMesh) -> Self {
        let centroids: Vec<Point> = mesh
            .faces
            .iter()
            .map(|f| {
                Point::from(
                    (mesh.vertices[f[0]].coords
                        + mesh.vertices[f[1]].coords
                        + mesh.vertices[f[2]].coords)
                        / 3.0,
                )
            })
            .collect();
        let mut bvh = Self {
            mesh,
            order: (0..mesh.faces.len()).collect(),
            nodes: Vec::new(),
        };
        if !mesh.faces.is_empty() {
            bvh.split(0, mesh.faces.len(), &centroids);
        }
        bvh
    }

    fn split(&mut self, start: usize, end: usize, centroids: &[Point]) -> usize {
        let mut bounds = Aabb::empty();
        let mut centers = Aabb::empty();
        for &t in &self.order[start..end] {
            for &v in &self.mesh.faces[t] {
                bounds.grow(&self.mesh.vertices[v]);
            }
            centers.grow(&centroids[t]);
        }
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return id;
        }
        let extent = centers.max - centers.min;
        let axis = extent.imax();
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis]
                .total_cmp(&centroids[b][axis])
                .then(a.cmp(&b))
        });
        self.nodes.push(Node::Leaf { bounds, start, end });
        let left = self.split(start, mid, centroids);
        let right = self.split(mid, end, centroids);
        self.nodes[id] = Node::Inner {
            bounds,
            left,
            right,
        };
        id
    }

    /// Nearest hit; among equal distances the lowest triangle index wins.
    pub fn intersect(&self, origin: &Point, dir: &Vector) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = Vector::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<Hit> = None;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let limit = best.map_or(f64::INFINITY, |h| h.t * (1.0 + 1e-9) + 1e-12);
            if self.nodes[id]
                .bounds()
                .hit(origin, &inv_dir, limit)
                .is_none()
            {
                continue;
            }
            match &self.nodes[id] {
                Node::Leaf { start, end, .. } => {
                    for &tri in &self.order[*start..*end] {
                        if let Some(h) = self.intersect_triangle(tri, origin, dir) {
                            best = Some(match best {
                                Some(b) if closer_or_tied(&b, &h) => b,
                                _ => h,
                            });
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        best
    }

    /// Moller-Trumbore test with inclusive edges.
    fn intersect_triangle(&self, tri: usize, origin: &Point, dir: &Vector) -> Option<Hit> {
        let f = self.mesh.faces[tri];
        let (a, b, c) = (
            self.mesh.vertices[f[0]],
            self.mesh.vertices[f[1]],
            self.mesh.vertices[f[2]],
        );
        let e1 = b - a;
        let e2 = c - a;
        let p = dir.cross(&e2);
        let det = e1.dot(&p);
        if det.abs() < 1e-14 * e1.norm() * e2.norm() * dir.norm() {
            return None;
        }
        let inv = 1.0 / det;
        let s = origin - a;
        let u = s.dot(&p) * inv;
        if !(-EDGE_EPS..=1.0 + EDGE_EPS).contains(&u) {
            return None;
        }
        let q = s.cross(&e1);
        let v = dir.dot(&q) * inv;
        if v < -EDGE_EPS || u + v > 1.0 + EDGE_EPS {
            return None;
        }
        let t = e2.dot(&q) * inv;
        if t <= T_MIN {
            return None;
        }
        let (u, v) = (u.max(0.0), v.max(0.0));
        let sum = u + v;
        let (u, v) = if sum > 1.0 {
            (u / sum, v / sum)
        } else {
            (u, v)
        };
        Some(Hit {
            t,
            triangle: tri,
            barycentric: [(1.0 - u - v).max(0.0), u, v],
        })
    }
}

/// True when `current` should be kept over `candidate`.
fn closer_or_tied(current: &Hit, candidate: &Hit) -> bool {
    let tol = 1e-12 * current.t.abs().max(1.0);
    if (candidate.t - current.t).abs() <= tol {
        current.triangle < candidate.triangle
    } else {
        current.t < candidate.t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::icosphere;

    fn brute(mesh: &TriangleMesh, bvh: &Bvh, origin: &Point, dir: &Vector) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for t in 0..mesh.faces.len() {
            if let Some(h) = bvh.intersect_triangle(t, origin, dir) {
                best = Some(match best {
                    Some(b) if closer_or_tied(&b, &h) => b,
                    _ => h,
                });
            }
        }
        best
    }

    #[test]
    fn bvh_matches_linear_scan() {
        let mesh = icosphere(3);
        let bvh = Bvh::build(&mesh);
        let origin = Point::new(0.3, -2.7, 0.4);
        for i in 0..200 {
            let target = Point::new(
                (i as f64 * 0.7).sin(),
                (i as f64 * 1.3).cos() * 0.2,
                (i as f64 * 0.11).sin(),
            );
            let dir = (target - origin).normalize();
            let a = bvh.intersect(&origin, &dir);
            let b = brute(&mesh, &bvh, &origin, &dir);
            assert_eq!(a.map(|h| h.triangle), b.map(|h| h.triangle));
        }
    }

    #[test]
    fn shared_edge_prefers_lower_index() {
        let verts = vec![
            Point::new(-1.0, -1.0, 0.0),
            Point::new(1.0, -1.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(-1.0, 1.0, 0.0),
        ];
        let mesh = TriangleMesh::new(verts, vec![[0, 2, 3], [0, 1, 2]]).unwrap();
        let bvh = Bvh::build(&mesh);
        let hit = bvh
            .intersect(&Point::new(0.0, 0.0, 5.0), &-Vector::z())
            .unwrap();
        assert_eq!(hit.triangle, 0);
        assert!((hit.t - 5.0).abs() < 1e-12);
    }
}
