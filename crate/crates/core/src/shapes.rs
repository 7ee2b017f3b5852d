//! Synthetic test shapes: spheres, icospheres, subdivided cubes and variants
//! with planted features.

use std::collections::HashMap;

use crate::geometry::{Point, TriangleMesh, Vector};

/// Quasi-uniform golden-spiral samples on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let a = golden * i as f64;
            Point::new(r * a.cos(), r * a.sin(), z)
        })
        .collect()
}

/// Unit icosphere; 12, 42, 162, 642, 2562, ... vertices for 0, 1, 2, 3, 4 subdivisions.
pub fn icosphere(subdivisions: usize) -> TriangleMesh {
    let t = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::from(Vector::new(x, y, z).normalize()))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = (vertices[a].coords + vertices[b].coords).normalize();
                vertices.push(Point::from(m));
                vertices.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh::new(vertices, faces).expect("icosphere is valid")
}

/// Surface of the cube `[-1, 1]^3` with each face split into a
/// `divisions x divisions` grid of quads (two triangles each), outward oriented.
pub fn cube(divisions: usize) -> TriangleMesh {
    let n = divisions.max(1) as i64;
    let mut ids: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    // (normal axis, side, u axis, v axis) with u x v pointing outward.
    let sides = [
        (0, n, 1, 2),
        (0, 0, 2, 1),
        (1, n, 2, 0),
        (1, 0, 0, 2),
        (2, n, 0, 1),
        (2, 0, 1, 0),
    ];
    for &(axis, side, u, v) in &sides {
        let mut vid = |i: i64, j: i64| -> usize {
            let mut key = [0i64; 3];
            key[axis] = side;
            key[u] = i;
            key[v] = j;
            *ids.entry(key).or_insert_with(|| {
                vertices.push(Point::new(
                    2.0 * key[0] as f64 / n as f64 - 1.0,
                    2.0 * key[1] as f64 / n as f64 - 1.0,
                    2.0 * key[2] as f64 / n as f64 - 1.0,
                ));
                vertices.len() - 1
            })
        };
        for i in 0..n {
            for j in 0..n {
                let a = vid(i, j);
                let b = vid(i + 1, j);
                let c = vid(i + 1, j + 1);
                let d = vid(i, j + 1);
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
    }
    TriangleMesh::new(vertices, faces).expect("cube is valid")
}

/// A shape with the vertices of its planted feature.
#[derive(Debug, Clone)]
pub struct FeatureShape {
    pub mesh: TriangleMesh,
    pub feature: Vec<usize>,
}

/// Cube with a spherical-cap dent pressed into one corner. `corner` picks the
/// corner by sign bits; `radius` and `depth` are in cube half-widths.
pub fn dented_cube(divisions: usize, corner: usize, radius: f64, depth: f64) -> FeatureShape {
    let mut mesh = cube(divisions);
    let c = Point::new(
        if corner & 1 == 1 { 1.0 } else { -1.0 },
        if corner & 2 == 2 { 1.0 } else { -1.0 },
        if corner & 4 == 4 { 1.0 } else { -1.0 },
    );
    let inward = -c.coords.normalize();
    let mut feature = Vec::new();
    for (i, v) in mesh.vertices.iter_mut().enumerate() {
        let d = (*v - c).norm();
        if d < radius {
            let s = 1.0 - d / radius;
            *v += inward * (depth * s * s);
            feature.push(i);
        }
    }
    FeatureShape { mesh, feature }
}

/// Icosphere with Gaussian bumps along the given unit directions. Feature
/// vertices are those within `2 * width` radians of a bump axis.
pub fn bumped_sphere(
    subdivisions: usize,
    bumps: &[Vector],
    height: f64,
    width: f64,
) -> FeatureShape {
    let mut mesh = icosphere(subdivisions);
    let mut feature = Vec::new();
    for (i, v) in mesh.vertices.iter_mut().enumerate() {
        let dir = v.coords.normalize();
        let mut r = 1.0;
        let mut near = false;
        for b in bumps {
            let angle = dir.dot(&b.normalize()).clamp(-1.0, 1.0).acos();
            r += height * (-(angle * angle) / (2.0 * width * width)).exp();
            near |= angle < 2.0 * width;
        }
        *v = Point::from(dir * r);
        if near {
            feature.push(i);
        }
    }
    FeatureShape { mesh, feature }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euler(mesh: &TriangleMesh) -> i64 {
        let mut edges = std::collections::HashSet::new();
        for f in &mesh.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        mesh.vertices.len() as i64 - edges.len() as i64 + mesh.faces.len() as i64
    }

    #[test]
    fn icosphere_counts() {
        assert_eq!(icosphere(0).vertices.len(), 12);
        assert_eq!(icosphere(2).vertices.len(), 162);
        assert_eq!(euler(&icosphere(2)), 2);
    }

    #[test]
    fn cube_is_closed_and_outward() {
        let m = cube(4);
        assert_eq!(m.vertices.len(), 6 * 16 + 2);
        assert_eq!(euler(&m), 2);
        for (fi, f) in m.faces.iter().enumerate() {
            let c =
                (m.vertices[f[0]].coords + m.vertices[f[1]].coords + m.vertices[f[2]].coords) / 3.0;
            assert!(m.face_normal(fi).dot(&c) > 0.0);
        }
    }

    #[test]
    fn icosphere_is_outward() {
        let m = icosphere(1);
        for (fi, f) in m.faces.iter().enumerate() {
            assert!(m.face_normal(fi).dot(&m.vertices[f[0]].coords) > 0.0);
        }
    }

    #[test]
    fn fibonacci_on_sphere() {
        for p in fibonacci_sphere(100) {
            assert!((p.coords.norm() - 1.0).abs() < 1e-12);
        }
    }
}
