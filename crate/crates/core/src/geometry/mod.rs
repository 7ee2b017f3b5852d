//! Geometry containers and the bounding-sphere scale used to express every
//! radius as a fraction of the shape size.

mod index;
mod normals;

pub use index::NeighborIndex;
pub use normals::{estimate_normals, orient_normals_mst, NormalEstimate, Orientation};

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

const UNIT_TOLERANCE: f64 = 1e-6;

/// Links a scan point to the base-mesh triangle it was sampled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub triangle: usize,
    pub barycentric: [f64; 3],
}

impl Provenance {
    pub fn new(triangle: usize, barycentric: [f64; 3]) -> Result<Self> {
        let sum: f64 = barycentric.iter().sum();
        if barycentric.iter().any(|b| *b < 0.0 || !b.is_finite())
            || (sum - 1.0).abs() > UNIT_TOLERANCE
        {
            return Err(Error::InvalidParameter(format!(
                "barycentric triple {barycentric:?} is not a convex combination"
            )));
        }
        Ok(Self {
            triangle,
            barycentric,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub points: Vec<Point>,
    pub normals: Option<Vec<Vector>>,
    pub provenance: Option<Vec<Provenance>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Self {
        Self {
            points,
            normals: None,
            provenance: None,
        }
    }

    /// Attaches normals; each must have unit length.
    pub fn with_normals(mut self, normals: Vec<Vector>) -> Result<Self> {
        if normals.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                actual: normals.len(),
            });
        }
        if let Some(i) = normals
            .iter()
            .position(|n| (n.norm() - 1.0).abs() > UNIT_TOLERANCE)
        {
            return Err(Error::InvalidParameter(format!(
                "normal {i} is not unit length"
            )));
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn with_provenance(mut self, provenance: Vec<Provenance>) -> Result<Self> {
        if provenance.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                actual: provenance.len(),
            });
        }
        self.provenance = Some(provenance);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn normals(&self) -> Result<&[Vector]> {
        self.normals.as_deref().ok_or(Error::MissingNormals)
    }

    pub fn centroid(&self) -> Option<Point> {
        centroid(&self.points)
    }
}

/// Triangle mesh with an optional shape-class label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    pub faces: Vec<[usize; 3]>,
    pub class_label: Option<String>,
}

impl TriangleMesh {
    /// Builds a mesh, rejecting out-of-range indices and faces that repeat a vertex.
    pub fn new(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v >= n) {
                return Err(Error::IndexOutOfRange { index: bad, len: n });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} repeats a vertex: {f:?}"
                )));
            }
        }
        Ok(Self {
            vertices,
            faces,
            class_label: None,
        })
    }

    pub fn with_class(mut self, label: impl Into<String>) -> Self {
        self.class_label = Some(label.into());
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_normal(&self, face: usize) -> Vector {
        let [a, b, c] = self.faces[face];
        let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (b - a).cross(&(c - a))
    }

    /// Area-weighted vertex normals. Vertices not touched by any non-degenerate
    /// face get `None`.
    pub fn vertex_normals(&self) -> Vec<Option<Vector>> {
        let mut acc = vec![Vector::zeros(); self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            let n = self.face_normal(fi);
            for &v in f {
                acc[v] += n;
            }
        }
        acc.into_iter()
            .map(|n| {
                let len = n.norm();
                (len > 0.0 && len.is_finite()).then(|| n / len)
            })
            .collect()
    }

    /// Vertices as a point cloud carrying face-derived normals. Returns `None`
    /// if any vertex lacks a usable normal.
    pub fn to_oriented_cloud(&self) -> Option<PointCloud> {
        let normals: Option<Vec<Vector>> = self.vertex_normals().into_iter().collect();
        let normals = normals?;
        Some(PointCloud {
            points: self.vertices.clone(),
            normals: Some(normals),
            provenance: None,
        })
    }

    /// Point on face `triangle` at the given barycentric coordinates.
    pub fn interpolate(&self, triangle: usize, barycentric: [f64; 3]) -> Point {
        let f = self.faces[triangle];
        let mut p = Vector::zeros();
        for k in 0..3 {
            p += self.vertices[f[k]].coords * barycentric[k];
        }
        Point::from(p)
    }
}

/// Bounding sphere centered at the centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeScale {
    pub center: Point,
    pub radius: f64,
}

pub fn centroid(points: &[Point]) -> Option<Point> {
    if points.is_empty() {
        return None;
    }
    let sum = points.iter().fold(Vector::zeros(), |acc, p| acc + p.coords);
    Some(Point::from(sum / points.len() as f64))
}

/// Centroid plus the largest distance from it to any point.
pub fn bounding_sphere(points: &[Point]) -> Result<ShapeScale> {
    let center = centroid(points).ok_or(Error::EmptyPointSet)?;
    let radius = points
        .iter()
        .map(|p| (p - center).norm())
        .fold(0.0, f64::max);
    Ok(ShapeScale { center, radius })
}

/// Smallest-magnitude axis, used to break degenerate directions.
pub(crate) fn least_aligned_axis(v: &Vector) -> Vector {
    let a = v.abs();
    if a.x <= a.y && a.x <= a.z {
        Vector::x()
    } else if a.y <= a.z {
        Vector::y()
    } else {
        Vector::z()
    }
}

/// Any unit vector orthogonal to `v` (which must be nonzero).
pub(crate) fn any_orthogonal(v: &Vector) -> Vector {
    let axis = least_aligned_axis(v);
    v.cross(&axis).normalize()
}
