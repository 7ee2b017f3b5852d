//! Simulated single-view range scans of watertight meshes.

mod bvh;
mod triangulate;

pub use bvh::{Bvh, Hit};
pub use triangulate::{reconstruct_partial_mesh, TriangulationConfig};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud, Provenance, ShapeScale, TriangleMesh, Vector};
use crate::warning::Warning;

/// Views per mesh, one per icosahedron vertex.
pub const VIEW_COUNT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub image_width: usize,
    pub image_height: usize,
    /// Vertical field of view.
    pub fov_degrees: f64,
    /// Camera distance as a multiple of the bounding radius.
    pub icosahedron_scale: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            image_width: 256,
            image_height: 256,
            fov_degrees: 45.0,
            icosahedron_scale: 2.5,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.image_width < 16 || self.image_height < 16 {
            return Err(Error::InvalidParameter(
                "image size must be at least 16x16".into(),
            ));
        }
        if !(10.0..=120.0).contains(&self.fov_degrees) {
            return Err(Error::InvalidParameter(format!(
                "field of view {} outside [10, 120] degrees",
                self.fov_degrees
            )));
        }
        if !(self.icosahedron_scale > 1.0 && self.icosahedron_scale.is_finite()) {
            return Err(Error::InvalidParameter(
                "icosahedron_scale must exceed 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub position: Point,
    pub target: Point,
    pub up: Vector,
}

impl Camera {
    /// Camera at `position` looking at `target`. The up vector is +z unless
    /// the view is within one degree of vertical, then +x.
    pub fn looking_at(position: Point, target: Point) -> Self {
        let dir = (target - position).normalize();
        let up = if dir.z.abs() > 1f64.to_radians().cos() {
            Vector::x()
        } else {
            Vector::z()
        };
        Self {
            position,
            target,
            up,
        }
    }

    pub fn direction(&self) -> Vector {
        (self.target - self.position).normalize()
    }
}

/// Twelve cameras on the vertices of a regular icosahedron of circumradius
/// `icosahedron_scale * R` around the shape center.
pub fn icosahedron_cameras(scale: &ShapeScale, config: &ScanConfig) -> Result<Vec<Camera>> {
    config.validate()?;
    if scale.radius.is_nan() || scale.radius <= 0.0 {
        return Err(Error::InvalidParameter(
            "bounding radius must be positive".into(),
        ));
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut dirs = Vec::with_capacity(VIEW_COUNT);
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            dirs.push(Vector::new(0.0, s1, s2 * phi));
            dirs.push(Vector::new(s1, s2 * phi, 0.0));
            dirs.push(Vector::new(s2 * phi, 0.0, s1));
        }
    }
    let distance = config.icosahedron_scale * scale.radius;
    Ok(dirs
        .into_iter()
        .map(|d| Camera::looking_at(scale.center + d.normalize() * distance, scale.center))
        .collect())
}

/// Scan points with provenance into the base mesh.
#[derive(Debug, Clone)]
pub struct RangeScan {
    pub cloud: PointCloud,
    pub camera: Camera,
    pub base_shape_id: String,
    pub view_index: usize,
}

impl RangeScan {
    pub fn id(&self) -> String {
        format!("{}_v{:02}", self.base_shape_id, self.view_index)
    }
}

#[derive(Debug, Clone)]
pub struct RenderedScan {
    pub scan: RangeScan,
    pub warnings: Vec<Warning>,
}

/// Casts one ray per pixel center and keeps the nearest hit of each.
pub fn render_scan(
    mesh: &TriangleMesh,
    camera: &Camera,
    config: &ScanConfig,
    base_shape_id: &str,
    view_index: usize,
) -> Result<RenderedScan> {
    config.validate()?;
    if mesh.faces.is_empty() {
        return Err(Error::InvalidMesh("mesh has no faces".into()));
    }
    if view_index >= VIEW_COUNT {
        return Err(Error::IndexOutOfRange {
            index: view_index,
            len: VIEW_COUNT,
        });
    }
    let bvh = Bvh::build(mesh);
    let forward = camera.direction();
    let right = forward.cross(&camera.up).normalize();
    let up = right.cross(&forward);
    let (w, h) = (config.image_width, config.image_height);
    let half_h = (config.fov_degrees.to_radians() / 2.0).tan();
    let half_w = half_h * w as f64 / h as f64;

    let hits: Vec<Hit> = (0..h)
        .into_par_iter()
        .flat_map_iter(|row| {
            let bvh = &bvh;
            (0..w).filter_map(move |col| {
                let x = (2.0 * (col as f64 + 0.5) / w as f64 - 1.0) * half_w;
                let y = (1.0 - 2.0 * (row as f64 + 0.5) / h as f64) * half_h;
                let dir = (forward + right * x + up * y).normalize();
                bvh.intersect(&camera.position, &dir)
            })
        })
        .collect();

    let mut points = Vec::with_capacity(hits.len());
    let mut provenance = Vec::with_capacity(hits.len());
    for hit in &hits {
        points.push(mesh.interpolate(hit.triangle, hit.barycentric));
        provenance.push(Provenance::new(hit.triangle, hit.barycentric)?);
    }
    let warnings = if points.is_empty() {
        vec![Warning::EmptyScan { view: view_index }]
    } else {
        Vec::new()
    };
    Ok(RenderedScan {
        scan: RangeScan {
            cloud: PointCloud::new(points).with_provenance(provenance)?,
            camera: *camera,
            base_shape_id: base_shape_id.to_string(),
            view_index,
        },
        warnings,
    })
}

/// Renders all twelve icosahedron views of a mesh.
pub fn scan_all_views(
    mesh: &TriangleMesh,
    shape_id: &str,
    config: &ScanConfig,
) -> Result<Vec<RenderedScan>> {
    let scale = crate::geometry::bounding_sphere(&mesh.vertices)?;
    let cameras = icosahedron_cameras(&scale, config)?;
    cameras
        .iter()
        .enumerate()
        .map(|(view, camera)| render_scan(mesh, camera, config, shape_id, view))
        .collect()
}

/// Interpolates a per-vertex field of the base mesh at the scan points.
pub fn transfer_ground_truth(
    field: &[f64],
    mesh: &TriangleMesh,
    scan: &RangeScan,
) -> Result<Vec<f64>> {
    if field.len() != mesh.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: mesh.vertex_count(),
            actual: field.len(),
        });
    }
    let provenance = scan
        .cloud
        .provenance
        .as_ref()
        .ok_or(Error::MissingProvenance)?;
    provenance
        .iter()
        .map(|p| {
            let f = mesh.faces.get(p.triangle).ok_or(Error::IndexOutOfRange {
                index: p.triangle,
                len: mesh.faces.len(),
            })?;
            Ok((0..3).map(|k| p.barycentric[k] * field[f[k]]).sum())
        })
        .collect()
}
