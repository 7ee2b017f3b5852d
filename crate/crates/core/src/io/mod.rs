//! File formats: meshes, scans, ground truth and colored maps.

mod mesh;
mod ply;

pub use mesh::{load_mesh, read_mesh, write_off, MeshFile};

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::GroundTruth;
use crate::geometry::{Point, PointCloud, Provenance, TriangleMesh, Vector};
use crate::saliency::SaliencyMap;
use ply::Column;

/// Binary little-endian PLY with double-precision positions.
pub fn write_mesh_ply(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let columns = position_columns(&mesh.vertices);
    mesh::write_bytes(
        path,
        &ply::encode(mesh.vertices.len(), &columns, &mesh.faces),
    )
}

fn position_columns(points: &[Point]) -> Vec<Column<'static>> {
    vec![
        Column::F64("x", points.iter().map(|p| p.x).collect()),
        Column::F64("y", points.iter().map(|p| p.y).collect()),
        Column::F64("z", points.iter().map(|p| p.z).collect()),
    ]
}

/// Writes scan points with their provenance (`triangle_id`, `bary_u`,
/// `bary_v`), normals when present, and optional reconstructed faces.
pub fn write_scan_ply(cloud: &PointCloud, faces: &[[usize; 3]], path: &Path) -> Result<()> {
    let provenance = cloud.provenance.as_ref().ok_or(Error::MissingProvenance)?;
    let mut columns = position_columns(&cloud.points);
    if let Some(normals) = &cloud.normals {
        columns.push(Column::F32(
            "nx",
            normals.iter().map(|n| n.x as f32).collect(),
        ));
        columns.push(Column::F32(
            "ny",
            normals.iter().map(|n| n.y as f32).collect(),
        ));
        columns.push(Column::F32(
            "nz",
            normals.iter().map(|n| n.z as f32).collect(),
        ));
    }
    columns.push(Column::U32(
        "triangle_id",
        provenance.iter().map(|p| p.triangle as u32).collect(),
    ));
    columns.push(Column::F32(
        "bary_u",
        provenance.iter().map(|p| p.barycentric[1] as f32).collect(),
    ));
    columns.push(Column::F32(
        "bary_v",
        provenance.iter().map(|p| p.barycentric[2] as f32).collect(),
    ));
    mesh::write_bytes(path, &ply::encode(cloud.len(), &columns, faces))
}

/// A scan read back from PLY: its points with provenance, and its faces.
#[derive(Debug, Clone)]
pub struct ScanFile {
    pub cloud: PointCloud,
    pub faces: Vec<[usize; 3]>,
}

pub fn read_scan_ply(path: &Path) -> Result<ScanFile> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let data = ply::parse(path, &bytes)?;
    let points = ply::vertex_positions(path, &data)?;
    let vertex = &data.elements["vertex"];
    let column = |name: &str| {
        vertex.scalars.get(name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("scan vertex element lacks `{name}`"),
        })
    };
    let (tri, u, v) = (column("triangle_id")?, column("bary_u")?, column("bary_v")?);
    let provenance = (0..points.len())
        .map(|i| {
            let (u, v) = (u[i].max(0.0), v[i].max(0.0));
            let w = (1.0 - u - v).max(0.0);
            let s = u + v + w;
            Provenance::new(tri[i] as usize, [w / s, u / s, v / s])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cloud = PointCloud::new(points).with_provenance(provenance)?;
    if let (Ok(nx), Ok(ny), Ok(nz)) = (column("nx"), column("ny"), column("nz")) {
        let normals = (0..cloud.len())
            .map(|i| Vector::new(nx[i], ny[i], nz[i]).normalize())
            .collect();
        cloud = cloud.with_normals(normals)?;
    }
    let (_, polygons) = ply::read_polygons(path, &bytes)?;
    let faces = mesh::assemble(path, cloud.points.clone(), polygons)?
        .mesh
        .faces;
    Ok(ScanFile { cloud, faces })
}

/// 256-entry blue to yellow table: entry `i` is `(i, i, 255 - i)`.
pub fn colormap_table() -> [[u8; 3]; 256] {
    let mut t = [[0u8; 3]; 256];
    for (i, c) in t.iter_mut().enumerate() {
        *c = [i as u8, i as u8, 255 - i as u8];
    }
    t
}

/// Color of a value in `[0, 1]` (clamped) by nearest table entry.
pub fn colormap(value: f64) -> [u8; 3] {
    let idx = (value.clamp(0.0, 1.0) * 255.0).round() as usize;
    colormap_table()[idx]
}

/// PLY of `points` colored by `values`, with optional faces.
pub fn write_colored_ply(
    points: &[Point],
    faces: &[[usize; 3]],
    values: &[f64],
    path: &Path,
) -> Result<()> {
    if values.len() != points.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            actual: values.len(),
        });
    }
    let colors: Vec<[u8; 3]> = values.iter().map(|v| colormap(*v)).collect();
    let mut columns = position_columns(points);
    for (k, name) in ["red", "green", "blue"].into_iter().enumerate() {
        columns.push(Column::U8(name, colors.iter().map(|c| c[k]).collect()));
    }
    mesh::write_bytes(path, &ply::encode(points.len(), &columns, faces))
}

/// Writes a saliency map as a colored PLY over the given geometry.
pub fn export_colored_map(
    points: &[Point],
    faces: &[[usize; 3]],
    map: &SaliencyMap,
    path: &Path,
) -> Result<()> {
    write_colored_ply(points, faces, &map.values, path)
}

/// Per-participant selections parsed from `participant_id,vertex_index` rows.
/// Participants keep their order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct Selections {
    pub participant_ids: Vec<String>,
    pub participants: Vec<Vec<usize>>,
}

pub fn read_selections(path: &Path, vertex_count: usize) -> Result<Selections> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Selections {
        participant_ids: Vec::new(),
        participants: Vec::new(),
    };
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (id, vertex) = match (fields.next(), fields.next(), fields.next()) {
            (Some(id), Some(v), None) if !id.is_empty() => (id, v),
            _ => {
                return Err(err(
                    line_no,
                    format!("expected `participant_id,vertex_index`, found `{line}`"),
                ))
            }
        };
        let vertex: usize = match vertex.parse() {
            Ok(v) => v,
            Err(_)
                if rows == 0 && out.participants.is_empty() && vertex.parse::<f64>().is_err() =>
            {
                rows += 1;
                continue;
            }
            Err(_) => return Err(err(line_no, format!("invalid vertex index `{vertex}`"))),
        };
        rows += 1;
        if vertex >= vertex_count {
            return Err(err(
                line_no,
                format!("vertex index {vertex} out of range for {vertex_count} vertices"),
            ));
        }
        let slot = *index.entry(id.to_string()).or_insert_with(|| {
            out.participant_ids.push(id.to_string());
            out.participants.push(Vec::new());
            out.participants.len() - 1
        });
        out.participants[slot].push(vertex);
    }
    if out.participants.is_empty() {
        return Err(err(1, "no selections".into()));
    }
    Ok(out)
}

pub fn write_selections(path: &Path, ids: &[String], participants: &[Vec<usize>]) -> Result<()> {
    let mut out = String::from("participant_id,vertex_index\n");
    for (id, sel) in ids.iter().zip(participants) {
        for v in sel {
            out.push_str(&format!("{id},{v}\n"));
        }
    }
    mesh::write_bytes(path, out.as_bytes())
}

/// One value per non-empty line; the count must equal `expected`.
pub fn read_field(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::with_capacity(expected);
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("invalid value `{t}`"),
            })?;
        values.push(v);
    }
    if values.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: values.len(),
        });
    }
    Ok(values)
}

pub fn write_field(path: &Path, values: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(values.len() * 20);
    for v in values {
        out.push_str(&format!("{v:?}\n"));
    }
    mesh::write_bytes(path, out.as_bytes())
}

/// Reads selections and an optional field file. Without a field file the
/// field is the selection frequency of all participants smoothed by a
/// Gaussian of width `sigma * R`.
pub fn load_ground_truth(
    shape_id: &str,
    selections: &Path,
    field: Option<&Path>,
    points: &[Point],
    sigma: f64,
) -> Result<GroundTruth> {
    let sel = read_selections(selections, points.len())?;
    let field = match field {
        Some(p) => read_field(p, points.len())?,
        None => {
            let all: Vec<usize> = (0..sel.participants.len()).collect();
            crate::saliency::selection_field(points, &sel.participants, &all, sigma)?
        }
    };
    GroundTruth::new(shape_id, field, sel.participants, points.len())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    mesh::write_bytes(path, text.as_bytes())
}
