//! PLY reading (ascii and binary little-endian) and binary writing.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

/// Decoded element data keyed by property name.
#[derive(Debug, Clone, Default)]
pub(crate) struct ElementData {
    pub scalars: BTreeMap<String, Vec<f64>>,
    pub lists: BTreeMap<String, Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct PlyData {
    pub elements: BTreeMap<String, ElementData>,
}

fn header_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn binary_err(path: &Path, offset: usize, message: impl Into<String>) -> Error {
    Error::ParseBinary {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

pub(crate) fn parse(path: &Path, bytes: &[u8]) -> Result<PlyData> {
    let marker = b"end_header";
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| header_err(path, 1, "missing end_header"))?;
    let mut body = end + marker.len();
    if bytes.get(body) == Some(&b'\r') {
        body += 1;
    }
    if bytes.get(body) == Some(&b'\n') {
        body += 1;
    }
    let header = std::str::from_utf8(&bytes[..end])
        .map_err(|_| header_err(path, 1, "header is not text"))?;
    let mut lines = header.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(header_err(path, 1, "missing `ply` magic")),
    }
    let mut binary = None;
    let mut elements: Vec<Element> = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", "ascii", _] => binary = Some(false),
            ["format", "binary_little_endian", _] => binary = Some(true),
            ["format", other, ..] => {
                return Err(header_err(
                    path,
                    line_no,
                    format!("unsupported format `{other}`"),
                ))
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| {
                    header_err(path, line_no, format!("invalid element count `{count}`"))
                })?,
                properties: Vec::new(),
            }),
            ["property", "list", count_ty, item_ty, name] => {
                let e = elements
                    .last_mut()
                    .ok_or_else(|| header_err(path, line_no, "property before element"))?;
                let c = Scalar::parse(count_ty).ok_or_else(|| {
                    header_err(path, line_no, format!("unknown type `{count_ty}`"))
                })?;
                let t = Scalar::parse(item_ty).ok_or_else(|| {
                    header_err(path, line_no, format!("unknown type `{item_ty}`"))
                })?;
                e.properties.push(Property::List(name.to_string(), c, t));
            }
            ["property", ty, name] => {
                let e = elements
                    .last_mut()
                    .ok_or_else(|| header_err(path, line_no, "property before element"))?;
                let t = Scalar::parse(ty)
                    .ok_or_else(|| header_err(path, line_no, format!("unknown type `{ty}`")))?;
                e.properties.push(Property::Scalar(name.to_string(), t));
            }
            _ => {
                return Err(header_err(
                    path,
                    line_no,
                    format!("unrecognized header line `{line}`"),
                ))
            }
        }
    }
    let binary = binary.ok_or_else(|| header_err(path, 2, "missing format line"))?;
    let header_lines = header.lines().count() + 1;
    let mut data = PlyData::default();
    if binary {
        let mut at = body;
        for e in &elements {
            let out = data.elements.entry(e.name.clone()).or_default();
            for _ in 0..e.count {
                for p in &e.properties {
                    match p {
                        Property::Scalar(name, t) => {
                            let b = bytes.get(at..at + t.size()).ok_or_else(|| {
                                binary_err(path, at, format!("truncated `{}` data", e.name))
                            })?;
                            out.scalars
                                .entry(name.clone())
                                .or_default()
                                .push(t.decode(b));
                            at += t.size();
                        }
                        Property::List(name, c, t) => {
                            let b = bytes.get(at..at + c.size()).ok_or_else(|| {
                                binary_err(path, at, format!("truncated `{}` data", e.name))
                            })?;
                            let k = c.decode(b);
                            if k.is_nan() || k < 0.0 {
                                return Err(binary_err(path, at, "negative list length"));
                            }
                            at += c.size();
                            let k = k as usize;
                            let span = k.saturating_mul(t.size());
                            let b = bytes.get(at..at.saturating_add(span)).ok_or_else(|| {
                                binary_err(path, at, format!("truncated `{}` list", e.name))
                            })?;
                            let items = b.chunks_exact(t.size()).map(|x| t.decode(x)).collect();
                            out.lists.entry(name.clone()).or_default().push(items);
                            at += span;
                        }
                    }
                }
            }
        }
    } else {
        let text = std::str::from_utf8(&bytes[body..])
            .map_err(|_| header_err(path, header_lines, "body is not text"))?;
        let mut rows = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + header_lines + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());
        for e in &elements {
            let out = data.elements.entry(e.name.clone()).or_default();
            for _ in 0..e.count {
                let (line_no, row) = rows.next().ok_or_else(|| {
                    header_err(path, header_lines, format!("missing `{}` rows", e.name))
                })?;
                let mut vals = row.split_whitespace().map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| header_err(path, line_no, format!("invalid number `{t}`")))
                });
                let mut take = || {
                    vals.next()
                        .unwrap_or_else(|| Err(header_err(path, line_no, "row has too few values")))
                };
                for p in &e.properties {
                    match p {
                        Property::Scalar(name, _) => {
                            let v = take()?;
                            out.scalars.entry(name.clone()).or_default().push(v);
                        }
                        Property::List(name, _, _) => {
                            let k = take()?;
                            if k.is_nan() || k < 0.0 {
                                return Err(header_err(path, line_no, "negative list length"));
                            }
                            let items = (0..k as usize)
                                .map(|_| take())
                                .collect::<Result<Vec<f64>>>()?;
                            out.lists.entry(name.clone()).or_default().push(items);
                        }
                    }
                }
            }
        }
    }
    for e in &elements {
        let out = data.elements.entry(e.name.clone()).or_default();
        for p in &e.properties {
            match p {
                Property::Scalar(n, _) => {
                    out.scalars.entry(n.clone()).or_default();
                }
                Property::List(n, _, _) => {
                    out.lists.entry(n.clone()).or_default();
                }
            }
        }
    }
    Ok(data)
}

pub(crate) fn read_polygons(path: &Path, bytes: &[u8]) -> Result<(Vec<Point>, Vec<Vec<usize>>)> {
    let data = parse(path, bytes)?;
    let vertices = vertex_positions(path, &data)?;
    let polygons = match data.elements.get("face") {
        None => Vec::new(),
        Some(face) => {
            let lists = face
                .lists
                .get("vertex_indices")
                .or_else(|| face.lists.get("vertex_index"))
                .ok_or_else(|| header_err(path, 1, "face element has no vertex_indices list"))?;
            lists
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|&v| {
                            if v >= 0.0 && v.fract() == 0.0 {
                                Ok(v as usize)
                            } else {
                                Err(Error::InvalidMesh(format!(
                                    "{}: invalid face index {v}",
                                    path.display()
                                )))
                            }
                        })
                        .collect()
                })
                .collect::<Result<_>>()?
        }
    };
    Ok((vertices, polygons))
}

pub(crate) fn vertex_positions(path: &Path, data: &PlyData) -> Result<Vec<Point>> {
    let vertex = data
        .elements
        .get("vertex")
        .ok_or_else(|| header_err(path, 1, "no vertex element"))?;
    let coord = |name: &str| {
        vertex
            .scalars
            .get(name)
            .ok_or_else(|| header_err(path, 1, format!("vertex element lacks `{name}`")))
    };
    let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
    let points: Vec<Point> = (0..x.len()).map(|i| Point::new(x[i], y[i], z[i])).collect();
    if points
        .iter()
        .any(|p| !p.coords.iter().all(|c| c.is_finite()))
    {
        return Err(Error::InvalidMesh(format!(
            "{}: non-finite vertex coordinate",
            path.display()
        )));
    }
    Ok(points)
}

/// Column of a binary PLY vertex element.
pub(crate) enum Column<'a> {
    F64(&'a str, Vec<f64>),
    F32(&'a str, Vec<f32>),
    U32(&'a str, Vec<u32>),
    U8(&'a str, Vec<u8>),
}

impl Column<'_> {
    fn declaration(&self) -> String {
        match self {
            Column::F64(n, _) => format!("property double {n}\n"),
            Column::F32(n, _) => format!("property float {n}\n"),
            Column::U32(n, _) => format!("property uint {n}\n"),
            Column::U8(n, _) => format!("property uchar {n}\n"),
        }
    }

    fn write(&self, i: usize, out: &mut Vec<u8>) {
        match self {
            Column::F64(_, v) => out.extend_from_slice(&v[i].to_le_bytes()),
            Column::F32(_, v) => out.extend_from_slice(&v[i].to_le_bytes()),
            Column::U32(_, v) => out.extend_from_slice(&v[i].to_le_bytes()),
            Column::U8(_, v) => out.push(v[i]),
        }
    }
}

/// Binary little-endian PLY with the given vertex columns and triangle faces.
pub(crate) fn encode(rows: usize, columns: &[Column], faces: &[[usize; 3]]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"ply\nformat binary_little_endian 1.0\n");
    out.extend_from_slice(format!("element vertex {rows}\n").as_bytes());
    for c in columns {
        out.extend_from_slice(c.declaration().as_bytes());
    }
    out.extend_from_slice(format!("element face {}\n", faces.len()).as_bytes());
    out.extend_from_slice(b"property list uchar uint vertex_indices\nend_header\n");
    for i in 0..rows {
        for c in columns {
            c.write(i, &mut out);
        }
    }
    for f in faces {
        out.push(3);
        for &v in f {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
    }
    out
}
