//! OFF and PLY mesh files.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point, TriangleMesh};
use crate::warning::Warning;

/// A mesh with the warnings raised while reading it.
#[derive(Debug, Clone)]
pub struct MeshFile {
    pub mesh: TriangleMesh,
    pub warnings: Vec<Warning>,
}

/// Reads an OFF or PLY mesh, chosen by file extension and falling back to the
/// magic bytes. Polygons are fan-triangulated; faces that repeat a vertex are
/// dropped with a warning.
pub fn read_mesh(path: &Path) -> Result<MeshFile> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let (vertices, polygons) = match ext.as_deref() {
        Some("ply") => super::ply::read_polygons(path, &bytes)?,
        Some("off") => read_off(path, &bytes)?,
        _ if bytes.starts_with(b"ply") => super::ply::read_polygons(path, &bytes)?,
        _ => read_off(path, &bytes)?,
    };
    assemble(path, vertices, polygons)
}

pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    read_mesh(path).map(|m| m.mesh)
}

pub(crate) fn assemble(
    path: &Path,
    vertices: Vec<Point>,
    polygons: Vec<Vec<usize>>,
) -> Result<MeshFile> {
    let n = vertices.len();
    let mut faces = Vec::with_capacity(polygons.len());
    let mut dropped = 0;
    for poly in polygons {
        if let Some(&bad) = poly.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidMesh(format!(
                "{}: face index {bad} out of range for {n} vertices",
                path.display()
            )));
        }
        if poly.len() < 3 {
            dropped += 1;
            continue;
        }
        for k in 1..poly.len() - 1 {
            let f = [poly[0], poly[k], poly[k + 1]];
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                dropped += 1;
            } else {
                faces.push(f);
            }
        }
    }
    let mesh = TriangleMesh::new(vertices, faces)?;
    let warnings = if dropped > 0 {
        vec![Warning::DroppedFaces { count: dropped }]
    } else {
        Vec::new()
    };
    Ok(MeshFile { mesh, warnings })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Whitespace tokens with their 1-based line numbers, comments stripped.
struct Tokens<'a> {
    path: &'a Path,
    items: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> =
            Box::new(text.lines().enumerate().flat_map(|(i, line)| {
                let content = line.split('#').next().unwrap_or("");
                content.split_whitespace().map(move |t| (i + 1, t))
            }));
        Self {
            path,
            items: it.peekable(),
            line: 1,
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        match self.items.next() {
            Some((l, t)) => {
                self.line = l;
                Ok(t)
            }
            None => Err(parse_err(
                self.path,
                self.line,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let t = self.next(what)?;
        t.parse()
            .map_err(|_| parse_err(self.path, self.line, format!("invalid {what} `{t}`")))
    }

    fn skip_rest_of_line(&mut self) {
        while self.items.peek().is_some_and(|(l, _)| *l == self.line) {
            self.items.next();
        }
    }
}

fn read_off(path: &Path, bytes: &[u8]) -> Result<(Vec<Point>, Vec<Vec<usize>>)> {
    let text =
        std::str::from_utf8(bytes).map_err(|_| parse_err(path, 1, "OFF file is not UTF-8 text"))?;
    let mut toks = Tokens::new(path, text);
    let magic = toks.next("OFF header")?;
    let inline = match magic.strip_prefix("OFF") {
        Some("") => None,
        Some(rest) => Some(rest),
        None => {
            return Err(parse_err(
                path,
                toks.line,
                format!("expected `OFF`, found `{magic}`"),
            ))
        }
    };
    let nv: usize = match inline {
        Some(t) => t
            .parse()
            .map_err(|_| parse_err(path, toks.line, format!("invalid vertex count `{t}`")))?,
        None => toks.parse("vertex count")?,
    };
    let nf: usize = toks.parse("face count")?;
    let _edges: usize = toks.parse("edge count")?;
    let mut vertices = Vec::with_capacity(nv.min(1 << 24));
    for _ in 0..nv {
        let mut c = [0.0f64; 3];
        for x in &mut c {
            *x = toks.parse("vertex coordinate")?;
            if !x.is_finite() {
                return Err(parse_err(path, toks.line, "non-finite vertex coordinate"));
            }
        }
        vertices.push(Point::new(c[0], c[1], c[2]));
        toks.skip_rest_of_line();
    }
    let mut polygons = Vec::with_capacity(nf.min(1 << 24));
    for _ in 0..nf {
        let k: usize = toks.parse("face size")?;
        let mut poly = Vec::with_capacity(k.min(64));
        for _ in 0..k {
            let v: usize = toks.parse("face index")?;
            if v >= nv {
                return Err(parse_err(
                    path,
                    toks.line,
                    format!("face index {v} out of range for {nv} vertices"),
                ));
            }
            poly.push(v);
        }
        polygons.push(poly);
        // Optional per-face colors run to the end of the line.
        toks.skip_rest_of_line();
    }
    Ok((vertices, polygons))
}

pub fn write_off(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "OFF\n{} {} 0\n",
        mesh.vertices.len(),
        mesh.faces.len()
    ));
    for v in &mesh.vertices {
        out.push_str(&format!("{:?} {:?} {:?}\n", v.x, v.y, v.z));
    }
    for f in &mesh.faces {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    write_bytes(path, out.as_bytes())
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
