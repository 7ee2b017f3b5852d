//! Multi-scale spectral irregularity saliency for triangle meshes.
//!
//! All quantities are computed on the mesh translated to its centroid and
//! scaled to unit bounding radius.

use rayon::prelude::*;

use super::spectral::{
    cotangent_laplacian, dense_eigenpairs, shift_invert_eigenpairs, symmetric_operator, Eigenpairs,
    SubspaceOptions,
};
use super::{min_max_normalize, ModelOutput, ModelParams, ModelTag, SaliencyMap};
use crate::error::{Error, Result};
use crate::geometry::{bounding_sphere, NeighborIndex, Point, TriangleMesh};
use crate::warning::Warning;

/// Number of smoothing scales `k * eps^2`, `k = 1..=SCALES`.
pub const SCALES: usize = 5;

const TRUNCATION: f64 = 4.0;

/// Lowest Laplacian eigenpairs and the derived log spectra.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub frequencies: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    pub log_spectrum: Vec<f64>,
    pub avg_spectrum: Vec<f64>,
}

impl SpectralData {
    pub fn from_eigenpairs(pairs: Eigenpairs, window: usize) -> Self {
        let log_spectrum: Vec<f64> = pairs.values.iter().map(|l| l.abs().ln_1p()).collect();
        let half = window / 2;
        let m = log_spectrum.len();
        let avg_spectrum = (0..m)
            .map(|f| {
                let lo = f.saturating_sub(half);
                let hi = (f + half + 1).min(m);
                log_spectrum[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect();
        Self {
            frequencies: pairs.values,
            basis: pairs.vectors,
            log_spectrum,
            avg_spectrum,
        }
    }

    /// `|L_f - A_f|` per frequency.
    pub fn irregularity(&self) -> Vec<f64> {
        self.log_spectrum
            .iter()
            .zip(&self.avg_spectrum)
            .map(|(l, a)| (l - a).abs())
            .collect()
    }
}

/// `sum_f R_f * b_f(v)^2`, rescaled to [0, 1].
pub fn single_scale_map(data: &SpectralData) -> Vec<f64> {
    let n = data.basis.first().map_or(0, Vec::len);
    let weights = data.irregularity();
    let raw: Vec<f64> = (0..n)
        .map(|v| {
            weights
                .iter()
                .zip(&data.basis)
                .map(|(w, b)| w * b[v] * b[v])
                .sum()
        })
        .collect();
    min_max_normalize(&raw)
}

/// One explicit step `x <- x - t M^-1 L x`, with `t` clamped for stability.
fn smoothing_step(vertices: &[Point], faces: &[[usize; 3]], step: f64) -> Result<Vec<Point>> {
    let (stiffness, mass) = cotangent_laplacian(vertices, faces)?;
    let bound = (0..stiffness.dim())
        .map(|i| stiffness.row(i).map(|e| e.1.abs()).sum::<f64>() / mass[i])
        .fold(0.0, f64::max);
    let t = if bound > 0.0 {
        step.min(0.5 / bound)
    } else {
        step
    };
    let mut out = vertices.to_vec();
    for axis in 0..3 {
        let x: Vec<f64> = vertices.iter().map(|p| p[axis]).collect();
        let lx = stiffness.mul_vec(&x);
        for (i, p) in out.iter_mut().enumerate() {
            p[axis] -= t * lx[i] / mass[i];
        }
    }
    Ok(out)
}

fn spectral_data(
    vertices: &[Point],
    faces: &[[usize; 3]],
    params: &ModelParams,
) -> Result<SpectralData> {
    let (stiffness, mass) = cotangent_laplacian(vertices, faces)?;
    let op = symmetric_operator(&stiffness, &mass);
    let pairs = if vertices.len() <= params.ms_dense_limit {
        dense_eigenpairs(&op, params.ms_frequencies)
    } else {
        shift_invert_eigenpairs(
            &op,
            params.ms_frequencies,
            &SubspaceOptions {
                seed: params.seed,
                ..Default::default()
            },
        )?
    };
    Ok(SpectralData::from_eigenpairs(pairs, params.ms_window))
}

/// Per-scale spectra and maps plus the combined multi-scale field.
#[derive(Debug, Clone)]
pub struct MsDetail {
    pub scales: Vec<SpectralData>,
    pub scale_maps: Vec<Vec<f64>>,
    /// Sum of absolute differences between consecutive scale maps.
    pub difference: Vec<f64>,
    /// `ln(1 + smoothed difference)` before normalization.
    pub raw: Vec<f64>,
}

/// Normalized Gaussian average of `field` over Euclidean neighborhoods.
fn gaussian_average(points: &[Point], field: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if sigma <= 0.0 {
        return Ok(field.to_vec());
    }
    let index = NeighborIndex::build(points)?;
    let two_s2 = 2.0 * sigma * sigma;
    Ok((0..points.len())
        .into_par_iter()
        .map(|v| {
            let mut num = field[v];
            let mut den = 1.0;
            for (u, d) in index.within(&points[v], TRUNCATION * sigma, Some(v)) {
                let w = (-d * d / two_s2).exp();
                num += w * field[u];
                den += w;
            }
            num / den
        })
        .collect())
}

/// Runs every MS stage, propagating spectral failures as errors.
pub fn compute_ms_detailed(mesh: &TriangleMesh, params: &ModelParams) -> Result<MsDetail> {
    params.validate()?;
    let sphere = bounding_sphere(&mesh.vertices)?;
    if sphere.radius <= 0.0 {
        return Err(Error::Spectral("mesh has zero extent".into()));
    }
    let mut current: Vec<Point> = mesh
        .vertices
        .iter()
        .map(|p| Point::from((p - sphere.center) / sphere.radius))
        .collect();
    let base = current.clone();
    let step = params.ms_epsilon * params.ms_epsilon;
    let mut scales = Vec::with_capacity(SCALES);
    for _ in 0..SCALES {
        current = smoothing_step(&current, &mesh.faces, step)?;
        scales.push(spectral_data(&current, &mesh.faces, params)?);
    }
    let scale_maps: Vec<Vec<f64>> = scales.iter().map(single_scale_map).collect();
    let n = base.len();
    let difference: Vec<f64> = (0..n)
        .map(|v| {
            scale_maps
                .windows(2)
                .map(|w| (w[1][v] - w[0][v]).abs())
                .sum()
        })
        .collect();
    let smoothed = gaussian_average(&base, &difference, params.ms_smoothing_sigma)?;
    let raw = smoothed.iter().map(|d| d.ln_1p()).collect();
    Ok(MsDetail {
        scales,
        scale_maps,
        difference,
        raw,
    })
}

/// MS saliency. Meshes without a usable spectrum get an all-zero map and a
/// warning.
pub fn compute_ms(
    shape_id: &str,
    mesh: &TriangleMesh,
    params: &ModelParams,
) -> Result<ModelOutput> {
    match compute_ms_detailed(mesh, params) {
        Ok(detail) => Ok(ModelOutput {
            map: SaliencyMap::normalized(shape_id, ModelTag::MS, &detail.raw)?,
            warnings: Vec::new(),
        }),
        Err(Error::Spectral(reason)) => Ok(ModelOutput {
            map: SaliencyMap::zeros(shape_id, ModelTag::MS, mesh.vertex_count()),
            warnings: vec![Warning::SpectralFallback { reason }],
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{cube, icosphere};

    #[test]
    fn moving_average_truncates() {
        let data = SpectralData::from_eigenpairs(
            Eigenpairs {
                values: vec![0.0, (1f64).exp_m1(), (2f64).exp_m1()],
                vectors: vec![vec![1.0]; 3],
            },
            3,
        );
        assert_eq!(data.avg_spectrum.len(), 3);
        assert!((data.avg_spectrum[0] - 0.5).abs() < 1e-12);
        assert!((data.avg_spectrum[1] - 1.0).abs() < 1e-12);
        assert!((data.avg_spectrum[2] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn closed_mesh_gives_nonzero_map() {
        let out = compute_ms("c", &cube(4), &ModelParams::default()).unwrap();
        assert!(out.warnings.is_empty());
        assert!(out.map.values.iter().any(|v| *v > 0.0));
        assert!(out.map.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn spectrum_properties() {
        let detail = compute_ms_detailed(&icosphere(2), &ModelParams::default()).unwrap();
        for s in &detail.scales {
            assert!(s.frequencies[0].abs() < 1e-8);
            assert!(s.frequencies.iter().all(|l| *l > -1e-8));
            assert_eq!(s.frequencies.len(), 9);
        }
    }

    #[test]
    fn isolated_vertex_falls_back() {
        let mesh = icosphere(1);
        let mut verts = mesh.vertices.clone();
        verts.push(Point::new(2.0, 0.0, 0.0));
        let broken = TriangleMesh::new(verts, mesh.faces.clone()).unwrap();
        let out = compute_ms("b", &broken, &ModelParams::default()).unwrap();
        assert!(out.map.values.iter().all(|v| *v == 0.0));
        assert!(matches!(out.warnings[0], Warning::SpectralFallback { .. }));
    }
}
