//! PCA projection of FPFH descriptors.

use nalgebra::DMatrix;

use super::{ModelOutput, ModelParams, ModelTag, SaliencyMap};
use crate::descriptor::{compute_fpfh, Descriptor33, DESCRIPTOR_LEN};
use crate::error::{Error, Result};
use crate::geometry::{bounding_sphere, NeighborIndex, PointCloud};

/// `|row_i . axis|` for the mean-centered descriptor matrix and its first
/// principal axis. Zero-variance input gives all zeros.
pub fn pca_saliency(descriptors: &[Descriptor33]) -> Vec<f64> {
    let n = descriptors.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut m = DMatrix::from_fn(n, DESCRIPTOR_LEN, |i, j| descriptors[i].0[j]);
    let mut constant = true;
    for j in 0..DESCRIPTOR_LEN {
        let mut col = m.column_mut(j);
        let (lo, hi) = (col.min(), col.max());
        if hi > lo {
            constant = false;
        }
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    if constant {
        return vec![0.0; n];
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let first = (0..svd.singular_values.len())
        .max_by(|&a, &b| {
            svd.singular_values[a]
                .total_cmp(&svd.singular_values[b])
                .then(b.cmp(&a))
        })
        .unwrap_or(0);
    let axis = v_t.row(first).transpose();
    (m * axis).iter().map(|v| v.abs()).collect()
}

/// PS saliency of an oriented point cloud.
pub fn compute_ps(shape_id: &str, cloud: &PointCloud, params: &ModelParams) -> Result<ModelOutput> {
    params.validate()?;
    cloud.normals()?;
    if cloud.len() < 2 {
        return Err(Error::InsufficientNeighborhood {
            k: 1,
            points: cloud.len(),
        });
    }
    let scale = bounding_sphere(&cloud.points)?.radius;
    let index = NeighborIndex::build(&cloud.points)?;
    let set = compute_fpfh(
        cloud,
        &index,
        params.ps_radius * scale,
        &params.descriptor_config(scale),
    )?;
    Ok(ModelOutput {
        map: SaliencyMap::normalized(shape_id, ModelTag::PS, &pca_saliency(&set.descriptors))?,
        warnings: set.warnings,
    })
}
