//! The evaluated saliency models and the map type they produce.
//!
//! | tag | model |
//! |-----|-------|
//! | LS  | two-scale descriptor distinctiveness plus focus association |
//! | MS  | multi-scale log-Laplacian spectral irregularity (meshes only) |
//! | CS  | cluster distinctiveness plus spatial distribution |
//! | PS  | projection of FPFHs on their first principal axis |
//! | RS  | uniform random baseline |
//! | HS  | selections of a subset of human participants |

mod baseline;
mod cs;
mod ls;
mod ms;
mod ps;
pub mod spectral;

pub use baseline::{compute_hs, compute_rs, selection_field};
pub use cs::{cluster_distinctiveness, compute_cs, cs_detail, kmeans, ClusterResult, CsDetail};
pub use ls::{
    combine_ls, compute_ls, focus_association, ls_distinctiveness, ls_foci_and_association,
    DistinctivenessOptions, LsIntermediate,
};
pub use ms::{compute_ms, compute_ms_detailed, single_scale_map, MsDetail, SpectralData};
pub use ps::{compute_ps, pca_saliency};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::descriptor::{BlockNormalization, DescriptorConfig};
use crate::error::{Error, Result};
use crate::warning::Warning;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelTag {
    LS,
    MS,
    CS,
    PS,
    RS,
    HS,
    GS,
}

impl ModelTag {
    pub const EVALUATED: [ModelTag; 6] = [
        ModelTag::LS,
        ModelTag::MS,
        ModelTag::CS,
        ModelTag::PS,
        ModelTag::RS,
        ModelTag::HS,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::LS => "LS",
            ModelTag::MS => "MS",
            ModelTag::CS => "CS",
            ModelTag::PS => "PS",
            ModelTag::RS => "RS",
            ModelTag::HS => "HS",
            ModelTag::GS => "GS",
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LS" => Ok(ModelTag::LS),
            "MS" => Ok(ModelTag::MS),
            "CS" => Ok(ModelTag::CS),
            "PS" => Ok(ModelTag::PS),
            "RS" => Ok(ModelTag::RS),
            "HS" => Ok(ModelTag::HS),
            "GS" => Ok(ModelTag::GS),
            other => Err(Error::InvalidParameter(format!(
                "unknown model tag `{other}`"
            ))),
        }
    }
}

/// Per-point saliency in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaliencyMap {
    pub shape_id: String,
    pub model: ModelTag,
    pub values: Vec<f64>,
}

impl SaliencyMap {
    /// Min-max normalizes `raw` into a map. Non-finite input is rejected.
    pub fn normalized(shape_id: impl Into<String>, model: ModelTag, raw: &[f64]) -> Result<Self> {
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{model} produced non-finite saliency"
            )));
        }
        Ok(Self {
            shape_id: shape_id.into(),
            model,
            values: min_max_normalize(raw),
        })
    }

    pub fn zeros(shape_id: impl Into<String>, model: ModelTag, len: usize) -> Self {
        Self {
            shape_id: shape_id.into(),
            model,
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Rescales to [0, 1]; constant input maps to all zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || hi <= lo {
        return vec![0.0; values.len()];
    }
    let span = hi - lo;
    values
        .iter()
        .map(|v| ((v - lo) / span).clamp(0.0, 1.0))
        .collect()
}

/// Model output with any warnings raised while computing it.
#[derive(Debug, Clone)]
pub struct ModelOutput {
    pub map: SaliencyMap,
    pub warnings: Vec<Warning>,
}

/// Model parameters. Radii and smoothing widths are fractions of the
/// bounding-sphere radius R.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// LS fine descriptor radius.
    pub r_low: f64,
    /// LS coarse descriptor radius.
    pub r_high: f64,
    /// MS smoothing scale.
    pub ms_epsilon: f64,
    /// MS number of lowest frequencies.
    pub ms_frequencies: usize,
    /// CS descriptor radius.
    pub cs_radius: f64,
    /// CS cluster count.
    pub cs_clusters: usize,
    /// PS descriptor radius.
    pub ps_radius: f64,
    /// HS participant count.
    pub hs_participants: usize,
    pub seed: u64,

    /// Neighbors for PCA normal estimation.
    pub normal_k: usize,
    /// Neighbors in the Riemann graph for normal orientation.
    pub orient_k: usize,
    /// LS focus-association Gaussian width.
    pub ls_focus_sigma: f64,
    /// Force the all-pairs LS distinctiveness regardless of point count.
    pub ls_exact: bool,
    /// Above this point count LS averages over sampled partners.
    pub ls_exact_limit: usize,
    pub ls_near_samples: usize,
    pub ls_far_samples: usize,
    /// CS point-level smoothing width.
    pub cs_smoothing_sigma: f64,
    pub cs_max_iterations: usize,
    /// Similarity bandwidth for CS spatial distribution; 0 selects the median
    /// pairwise cluster distance.
    pub cs_similarity_sigma: f64,
    /// HS / ground-truth Gaussian width.
    pub hs_sigma: f64,
    /// MS moving-average window over the log spectrum.
    pub ms_window: usize,
    /// MS smoothing width of the multi-scale sum.
    pub ms_smoothing_sigma: f64,
    /// Meshes up to this size use a dense eigensolver.
    pub ms_dense_limit: usize,
    pub descriptor_normalization: BlockNormalization,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            r_low: 0.01,
            r_high: 0.1,
            ms_epsilon: 0.004,
            ms_frequencies: 9,
            cs_radius: 0.02,
            cs_clusters: 100,
            ps_radius: 0.01,
            hs_participants: 1,
            seed: 0,
            normal_k: 10,
            orient_k: 8,
            ls_focus_sigma: 0.1,
            ls_exact: false,
            ls_exact_limit: 5000,
            ls_near_samples: 512,
            ls_far_samples: 512,
            cs_smoothing_sigma: 0.05,
            cs_max_iterations: 100,
            cs_similarity_sigma: 0.0,
            hs_sigma: 0.03,
            ms_window: 9,
            ms_smoothing_sigma: 0.02,
            ms_dense_limit: 400,
            descriptor_normalization: BlockNormalization::Percent,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r_low", self.r_low),
            ("r_high", self.r_high),
            ("ms_epsilon", self.ms_epsilon),
            ("cs_radius", self.cs_radius),
            ("ps_radius", self.ps_radius),
            ("ls_focus_sigma", self.ls_focus_sigma),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let nonneg = [
            ("cs_smoothing_sigma", self.cs_smoothing_sigma),
            ("cs_similarity_sigma", self.cs_similarity_sigma),
            ("hs_sigma", self.hs_sigma),
            ("ms_smoothing_sigma", self.ms_smoothing_sigma),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        let counts = [
            ("ms_frequencies", self.ms_frequencies),
            ("cs_clusters", self.cs_clusters),
            ("hs_participants", self.hs_participants),
            ("ms_window", self.ms_window),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 1")));
            }
        }
        if self.normal_k < 3 {
            return Err(Error::InvalidParameter("normal_k must be >= 3".into()));
        }
        Ok(())
    }

    pub(crate) fn descriptor_config(&self, radius: f64) -> DescriptorConfig {
        DescriptorConfig {
            normalization: self.descriptor_normalization,
            distance_unit: radius,
        }
    }
}
