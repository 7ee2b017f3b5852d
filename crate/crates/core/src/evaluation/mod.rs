//! Scoring saliency maps against human selections.

mod aggregate;
mod histogram;
mod human;
mod metrics;
mod wilcoxon;

pub use aggregate::{aggregate_by_class, mean_ci95, rank_models, ClassSummary, MeanCi};
pub use histogram::{histogram, histogram_match, reference_histogram, ReferenceCdf, DEFAULT_BINS};
pub use human::{human_performance_curve, CurveShape, HumanCurveConfig, HumanCurvePoint};
pub use metrics::{fixation_set, lcc, midranks, nss, roc_auc};
pub use wilcoxon::{wilcoxon_rank_sum, RankSumTest, EXACT_BELOW, EXACT_MAX_POOLED};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::saliency::ModelTag;
use crate::warning::Warning;

/// Human selections on one shape and the smoothed field derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub shape_id: String,
    pub field: Vec<f64>,
    pub participants: Vec<Vec<usize>>,
}

impl GroundTruth {
    pub fn new(
        shape_id: impl Into<String>,
        field: Vec<f64>,
        participants: Vec<Vec<usize>>,
        vertex_count: usize,
    ) -> Result<Self> {
        if field.len() != vertex_count {
            return Err(Error::LengthMismatch {
                expected: vertex_count,
                actual: field.len(),
            });
        }
        if participants.is_empty() {
            return Err(Error::NoParticipants);
        }
        if let Some(&bad) = participants.iter().flatten().find(|&&v| v >= vertex_count) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: vertex_count,
            });
        }
        if field.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "ground-truth field has non-finite values".into(),
            ));
        }
        Ok(Self {
            shape_id: shape_id.into(),
            field,
            participants,
        })
    }

    /// Union of all participants' selections.
    pub fn fixations(&self) -> Vec<usize> {
        fixation_set(&self.participants)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Auc,
    Nss,
    Lcc,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Auc, Metric::Nss, Metric::Lcc];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::Nss => "nss",
            Metric::Lcc => "lcc",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricScores {
    pub shape_id: String,
    pub model: ModelTag,
    pub auc: f64,
    pub nss: f64,
    pub lcc: f64,
}

impl MetricScores {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Auc => self.auc,
            Metric::Nss => self.nss,
            Metric::Lcc => self.lcc,
        }
    }
}

/// Which vertices count as positives for AUC.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "threshold")]
pub enum PositiveSet {
    /// Every vertex selected by any participant.
    #[default]
    Selections,
    /// Vertices whose min-max normalized ground-truth field reaches the threshold.
    FieldAtLeast(f64),
}

impl PositiveSet {
    pub fn positives(&self, truth: &GroundTruth) -> Vec<usize> {
        match self {
            PositiveSet::Selections => truth.fixations(),
            PositiveSet::FieldAtLeast(t) => crate::saliency::min_max_normalize(&truth.field)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v >= *t)
                .map(|(i, _)| i)
                .collect(),
        }
    }
}

/// AUC against the positive set, NSS against the participants, and LCC
/// against the ground-truth field.
pub fn score_map(
    model: ModelTag,
    values: &[f64],
    truth: &GroundTruth,
    positives: PositiveSet,
) -> Result<(MetricScores, Vec<Warning>)> {
    if values.len() != truth.field.len() {
        return Err(Error::LengthMismatch {
            expected: truth.field.len(),
            actual: values.len(),
        });
    }
    let auc = roc_auc(values, &positives.positives(truth))?;
    let (nss, warnings) = nss(values, &truth.participants)?;
    let lcc = lcc(&truth.field, values)?;
    Ok((
        MetricScores {
            shape_id: truth.shape_id.clone(),
            model,
            auc,
            nss,
            lcc,
        },
        warnings,
    ))
}
