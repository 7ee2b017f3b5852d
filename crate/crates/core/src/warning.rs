use std::fmt;

use serde::Serialize;

/// Non-fatal conditions recorded while processing a shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Neighborhood covariance had no well-defined smallest eigenvector.
    DegenerateCovariance { point: usize },
    /// A neighbor coincides with the query point and was skipped.
    CoincidentNeighbor { point: usize, neighbor: usize },
    /// No neighbor inside the descriptor support radius.
    IsolatedPoint { point: usize },
    /// A rendered view produced no points.
    EmptyScan { view: usize },
    /// Histogram matching received a constant map.
    ConstantMap,
    /// A participant selected nothing.
    EmptySelection { participant: usize },
    /// A confidence interval was computed from a single sample.
    SingleSample { class: String, model: String },
    /// A shape was left out of an aggregate.
    ShapeSkipped { shape: String, reason: String },
    /// A model was not evaluated on a shape.
    ModelSkipped {
        shape: String,
        model: String,
        reason: String,
    },
    /// The spectral model fell back to the all-zero map.
    SpectralFallback { reason: String },
    /// Faces dropped while loading a mesh.
    DroppedFaces { count: usize },
}

impl Warning {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Warning::DegenerateCovariance { .. } => "degenerate_covariance",
            Warning::CoincidentNeighbor { .. } => "coincident_neighbor",
            Warning::IsolatedPoint { .. } => "isolated_point",
            Warning::EmptyScan { .. } => "empty_scan",
            Warning::ConstantMap => "constant_map",
            Warning::EmptySelection { .. } => "empty_selection",
            Warning::SingleSample { .. } => "single_sample",
            Warning::ShapeSkipped { .. } => "shape_skipped",
            Warning::ModelSkipped { .. } => "model_skipped",
            Warning::SpectralFallback { .. } => "spectral_fallback",
            Warning::DroppedFaces { .. } => "dropped_faces",
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DegenerateCovariance { point } => {
                write!(f, "degenerate neighborhood covariance at point {point}")
            }
            Warning::CoincidentNeighbor { point, neighbor } => {
                write!(
                    f,
                    "point {neighbor} coincides with point {point}; pair skipped"
                )
            }
            Warning::IsolatedPoint { point } => {
                write!(
                    f,
                    "point {point} has no neighbors within the support radius"
                )
            }
            Warning::EmptyScan { view } => write!(f, "view {view} produced no scan points"),
            Warning::ConstantMap => write!(f, "constant map matched to the reference median"),
            Warning::EmptySelection { participant } => {
                write!(f, "participant {participant} has no selections; skipped")
            }
            Warning::SingleSample { class, model } => {
                write!(
                    f,
                    "class {class}, model {model}: single sample, CI half-width set to 0"
                )
            }
            Warning::ShapeSkipped { shape, reason } => write!(f, "shape {shape} skipped: {reason}"),
            Warning::ModelSkipped {
                shape,
                model,
                reason,
            } => write!(f, "model {model} skipped on shape {shape}: {reason}"),
            Warning::SpectralFallback { reason } => {
                write!(f, "spectral saliency set to zero: {reason}")
            }
            Warning::DroppedFaces { count } => write!(f, "{count} degenerate faces dropped"),
        }
    }
}
