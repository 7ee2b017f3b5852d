//! How well the selections of some participants predict those of others.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::histogram::{histogram_match, ReferenceCdf};
use super::metrics::{fixation_set, lcc, nss, roc_auc};
use super::GroundTruth;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::saliency::{min_max_normalize, selection_field, ModelTag, SaliencyMap};
use crate::warning::Warning;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanCurveConfig {
    /// Largest predictor group size; the curve covers `1..=max_participants`.
    pub max_participants: usize,
    pub trials: usize,
    pub seed: u64,
    /// Gaussian width of the predicted and evaluation fields, as a fraction of R.
    pub sigma: f64,
    /// Score predictors against themselves instead of a disjoint group.
    pub self_prediction: bool,
}

impl Default for HumanCurveConfig {
    fn default() -> Self {
        Self {
            max_participants: 11,
            trials: 10,
            seed: 0,
            sigma: 0.03,
            self_prediction: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HumanCurvePoint {
    pub participants: usize,
    pub auc: f64,
    pub nss: f64,
    pub lcc: f64,
    /// Shapes that had enough participants.
    pub shapes: usize,
}

/// Geometry and ground truth of one shape.
#[derive(Debug, Clone, Copy)]
pub struct CurveShape<'a> {
    pub points: &'a [Point],
    pub truth: &'a GroundTruth,
}

fn trial_scores(
    shape: &CurveShape,
    predictors: &[usize],
    evaluators: &[usize],
    reference: &ReferenceCdf,
    sigma: f64,
) -> Result<[f64; 3]> {
    let participants = &shape.truth.participants;
    let predicted = selection_field(shape.points, participants, predictors, sigma)?;
    let map = SaliencyMap::normalized(&shape.truth.shape_id, ModelTag::HS, &predicted)?;
    let (matched, _) = histogram_match(&map, reference)?;
    let evaluation = min_max_normalize(&selection_field(
        shape.points,
        participants,
        evaluators,
        sigma,
    )?);
    let selections: Vec<Vec<usize>> = evaluators
        .iter()
        .map(|&p| participants[p].clone())
        .collect();
    let auc = roc_auc(&matched.values, &fixation_set(&selections))?;
    let (nss, _) = nss(&matched.values, &selections)?;
    let lcc = lcc(&evaluation, &matched.values)?;
    Ok([auc, nss, lcc])
}

/// Mean AUC, NSS and LCC of `n_p`-participant predictions for each
/// `n_p` in `1..=max_participants`, averaged over trials and then shapes.
pub fn human_performance_curve(
    shapes: &[CurveShape],
    reference: &ReferenceCdf,
    cfg: &HumanCurveConfig,
) -> Result<(Vec<HumanCurvePoint>, Vec<Warning>)> {
    if cfg.max_participants == 0 || cfg.trials == 0 {
        return Err(Error::InvalidParameter(
            "participant count and trials must be >= 1".into(),
        ));
    }
    let mut warnings = Vec::new();
    let mut curve = Vec::new();
    for n_p in 1..=cfg.max_participants {
        let needed = if cfg.self_prediction { n_p } else { 2 * n_p };
        let results: Vec<(usize, Result<Option<[f64; 3]>>)> = shapes
            .par_iter()
            .enumerate()
            .map(|(s, shape)| {
                let count = shape.truth.participants.len();
                if count < needed {
                    return (s, Ok(None));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(((n_p as u64) << 32) | s as u64);
                let mut sum = [0.0; 3];
                let mut done = 0usize;
                for _ in 0..cfg.trials {
                    let mut order: Vec<usize> = (0..count).collect();
                    order.shuffle(&mut rng);
                    let predictors = &order[..n_p];
                    let evaluators = if cfg.self_prediction {
                        predictors
                    } else {
                        &order[n_p..2 * n_p]
                    };
                    match trial_scores(shape, predictors, evaluators, reference, cfg.sigma) {
                        Ok(v) => {
                            for k in 0..3 {
                                sum[k] += v[k];
                            }
                            done += 1;
                        }
                        Err(Error::DegeneratePositiveSet { .. } | Error::EmptySelections) => {}
                        Err(e) => return (s, Err(e)),
                    }
                }
                if done == 0 {
                    return (s, Ok(None));
                }
                (s, Ok(Some(sum.map(|x| x / done as f64))))
            })
            .collect();
        let mut totals = [0.0; 3];
        let mut used = 0usize;
        for (s, r) in results {
            match r? {
                Some(v) => {
                    for k in 0..3 {
                        totals[k] += v[k];
                    }
                    used += 1;
                }
                None => warnings.push(Warning::ShapeSkipped {
                    shape: shapes[s].truth.shape_id.clone(),
                    reason: format!("fewer than {needed} usable participants for n_p = {n_p}"),
                }),
            }
        }
        if used == 0 {
            return Err(Error::NoUsableShapes(format!(
                "no shape has {needed} usable participants for n_p = {n_p}"
            )));
        }
        curve.push(HumanCurvePoint {
            participants: n_p,
            auc: totals[0] / used as f64,
            nss: totals[1] / used as f64,
            lcc: totals[2] / used as f64,
            shapes: used,
        });
    }
    Ok((curve, warnings))
}
