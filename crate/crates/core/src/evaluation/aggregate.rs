//! Per-class means with Student t confidence intervals.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{Metric, MetricScores};
use crate::error::{Error, Result};
use crate::saliency::ModelTag;
use crate::warning::Warning;

/// Sample mean with the half-width of its 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub count: usize,
}

/// `t_{0.975, n-1} * s / sqrt(n)`; a single sample gets half-width 0.
pub fn mean_ci95(samples: &[f64]) -> MeanCi {
    let n = samples.len();
    if n == 0 {
        return MeanCi {
            mean: f64::NAN,
            half_width: 0.0,
            count: 0,
        };
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanCi {
            mean,
            half_width: 0.0,
            count: 1,
        };
    }
    if samples.iter().all(|x| *x == samples[0]) {
        return MeanCi {
            mean: samples[0],
            half_width: 0.0,
            count: n,
        };
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    MeanCi {
        mean,
        half_width: t * var.sqrt() / (n as f64).sqrt(),
        count: n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSummary {
    pub class: String,
    pub metric: Metric,
    pub models: BTreeMap<ModelTag, MeanCi>,
    /// Mean of the model means, with the interval of per-shape model averages.
    pub average: MeanCi,
}

/// Summaries per class for one metric, sorted by descending average and then
/// by class name.
pub fn aggregate_by_class(
    scores: &[MetricScores],
    classes: &BTreeMap<String, String>,
    metric: Metric,
) -> Result<(Vec<ClassSummary>, Vec<Warning>)> {
    let mut grouped: BTreeMap<&str, BTreeMap<ModelTag, Vec<f64>>> = BTreeMap::new();
    let mut per_shape: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for s in scores {
        let class = classes
            .get(&s.shape_id)
            .ok_or_else(|| Error::UnknownClass(s.shape_id.clone()))?;
        let value = s.get(metric);
        grouped
            .entry(class)
            .or_default()
            .entry(s.model)
            .or_default()
            .push(value);
        per_shape
            .entry(class)
            .or_default()
            .entry(&s.shape_id)
            .or_default()
            .push(value);
    }
    let mut warnings = Vec::new();
    let mut out: Vec<ClassSummary> = grouped
        .into_iter()
        .map(|(class, models)| {
            let models: BTreeMap<ModelTag, MeanCi> = models
                .into_iter()
                .map(|(tag, v)| {
                    if v.len() == 1 {
                        warnings.push(Warning::SingleSample {
                            class: class.to_string(),
                            model: tag.to_string(),
                        });
                    }
                    (tag, mean_ci95(&v))
                })
                .collect();
            let shape_means: Vec<f64> = per_shape[class]
                .values()
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
                .collect();
            let mut average = mean_ci95(&shape_means);
            average.mean = models.values().map(|m| m.mean).sum::<f64>() / models.len() as f64;
            ClassSummary {
                class: class.to_string(),
                metric,
                models,
                average,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.average
            .mean
            .total_cmp(&a.average.mean)
            .then(a.class.cmp(&b.class))
    });
    Ok((out, warnings))
}

/// Models ordered by descending overall mean of `metric`, ties by tag.
pub fn rank_models(scores: &[MetricScores], metric: Metric) -> Vec<(ModelTag, MeanCi)> {
    let mut by_model: BTreeMap<ModelTag, Vec<f64>> = BTreeMap::new();
    for s in scores {
        by_model.entry(s.model).or_default().push(s.get(metric));
    }
    let mut ranked: Vec<(ModelTag, MeanCi)> = by_model
        .into_iter()
        .map(|(t, v)| (t, mean_ci95(&v)))
        .collect();
    ranked.sort_by(|a, b| b.1.mean.total_cmp(&a.1.mean).then(a.0.cmp(&b.0)));
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(shape: &str, model: ModelTag, auc: f64) -> MetricScores {
        MetricScores {
            shape_id: shape.into(),
            model,
            auc,
            nss: 0.0,
            lcc: 0.0,
        }
    }

    #[test]
    fn two_sample_interval() {
        let ci = mean_ci95(&[0.6, 0.7]);
        assert!((ci.mean - 0.65).abs() < 1e-12);
        let expected = 12.706_204_736 * (0.005f64).sqrt() / 2f64.sqrt();
        assert!((ci.half_width - expected).abs() < 1e-6);
        assert!((ci.half_width - 0.635).abs() < 1e-3);
    }

    #[test]
    fn identical_scores_have_zero_width() {
        assert_eq!(mean_ci95(&[0.4, 0.4, 0.4]).half_width, 0.0);
    }

    #[test]
    fn classes_sorted_by_average() {
        let classes: BTreeMap<String, String> = [("a", "low"), ("b", "high"), ("c", "high")]
            .iter()
            .map(|(s, c)| (s.to_string(), c.to_string()))
            .collect();
        let scores = vec![
            score("a", ModelTag::LS, 0.5),
            score("a", ModelTag::RS, 0.4),
            score("b", ModelTag::LS, 0.9),
            score("b", ModelTag::RS, 0.5),
            score("c", ModelTag::LS, 0.8),
            score("c", ModelTag::RS, 0.6),
        ];
        let (summary, warnings) = aggregate_by_class(&scores, &classes, Metric::Auc).unwrap();
        assert_eq!(summary[0].class, "high");
        assert_eq!(summary[1].class, "low");
        assert!((summary[0].average.mean - 0.7).abs() < 1e-12);
        assert_eq!(warnings.len(), 2);
        let ranked = rank_models(&scores, Metric::Auc);
        assert_eq!(ranked[0].0, ModelTag::LS);
    }

    #[test]
    fn unknown_class_is_an_error() {
        let scores = vec![score("z", ModelTag::LS, 0.5)];
        assert!(matches!(
            aggregate_by_class(&scores, &BTreeMap::new(), Metric::Auc),
            Err(Error::UnknownClass(_))
        ));
    }
}
