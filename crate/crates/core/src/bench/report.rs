//! Benchmark report and its CSV tables.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::manifest::DatasetKind;
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate_by_class, rank_models, wilcoxon_rank_sum, ClassSummary, MeanCi, Metric, MetricScores,
};
use crate::saliency::ModelTag;
use crate::warning::Warning;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub auc: f64,
    pub nss: f64,
    pub lcc: f64,
}

/// Outcome of one model on one shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub shape_id: String,
    pub class: String,
    pub model: ModelTag,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
    /// Warning counts by kind.
    #[serde(default)]
    pub warnings: BTreeMap<String, usize>,
}

impl ModelResult {
    pub fn metric_scores(&self) -> Option<MetricScores> {
        self.scores.map(|s| MetricScores {
            shape_id: self.shape_id.clone(),
            model: self.model,
            auc: s.auc,
            nss: s.nss,
            lcc: s.lcc,
        })
    }
}

pub(crate) fn count_warnings(warnings: &[Warning]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for w in warnings {
        *counts.entry(w.kind().to_string()).or_default() += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry {
    pub model: ModelTag,
    #[serde(flatten)]
    pub score: MeanCi,
}

/// Two-sided rank-sum p-values between the per-shape scores of each model
/// pair, rows and columns in ranking order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseTests {
    pub models: Vec<ModelTag>,
    pub p_values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub dataset_kind: DatasetKind,
    pub models: Vec<ModelTag>,
    pub config: RunConfig,
    pub shapes_total: usize,
    /// Shapes with at least one scored model.
    pub shapes_scored: usize,
    /// One entry per shape and requested model, ordered by shape id then model.
    pub results: Vec<ModelResult>,
    /// Load-time warning counts per shape.
    pub shape_warnings: BTreeMap<String, BTreeMap<String, usize>>,
    pub class_summaries: BTreeMap<Metric, Vec<ClassSummary>>,
    pub ranking: BTreeMap<Metric, Vec<RankEntry>>,
    pub wilcoxon: BTreeMap<Metric, PairwiseTests>,
    pub aggregate_warnings: Vec<Warning>,
}

pub fn pairwise_tests(
    scores: &[MetricScores],
    models: &[ModelTag],
    metric: Metric,
) -> Result<PairwiseTests> {
    let samples: Vec<Vec<f64>> = models
        .iter()
        .map(|m| {
            scores
                .iter()
                .filter(|s| s.model == *m)
                .map(|s| s.get(metric))
                .collect()
        })
        .collect();
    let k = models.len();
    let mut p_values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let p = wilcoxon_rank_sum(&samples[i], &samples[j])?.p_value;
            p_values[i][j] = p;
            p_values[j][i] = p;
        }
    }
    Ok(PairwiseTests {
        models: models.to_vec(),
        p_values,
    })
}

#[derive(Deserialize)]
struct SavedResults {
    results: Vec<ModelResult>,
}

/// Per-shape results of a previously written `report.json`.
pub fn read_report_results(path: &Path) -> Result<Vec<ModelResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let saved: SavedResults = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    Ok(saved.results)
}

/// Pairwise rank-sum tests for every metric over the scored results, models
/// ordered as given.
pub fn compare_results(results: &[ModelResult]) -> Result<BTreeMap<Metric, PairwiseTests>> {
    let scores: Vec<MetricScores> = results
        .iter()
        .filter_map(ModelResult::metric_scores)
        .collect();
    let mut models: Vec<ModelTag> = scores.iter().map(|s| s.model).collect();
    models.sort();
    models.dedup();
    if models.len() < 2 {
        return Err(Error::NoUsableShapes(
            "fewer than two models have scores".into(),
        ));
    }
    Metric::ALL
        .into_iter()
        .map(|m| Ok((m, pairwise_tests(&scores, &models, m)?)))
        .collect()
}

impl BenchmarkReport {
    pub fn scores(&self) -> Vec<MetricScores> {
        self.results
            .iter()
            .filter_map(ModelResult::metric_scores)
            .collect()
    }

    /// Fills the class summaries, rankings and pairwise tests from `results`.
    pub(crate) fn summarize(&mut self, classes: &BTreeMap<String, String>) -> Result<()> {
        let scores = self.scores();
        for metric in Metric::ALL {
            if scores.is_empty() {
                continue;
            }
            let (summary, warnings) = aggregate_by_class(&scores, classes, metric)?;
            if metric == Metric::Auc {
                self.aggregate_warnings.extend(warnings);
            }
            self.class_summaries.insert(metric, summary);
            let ranked = rank_models(&scores, metric);
            let order: Vec<ModelTag> = ranked.iter().map(|r| r.0).collect();
            self.ranking.insert(
                metric,
                ranked
                    .into_iter()
                    .map(|(model, score)| RankEntry { model, score })
                    .collect(),
            );
            self.wilcoxon
                .insert(metric, pairwise_tests(&scores, &order, metric)?);
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// `class,<M>,<M>_ci95,...,avg,avg_ci95` with models in ranking order.
    pub fn class_csv(&self, metric: Metric) -> String {
        let order: Vec<ModelTag> = self
            .ranking
            .get(&metric)
            .map(|r| r.iter().map(|e| e.model).collect())
            .unwrap_or_default();
        let mut out = String::from("class");
        for m in &order {
            out.push_str(&format!(",{m},{m}_ci95"));
        }
        out.push_str(",avg,avg_ci95\n");
        for summary in self.class_summaries.get(&metric).into_iter().flatten() {
            out.push_str(&summary.class);
            for m in &order {
                match summary.models.get(m) {
                    Some(ci) => out.push_str(&format!(",{:.4},{:.4}", ci.mean, ci.half_width)),
                    None => out.push_str(",,"),
                }
            }
            out.push_str(&format!(
                ",{:.4},{:.4}\n",
                summary.average.mean, summary.average.half_width
            ));
        }
        out
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        crate::io::write_text(&out_dir.join("report.json"), &self.to_json()?)?;
        for metric in Metric::ALL {
            crate::io::write_text(
                &out_dir.join(format!("class_{metric}.csv")),
                &self.class_csv(metric),
            )?;
        }
        Ok(())
    }
}
