//! Dataset manifests, run configuration and the end-to-end benchmark.

mod config;
mod manifest;
mod pipeline;
mod report;

pub use config::{BenchOptions, RunConfig};
pub use manifest::{DatasetKind, DatasetManifest, ManifestShape};
pub use pipeline::{
    compute_model, generate_scan_dataset, ground_truth_reference, load_shape, oriented_cloud,
    run_benchmark, run_human_curve, shape_seed, LoadedShape, ScanDataset,
};
pub use report::{
    compare_results, pairwise_tests, read_report_results, BenchmarkReport, ModelResult,
    PairwiseTests, RankEntry, Scores, Status, SCHEMA_VERSION,
};
