//! Acceptance criteria, one PASS / FAIL / SKIP line each.
//!
//! Criterion 9 runs only when `SALBENCH_SHREC_MANIFEST` names a watertight
//! dataset manifest.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::oracle::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salbench::bench::{run_benchmark, DatasetManifest, ModelResult, RunConfig, Status};
use salbench::descriptor::{compute_fpfh, darboux_angles, fpfh, spfh, DescriptorConfig};
use salbench::evaluation::{
    histogram_match, lcc, nss, reference_histogram, roc_auc, wilcoxon_rank_sum, Metric,
};
use salbench::geometry::{NeighborIndex, Point, TriangleMesh};
use salbench::saliency::{pca_saliency, ModelTag, SaliencyMap};
use salbench::scanner::{render_scan, scan_all_views, Camera, ScanConfig, VIEW_COUNT};
use salbench::shapes::icosphere;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;
type Criterion = Box<dyn FnOnce() -> Result<Option<String>, String>>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn auc_of(results: &[ModelResult], model: ModelTag) -> Vec<f64> {
    results
        .iter()
        .filter(|r| r.model == model && r.status == Status::Ok)
        .filter_map(|r| r.scores.map(|s| s.auc))
        .collect()
}

fn random_baseline() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = common::write_random_dataset(dir.path(), 5, 3, 100);
    let mut total = 0.0;
    for seed in 0..100 {
        let mut cfg = RunConfig::default();
        cfg.params.seed = seed;
        let report = run_benchmark(&manifest, &[ModelTag::RS], &cfg, &dir.path().join("out"))
            .map_err(|e| e.to_string())?;
        total += report.ranking[&Metric::Auc][0].score.mean;
    }
    let avg = total / 100.0;
    ensure((0.48..=0.52).contains(&avg), || {
        format!("mean RS AUC {avg:.4}")
    })?;
    Ok(format!("mean RS AUC {avg:.4} over 100 seeds"))
}

fn metric_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let n = rng.gen_range(2..=60);
        let (values, positives) = random_instance(&mut rng, n, trial % 2 == 0);
        let auc = roc_auc(&values, &positives).map_err(|e| e.to_string())?;
        worst = worst.max((auc - pair_auc(&values, &positives)).abs());
    }
    ensure(worst < 1e-12, || format!("AUC deviates by {worst:e}"))?;
    let (score, _) = nss(&[0.0, 1.0, 2.0, 3.0], &[vec![3]]).map_err(|e| e.to_string())?;
    ensure((score - 1.3416).abs() < 1e-4, || format!("NSS {score}"))?;
    let x = [0.1, 0.5, 0.2, 0.9, 0.4];
    let flipped: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
    let cases = [
        lcc(&x, &x).map_err(|e| e.to_string())?,
        lcc(&x, &[0.7; 5]).map_err(|e| e.to_string())?,
        lcc(&x, &flipped).map_err(|e| e.to_string())?,
    ];
    ensure(
        (cases[0] - 1.0).abs() < 1e-12 && cases[1] == 0.0 && (cases[2] - 1.0).abs() < 1e-12,
        || format!("LCC cases {cases:?}"),
    )?;
    Ok(format!("max AUC deviation {worst:.1e}, NSS {score:.4}"))
}

fn wilcoxon_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..200 {
        let n = rng.gen_range(1..=9);
        let m = rng.gen_range(1..=10 - n);
        let draw = |rng: &mut ChaCha8Rng, k: usize| -> Vec<f64> {
            (0..k)
                .map(|_| {
                    if trial % 2 == 0 {
                        rng.gen_range(0..4) as f64
                    } else {
                        rng.gen()
                    }
                })
                .collect()
        };
        let a = draw(&mut rng, n);
        let b = draw(&mut rng, m);
        let test = wilcoxon_rank_sum(&a, &b).map_err(|e| e.to_string())?;
        let expected = if a.iter().chain(&b).all(|v| *v == a[0]) {
            1.0
        } else {
            enumerated_p(&a, &b)
        };
        ensure((test.p_value - expected).abs() < 1e-12, || {
            format!("n={n} m={m}: {} vs enumerated {expected}", test.p_value)
        })?;
    }
    let t = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[10.0, 11.0, 12.0]).map_err(|e| e.to_string())?;
    ensure((t.p_value - 0.1).abs() < 1e-12, || {
        format!("separated triples p {}", t.p_value)
    })?;
    Ok("200 instances match enumeration, separated triples p = 0.1".into())
}

fn fpfh_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let pi = Point::new(rng.gen(), rng.gen(), rng.gen());
        let pj = Point::new(rng.gen(), rng.gen(), rng.gen());
        let (ni, nj) = (random_unit(&mut rng), random_unit(&mut rng));
        let t = darboux_angles(&pi, &ni, &pj, &nj).map_err(|e| e.to_string())?;
        let e = oracle_angles(arr(&pi.coords), arr(&ni), arr(&pj.coords), arr(&nj));
        let d = (t.alpha - e[0])
            .abs()
            .max((t.phi - e[1]).abs())
            .max((t.theta - e[2]).abs());
        ensure(d < 1e-12, || format!("angle triple deviates by {d:e}"))?;
    }
    let cfg = DescriptorConfig::default();
    let close = |a: &[f64; 33], b: &[f64; 33]| {
        (0..33).all(|k| (a[k] - b[k]).abs() <= 1e-9 * (1.0 + b[k].abs()))
    };
    for trial in 0..50 {
        let n = 10 + trial * 90 / 49;
        let cloud = random_cloud(&mut rng, n);
        let r = rng.gen_range(0.3..0.8);
        let index = NeighborIndex::build(&cloud.points).map_err(|e| e.to_string())?;
        let set = compute_fpfh(&cloud, &index, r, &cfg).map_err(|e| e.to_string())?;
        for i in 0..n {
            let (s, _) = spfh(i, &cloud, &index, r, &cfg).map_err(|e| e.to_string())?;
            let (f, _) = fpfh(i, &cloud, &index, r, &cfg).map_err(|e| e.to_string())?;
            let expected = oracle_fpfh(&cloud, i, r);
            ensure(close(&s.0, &oracle_spfh(&cloud, i, r)), || {
                format!("SPFH mismatch, cloud {trial} point {i}")
            })?;
            ensure(
                close(&f.0, &expected) && close(&set.descriptors[i].0, &expected),
                || format!("FPFH mismatch, cloud {trial} point {i}"),
            )?;
        }
    }
    Ok("1000 angle triples and 50 clouds match".into())
}

fn ps_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let rows: Vec<_> = (0..100).map(|_| random_descriptor(&mut rng)).collect();
        worst = worst.max(max_abs_diff(
            &pca_saliency(&rows),
            &covariance_projection(&rows),
        ));
    }
    ensure(worst < 1e-8, || format!("deviation {worst:e}"))?;
    let same = vec![random_descriptor(&mut rng); 100];
    ensure(pca_saliency(&same).iter().all(|v| *v == 0.0), || {
        "zero variance gave nonzero map".into()
    })?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn two_squares() -> TriangleMesh {
    let square = |h: f64, z: f64| {
        [
            Point::new(-h, -h, z),
            Point::new(h, -h, z),
            Point::new(h, h, z),
            Point::new(-h, h, z),
        ]
    };
    let vertices = [square(1.0, 0.0), square(0.5, -1.0)].concat();
    let faces = vec![[0, 1, 2], [0, 2, 3], [4, 5, 6], [4, 6, 7]];
    TriangleMesh::new(vertices, faces).expect("valid squares")
}

fn scanner_geometry() -> Check {
    let cfg = ScanConfig {
        image_width: 128,
        image_height: 128,
        ..Default::default()
    };
    let sphere = icosphere(4);
    let scans = scan_all_views(&sphere, "sphere", &cfg).map_err(|e| e.to_string())?;
    ensure(scans.len() == VIEW_COUNT, || {
        format!("{} scans", scans.len())
    })?;
    let mut worst_radius: f64 = 0.0;
    let mut worst_provenance: f64 = 0.0;
    for s in &scans {
        let prov = s
            .scan
            .cloud
            .provenance
            .as_ref()
            .ok_or("missing provenance")?;
        for (p, pr) in s.scan.cloud.points.iter().zip(prov) {
            worst_radius = worst_radius.max(((p - Point::origin()).norm() - 1.0).abs());
            worst_provenance =
                worst_provenance.max((sphere.interpolate(pr.triangle, pr.barycentric) - p).norm());
        }
    }
    ensure(worst_radius < 0.015, || {
        format!("radius deviation {worst_radius}")
    })?;
    ensure(worst_provenance < 1e-6, || {
        format!("provenance error {worst_provenance:e}")
    })?;

    let squares = two_squares();
    let camera = Camera::looking_at(Point::new(0.0, 0.0, 3.0), Point::origin());
    let narrow = ScanConfig {
        fov_degrees: 30.0,
        ..cfg
    };
    let scan = render_scan(&squares, &camera, &narrow, "squares", 0)
        .map_err(|e| e.to_string())?
        .scan;
    ensure(!scan.cloud.is_empty(), || "occlusion scan is empty".into())?;
    ensure(scan.cloud.points.iter().all(|p| p.z.abs() < 1e-12), || {
        "far square visible".into()
    })?;
    Ok(format!(
        "radius deviation {worst_radius:.4}, provenance error {worst_provenance:.1e}, {} near-plane points",
        scan.cloud.len()
    ))
}

fn histogram_matching() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_ks: f64 = 0.0;
    let mut worst_auc: f64 = 0.0;
    let mut tie_free = 0;
    for _ in 0..50 {
        let fields: Vec<Vec<f64>> = (0..3).map(|_| random_field(&mut rng, 400)).collect();
        let reference = reference_histogram(&fields, 256).map_err(|e| e.to_string())?;
        let values: Vec<f64> = (0..2000).map(|_| rng.gen()).collect();
        let map = SaliencyMap {
            shape_id: "m".into(),
            model: ModelTag::RS,
            values: values.clone(),
        };
        let (matched, _) = histogram_match(&map, &reference).map_err(|e| e.to_string())?;
        worst_ks = worst_ks.max(ks_distance(&matched.values, &reference));
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        ensure(
            order
                .windows(2)
                .all(|w| matched.values[w[0]] <= matched.values[w[1]]),
            || "rank order changed".into(),
        )?;
        if !matched_has_ties(&matched.values) {
            tie_free += 1;
            let positives: Vec<usize> = (0..values.len()).filter(|i| i % 7 == 0).collect();
            let before = roc_auc(&values, &positives).map_err(|e| e.to_string())?;
            let after = roc_auc(&matched.values, &positives).map_err(|e| e.to_string())?;
            worst_auc = worst_auc.max((before - after).abs());
        }
    }
    ensure(worst_ks < 2.0 / 256.0, || format!("KS {worst_ks}"))?;
    ensure(worst_auc < 1e-9, || format!("AUC change {worst_auc:e}"))?;
    ensure(tie_free > 0, || "no tie-free matched map".into())?;
    Ok(format!(
        "max KS {worst_ks:.5}, max AUC change {worst_auc:.1e} over {tie_free} tie-free maps"
    ))
}

/// Descriptor radii large enough to span several vertex rings on the suite meshes.
fn feature_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.params.r_low = 0.15;
    cfg.params.r_high = 0.5;
    cfg.params.cs_radius = 0.2;
    cfg.params.ps_radius = 0.2;
    cfg
}

fn model_ordering() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = common::write_feature_dataset(dir.path());
    let models = [ModelTag::LS, ModelTag::CS, ModelTag::PS, ModelTag::RS];
    let report = run_benchmark(
        &manifest,
        &models,
        &feature_config(),
        &dir.path().join("out"),
    )
    .map_err(|e| e.to_string())?;
    let rs = auc_of(&report.results, ModelTag::RS);
    ensure(rs.len() == 10, || format!("{} RS scores", rs.len()))?;
    let mut lines = vec![format!("RS {:.3}", mean(&rs))];
    for model in [ModelTag::LS, ModelTag::CS, ModelTag::PS] {
        let auc = auc_of(&report.results, model);
        ensure(auc.len() == 10, || format!("{} {model} scores", auc.len()))?;
        let p = wilcoxon_rank_sum(&auc, &rs)
            .map_err(|e| e.to_string())?
            .p_value;
        lines.push(format!("{model} {:.3} (p {p:.1e})", mean(&auc)));
        ensure(mean(&auc) > mean(&rs) + 0.1 && p < 0.05, || {
            lines.join(", ")
        })?;
    }
    Ok(lines.join(", "))
}

fn dataset_trend() -> Result<Option<String>, String> {
    let Ok(path) = std::env::var("SALBENCH_SHREC_MANIFEST") else {
        return Ok(None);
    };
    let mut manifest = DatasetManifest::load(Path::new(&path)).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    manifest.shapes.shuffle(&mut rng);
    manifest.shapes.truncate(40);
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = run_benchmark(
        &manifest,
        &ModelTag::EVALUATED,
        &RunConfig::default(),
        out.path(),
    )
    .map_err(|e| e.to_string())?;
    let means: Vec<(ModelTag, f64)> = ModelTag::EVALUATED
        .iter()
        .map(|&m| (m, mean(&auc_of(&report.results, m))))
        .collect();
    let summary = means
        .iter()
        .map(|(m, v)| format!("{m} {v:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(means.iter().all(|(_, v)| *v > 0.5), || summary.clone())?;
    let ls = means[0].1;
    let rivals = [ModelTag::MS, ModelTag::PS, ModelTag::CS];
    ensure(
        means
            .iter()
            .filter(|(m, _)| rivals.contains(m))
            .all(|(_, v)| ls >= v - 0.02),
        || summary.clone(),
    )?;
    Ok(Some(summary))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = common::write_random_dataset(dir.path(), 3, 3, 10);
    let mut cfg = feature_config();
    cfg.params.seed = 42;
    cfg.params.hs_participants = 2;
    let mut reports = Vec::new();
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        run_benchmark(&manifest, &ModelTag::EVALUATED, &cfg, &out).map_err(|e| e.to_string())?;
        reports.push(std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?);
    }
    ensure(reports[0] == reports[1], || "reports differ".into())?;
    Ok(format!("{} identical bytes", reports[0].len()))
}

fn run(f: impl FnOnce() -> Result<Option<String>, String>) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(Some(detail))) => Outcome::Pass(detail),
        Ok(Ok(None)) => Outcome::Skip("SALBENCH_SHREC_MANIFEST not set".into()),
        Ok(Err(detail)) => Outcome::Fail(detail),
        Err(_) => Outcome::Fail("panicked".into()),
    }
}

fn main() -> ExitCode {
    let always = |f: fn() -> Check| move || f().map(Some);
    let criteria: Vec<(u32, Duration, Criterion)> = vec![
        (
            1,
            Duration::from_secs(60),
            Box::new(always(random_baseline)),
        ),
        (2, Duration::from_secs(10), Box::new(always(metric_oracles))),
        (
            3,
            Duration::from_secs(30),
            Box::new(always(wilcoxon_exactness)),
        ),
        (
            4,
            Duration::from_secs(30),
            Box::new(always(fpfh_correctness)),
        ),
        (5, Duration::from_secs(10), Box::new(always(ps_equivalence))),
        (
            6,
            Duration::from_secs(60),
            Box::new(always(scanner_geometry)),
        ),
        (
            7,
            Duration::from_secs(30),
            Box::new(always(histogram_matching)),
        ),
        (
            8,
            Duration::from_secs(600),
            Box::new(always(model_ordering)),
        ),
        (9, Duration::from_secs(7200), Box::new(dataset_trend)),
        (10, Duration::from_secs(300), Box::new(always(determinism))),
    ];
    let mut failed = 0;
    for (id, budget, check) in criteria {
        let start = Instant::now();
        let outcome = run(check);
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Outcome::Pass(d) if elapsed > budget => {
                Outcome::Fail(format!("{d}; took {elapsed:.1?}, budget {budget:?}"))
            }
            other => other,
        };
        match outcome {
            Outcome::Pass(d) => println!("criterion {id}: PASS ({d}; {elapsed:.1?})"),
            Outcome::Skip(d) => println!("criterion {id}: SKIP ({d})"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("criterion {id}: FAIL ({d}; {elapsed:.1?})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
