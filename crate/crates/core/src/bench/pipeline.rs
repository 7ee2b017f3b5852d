//! Per-shape model evaluation and the scan dataset generator.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::RunConfig;
use super::manifest::{DatasetKind, DatasetManifest, ManifestShape};
use super::report::{count_warnings, BenchmarkReport, ModelResult, Scores, Status, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::evaluation::{
    histogram_match, human_performance_curve, reference_histogram, score_map, CurveShape,
    GroundTruth, HumanCurveConfig, HumanCurvePoint, ReferenceCdf,
};
use crate::geometry::{
    bounding_sphere, estimate_normals, orient_normals_mst, NeighborIndex, PointCloud, TriangleMesh,
};
use crate::io;
use crate::saliency::{
    compute_cs, compute_hs, compute_ls, compute_ms, compute_ps, compute_rs, min_max_normalize,
    selection_field, ModelOutput, ModelParams, ModelTag,
};
use crate::scanner::{reconstruct_partial_mesh, scan_all_views, transfer_ground_truth};
use crate::warning::Warning;

/// FNV-1a hash of a shape id, mixed into per-shape seeds.
fn id_hash(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn shape_seed(seed: u64, shape_id: &str) -> u64 {
    seed ^ id_hash(shape_id)
}

/// Point cloud with oriented normals for a shape. Watertight meshes use
/// area-weighted face normals; scans and meshes with unreferenced vertices
/// use PCA normals oriented along a minimum spanning tree.
pub fn oriented_cloud(
    mesh: &TriangleMesh,
    kind: DatasetKind,
    params: &ModelParams,
) -> Result<(PointCloud, Vec<Warning>)> {
    if kind == DatasetKind::Watertight {
        if let Some(cloud) = mesh.to_oriented_cloud() {
            return Ok((cloud, Vec::new()));
        }
    }
    let cloud = PointCloud::new(mesh.vertices.clone());
    let estimate = estimate_normals(&cloud, params.normal_k)?;
    let oriented = orient_normals_mst(&estimate.cloud, params.orient_k)?;
    Ok((oriented.cloud, estimate.warnings))
}

/// Runs one geometric model (LS, MS, CS, PS or RS) on a shape.
pub fn compute_model(
    tag: ModelTag,
    shape_id: &str,
    mesh: &TriangleMesh,
    cloud: &PointCloud,
    params: &ModelParams,
) -> Result<ModelOutput> {
    match tag {
        ModelTag::LS => compute_ls(shape_id, cloud, params),
        ModelTag::MS => compute_ms(shape_id, mesh, params),
        ModelTag::CS => compute_cs(shape_id, cloud, params),
        ModelTag::PS => compute_ps(shape_id, cloud, params),
        ModelTag::RS => Ok(ModelOutput {
            map: compute_rs(shape_id, cloud.len(), shape_seed(params.seed, shape_id))?,
            warnings: Vec::new(),
        }),
        ModelTag::HS | ModelTag::GS => Err(Error::InvalidParameter(format!(
            "{tag} is derived from human selections, not geometry"
        ))),
    }
}

/// A manifest shape with its geometry and ground truth loaded.
#[derive(Debug, Clone)]
pub struct LoadedShape {
    pub id: String,
    pub class: String,
    pub mesh: TriangleMesh,
    pub truth: GroundTruth,
    pub warnings: Vec<Warning>,
}

pub fn load_shape(
    manifest: &DatasetManifest,
    shape: &ManifestShape,
    params: &ModelParams,
) -> Result<LoadedShape> {
    let file = io::read_mesh(&manifest.resolve(&shape.mesh))?;
    let field = shape.field.as_ref().map(|f| manifest.resolve(f));
    let truth = io::load_ground_truth(
        &shape.id,
        &manifest.resolve(&shape.ground_truth),
        field.as_deref(),
        &file.mesh.vertices,
        params.hs_sigma,
    )?;
    Ok(LoadedShape {
        id: shape.id.clone(),
        class: shape.class.clone(),
        mesh: file.mesh.with_class(shape.class.clone()),
        truth,
        warnings: file.warnings,
    })
}

/// Reference CDF of the min-max normalized ground-truth fields.
pub fn ground_truth_reference(shapes: &[&LoadedShape], bins: usize) -> Result<ReferenceCdf> {
    let fields: Vec<Vec<f64>> = shapes
        .iter()
        .map(|s| min_max_normalize(&s.truth.field))
        .collect();
    reference_histogram(&fields, bins)
}

/// Predicted map and evaluation ground truth for the human baseline: a seeded
/// subset of participants predicts the remaining ones.
fn human_baseline(
    shape: &LoadedShape,
    params: &ModelParams,
) -> Result<Option<(ModelOutput, GroundTruth)>> {
    let count = shape.truth.participants.len();
    let n_p = params.hs_participants;
    if count <= n_p {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(shape_seed(
        params.seed,
        &shape.id,
    )));
    let (chosen, rest) = order.split_at(n_p);
    let out = compute_hs(
        &shape.id,
        &shape.mesh.vertices,
        &shape.truth.participants,
        chosen,
        params.hs_sigma,
    )?;
    let field = selection_field(
        &shape.mesh.vertices,
        &shape.truth.participants,
        rest,
        params.hs_sigma,
    )?;
    let participants = rest
        .iter()
        .map(|&p| shape.truth.participants[p].clone())
        .collect();
    let truth = GroundTruth::new(
        shape.id.clone(),
        field,
        participants,
        shape.mesh.vertex_count(),
    )?;
    Ok(Some((out, truth)))
}

fn evaluate_shape(
    shape: &LoadedShape,
    kind: DatasetKind,
    models: &[ModelTag],
    cfg: &RunConfig,
    reference: &ReferenceCdf,
    maps_dir: Option<&Path>,
) -> Vec<ModelResult> {
    let result = |model: ModelTag, status: Status, message: Option<String>| ModelResult {
        shape_id: shape.id.clone(),
        class: shape.class.clone(),
        model,
        status,
        message,
        scores: None,
        warnings: BTreeMap::new(),
    };
    let cloud = match oriented_cloud(&shape.mesh, kind, &cfg.params) {
        Ok(c) => c,
        Err(e) => {
            return models
                .iter()
                .map(|&m| {
                    result(
                        m,
                        Status::Failed,
                        Some(format!("normal estimation failed: {e}")),
                    )
                })
                .collect();
        }
    };
    models
        .iter()
        .map(|&model| {
            let mut warnings = cloud.1.clone();
            let computed = if model == ModelTag::HS {
                if kind == DatasetKind::Scans {
                    return ModelResult {
                        warnings: count_warnings(&[Warning::ModelSkipped {
                            shape: shape.id.clone(),
                            model: model.to_string(),
                            reason: "human baseline is not evaluated on scans".into(),
                        }]),
                        ..result(
                            model,
                            Status::Skipped,
                            Some("human baseline is not evaluated on scans".into()),
                        )
                    };
                }
                match human_baseline(shape, &cfg.params) {
                    Ok(Some((out, truth))) => Ok((out, truth)),
                    Ok(None) => {
                        return result(
                            model,
                            Status::Skipped,
                            Some("not enough participants to leave an evaluation group".into()),
                        )
                    }
                    Err(e) => Err(e),
                }
            } else {
                compute_model(model, &shape.id, &shape.mesh, &cloud.0, &cfg.params)
                    .map(|o| (o, shape.truth.clone()))
            };
            let scored = computed.and_then(|(out, truth)| {
                warnings.extend(out.warnings);
                let (matched, w) = histogram_match(&out.map, reference)?;
                warnings.extend(w);
                if let Some(dir) = maps_dir {
                    io::write_colored_ply(
                        &shape.mesh.vertices,
                        &shape.mesh.faces,
                        &matched.values,
                        &dir.join(format!("{}_{}.ply", shape.id, model)),
                    )?;
                }
                let (scores, w) = score_map(model, &matched.values, &truth, cfg.positives())?;
                warnings.extend(w);
                Ok(scores)
            });
            match scored {
                Ok(s) => ModelResult {
                    status: Status::Ok,
                    scores: Some(Scores {
                        auc: s.auc,
                        nss: s.nss,
                        lcc: s.lcc,
                    }),
                    warnings: count_warnings(&warnings),
                    ..result(model, Status::Ok, None)
                },
                Err(e) => ModelResult {
                    warnings: count_warnings(&warnings),
                    ..result(model, Status::Failed, Some(e.to_string()))
                },
            }
        })
        .collect()
}

/// Scores every requested model on every manifest shape and writes
/// `report.json` plus one class table per metric into `out_dir`. Shape and
/// model failures are recorded in the report rather than aborting the run.
pub fn run_benchmark(
    manifest: &DatasetManifest,
    models: &[ModelTag],
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<BenchmarkReport> {
    cfg.validate()?;
    if models.is_empty() {
        return Err(Error::InvalidParameter("no models requested".into()));
    }
    let mut models = models.to_vec();
    models.sort();
    models.dedup();
    if models.contains(&ModelTag::GS) {
        return Err(Error::InvalidParameter(
            "GS is the ground truth, not an evaluated model".into(),
        ));
    }
    let loaded: Vec<(ManifestShape, Result<LoadedShape>)> = manifest
        .shapes
        .par_iter()
        .map(|s| (s.clone(), load_shape(manifest, s, &cfg.params)))
        .collect();
    let ok: Vec<&LoadedShape> = loaded.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    let reference = if ok.is_empty() {
        None
    } else {
        Some(ground_truth_reference(&ok, cfg.bench.histogram_bins)?)
    };
    let maps_dir = cfg.bench.export_maps.then(|| out_dir.join("maps"));
    let mut per_shape: Vec<(String, Vec<ModelResult>)> = loaded
        .par_iter()
        .map(|(entry, shape)| {
            let results = match (shape, &reference) {
                (Ok(shape), Some(reference)) => evaluate_shape(
                    shape,
                    manifest.kind,
                    &models,
                    cfg,
                    reference,
                    maps_dir.as_deref(),
                ),
                (Err(e), _) => models
                    .iter()
                    .map(|&m| ModelResult {
                        shape_id: entry.id.clone(),
                        class: entry.class.clone(),
                        model: m,
                        status: Status::Failed,
                        message: Some(format!("loading failed: {e}")),
                        scores: None,
                        warnings: BTreeMap::new(),
                    })
                    .collect(),
                (Ok(_), None) => unreachable!("a loaded shape implies a reference"),
            };
            (entry.id.clone(), results)
        })
        .collect();
    per_shape.sort_by(|a, b| a.0.cmp(&b.0));
    let shape_warnings = loaded
        .iter()
        .filter_map(|(e, r)| {
            r.as_ref()
                .ok()
                .map(|s| (e.id.clone(), count_warnings(&s.warnings)))
        })
        .filter(|(_, w)| !w.is_empty())
        .collect();
    let shapes_scored = per_shape
        .iter()
        .filter(|(_, r)| r.iter().any(|m| m.status == Status::Ok))
        .count();
    let classes: BTreeMap<String, String> = manifest
        .shapes
        .iter()
        .map(|s| (s.id.clone(), s.class.clone()))
        .collect();
    let mut report = BenchmarkReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset_kind: manifest.kind,
        models,
        config: cfg.clone(),
        shapes_total: manifest.shapes.len(),
        shapes_scored,
        results: per_shape.into_iter().flat_map(|(_, r)| r).collect(),
        shape_warnings,
        class_summaries: BTreeMap::new(),
        ranking: BTreeMap::new(),
        wilcoxon: BTreeMap::new(),
        aggregate_warnings: Vec::new(),
    };
    report.summarize(&classes)?;
    report.write(out_dir)?;
    Ok(report)
}

/// The human performance curve over all loadable manifest shapes.
pub fn run_human_curve(
    manifest: &DatasetManifest,
    cfg: &RunConfig,
    curve: &HumanCurveConfig,
) -> Result<(Vec<HumanCurvePoint>, Vec<Warning>)> {
    let mut warnings = Vec::new();
    let mut shapes = Vec::new();
    for s in &manifest.shapes {
        match load_shape(manifest, s, &cfg.params) {
            Ok(l) => shapes.push(l),
            Err(e) => warnings.push(Warning::ShapeSkipped {
                shape: s.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    if shapes.is_empty() {
        return Err(Error::NoUsableShapes("no shape could be loaded".into()));
    }
    let refs: Vec<&LoadedShape> = shapes.iter().collect();
    let reference = ground_truth_reference(&refs, cfg.bench.histogram_bins)?;
    let inputs: Vec<CurveShape> = shapes
        .iter()
        .map(|s| CurveShape {
            points: &s.mesh.vertices,
            truth: &s.truth,
        })
        .collect();
    let (points, w) = human_performance_curve(&inputs, &reference, curve)?;
    warnings.extend(w);
    Ok((points, warnings))
}

/// The generated scan manifest with any warnings.
#[derive(Debug, Clone)]
pub struct ScanDataset {
    pub manifest: DatasetManifest,
    pub warnings: Vec<Warning>,
}

struct ScanEntry {
    shape: Option<ManifestShape>,
    warnings: Vec<Warning>,
}

fn scan_shape(
    manifest: &DatasetManifest,
    shape: &ManifestShape,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<ScanEntry>> {
    let base = load_shape(manifest, shape, &cfg.params)?;
    let sel = io::read_selections(
        &manifest.resolve(&shape.ground_truth),
        base.mesh.vertex_count(),
    )?;
    let radius = bounding_sphere(&base.mesh.vertices)?.radius;
    let mut entries = Vec::new();
    for rendered in scan_all_views(&base.mesh, &shape.id, &cfg.scan)? {
        let scan = rendered.scan;
        let id = scan.id();
        let mut warnings = rendered.warnings;
        if scan.cloud.len() <= cfg.params.normal_k {
            warnings.push(Warning::ShapeSkipped {
                shape: id,
                reason: format!("only {} scan points", scan.cloud.len()),
            });
            entries.push(ScanEntry {
                shape: None,
                warnings,
            });
            continue;
        }
        let estimate = estimate_normals(&scan.cloud, cfg.params.normal_k)?;
        let oriented = orient_normals_mst(&estimate.cloud, cfg.params.orient_k)?.cloud;
        let mut cloud = oriented;
        cloud.provenance = scan.cloud.provenance.clone();
        let faces = reconstruct_partial_mesh(&cloud, &cfg.triangulation())?.faces;
        let field = transfer_ground_truth(&base.truth.field, &base.mesh, &scan)?;

        let index = NeighborIndex::build(&cloud.points)?;
        let limit = cfg.bench.fixation_radius * radius;
        let mut ids = Vec::new();
        let mut participants = Vec::new();
        for (pid, picks) in sel.participant_ids.iter().zip(&sel.participants) {
            let mut moved: Vec<usize> = picks
                .iter()
                .filter_map(|&v| {
                    let (i, d) = index.nearest(&base.mesh.vertices[v]);
                    (d <= limit).then_some(i)
                })
                .collect();
            moved.sort_unstable();
            moved.dedup();
            if !moved.is_empty() {
                ids.push(pid.clone());
                participants.push(moved);
            }
        }
        let mesh_file = format!("{id}.ply");
        let gt_file = format!("{id}_gt.csv");
        let field_file = format!("{id}_field.txt");
        io::write_scan_ply(&cloud, &faces, &out_dir.join("scans").join(&mesh_file))?;
        io::write_selections(&out_dir.join("scans").join(&gt_file), &ids, &participants)?;
        io::write_field(&out_dir.join("scans").join(&field_file), &field)?;
        entries.push(ScanEntry {
            shape: Some(ManifestShape {
                id,
                mesh: Path::new("scans").join(mesh_file),
                ground_truth: Path::new("scans").join(gt_file),
                field: Some(Path::new("scans").join(field_file)),
                class: shape.class.clone(),
            }),
            warnings: warnings.into_iter().chain(estimate.warnings).collect(),
        });
    }
    Ok(entries)
}

/// Renders twelve scans of every watertight shape, transfers the ground truth
/// and writes the scans with a new manifest (`manifest.json`) into `out_dir`.
pub fn generate_scan_dataset(
    manifest: &DatasetManifest,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<ScanDataset> {
    cfg.validate()?;
    if manifest.kind != DatasetKind::Watertight {
        return Err(Error::InvalidParameter(
            "scans can only be generated from watertight meshes".into(),
        ));
    }
    let per_shape: Vec<(String, Result<Vec<ScanEntry>>)> = manifest
        .shapes
        .par_iter()
        .map(|s| (s.id.clone(), scan_shape(manifest, s, cfg, out_dir)))
        .collect();
    let mut shapes = Vec::new();
    let mut warnings = Vec::new();
    for (id, r) in per_shape {
        match r {
            Ok(entries) => {
                for e in entries {
                    warnings.extend(e.warnings);
                    shapes.extend(e.shape);
                }
            }
            Err(e) => warnings.push(Warning::ShapeSkipped {
                shape: id,
                reason: e.to_string(),
            }),
        }
    }
    let scans = DatasetManifest {
        kind: DatasetKind::Scans,
        shapes,
        base_dir: out_dir.to_path_buf(),
    };
    scans.save(&out_dir.join("manifest.json"))?;
    Ok(ScanDataset {
        manifest: scans,
        warnings,
    })
}
