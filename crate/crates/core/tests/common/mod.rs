//! Fixtures shared by the integration tests.
#![allow(dead_code)]

pub mod oracle;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salbench::bench::{DatasetKind, DatasetManifest, ManifestShape};
use salbench::geometry::{TriangleMesh, Vector};
use salbench::io;
use salbench::shapes::{bumped_sphere, dented_cube, icosphere, FeatureShape};

/// Ten shapes with planted features: five dented cubes and five bumped spheres.
pub fn feature_suite() -> Vec<(String, String, FeatureShape)> {
    let mut out = Vec::new();
    for i in 0..5 {
        let shape = dented_cube(12, [0, 3, 5, 6, 7][i], 0.7, 0.35 + 0.05 * i as f64);
        out.push((format!("cube{i}"), "cube".to_string(), shape));
    }
    let axes = [
        Vector::new(0.0, 0.0, 1.0),
        Vector::new(1.0, 0.0, 0.0),
        Vector::new(0.0, -1.0, 0.3),
        Vector::new(-0.5, 0.5, -0.7),
        Vector::new(0.2, 1.0, 0.0),
    ];
    for i in 0..5 {
        let bumps: Vec<Vector> = axes
            .iter()
            .cycle()
            .skip(i)
            .take(1 + i % 2)
            .copied()
            .collect();
        let shape = bumped_sphere(3, &bumps, 0.35, 0.15);
        out.push((format!("sphere{i}"), "sphere".to_string(), shape));
    }
    out
}

/// `participants` selection sets of `per_participant` vertices drawn from `pool`.
pub fn planted_selections(
    pool: &[usize],
    participants: usize,
    per_participant: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..participants)
        .map(|_| {
            let mut picks: Vec<usize> = pool
                .choose_multiple(&mut rng, per_participant.min(pool.len()))
                .copied()
                .collect();
            picks.sort_unstable();
            picks
        })
        .collect()
}

/// Writes meshes and selection files plus `manifest.json` under `dir`.
pub fn write_dataset(
    dir: &Path,
    shapes: &[(String, String, TriangleMesh, Vec<Vec<usize>>)],
) -> DatasetManifest {
    let mut entries = Vec::new();
    for (id, class, mesh, selections) in shapes {
        let mesh_file = format!("{id}.off");
        let gt_file = format!("{id}_gt.csv");
        io::write_off(mesh, &dir.join(&mesh_file)).unwrap();
        let ids: Vec<String> = (0..selections.len()).map(|p| format!("p{p}")).collect();
        io::write_selections(&dir.join(&gt_file), &ids, selections).unwrap();
        entries.push(ManifestShape {
            id: id.clone(),
            mesh: mesh_file.into(),
            ground_truth: gt_file.into(),
            field: None,
            class: class.clone(),
        });
    }
    let manifest = DatasetManifest {
        kind: DatasetKind::Watertight,
        shapes: entries,
        base_dir: dir.to_path_buf(),
    };
    manifest.save(&dir.join("manifest.json")).unwrap();
    DatasetManifest::load(&dir.join("manifest.json")).unwrap()
}

/// The planted-feature suite written as a dataset.
pub fn write_feature_dataset(dir: &Path) -> DatasetManifest {
    let shapes: Vec<_> = feature_suite()
        .into_iter()
        .enumerate()
        .map(|(i, (id, class, shape))| {
            let sel = planted_selections(&shape.feature, 8, 4, i as u64);
            (id, class, shape.mesh, sel)
        })
        .collect();
    write_dataset(dir, &shapes)
}

/// `count` icospheres with random selections, spread over two classes.
pub fn write_random_dataset(
    dir: &Path,
    count: usize,
    subdivisions: usize,
    seed: u64,
) -> DatasetManifest {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes: Vec<_> = (0..count)
        .map(|i| {
            let mesh = icosphere(subdivisions);
            let n = mesh.vertex_count();
            let pool: Vec<usize> = (0..n).collect();
            let sel = planted_selections(&pool, 6, 5, rng.gen());
            (format!("shape{i}"), format!("class{}", i % 2), mesh, sel)
        })
        .collect();
    write_dataset(dir, &shapes)
}
