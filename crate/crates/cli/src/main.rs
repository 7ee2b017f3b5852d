use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use salbench::bench::{
    compare_results, compute_model, generate_scan_dataset, oriented_cloud, read_report_results,
    run_benchmark, run_human_curve, DatasetKind, DatasetManifest, RunConfig,
};
use salbench::evaluation::HumanCurveConfig;
use salbench::io;
use salbench::saliency::ModelTag;
use salbench::{Error, Warning};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_ALL_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "salbench",
    version,
    about = "Surface saliency models and benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one model's saliency map on a mesh.
    Compute {
        #[arg(long)]
        model: ModelTag,
        #[arg(long)]
        mesh: PathBuf,
        /// Flat TOML or JSON parameter file.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Output path; `.ply` writes a colored mesh, anything else one value per line.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render twelve range scans per watertight mesh and write a scan manifest.
    Scan {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score models against the ground truth and write the report.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated model tags.
        #[arg(long, value_delimiter = ',', required = true)]
        models: Vec<ModelTag>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Use all-pairs LS distinctiveness on every shape.
        #[arg(long)]
        exact_ls: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Human performance as a function of the predictor group size.
    HumanCurve {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 11)]
        np_max: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the curve as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise significance tests between the models of a report.
    Compare {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = Test::Wilcoxon)]
        test: Test,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Test {
    Wilcoxon,
}

enum Failure {
    Usage(String),
    Data(String),
    AllFailed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Io { .. } => Failure::Data(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }),
        None => Ok(RunConfig::default()),
    }
}

fn load_manifest(path: &Path) -> Result<DatasetManifest, Failure> {
    let manifest = DatasetManifest::load(path).map_err(|e| Failure::Data(e.to_string()))?;
    manifest
        .validate()
        .map_err(|e| Failure::Data(e.to_string()))?;
    Ok(manifest)
}

fn report_warnings(warnings: &[Warning]) {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for w in warnings {
        *counts.entry(w.kind()).or_default() += 1;
    }
    for (kind, count) in counts {
        eprintln!("warning: {kind} x{count}");
    }
}

fn compute(
    model: ModelTag,
    mesh: &Path,
    params: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), Failure> {
    if matches!(model, ModelTag::HS | ModelTag::GS) {
        return Err(Failure::Usage(format!(
            "{model} needs ground truth; use `bench`"
        )));
    }
    let mut cfg = load_config(params)?;
    if let Some(seed) = seed {
        cfg.params.seed = seed;
    }
    cfg.validate()?;
    let file = io::read_mesh(mesh)?;
    let shape_id = mesh
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (cloud, mut warnings) = oriented_cloud(&file.mesh, DatasetKind::Watertight, &cfg.params)?;
    let output = compute_model(model, &shape_id, &file.mesh, &cloud, &cfg.params)?;
    warnings.extend(file.warnings);
    warnings.extend(output.warnings);
    report_warnings(&warnings);
    let is_ply = out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    if is_ply {
        io::export_colored_map(&file.mesh.vertices, &file.mesh.faces, &output.map, out)?;
    } else {
        io::write_field(out, &output.map.values)?;
    }
    Ok(())
}

fn scan(manifest: &Path, out: &Path, config: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let manifest = load_manifest(manifest)?;
    let dataset = generate_scan_dataset(&manifest, &cfg, out)?;
    report_warnings(&dataset.warnings);
    println!(
        "{} scans from {} meshes written to {}",
        dataset.manifest.shapes.len(),
        manifest.shapes.len(),
        out.join("manifest.json").display()
    );
    if dataset.manifest.shapes.is_empty() {
        return Err(Failure::AllFailed("no scan could be generated".into()));
    }
    Ok(())
}

fn bench(
    manifest: &Path,
    models: &[ModelTag],
    out: &Path,
    seed: Option<u64>,
    exact_ls: bool,
    config: Option<&Path>,
) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.params.seed = seed;
    }
    cfg.params.ls_exact |= exact_ls;
    let manifest = load_manifest(manifest)?;
    let report = run_benchmark(&manifest, models, &cfg, out)?;
    for (metric, ranking) in &report.ranking {
        let line: Vec<String> = ranking
            .iter()
            .map(|r| format!("{} {:.4}±{:.4}", r.model, r.score.mean, r.score.half_width))
            .collect();
        println!("{metric}: {}", line.join(", "));
    }
    for r in report.results.iter().filter(|r| r.message.is_some()) {
        eprintln!(
            "{} {} {:?}: {}",
            r.shape_id,
            r.model,
            r.status,
            r.message.as_deref().unwrap_or_default()
        );
    }
    if report.shapes_scored == 0 {
        return Err(Failure::AllFailed(format!(
            "all {} shapes failed",
            report.shapes_total
        )));
    }
    Ok(())
}

fn human_curve(
    manifest: &Path,
    np_max: usize,
    trials: usize,
    seed: u64,
    config: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let manifest = load_manifest(manifest)?;
    let curve = HumanCurveConfig {
        max_participants: np_max,
        trials,
        seed,
        sigma: cfg.params.hs_sigma,
        self_prediction: false,
    };
    let (points, warnings) = run_human_curve(&manifest, &cfg, &curve)?;
    report_warnings(&warnings);
    let mut csv = String::from("participants,auc,nss,lcc,shapes\n");
    for p in &points {
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{:.6},{}",
            p.participants, p.auc, p.nss, p.lcc, p.shapes
        );
    }
    print!("{csv}");
    if let Some(out) = out {
        io::write_text(out, &csv)?;
    }
    Ok(())
}

fn compare(report: &Path, _test: Test) -> Result<(), Failure> {
    let results = read_report_results(report)?;
    let tests = compare_results(&results)?;
    for (metric, table) in tests {
        println!("{metric}");
        let header: Vec<String> = table.models.iter().map(|m| format!("{m:>10}")).collect();
        println!("{:>4}{}", "", header.join(""));
        for (m, row) in table.models.iter().zip(&table.p_values) {
            let cells: Vec<String> = row.iter().map(|p| format!("{p:>10.3e}")).collect();
            println!("{:>4}{}", m.as_str(), cells.join(""));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Compute {
            model,
            mesh,
            params,
            out,
            seed,
        } => compute(model, &mesh, params.as_deref(), &out, seed),
        Command::Scan {
            manifest,
            out,
            config,
        } => scan(&manifest, &out, config.as_deref()),
        Command::Bench {
            manifest,
            models,
            out,
            seed,
            exact_ls,
            config,
        } => bench(&manifest, &models, &out, seed, exact_ls, config.as_deref()),
        Command::HumanCurve {
            manifest,
            np_max,
            trials,
            seed,
            config,
            out,
        } => human_curve(
            &manifest,
            np_max,
            trials,
            seed,
            config.as_deref(),
            out.as_deref(),
        ),
        Command::Compare { report, test } => compare(&report, test),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::AllFailed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ALL_FAILED)
        }
    }
}
