//! Command-line pipeline: simulate → fit-norm → fit-trajectories →
//! build-tree → classify → evaluate, plus export of tree geometry, cut
//! slices, and divergence tables.
//!
//! Every run writes a `run_manifest_<command>.json` next to its primary
//! outputs, recording the command, seed, crate version, and a content
//! hash of every input and output file.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;
use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::baseline::{predict_ecoc, train_ecoc, EcocModel};
use crate::cohort::{
    load_subjects, save_subjects, PopulationPartition, StructureManifest, SubjectRecord,
};
use crate::embed::{fit_umap, EmbeddingModel, UmapParams};
use crate::error::{Error, Result};
use crate::eval::{
    self, merge_classes, metrics_report, paired_bootstrap_pvalue, read_predictions_csv,
    write_predictions_csv, ConfusionMatrix, MergeRule, RankedPrediction,
};
use crate::normalize::{apply_normalization, fit_normalization, NormalizationModel};
use crate::sampling::training_pool;
use crate::simulate::{desk_scale_spec, generate_cohort, CohortSpec, DeskScaleConfig};
use crate::trajectory::{divergence_from_control, fit_model_set, LifespanModelSet};
use crate::tree::{
    build_tree, classify, cut_tree, write_slice_csv, write_slice_svg, DistanceRule,
    LifespanTree, TestPoint,
};

const NORMALIZATION_FILE: &str = "normalization.json";
const TRAJECTORIES_FILE: &str = "trajectories.json";
const EMBEDDING_FILE: &str = "embedding.json";
const TREE_FILE: &str = "tree.json";
const BASELINE_FILE: &str = "baseline.json";

#[derive(Parser, Debug)]
#[command(
    name = "lifetree",
    version,
    about = "Trajectory-tree differential diagnosis from brain structure volumes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic cohort (built-in desk-scale spec by default).
    Simulate(SimulateArgs),
    /// Fit the volume normalization model on control subjects.
    FitNorm(FitNormArgs),
    /// Fit per-population lifespan trajectories with model selection.
    FitTrajectories(FitTrajectoriesArgs),
    /// Draw synthetic samples, fit the embedding, and assemble the tree.
    BuildTree(BuildTreeArgs),
    /// Classify subjects against a built tree.
    Classify(ClassifyArgs),
    /// Compute metrics, bootstrap intervals, and baseline comparisons.
    Evaluate(EvaluateArgs),
    /// Export tree geometry, cut slices, and divergence tables.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Output directory for cohort.csv, truth.csv, spec.json.
    #[arg(long)]
    out: PathBuf,
    /// Cohort spec JSON; the built-in desk-scale spec when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct FitNormArgs {
    #[arg(long)]
    subjects: PathBuf,
    /// Structure manifest; the built-in 124-name list when omitted.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    model_dir: PathBuf,
    #[arg(long, default_value = "CN")]
    control: String,
}

#[derive(Args, Debug)]
struct FitTrajectoriesArgs {
    #[arg(long)]
    subjects: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    model_dir: PathBuf,
    /// Tree preset: `cognitive` (7 branches incl. control), `motor`
    /// (4 branches, control feeds the trunk only), or `auto` (all
    /// non-control labels found in the subjects file become branches).
    #[arg(long, default_value = "auto")]
    tree: String,
    #[arg(long, default_value = "CN")]
    control: String,
    /// Explicit comma-separated branch list, overriding the preset.
    #[arg(long, value_delimiter = ',')]
    branches: Option<Vec<String>>,
}

#[derive(Args, Debug)]
struct BuildTreeArgs {
    #[arg(long)]
    model_dir: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    samples_per_year: usize,
    /// Layout epochs override; the 500/200 rule when omitted.
    #[arg(long)]
    epochs: Option<usize>,
    /// Also train the SVM/ECOC baseline (requires --subjects).
    #[arg(long)]
    with_baseline: bool,
    /// Training subjects for the baseline.
    #[arg(long)]
    subjects: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Append age as a 125th baseline feature.
    #[arg(long)]
    baseline_with_age: bool,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long)]
    subjects: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    model_dir: PathBuf,
    /// Predictions CSV output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "polyline")]
    distance_rule: String,
    /// Also classify with the trained baseline into `<out>_baseline.csv`.
    #[arg(long)]
    with_baseline: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Ranked predictions CSV.
    #[arg(long, conflicts_with = "confusion")]
    predictions: Option<PathBuf>,
    /// Confusion matrix CSV replayed as top-1 predictions.
    #[arg(long)]
    confusion: Option<PathBuf>,
    /// Metrics JSON output path.
    #[arg(long)]
    out: PathBuf,
    /// Baseline predictions CSV for a paired comparison.
    #[arg(long)]
    with_baseline: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    topk: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    boot_reps: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Merge classes before binary metrics: `SUPER:A,B,C` maps the
    /// listed labels onto SUPER; unlisted labels map to themselves.
    #[arg(long)]
    merge_into: Option<String>,
    #[arg(long, default_value = "argmax")]
    merge_rule: String,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    model_dir: PathBuf,
    /// Re-emit tree geometry JSON to this path.
    #[arg(long)]
    tree_out: Option<PathBuf>,
    #[arg(long)]
    cut_age: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    window: f64,
    #[arg(long)]
    cut_csv: Option<PathBuf>,
    #[arg(long)]
    cut_svg: Option<PathBuf>,
    /// Test subjects to overlay on the cut slice.
    #[arg(long)]
    subjects: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    divergence_csv: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [60, 70, 80, 90])]
    divergence_ages: Vec<i32>,
    #[arg(long, default_value = "polyline")]
    distance_rule: String,
}

/// Parse and execute; library-level entry used by tests.
pub fn run<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)
        .map_err(|e| Error::Validation(format!("argument error: {e}")))?;
    execute(cli.command)
}

/// Binary entry: renders clap help/usage itself and maps errors to the
/// machine-readable envelope with a nonzero status.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", error_envelope(&err));
            1
        }
    }
}

/// Machine-readable error envelope printed to stderr on failure.
pub fn error_envelope(err: &Error) -> String {
    serde_json::json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
        }
    })
    .to_string()
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => run_simulate(args),
        Command::FitNorm(args) => run_fit_norm(args),
        Command::FitTrajectories(args) => run_fit_trajectories(args),
        Command::BuildTree(args) => run_build_tree(args),
        Command::Classify(args) => run_classify(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Export(args) => run_export(args),
    }
}

fn load_manifest(path: &Option<PathBuf>) -> Result<StructureManifest> {
    match path {
        Some(p) => StructureManifest::load(p),
        None => Ok(StructureManifest::canonical().clone()),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    crate_version: String,
    seed: Option<u64>,
    inputs: Vec<ManifestEntry>,
    outputs: Vec<ManifestEntry>,
}

fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    Ok(hex)
}

fn manifest_entries(paths: &[PathBuf]) -> Result<Vec<ManifestEntry>> {
    paths
        .iter()
        .map(|p| {
            Ok(ManifestEntry {
                file: p
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.display().to_string()),
                sha256: hash_file(p)?,
            })
        })
        .collect()
}

fn write_run_manifest(
    dir: &Path,
    command: &str,
    seed: Option<u64>,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<()> {
    let manifest = RunManifest {
        command: command.to_string(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        inputs: manifest_entries(inputs)?,
        outputs: manifest_entries(outputs)?,
    };
    let path = dir.join(format!("run_manifest_{command}.json"));
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let mut spec = match &args.spec {
        Some(path) => CohortSpec::load(path)?,
        None => desk_scale_spec(&DeskScaleConfig::default()),
    };
    spec.seed = args.seed;
    let records = generate_cohort(&spec)?;
    let manifest = StructureManifest::canonical();

    let cohort_path = args.out.join("cohort.csv");
    save_subjects(&cohort_path, &records, manifest)?;

    let truth_path = args.out.join("truth.csv");
    {
        use std::io::Write;
        let file = std::fs::File::create(&truth_path)
            .map_err(|e| Error::io(truth_path.display().to_string(), e))?;
        let mut out = std::io::BufWriter::new(file);
        let io_err = |e: std::io::Error| Error::io(truth_path.display().to_string(), e);
        writeln!(out, "subject_id,label").map_err(io_err)?;
        for record in &records {
            writeln!(out, "{},{}", record.subject_id, record.diagnosis).map_err(io_err)?;
        }
        out.flush().map_err(io_err)?;
    }

    let spec_path = args.out.join("spec.json");
    spec.save(&spec_path)?;
    let manifest_path = args.out.join("structures.txt");
    manifest.save(&manifest_path)?;

    let inputs: Vec<PathBuf> = args.spec.iter().cloned().collect();
    write_run_manifest(
        &args.out,
        "simulate",
        Some(args.seed),
        &inputs,
        &[cohort_path, truth_path, spec_path, manifest_path],
    )?;
    println!(
        "simulated {} subjects across {} populations",
        records.len(),
        spec.populations.len()
    );
    Ok(())
}

fn run_fit_norm(args: FitNormArgs) -> Result<()> {
    ensure_dir(&args.model_dir)?;
    let manifest = load_manifest(&args.manifest)?;
    let loaded = load_subjects(&args.subjects, &manifest)?;
    let controls: Vec<SubjectRecord> = loaded
        .records
        .iter()
        .filter(|r| r.diagnosis == args.control)
        .cloned()
        .collect();
    if controls.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no '{}' subjects in {}",
            args.control,
            args.subjects.display()
        )));
    }
    let model = fit_normalization(&controls, &manifest)?;
    let out = args.model_dir.join(NORMALIZATION_FILE);
    model.save(&out)?;
    write_run_manifest(
        &args.model_dir,
        "fit-norm",
        None,
        std::slice::from_ref(&args.subjects),
        &[out],
    )?;
    println!(
        "normalization fitted on {} controls ({} rows QC-excluded)",
        controls.len(),
        loaded.qc_excluded
    );
    Ok(())
}

fn tree_labels(
    args_tree: &str,
    control: &str,
    branches: &Option<Vec<String>>,
    records: &[SubjectRecord],
) -> Result<Vec<String>> {
    if let Some(explicit) = branches {
        return Ok(explicit.clone());
    }
    match args_tree {
        "cognitive" => Ok(["CN", "AD", "DLB", "bvFTD", "PNFA", "SD", "PSP"]
            .iter()
            .map(|s| s.to_string())
            .collect()),
        "motor" => Ok(["PD", "DLB", "PSP", "MSA"]
            .iter()
            .map(|s| s.to_string())
            .collect()),
        "auto" => {
            let mut labels = Vec::new();
            for record in records {
                if record.diagnosis != control && !labels.contains(&record.diagnosis) {
                    labels.push(record.diagnosis.clone());
                }
            }
            if labels.is_empty() {
                return Err(Error::InsufficientData(
                    "no non-control labels found for --tree auto".into(),
                ));
            }
            Ok(labels)
        }
        other => Err(Error::Validation(format!(
            "unknown tree preset '{other}' (expected cognitive, motor, or auto)"
        ))),
    }
}

fn run_fit_trajectories(args: FitTrajectoriesArgs) -> Result<()> {
    ensure_dir(&args.model_dir)?;
    let manifest = load_manifest(&args.manifest)?;
    let loaded = load_subjects(&args.subjects, &manifest)?;
    let norm_path = args.model_dir.join(NORMALIZATION_FILE);
    let norm = NormalizationModel::load(&norm_path)?;

    let branches = tree_labels(&args.tree, &args.control, &args.branches, &loaded.records)?;
    let mut labels = branches.clone();
    if !labels.contains(&args.control) {
        labels.insert(0, args.control.clone());
    }
    let partition = PopulationPartition::new(&loaded.records, &labels, &args.control)?;
    let set = fit_model_set(&partition, &norm, &branches, manifest.names())?;

    let out = args.model_dir.join(TRAJECTORIES_FILE);
    set.save(&out)?;
    write_run_manifest(
        &args.model_dir,
        "fit-trajectories",
        None,
        &[args.subjects.clone(), norm_path],
        &[out],
    )?;
    println!(
        "trajectories fitted: {} branches, age threshold {}",
        set.branches.len(),
        set.age_threshold
    );
    Ok(())
}

fn baseline_features(
    records: &[SubjectRecord],
    norm: &NormalizationModel,
    with_age: bool,
) -> Result<(Array2<f64>, Vec<String>)> {
    let d = 124 + usize::from(with_age);
    let mut x = Array2::zeros((records.len(), d));
    let mut labels = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let features = apply_normalization(record, norm)?;
        for (j, z) in features.z.iter().enumerate() {
            x[[i, j]] = *z;
        }
        if with_age {
            x[[i, 124]] = record.age;
        }
        labels.push(record.diagnosis.clone());
    }
    Ok((x, labels))
}

fn run_build_tree(args: BuildTreeArgs) -> Result<()> {
    ensure_dir(&args.model_dir)?;
    let traj_path = args.model_dir.join(TRAJECTORIES_FILE);
    let set = LifespanModelSet::load(&traj_path)?;

    let samples = training_pool(&set, args.samples_per_year, args.seed)?;
    let mut params = UmapParams::for_populations(set.branches.len(), args.seed);
    params.epochs = args.epochs;
    let model = fit_umap(&samples.matrix(), &params)?;
    let tree = build_tree(&set, &model, &samples)?;

    let embedding_path = args.model_dir.join(EMBEDDING_FILE);
    model.save(&embedding_path)?;
    let tree_path = args.model_dir.join(TREE_FILE);
    tree.save(&tree_path)?;

    let mut inputs = vec![traj_path];
    let mut outputs = vec![embedding_path, tree_path];

    if args.with_baseline {
        let subjects = args.subjects.as_ref().ok_or_else(|| {
            Error::Validation("--with-baseline requires --subjects (training cohort)".into())
        })?;
        let manifest = load_manifest(&args.manifest)?;
        let loaded = load_subjects(subjects, &manifest)?;
        let norm_path = args.model_dir.join(NORMALIZATION_FILE);
        let norm = NormalizationModel::load(&norm_path)?;
        let training: Vec<SubjectRecord> = loaded
            .records
            .iter()
            .filter(|r| set.branches.contains(&r.diagnosis))
            .cloned()
            .collect();
        let (x, labels) = baseline_features(&training, &norm, args.baseline_with_age)?;
        let ecoc = train_ecoc(x.view(), &labels, &set.branches, 1.0)?;
        let baseline_path = args.model_dir.join(BASELINE_FILE);
        ecoc.save(&baseline_path)?;
        inputs.push(subjects.clone());
        inputs.push(norm_path);
        outputs.push(baseline_path);
    }

    write_run_manifest(
        &args.model_dir,
        "build-tree",
        Some(args.seed),
        &inputs,
        &outputs,
    )?;
    println!(
        "tree built: {} branches from year {}, {} training samples",
        tree.branches.len(),
        set.age_threshold,
        samples.rows.len()
    );
    Ok(())
}

fn run_classify(args: ClassifyArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let loaded = load_subjects(&args.subjects, &manifest)?;
    let norm_path = args.model_dir.join(NORMALIZATION_FILE);
    let norm = NormalizationModel::load(&norm_path)?;
    let embedding_path = args.model_dir.join(EMBEDDING_FILE);
    let model = EmbeddingModel::load(&embedding_path)?;
    let tree_path = args.model_dir.join(TREE_FILE);
    let tree = LifespanTree::load(&tree_path)?;
    let rule = DistanceRule::parse(&args.distance_rule)?;

    let results: Result<Vec<RankedPrediction>> = loaded
        .records
        .par_iter()
        .map(|record| {
            let result = classify(&tree, &norm, &model, record, rule)?;
            Ok(RankedPrediction {
                subject_id: result.subject_id,
                truth: record.diagnosis.clone(),
                ranking: result.ranking,
                scores: Some(result.ranked_scores),
            })
        })
        .collect();
    let predictions = results?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_predictions_csv(&args.out, &predictions)?;

    let mut inputs = vec![
        args.subjects.clone(),
        norm_path.clone(),
        embedding_path,
        tree_path,
    ];
    let mut outputs = vec![args.out.clone()];

    if args.with_baseline {
        let baseline_path = args.model_dir.join(BASELINE_FILE);
        let ecoc = EcocModel::load(&baseline_path)?;
        let with_age = ecoc.feature_means.len() == 125;
        let (x, _) = baseline_features(&loaded.records, &norm, with_age)?;
        let baseline_preds: Result<Vec<RankedPrediction>> = loaded
            .records
            .iter()
            .enumerate()
            .map(|(i, record)| {
                let row: Vec<f64> = x.row(i).to_vec();
                let pred = predict_ecoc(&ecoc, &row)?;
                Ok(RankedPrediction {
                    subject_id: record.subject_id.clone(),
                    truth: record.diagnosis.clone(),
                    ranking: pred.ranking,
                    scores: Some(pred.scores),
                })
            })
            .collect();
        let baseline_out = baseline_out_path(&args.out);
        write_predictions_csv(&baseline_out, &baseline_preds?)?;
        inputs.push(baseline_path);
        outputs.push(baseline_out);
    }

    let manifest_dir = args
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    write_run_manifest(manifest_dir, "classify", None, &inputs, &outputs)?;
    println!("classified {} subjects", predictions.len());
    Ok(())
}

fn baseline_out_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "predictions".into());
    let ext = out
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}_baseline.{ext}"))
}

fn parse_merge_map(spec: &str, labels: &[String]) -> Result<IndexMap<String, String>> {
    let (super_label, members) = spec.split_once(':').ok_or_else(|| {
        Error::Validation(format!(
            "--merge-into '{spec}' must look like SUPER:labelA,labelB"
        ))
    })?;
    let members: Vec<&str> = members.split(',').map(str::trim).collect();
    let mut map = IndexMap::new();
    for label in labels {
        let target = if members.iter().any(|m| m == label) {
            super_label.trim().to_string()
        } else {
            label.clone()
        };
        map.insert(label.clone(), target);
    }
    for member in &members {
        if !labels.iter().any(|l| l == member) {
            return Err(Error::Validation(format!(
                "--merge-into lists unknown label '{member}'"
            )));
        }
    }
    Ok(map)
}

#[derive(Serialize)]
struct MergedSection {
    rule: String,
    labels: Vec<String>,
    per_class_sensitivity: Vec<(String, f64, usize)>,
    bacc: f64,
    specificity: Option<Vec<(String, f64)>>,
}

#[derive(Serialize)]
struct BaselineSection {
    predictions: String,
    bacc_top1: f64,
    paired_pvalue_bacc_top1: f64,
}

#[derive(Serialize)]
struct MetricsDocument {
    #[serde(flatten)]
    report: eval::MetricsReport,
    merged: Option<MergedSection>,
    baseline: Option<BaselineSection>,
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let (predictions, labels, max_k, primary_input) = match (&args.predictions, &args.confusion)
    {
        (Some(path), None) => {
            let preds = read_predictions_csv(path)?;
            let labels = eval::infer_labels(&preds)?;
            let k = args.topk.min(labels.len());
            (preds, labels, k, path.clone())
        }
        (None, Some(path)) => {
            let matrix = ConfusionMatrix::read_csv(path)?;
            let preds = matrix.to_predictions();
            // Replayed rankings only pin the top-1 slot.
            (preds, matrix.labels, 1, path.clone())
        }
        _ => {
            return Err(Error::Validation(
                "evaluate needs exactly one of --predictions or --confusion".into(),
            ))
        }
    };

    let report = metrics_report(
        &predictions,
        &labels,
        max_k,
        args.boot_reps,
        args.level,
        args.seed,
    )?;

    let merged = match &args.merge_into {
        Some(spec) => {
            let map = parse_merge_map(spec, &labels)?;
            let rule = MergeRule::parse(&args.merge_rule)?;
            let merged = merge_classes(&predictions, &labels, &map, rule)?;
            Some(MergedSection {
                rule: args.merge_rule.clone(),
                labels: merged.labels.clone(),
                per_class_sensitivity: merged.per_class.clone(),
                bacc: merged.bacc,
                specificity: merged.specificity.clone(),
            })
        }
        None => None,
    };

    let baseline = match &args.with_baseline {
        Some(path) => {
            let other = read_predictions_csv(path)?;
            let metric = eval::bacc_metric(1, labels.clone());
            let p = paired_bootstrap_pvalue(
                &predictions,
                &other,
                &metric,
                args.boot_reps,
                args.seed,
            )?;
            let other_bacc = eval::topk_bacc(&other, 1, &labels)?.bacc;
            // Recorded by file name so reports from identical runs in
            // different directories stay byte-identical.
            Some(BaselineSection {
                predictions: path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string()),
                bacc_top1: other_bacc,
                paired_pvalue_bacc_top1: p,
            })
        }
        None => None,
    };

    let document = MetricsDocument {
        report,
        merged,
        baseline,
    };
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    let text = serde_json::to_string_pretty(&document)?;
    std::fs::write(&args.out, text)
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;

    for section in &document.report.topk {
        println!(
            "top-{}: BACC {:.1}% [{:.1}, {:.1}]",
            section.k,
            100.0 * section.bacc,
            100.0 * section.bacc_ci_lower,
            100.0 * section.bacc_ci_upper
        );
    }
    if let Some(m) = &document.merged {
        println!("merged ({}): BACC {:.1}%", m.rule, 100.0 * m.bacc);
    }
    if let Some(b) = &document.baseline {
        println!(
            "baseline top-1 BACC {:.1}%, paired p = {:.4}",
            100.0 * b.bacc_top1,
            b.paired_pvalue_bacc_top1
        );
    }

    let mut inputs = vec![primary_input];
    if let Some(path) = &args.with_baseline {
        inputs.push(path.clone());
    }
    let manifest_dir = args
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    write_run_manifest(
        manifest_dir,
        "evaluate",
        Some(args.seed),
        &inputs,
        std::slice::from_ref(&args.out),
    )?;
    Ok(())
}

fn run_export(args: ExportArgs) -> Result<()> {
    let mut inputs: Vec<PathBuf> = Vec::new();
    let mut outputs: Vec<PathBuf> = Vec::new();

    if let Some(tree_out) = &args.tree_out {
        let tree_path = args.model_dir.join(TREE_FILE);
        let tree = LifespanTree::load(&tree_path)?;
        tree.save(tree_out)?;
        inputs.push(tree_path);
        outputs.push(tree_out.clone());
    }

    if let Some(age) = args.cut_age {
        let tree_path = args.model_dir.join(TREE_FILE);
        let tree = LifespanTree::load(&tree_path)?;
        if !inputs.contains(&tree_path) {
            inputs.push(tree_path);
        }
        let test_points = match &args.subjects {
            Some(subjects) => {
                let manifest = load_manifest(&args.manifest)?;
                let loaded = load_subjects(subjects, &manifest)?;
                let norm =
                    NormalizationModel::load(&args.model_dir.join(NORMALIZATION_FILE))?;
                let model = EmbeddingModel::load(&args.model_dir.join(EMBEDDING_FILE))?;
                let rule = DistanceRule::parse(&args.distance_rule)?;
                inputs.push(subjects.clone());
                loaded
                    .records
                    .par_iter()
                    .map(|record| {
                        let result = classify(&tree, &norm, &model, record, rule)?;
                        Ok(TestPoint {
                            label: record.diagnosis.clone(),
                            age: record.age,
                            x: result.x,
                            y: result.y,
                        })
                    })
                    .collect::<Result<Vec<TestPoint>>>()?
            }
            None => Vec::new(),
        };
        let rows = cut_tree(&tree, age, args.window, &test_points)?;
        if let Some(path) = &args.cut_csv {
            write_slice_csv(path, &rows)?;
            outputs.push(path.clone());
        }
        if let Some(path) = &args.cut_svg {
            write_slice_svg(path, &rows)?;
            outputs.push(path.clone());
        }
        println!("cut at {age}y ± {}y: {} rows", args.window, rows.len());
    }

    if let Some(path) = &args.divergence_csv {
        let traj_path = args.model_dir.join(TRAJECTORIES_FILE);
        let set = LifespanModelSet::load(&traj_path)?;
        inputs.push(traj_path);
        use std::io::Write;
        let file = std::fs::File::create(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut out = std::io::BufWriter::new(file);
        let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
        writeln!(out, "population,age,structure_index,structure,divergence_z")
            .map_err(io_err)?;
        for label in &set.branches {
            if *label == set.control {
                continue;
            }
            for &age in &args.divergence_ages {
                let divergence = divergence_from_control(&set, label, f64::from(age))?;
                for (s, d) in divergence.iter().enumerate() {
                    writeln!(
                        out,
                        "{label},{age},{s},{},{d}",
                        set.structure_names.get(s).map(String::as_str).unwrap_or("")
                    )
                    .map_err(io_err)?;
                }
            }
        }
        out.flush().map_err(io_err)?;
        outputs.push(path.clone());
    }

    if outputs.is_empty() {
        return Err(Error::Validation(
            "export: nothing to do (pass --tree-out, --cut-age with --cut-csv/--cut-svg, or --divergence-csv)"
                .into(),
        ));
    }
    let manifest_dir = outputs[0].parent().filter(|p| !p.as_os_str().is_empty());
    write_run_manifest(
        manifest_dir.unwrap_or(Path::new(".")),
        "export",
        None,
        &inputs,
        &outputs,
    )?;
    Ok(())
}
