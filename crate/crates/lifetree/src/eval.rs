//! Evaluation: confusion matrices, top-k sensitivity and balanced
//! accuracy, class merging, stratified bootstrap confidence intervals,
//! and paired bootstrap hypothesis tests.
//!
//! Bootstrap resampling is stratified within each true class so every
//! replicate contains every class and balanced accuracy stays defined.

use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{self, RngStream};

/// One subject's ranked prediction. `scores`, when present, aligns with
/// `ranking` (descending).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub subject_id: String,
    pub truth: String,
    pub ranking: Vec<String>,
    pub scores: Option<Vec<f64>>,
}

impl RankedPrediction {
    pub fn top1(&self) -> &str {
        &self.ranking[0]
    }
}

/// Label order inferred from predictions: the first subject's ranking is
/// a permutation of the full label set.
pub fn infer_labels(preds: &[RankedPrediction]) -> Result<Vec<String>> {
    let first = preds
        .first()
        .ok_or_else(|| Error::Domain("no predictions".into()))?;
    Ok(first.ranking.clone())
}

/// Top-1 confusion matrix: rows = true class, columns = predicted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn total(&self) -> usize {
        self.row_sums().iter().sum()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Lookup(format!("label '{label}' not in matrix")))
    }

    /// Expand the matrix into synthetic top-1 predictions: each (true,
    /// predicted) cell becomes that many subjects whose ranking starts
    /// with the predicted label, remaining labels in declaration order.
    pub fn to_predictions(&self) -> Vec<RankedPrediction> {
        let mut preds = Vec::with_capacity(self.total());
        for (t, row) in self.counts.iter().enumerate() {
            for (p, &count) in row.iter().enumerate() {
                for i in 0..count {
                    let mut ranking = vec![self.labels[p].clone()];
                    ranking.extend(
                        self.labels
                            .iter()
                            .enumerate()
                            .filter(|(idx, _)| *idx != p)
                            .map(|(_, l)| l.clone()),
                    );
                    preds.push(RankedPrediction {
                        subject_id: format!("{}-{}-{}", self.labels[t], self.labels[p], i),
                        truth: self.labels[t].clone(),
                        ranking,
                        scores: None,
                    });
                }
            }
        }
        preds
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut out = std::io::BufWriter::new(file);
        let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
        writeln!(out, "true\\pred,{}", self.labels.join(",")).map_err(io_err)?;
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(out, "{label},{}", cells.join(",")).map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }

    pub fn read_csv(path: &Path) -> Result<ConfusionMatrix> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Schema("empty confusion matrix file".into()))?;
        let labels: Vec<String> = header
            .split(',')
            .skip(1)
            .map(|s| s.trim().to_string())
            .collect();
        if labels.is_empty() {
            return Err(Error::Schema("confusion header lists no labels".into()));
        }
        let mut counts = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let row_label = fields.next().unwrap_or("").trim();
            if row_label != labels[counts.len()] {
                return Err(Error::Schema(format!(
                    "row {} is '{}', expected '{}' (rows must follow header order)",
                    i + 1,
                    row_label,
                    labels[counts.len()]
                )));
            }
            let row: Result<Vec<usize>> = fields
                .map(|f| {
                    f.trim().parse::<usize>().map_err(|_| Error::Parse {
                        row: i + 1,
                        column: "count".into(),
                        message: format!("'{f}' is not a count"),
                    })
                })
                .collect();
            let row = row?;
            if row.len() != labels.len() {
                return Err(Error::Schema(format!(
                    "row {} has {} cells, expected {}",
                    i + 1,
                    row.len(),
                    labels.len()
                )));
            }
            counts.push(row);
        }
        if counts.len() != labels.len() {
            return Err(Error::Schema(format!(
                "{} rows for {} labels",
                counts.len(),
                labels.len()
            )));
        }
        Ok(ConfusionMatrix { labels, counts })
    }
}

/// Build the top-1 confusion matrix over the given label order.
pub fn confusion_matrix(
    preds: &[RankedPrediction],
    labels: &[String],
) -> Result<ConfusionMatrix> {
    if preds.is_empty() {
        return Err(Error::Domain("no predictions".into()));
    }
    let index = |label: &str| -> Result<usize> {
        labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Lookup(format!("label '{label}' not in the declared set")))
    };
    let k = labels.len();
    let mut counts = vec![vec![0usize; k]; k];
    for pred in preds {
        counts[index(&pred.truth)?][index(pred.top1())?] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        counts,
    })
}

/// Per-class top-k sensitivities and their unweighted mean.
#[derive(Debug, Clone, Serialize)]
pub struct TopkReport {
    pub k: usize,
    /// (label, sensitivity, class count) for classes present in truth.
    pub per_class: Vec<(String, f64, usize)>,
    pub bacc: f64,
    /// Labels with no true subjects, excluded from the mean.
    pub excluded: Vec<String>,
}

impl TopkReport {
    pub fn sensitivity(&self, label: &str) -> Option<f64> {
        self.per_class
            .iter()
            .find(|(l, _, _)| l == label)
            .map(|(_, s, _)| *s)
    }
}

/// Top-k sensitivity per class and balanced accuracy.
pub fn topk_bacc(preds: &[RankedPrediction], k: usize, labels: &[String]) -> Result<TopkReport> {
    if preds.is_empty() {
        return Err(Error::Domain("no predictions".into()));
    }
    if k == 0 || k > labels.len() {
        return Err(Error::Domain(format!(
            "k = {k} outside 1..={}",
            labels.len()
        )));
    }
    let mut per_class = Vec::new();
    let mut excluded = Vec::new();
    for label in labels {
        let of_class: Vec<&RankedPrediction> =
            preds.iter().filter(|p| &p.truth == label).collect();
        if of_class.is_empty() {
            excluded.push(label.clone());
            continue;
        }
        let hits = of_class
            .iter()
            .filter(|p| p.ranking[..k.min(p.ranking.len())].contains(&p.truth))
            .count();
        per_class.push((
            label.clone(),
            hits as f64 / of_class.len() as f64,
            of_class.len(),
        ));
    }
    if per_class.is_empty() {
        return Err(Error::Domain(
            "no declared class appears in the truth labels".into(),
        ));
    }
    let bacc = per_class.iter().map(|(_, s, _)| s).sum::<f64>() / per_class.len() as f64;
    Ok(TopkReport {
        k,
        per_class,
        bacc,
        excluded,
    })
}

/// How merged-class metrics are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MergeRule {
    /// Merge the top-1 prediction through the map (argmax-then-merge).
    #[default]
    Argmax,
    /// Sum class scores per superclass, then take the argmax. Requires
    /// predictions with scores.
    ScoreSum,
}

impl MergeRule {
    pub fn parse(token: &str) -> Result<MergeRule> {
        match token {
            "argmax" => Ok(MergeRule::Argmax),
            "score-sum" => Ok(MergeRule::ScoreSum),
            other => Err(Error::Validation(format!(
                "unknown merge rule '{other}' (expected 'argmax' or 'score-sum')"
            ))),
        }
    }
}

/// Metrics on the merged label space.
#[derive(Debug, Clone, Serialize)]
pub struct MergedReport {
    pub labels: Vec<String>,
    pub per_class: Vec<(String, f64, usize)>,
    pub bacc: f64,
    /// For binary merges: specificity with respect to each class, i.e.
    /// the sensitivity of the other class.
    pub specificity: Option<Vec<(String, f64)>>,
}

impl MergedReport {
    pub fn sensitivity(&self, label: &str) -> Option<f64> {
        self.per_class
            .iter()
            .find(|(l, _, _)| l == label)
            .map(|(_, s, _)| *s)
    }
}

/// Merge classes through a total map and compute top-1 metrics.
pub fn merge_classes(
    preds: &[RankedPrediction],
    labels: &[String],
    merge_map: &IndexMap<String, String>,
    rule: MergeRule,
) -> Result<MergedReport> {
    for label in labels {
        if !merge_map.contains_key(label) {
            return Err(Error::Validation(format!(
                "merge map does not cover label '{label}'"
            )));
        }
    }
    // Merged label order: first appearance following the original order.
    let mut merged_labels: Vec<String> = Vec::new();
    for label in labels {
        let target = &merge_map[label];
        if !merged_labels.contains(target) {
            merged_labels.push(target.clone());
        }
    }

    let merged_preds: Result<Vec<RankedPrediction>> = preds
        .iter()
        .map(|p| {
            let top = match rule {
                MergeRule::Argmax => merge_map
                    .get(p.top1())
                    .ok_or_else(|| {
                        Error::Validation(format!("merge map misses '{}'", p.top1()))
                    })?
                    .clone(),
                MergeRule::ScoreSum => {
                    let scores = p.scores.as_ref().ok_or_else(|| {
                        Error::Domain(
                            "score-sum merging needs predictions with scores".into(),
                        )
                    })?;
                    let mut sums: IndexMap<&str, f64> = IndexMap::new();
                    for label in &merged_labels {
                        sums.insert(label.as_str(), 0.0);
                    }
                    for (label, score) in p.ranking.iter().zip(scores) {
                        let target = merge_map.get(label).ok_or_else(|| {
                            Error::Validation(format!("merge map misses '{label}'"))
                        })?;
                        *sums.get_mut(target.as_str()).unwrap() += score;
                    }
                    sums.iter()
                        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite scores"))
                        .map(|(l, _)| l.to_string())
                        .unwrap()
                }
            };
            let mut ranking = vec![top.clone()];
            ranking.extend(merged_labels.iter().filter(|l| **l != top).cloned());
            Ok(RankedPrediction {
                subject_id: p.subject_id.clone(),
                truth: merge_map
                    .get(&p.truth)
                    .ok_or_else(|| {
                        Error::Validation(format!("merge map misses '{}'", p.truth))
                    })?
                    .clone(),
                ranking,
                scores: None,
            })
        })
        .collect();
    let merged_preds = merged_preds?;

    let report = topk_bacc(&merged_preds, 1, &merged_labels)?;
    let specificity = if report.per_class.len() == 2 {
        Some(vec![
            (
                report.per_class[0].0.clone(),
                report.per_class[1].1,
            ),
            (
                report.per_class[1].0.clone(),
                report.per_class[0].1,
            ),
        ])
    } else {
        None
    };
    Ok(MergedReport {
        labels: merged_labels,
        per_class: report.per_class,
        bacc: report.bacc,
        specificity,
    })
}

/// Percentile bootstrap interval around a metric.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BootstrapCi {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    /// Standard deviation of the replicate distribution.
    pub se: f64,
}

fn class_indices(preds: &[RankedPrediction]) -> Vec<Vec<usize>> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        match order.iter().position(|l| *l == p.truth) {
            Some(g) => groups[g].push(i),
            None => {
                order.push(&p.truth);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

fn resample(
    preds: &[RankedPrediction],
    groups: &[Vec<usize>],
    rng: &mut RngStream,
) -> Vec<RankedPrediction> {
    let mut replicate = Vec::with_capacity(preds.len());
    for group in groups {
        for _ in 0..group.len() {
            replicate.push(preds[group[rng.index(group.len())]].clone());
        }
    }
    replicate
}

/// Stratified bootstrap confidence interval: resampling preserves
/// per-class counts; deterministic per seed.
pub fn bootstrap_ci<F>(
    preds: &[RankedPrediction],
    metric: F,
    n_rep: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapCi>
where
    F: Fn(&[RankedPrediction]) -> f64 + Sync,
{
    if preds.is_empty() {
        return Err(Error::Domain("no predictions".into()));
    }
    if !(0.0..1.0).contains(&level) {
        return Err(Error::Domain(format!("level {level} outside (0, 1)")));
    }
    let groups = class_indices(preds);
    let point = metric(preds);
    let reps: Vec<f64> = (0..n_rep)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, stats::stream_id(&[b"boot", &r.to_le_bytes()]));
            metric(&resample(preds, &groups, &mut rng))
        })
        .collect();
    let alpha = (1.0 - level) / 2.0;
    let lower = stats::percentile(&reps, alpha)?;
    let upper = stats::percentile(&reps, 1.0 - alpha)?;
    let mean = reps.iter().sum::<f64>() / n_rep as f64;
    let se = (reps.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n_rep - 1).max(1) as f64)
        .sqrt();
    Ok(BootstrapCi {
        point,
        lower,
        upper,
        se,
    })
}

/// Two-sided paired bootstrap p-value for metric(a) − metric(b).
///
/// Both prediction sets must cover the same subjects in the same order;
/// replicates resample subject indices jointly (stratified by the shared
/// truth) so the pairing is preserved. The p-value is floored at 1/n_rep.
pub fn paired_bootstrap_pvalue<F>(
    preds_a: &[RankedPrediction],
    preds_b: &[RankedPrediction],
    metric: F,
    n_rep: usize,
    seed: u64,
) -> Result<f64>
where
    F: Fn(&[RankedPrediction]) -> f64 + Sync,
{
    if preds_a.len() != preds_b.len() {
        return Err(Error::Validation(format!(
            "prediction sets differ in size: {} vs {}",
            preds_a.len(),
            preds_b.len()
        )));
    }
    for (a, b) in preds_a.iter().zip(preds_b) {
        if a.subject_id != b.subject_id {
            return Err(Error::Validation(format!(
                "misaligned subjects: '{}' vs '{}'",
                a.subject_id, b.subject_id
            )));
        }
    }
    let groups = class_indices(preds_a);
    let deltas: Vec<f64> = (0..n_rep)
        .into_par_iter()
        .map(|r| {
            let mut rng =
                RngStream::new(seed, stats::stream_id(&[b"paired", &r.to_le_bytes()]));
            let mut rep_a = Vec::with_capacity(preds_a.len());
            let mut rep_b = Vec::with_capacity(preds_b.len());
            for group in &groups {
                for _ in 0..group.len() {
                    let idx = group[rng.index(group.len())];
                    rep_a.push(preds_a[idx].clone());
                    rep_b.push(preds_b[idx].clone());
                }
            }
            metric(&rep_a) - metric(&rep_b)
        })
        .collect();
    let le = deltas.iter().filter(|d| **d <= 0.0).count() as f64 / n_rep as f64;
    let ge = deltas.iter().filter(|d| **d >= 0.0).count() as f64 / n_rep as f64;
    let p = 2.0 * le.min(ge);
    Ok(p.clamp(1.0 / n_rep as f64, 1.0))
}

/// Convenience metric closure: top-k balanced accuracy over the label
/// set inferred from each replicate.
pub fn bacc_metric(k: usize, labels: Vec<String>) -> impl Fn(&[RankedPrediction]) -> f64 + Sync {
    move |preds| {
        topk_bacc(preds, k, &labels)
            .map(|r| r.bacc)
            .unwrap_or(f64::NAN)
    }
}

/// One class's metrics within a top-k section of the report.
#[derive(Debug, Clone, Serialize)]
pub struct ClassMetrics {
    pub label: String,
    pub count: usize,
    pub sensitivity: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopkSection {
    pub k: usize,
    pub bacc: f64,
    pub bacc_ci_lower: f64,
    pub bacc_ci_upper: f64,
    pub bacc_se: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// The full metrics document: top-k sections with bootstrap intervals
/// plus the top-1 confusion matrix.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub labels: Vec<String>,
    pub n_subjects: usize,
    pub bootstrap_replicates: usize,
    pub confidence_level: f64,
    pub topk: Vec<TopkSection>,
    pub confusion: ConfusionMatrix,
}

/// Assemble the report in a single stratified resampling pass: every
/// replicate yields all per-class sensitivities and BACCs for k = 1..=
/// `max_k` at once.
pub fn metrics_report(
    preds: &[RankedPrediction],
    labels: &[String],
    max_k: usize,
    n_rep: usize,
    level: f64,
    seed: u64,
) -> Result<MetricsReport> {
    if preds.is_empty() {
        return Err(Error::Domain("no predictions".into()));
    }
    if max_k == 0 || max_k > labels.len() {
        return Err(Error::Domain(format!(
            "max_k = {max_k} outside 1..={}",
            labels.len()
        )));
    }
    // Rank of the true label per subject (usize::MAX when absent).
    let hit_rank: Vec<usize> = preds
        .iter()
        .map(|p| {
            p.ranking
                .iter()
                .position(|l| *l == p.truth)
                .unwrap_or(usize::MAX)
        })
        .collect();
    // Classes in declared order, only those present in truth.
    let mut class_rows: Vec<(String, Vec<usize>)> = Vec::new();
    for label in labels {
        let rows: Vec<usize> = preds
            .iter()
            .enumerate()
            .filter(|(_, p)| &p.truth == label)
            .map(|(i, _)| i)
            .collect();
        if !rows.is_empty() {
            class_rows.push((label.clone(), rows));
        }
    }
    if class_rows.is_empty() {
        return Err(Error::Domain(
            "no declared class appears in the truth labels".into(),
        ));
    }
    let n_classes = class_rows.len();

    let sens_of = |rows: &[usize], k: usize| -> f64 {
        rows.iter().filter(|&&i| hit_rank[i] < k).count() as f64 / rows.len() as f64
    };

    // replicate_sens[k-1][class] per replicate, collected in parallel.
    let reps: Vec<Vec<Vec<f64>>> = (0..n_rep)
        .into_par_iter()
        .map(|r| {
            let mut rng =
                RngStream::new(seed, stats::stream_id(&[b"boot", &r.to_le_bytes()]));
            let mut resampled: Vec<Vec<usize>> = Vec::with_capacity(n_classes);
            for (_, rows) in &class_rows {
                resampled.push(
                    (0..rows.len())
                        .map(|_| rows[rng.index(rows.len())])
                        .collect(),
                );
            }
            (1..=max_k)
                .map(|k| {
                    resampled
                        .iter()
                        .map(|rows| sens_of(rows, k))
                        .collect::<Vec<f64>>()
                })
                .collect()
        })
        .collect();

    let alpha = (1.0 - level) / 2.0;
    let mut topk = Vec::with_capacity(max_k);
    for k in 1..=max_k {
        let mut per_class = Vec::with_capacity(n_classes);
        let mut bacc_reps = Vec::with_capacity(n_rep);
        for rep in &reps {
            let sens = &rep[k - 1];
            bacc_reps.push(sens.iter().sum::<f64>() / n_classes as f64);
        }
        for (c, (label, rows)) in class_rows.iter().enumerate() {
            let class_reps: Vec<f64> = reps.iter().map(|rep| rep[k - 1][c]).collect();
            per_class.push(ClassMetrics {
                label: label.clone(),
                count: rows.len(),
                sensitivity: sens_of(rows, k),
                ci_lower: stats::percentile(&class_reps, alpha)?,
                ci_upper: stats::percentile(&class_reps, 1.0 - alpha)?,
            });
        }
        let bacc = per_class
            .iter()
            .map(|c| c.sensitivity)
            .sum::<f64>()
            / n_classes as f64;
        let mean = bacc_reps.iter().sum::<f64>() / n_rep as f64;
        let se = (bacc_reps.iter().map(|b| (b - mean).powi(2)).sum::<f64>()
            / (n_rep - 1).max(1) as f64)
            .sqrt();
        topk.push(TopkSection {
            k,
            bacc,
            bacc_ci_lower: stats::percentile(&bacc_reps, alpha)?,
            bacc_ci_upper: stats::percentile(&bacc_reps, 1.0 - alpha)?,
            bacc_se: se,
            per_class,
        });
    }

    Ok(MetricsReport {
        labels: labels.to_vec(),
        n_subjects: preds.len(),
        bootstrap_replicates: n_rep,
        confidence_level: level,
        topk,
        confusion: confusion_matrix(preds, labels)?,
    })
}

/// Write predictions as `subject_id,true,rank1..rankK[,score1..scoreK]`.
pub fn write_predictions_csv(path: &Path, preds: &[RankedPrediction]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::Domain("no predictions to write".into()));
    }
    let k = preds[0].ranking.len();
    let with_scores = preds.iter().all(|p| p.scores.is_some());
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);

    let mut header = String::from("subject_id,true");
    for i in 1..=k {
        header.push_str(&format!(",rank{i}"));
    }
    if with_scores {
        for i in 1..=k {
            header.push_str(&format!(",score{i}"));
        }
    }
    writeln!(out, "{header}").map_err(io_err)?;
    for p in preds {
        if p.ranking.len() != k {
            return Err(Error::Validation(format!(
                "subject '{}' ranks {} labels, expected {k}",
                p.subject_id,
                p.ranking.len()
            )));
        }
        write!(out, "{},{}", p.subject_id, p.truth).map_err(io_err)?;
        for label in &p.ranking {
            write!(out, ",{label}").map_err(io_err)?;
        }
        if with_scores {
            for score in p.scores.as_ref().unwrap() {
                write!(out, ",{score}").map_err(io_err)?;
            }
        }
        writeln!(out).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<RankedPrediction>> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("subject_id") || headers.get(1) != Some("true") {
        return Err(Error::Schema(
            "predictions header must start with subject_id,true".into(),
        ));
    }
    let mut k = 0;
    while headers.get(2 + k) == Some(format!("rank{}", k + 1).as_str()) {
        k += 1;
    }
    if k == 0 {
        return Err(Error::Schema("no rank columns found".into()));
    }
    let with_scores = headers.get(2 + k) == Some("score1");
    let expected_len = 2 + k + if with_scores { k } else { 0 };
    if headers.len() != expected_len {
        return Err(Error::Schema(format!(
            "predictions header has {} columns, expected {expected_len}",
            headers.len()
        )));
    }

    let mut preds = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let ranking: Vec<String> = (0..k)
            .map(|r| row.get(2 + r).unwrap_or("").to_string())
            .collect();
        let scores = if with_scores {
            let parsed: Result<Vec<f64>> = (0..k)
                .map(|s| {
                    row.get(2 + k + s)
                        .unwrap_or("")
                        .parse::<f64>()
                        .map_err(|_| Error::Parse {
                            row: i + 1,
                            column: format!("score{}", s + 1),
                            message: "not a number".into(),
                        })
                })
                .collect();
            Some(parsed?)
        } else {
            None
        };
        preds.push(RankedPrediction {
            subject_id: row.get(0).unwrap_or("").to_string(),
            truth: row.get(1).unwrap_or("").to_string(),
            ranking,
            scores,
        });
    }
    Ok(preds)
}
