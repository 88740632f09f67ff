//! Multiclass baseline: one-vs-one linear SVMs combined through an
//! error-correcting output codes scheme with loss-weighted decoding.
//!
//! Features are standardized inside the model (training mean/std). Each
//! unordered label pair gets one binary learner; a class's score is the
//! negated mean hinge loss of its columns evaluated on the learners'
//! continuous margins, so predictions come out as a full ranking.

mod svm;

pub use svm::{train_svm, SvmModel, SvmParams};

use std::path::Path;

use indexmap::IndexMap;
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One column of the coding matrix: the positive and negative class of a
/// pairwise learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingColumn {
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcocModel {
    pub format_version: u32,
    pub labels: Vec<String>,
    pub columns: Vec<CodingColumn>,
    pub learners: Vec<SvmModel>,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub c: f64,
}

/// A ranked multiclass prediction with per-class scores.
#[derive(Debug, Clone)]
pub struct EcocPrediction {
    /// Labels by descending score, ties broken by declaration order.
    pub ranking: Vec<String>,
    /// Scores aligned with `ranking`.
    pub scores: Vec<f64>,
}

/// Train the one-vs-one ECOC model. `labels[i]` is the class of row i;
/// the declared label order fixes the coding matrix and tie-breaks.
pub fn train_ecoc(
    x: ArrayView2<'_, f64>,
    labels: &[String],
    class_order: &[String],
    c: f64,
) -> Result<EcocModel> {
    let n = x.nrows();
    if n != labels.len() {
        return Err(Error::Domain(format!(
            "{n} rows but {} labels",
            labels.len()
        )));
    }
    let k = class_order.len();
    if k < 2 {
        return Err(Error::Domain("need at least two classes".into()));
    }
    let mut index_of: IndexMap<&str, usize> = IndexMap::new();
    for (i, label) in class_order.iter().enumerate() {
        if index_of.insert(label.as_str(), i).is_some() {
            return Err(Error::Validation(format!("duplicate class '{label}'")));
        }
    }
    let mut rows_by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (row, label) in labels.iter().enumerate() {
        let class = *index_of
            .get(label.as_str())
            .ok_or_else(|| Error::Validation(format!("label '{label}' not in class order")))?;
        rows_by_class[class].push(row);
    }
    for (class, rows) in rows_by_class.iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "class '{}' has {} samples; at least 2 required",
                class_order[class],
                rows.len()
            )));
        }
    }

    let d = x.ncols();
    let mut feature_means = vec![0.0f64; d];
    for row in x.rows() {
        for (m, v) in feature_means.iter_mut().zip(row) {
            *m += v;
        }
    }
    feature_means.iter_mut().for_each(|m| *m /= n as f64);
    let mut feature_stds = vec![0.0f64; d];
    for row in x.rows() {
        for (s, (v, m)) in feature_stds.iter_mut().zip(row.iter().zip(&feature_means)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in feature_stds.iter_mut() {
        *s = (*s / (n - 1).max(1) as f64).sqrt();
        if *s == 0.0 {
            // Constant columns carry no signal; keep them inert.
            *s = 1.0;
        }
    }

    let standardized: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            x.row(i)
                .iter()
                .zip(feature_means.iter().zip(&feature_stds))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();

    let mut columns = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            columns.push(CodingColumn {
                positive: a,
                negative: b,
            });
        }
    }

    let learners: Result<Vec<SvmModel>> = columns
        .par_iter()
        .map(|col| {
            let rows: Vec<usize> = rows_by_class[col.positive]
                .iter()
                .chain(rows_by_class[col.negative].iter())
                .cloned()
                .collect();
            let mut sub = Array2::zeros((rows.len(), d));
            let mut y = Vec::with_capacity(rows.len());
            for (r, &row) in rows.iter().enumerate() {
                for (cix, v) in standardized[row].iter().enumerate() {
                    sub[[r, cix]] = *v;
                }
                y.push(if rows_by_class[col.positive].contains(&row) {
                    1.0
                } else {
                    -1.0
                });
            }
            train_svm(
                sub.view(),
                &y,
                SvmParams {
                    c,
                    ..SvmParams::default()
                },
            )
        })
        .collect();

    Ok(EcocModel {
        format_version: 1,
        labels: class_order.to_vec(),
        columns,
        learners: learners?,
        feature_means,
        feature_stds,
        c,
    })
}

/// Binary hinge loss on a continuous margin, halved per the loss-weighted
/// decoding convention.
fn hinge(z: f64) -> f64 {
    (1.0 - z).max(0.0) / 2.0
}

/// Rank all classes for one input.
pub fn predict_ecoc(model: &EcocModel, x: &[f64]) -> Result<EcocPrediction> {
    if x.len() != model.feature_means.len() {
        return Err(Error::Validation(format!(
            "input has {} features, model expects {}",
            x.len(),
            model.feature_means.len()
        )));
    }
    let standardized: Vec<f64> = x
        .iter()
        .zip(model.feature_means.iter().zip(&model.feature_stds))
        .map(|(v, (m, s))| (v - m) / s)
        .collect();

    let margins: Vec<f64> = model
        .learners
        .iter()
        .map(|l| l.decision(&standardized))
        .collect();

    let k = model.labels.len();
    let mut loss_sum = vec![0.0f64; k];
    let mut loss_count = vec![0usize; k];
    for (col, margin) in model.columns.iter().zip(&margins) {
        loss_sum[col.positive] += hinge(*margin);
        loss_count[col.positive] += 1;
        loss_sum[col.negative] += hinge(-margin);
        loss_count[col.negative] += 1;
    }
    let scores: Vec<f64> = loss_sum
        .iter()
        .zip(&loss_count)
        .map(|(s, c)| -s / (*c).max(1) as f64)
        .collect();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    Ok(EcocPrediction {
        ranking: order.iter().map(|&i| model.labels[i].clone()).collect(),
        scores: order.iter().map(|&i| scores[i]).collect(),
    })
}

impl EcocModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<EcocModel> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
