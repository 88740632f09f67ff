//! Volume normalization: ICV-percent scaling, sex-effect correction, and
//! z-scoring against the control population.
//!
//! The per-structure pipeline is fixed as ICV-percent → sex-correct →
//! z-score. The sex model is a linear fit of ICV-percent volume on a male
//! indicator over controls only; the correction is applied only when the
//! slope is significant at 0.05.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cohort::{Sex, StructureManifest, SubjectRecord, STRUCTURE_COUNT};
use crate::error::{Error, Result};
use crate::stats;

const SEX_EFFECT_ALPHA: f64 = 0.05;

/// Per-structure normalization parameters estimated on controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureNorm {
    pub name: String,
    /// Male shift in ICV-percent units; 0 when not significant.
    pub sex_beta: f64,
    pub sex_significant: bool,
    pub cn_mean: f64,
    pub cn_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationModel {
    pub format_version: u32,
    pub structures: Vec<StructureNorm>,
}

/// A normalized feature vector: 124 z-scores. `sex_unknown` flags that no
/// sex correction could be applied.
#[derive(Debug, Clone)]
pub struct Features {
    pub z: Vec<f64>,
    pub sex_unknown: bool,
}

impl NormalizationModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<NormalizationModel> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn icv_percent(record: &SubjectRecord, structure: usize) -> f64 {
    100.0 * record.volumes[structure] / record.icv
}

/// Fit the normalization model on control records.
///
/// Requires at least 10 controls with both sexes present. Errors if any
/// structure ends up with zero variance after correction.
pub fn fit_normalization(
    cn_records: &[SubjectRecord],
    manifest: &StructureManifest,
) -> Result<NormalizationModel> {
    let n = cn_records.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!(
            "normalization needs at least 10 control records, got {n}"
        )));
    }
    let n_male = cn_records.iter().filter(|r| r.sex == Sex::Male).count();
    let n_female = cn_records.iter().filter(|r| r.sex == Sex::Female).count();
    if n_male == 0 || n_female == 0 {
        return Err(Error::SexModel(format!(
            "both sexes required to fit the sex model (male = {n_male}, female = {n_female})"
        )));
    }
    if n_male + n_female < n {
        return Err(Error::SexModel(
            "control records with unknown sex cannot enter the sex model".into(),
        ));
    }

    let mut structures = Vec::with_capacity(STRUCTURE_COUNT);
    for (s, name) in manifest.names().iter().enumerate() {
        let values: Vec<f64> = cn_records.iter().map(|r| icv_percent(r, s)).collect();
        let (beta, p) = sex_slope(&values, cn_records, n_male, n_female);
        let significant = p < SEX_EFFECT_ALPHA;
        let beta = if significant { beta } else { 0.0 };

        let corrected: Vec<f64> = values
            .iter()
            .zip(cn_records)
            .map(|(v, r)| v - beta * f64::from(r.sex == Sex::Male))
            .collect();
        let mean = corrected.iter().sum::<f64>() / n as f64;
        let var = corrected.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        let std_ok = std.is_finite() && std > 0.0;
        if !std_ok {
            return Err(Error::DegenerateStructure(name.clone()));
        }
        structures.push(StructureNorm {
            name: name.clone(),
            sex_beta: beta,
            sex_significant: significant,
            cn_mean: mean,
            cn_std: std,
        });
    }
    Ok(NormalizationModel {
        format_version: 1,
        structures,
    })
}

/// Two-group slope (male mean − female mean) with its two-sided p-value
/// from the pooled-variance t statistic.
fn sex_slope(
    values: &[f64],
    records: &[SubjectRecord],
    n_male: usize,
    n_female: usize,
) -> (f64, f64) {
    let mut sum_m = 0.0;
    let mut sum_f = 0.0;
    for (v, r) in values.iter().zip(records) {
        if r.sex == Sex::Male {
            sum_m += v;
        } else {
            sum_f += v;
        }
    }
    let mean_m = sum_m / n_male as f64;
    let mean_f = sum_f / n_female as f64;
    let beta = mean_m - mean_f;

    let mut rss = 0.0;
    for (v, r) in values.iter().zip(records) {
        let mu = if r.sex == Sex::Male { mean_m } else { mean_f };
        rss += (v - mu) * (v - mu);
    }
    let df = (n_male + n_female - 2) as u64;
    let se = (rss / df as f64 * (1.0 / n_male as f64 + 1.0 / n_female as f64)).sqrt();
    let p = if se == 0.0 {
        if beta == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        stats::t_pvalue(beta / se, df)
    };
    (beta, p)
}

/// Normalize one subject into the 124-dimensional z-score vector.
pub fn apply_normalization(
    record: &SubjectRecord,
    model: &NormalizationModel,
) -> Result<Features> {
    let icv_ok = record.icv.is_finite() && record.icv > 0.0;
    if !icv_ok {
        return Err(Error::Domain(format!(
            "subject '{}' has non-positive ICV",
            record.subject_id
        )));
    }
    if record.volumes.len() != model.structures.len() {
        return Err(Error::Validation(format!(
            "subject '{}' carries {} volumes, model expects {}",
            record.subject_id,
            record.volumes.len(),
            model.structures.len()
        )));
    }
    let male = f64::from(record.sex == Sex::Male);
    let z = model
        .structures
        .iter()
        .enumerate()
        .map(|(s, norm)| {
            let v = icv_percent(record, s);
            ((v - norm.sex_beta * male) - norm.cn_mean) / norm.cn_std
        })
        .collect();
    Ok(Features {
        z,
        sex_unknown: record.sex == Sex::Unknown,
    })
}
