//! Lifespan trajectory estimation: per-population, per-structure
//! polynomial models of z-scored volume against age.
//!
//! Candidate degrees 1..=3 are screened by an F test against the constant
//! model and by per-coefficient t tests (non-intercept coefficients,
//! both at 0.05), then the surviving candidate with the smallest BIC is
//! selected. When nothing survives the model falls back to the constant.
//!
//! Control models are fitted on all controls; pathology models mix the
//! population's patients with controls younger than the shared age
//! threshold (the first centile of pooled patient ages, floored).

use std::path::Path;

use indexmap::IndexMap;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{PopulationPartition, STRUCTURE_COUNT};
use crate::error::{Error, Result};
use crate::normalize::{apply_normalization, NormalizationModel};
use crate::stats::{self, horner, FitResult};

const SCREEN_ALPHA: f64 = 0.05;

/// One selected polynomial trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryModel {
    pub structure: usize,
    pub degree: usize,
    /// Raw-age polynomial, intercept first.
    pub coefficients: Vec<f64>,
    pub n: usize,
    pub rss: f64,
    pub age_min: f64,
    pub age_max: f64,
}

impl TrajectoryModel {
    /// Evaluate at `age`; flags evaluation outside the fitted range.
    pub fn evaluate(&self, age: f64) -> (f64, bool) {
        let extrapolated = age < self.age_min || age > self.age_max;
        (horner(&self.coefficients, age), extrapolated)
    }
}

/// All trajectories for one tree configuration plus the shared threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanModelSet {
    pub format_version: u32,
    pub control: String,
    pub age_threshold: i32,
    /// Populations that form branches, in canonical (declaration) order.
    /// May or may not include the control.
    pub branches: Vec<String>,
    /// Fitted models per population (control always present).
    pub populations: IndexMap<String, Vec<TrajectoryModel>>,
    pub structure_names: Vec<String>,
}

/// Age/feature sample a population's trajectories are fitted on.
#[derive(Debug, Clone)]
pub struct FitSample {
    pub ages: Vec<f64>,
    /// n × 124 z-scores.
    pub z: Array2<f64>,
}

/// Floor of the first centile of pooled patient ages.
pub fn compute_age_threshold(patient_ages: &[f64]) -> Result<i32> {
    let p1 = stats::percentile(patient_ages, 0.01)?;
    Ok(p1.floor() as i32)
}

/// Assemble the fit sample for `population`: all controls for the control
/// population, otherwise its patients plus controls younger than the
/// threshold.
pub fn assemble_fit_sample(
    partition: &PopulationPartition,
    population: &str,
    model: &NormalizationModel,
    threshold: i32,
) -> Result<FitSample> {
    let group = partition.group(population)?;
    if group.is_empty() {
        return Err(Error::InsufficientData(format!(
            "population '{population}' has no subjects"
        )));
    }
    let mut ages = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut push = |records: &[crate::cohort::SubjectRecord]| -> Result<()> {
        for record in records {
            ages.push(record.age);
            rows.push(apply_normalization(record, model)?.z);
        }
        Ok(())
    };
    push(group)?;
    if population != partition.control() {
        if partition.control_group().is_empty() {
            return Err(Error::InsufficientData(format!(
                "pathology '{population}' needs control subjects for the young mixture"
            )));
        }
        let young: Vec<_> = partition
            .control_group()
            .iter()
            .filter(|r| r.age < threshold as f64)
            .cloned()
            .collect();
        push(&young)?;
    }
    let n = ages.len();
    let mut z = Array2::zeros((n, STRUCTURE_COUNT));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            z[[i, j]] = *v;
        }
    }
    Ok(FitSample { ages, z })
}

/// BIC in the Gaussian-likelihood form with the error variance absorbed.
fn bic(n: usize, rss: f64, k: usize) -> f64 {
    let nf = n as f64;
    nf * (rss / nf).ln() + k as f64 * nf.ln()
}

/// Fit one structure's trajectory: screen degrees 1..=3, select by BIC,
/// fall back to the constant model when no candidate survives.
pub fn fit_trajectory(ages: &[f64], values: &[f64], structure: usize) -> Result<TrajectoryModel> {
    let n = ages.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!(
            "trajectory fit needs at least 10 samples, got {n}"
        )));
    }

    let mut best: Option<(f64, FitResult)> = None;
    for degree in 1..=3usize {
        if n < degree + 2 {
            break;
        }
        let fit = stats::ols_polyfit(ages, values, degree)?;
        let f_p = stats::f_test_vs_constant(&fit, values)?;
        if f_p >= SCREEN_ALPHA {
            continue;
        }
        let coeffs_significant = (1..=degree).all(|j| fit.coefficient_pvalue(j) < SCREEN_ALPHA);
        if !coeffs_significant {
            continue;
        }
        let score = bic(n, fit.rss, degree + 1);
        let better = match &best {
            None => true,
            Some((current, _)) => score < *current,
        };
        if better {
            best = Some((score, fit));
        }
    }

    let fit = match best {
        Some((_, fit)) => fit,
        None => stats::ols_polyfit(ages, values, 0)?,
    };
    let age_min = ages.iter().cloned().fold(f64::INFINITY, f64::min);
    let age_max = ages.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(TrajectoryModel {
        structure,
        degree: fit.degree,
        coefficients: fit.coefficients,
        n,
        rss: fit.rss,
        age_min,
        age_max,
    })
}

/// Fit the full model set: threshold from pooled patient ages, then one
/// trajectory per (population, structure). Fits run in parallel per
/// structure; results are deterministic regardless of scheduling.
pub fn fit_model_set(
    partition: &PopulationPartition,
    model: &NormalizationModel,
    branches: &[String],
    structure_names: &[String],
) -> Result<LifespanModelSet> {
    let control = partition.control().to_string();
    for branch in branches {
        partition.group(branch)?;
    }

    let patient_ages: Vec<f64> = branches
        .iter()
        .filter(|b| **b != control)
        .flat_map(|b| partition.group(b).unwrap().iter().map(|r| r.age))
        .collect();
    if patient_ages.is_empty() {
        return Err(Error::InsufficientData(
            "no patient populations to pool the age threshold over".into(),
        ));
    }
    let age_threshold = compute_age_threshold(&patient_ages)?;

    // Control first so divergence always has a reference, then branches.
    let mut to_fit: Vec<String> = vec![control.clone()];
    for b in branches {
        if *b != control {
            to_fit.push(b.clone());
        }
    }

    let mut populations = IndexMap::new();
    for label in &to_fit {
        let sample = assemble_fit_sample(partition, label, model, age_threshold)?;
        let models: Result<Vec<TrajectoryModel>> = (0..STRUCTURE_COUNT)
            .into_par_iter()
            .map(|s| {
                let column: Vec<f64> = sample.z.column(s).to_vec();
                fit_trajectory(&sample.ages, &column, s)
            })
            .collect();
        populations.insert(label.clone(), models?);
    }

    Ok(LifespanModelSet {
        format_version: 1,
        control,
        age_threshold,
        branches: branches.to_vec(),
        populations,
        structure_names: structure_names.to_vec(),
    })
}

/// Evaluation of one population's 124 trajectories at an age.
#[derive(Debug, Clone)]
pub struct TrajectoryPoint {
    pub values: Vec<f64>,
    pub extrapolated: bool,
}

pub fn evaluate_trajectory(
    set: &LifespanModelSet,
    population: &str,
    age: f64,
) -> Result<TrajectoryPoint> {
    let models = set
        .populations
        .get(population)
        .ok_or_else(|| Error::Lookup(format!("population '{population}' not in model set")))?;
    let mut values = Vec::with_capacity(models.len());
    let mut extrapolated = false;
    for model in models {
        let (v, ex) = model.evaluate(age);
        values.push(v);
        extrapolated |= ex;
    }
    Ok(TrajectoryPoint {
        values,
        extrapolated,
    })
}

/// Per-structure |z_population − z_control| at an age; the value series
/// behind the divergence atlases.
pub fn divergence_from_control(
    set: &LifespanModelSet,
    population: &str,
    age: f64,
) -> Result<Vec<f64>> {
    let pop = evaluate_trajectory(set, population, age)?;
    let ctl = evaluate_trajectory(set, &set.control, age)?;
    Ok(pop
        .values
        .iter()
        .zip(&ctl.values)
        .map(|(p, c)| (p - c).abs())
        .collect())
}

impl LifespanModelSet {
    /// Branch age cap: floor of the population's maximum fit age.
    pub fn branch_cap(&self, population: &str) -> Result<i32> {
        let models = self.populations.get(population).ok_or_else(|| {
            Error::Lookup(format!("population '{population}' not in model set"))
        })?;
        Ok(models
            .first()
            .map(|m| m.age_max.floor() as i32)
            .unwrap_or(self.age_threshold))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<LifespanModelSet> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
