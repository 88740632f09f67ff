//! Ground-truth cohort generation for end-to-end checks.
//!
//! A cohort spec declares per-population z-score trajectories over age.
//! Subjects are drawn by adding unit-scale noise in z-space, then mapped
//! to raw volumes through declared control means/stds, a sex shift, and
//! a log-normal ICV draw, so that normalization inverts the construction
//! exactly in the zero-noise limit.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::cohort::{Sex, StructureManifest, SubjectRecord, STRUCTURE_COUNT};
use crate::error::{Error, Result};
use crate::normalize::{NormalizationModel, StructureNorm};
use crate::stats::{horner, labeled_stream_id, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub label: String,
    pub count: usize,
    pub age_range: (f64, f64),
    /// 124 polynomials in z-units over raw age, intercept first.
    pub trajectories: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub populations: Vec<PopulationSpec>,
    pub noise_std: f64,
    /// Male shift per structure in ICV-percent units.
    pub sex_effect_percent: Vec<f64>,
    /// Declared control mean per structure (ICV-percent).
    pub cn_mean_percent: Vec<f64>,
    /// Declared control std per structure (ICV-percent).
    pub cn_std_percent: Vec<f64>,
    pub icv_log_mean: f64,
    pub icv_log_std: f64,
    pub seed: u64,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.populations.is_empty() {
            return Err(Error::Validation("spec declares no populations".into()));
        }
        for pop in &self.populations {
            if pop.count == 0 {
                return Err(Error::Validation(format!(
                    "population '{}' has zero count",
                    pop.label
                )));
            }
            if !(pop.age_range.0 > 0.0 && pop.age_range.1 > pop.age_range.0) {
                return Err(Error::Validation(format!(
                    "population '{}' has invalid age range {:?}",
                    pop.label, pop.age_range
                )));
            }
            if pop.trajectories.len() != STRUCTURE_COUNT {
                return Err(Error::Validation(format!(
                    "population '{}' declares {} trajectories, need {STRUCTURE_COUNT}",
                    pop.label,
                    pop.trajectories.len()
                )));
            }
            for coefs in &pop.trajectories {
                if coefs.is_empty() || coefs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Validation(format!(
                        "population '{}' has a malformed trajectory",
                        pop.label
                    )));
                }
            }
        }
        let noise_ok = self.noise_std.is_finite() && self.noise_std >= 0.0;
        if !noise_ok {
            return Err(Error::Validation("noise_std must be >= 0".into()));
        }
        for (name, v) in [
            ("sex_effect_percent", &self.sex_effect_percent),
            ("cn_mean_percent", &self.cn_mean_percent),
            ("cn_std_percent", &self.cn_std_percent),
        ] {
            if v.len() != STRUCTURE_COUNT {
                return Err(Error::Validation(format!(
                    "{name} has {} entries, need {STRUCTURE_COUNT}",
                    v.len()
                )));
            }
        }
        if self.cn_std_percent.iter().any(|s| *s <= 0.0) {
            return Err(Error::Validation("cn_std_percent must be positive".into()));
        }
        Ok(())
    }

    /// The normalization model implied by the declared constants. Using
    /// it on a zero-noise cohort recovers the trajectories exactly.
    pub fn declared_normalization(&self, manifest: &StructureManifest) -> NormalizationModel {
        NormalizationModel {
            format_version: 1,
            structures: manifest
                .names()
                .iter()
                .enumerate()
                .map(|(s, name)| StructureNorm {
                    name: name.clone(),
                    sex_beta: self.sex_effect_percent[s],
                    sex_significant: self.sex_effect_percent[s] != 0.0,
                    cn_mean: self.cn_mean_percent[s],
                    cn_std: self.cn_std_percent[s],
                })
                .collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<CohortSpec> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let spec: CohortSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Generate the cohort: ages uniform over each population's range, sex a
/// fair coin, z = trajectory(age) + noise, volumes rebuilt through the
/// declared constants. Deterministic per seed.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Vec<SubjectRecord>> {
    spec.validate()?;
    let mut records = Vec::new();
    for pop in &spec.populations {
        for i in 0..pop.count {
            let mut rng = RngStream::new(
                spec.seed,
                labeled_stream_id("cohort", &pop.label, i as i64),
            );
            let age = rng.uniform_in(pop.age_range.0, pop.age_range.1);
            let sex = if rng.flip() { Sex::Male } else { Sex::Female };
            let male = f64::from(sex == Sex::Male);
            let icv = (spec.icv_log_mean + spec.icv_log_std * rng.normal()).exp();
            let volumes: Vec<f64> = (0..STRUCTURE_COUNT)
                .map(|s| {
                    let z = horner(&pop.trajectories[s], age) + spec.noise_std * rng.normal();
                    let percent = spec.cn_mean_percent[s]
                        + spec.cn_std_percent[s] * z
                        + spec.sex_effect_percent[s] * male;
                    (percent / 100.0 * icv).max(0.0)
                })
                .collect();
            records.push(SubjectRecord {
                subject_id: format!("{}-{i:04}", pop.label),
                age,
                sex,
                diagnosis: pop.label.clone(),
                icv,
                volumes,
            });
        }
    }
    Ok(records)
}

/// Ground-truth table: subject id → generating population.
pub fn oracle_labels(
    spec: &CohortSpec,
    records: &[SubjectRecord],
) -> Result<IndexMap<String, String>> {
    let declared: Vec<&str> = spec.populations.iter().map(|p| p.label.as_str()).collect();
    let mut table = IndexMap::new();
    for record in records {
        if !declared.contains(&record.diagnosis.as_str()) {
            return Err(Error::Validation(format!(
                "record '{}' carries label '{}' not generated by this spec",
                record.subject_id, record.diagnosis
            )));
        }
        if !record.subject_id.starts_with(&record.diagnosis) {
            return Err(Error::Validation(format!(
                "record '{}' does not originate from this generator",
                record.subject_id
            )));
        }
        table.insert(record.subject_id.clone(), record.diagnosis.clone());
    }
    Ok(table)
}

/// Desk-scale cohort shapes: a control with a mild linear decline from
/// 50y and `n_classes` disease-like populations with steeper quadratic
/// declines in disjoint structure blocks. `separation` is the
/// per-structure divergence (z-units) reached at the reference age.
pub struct DeskScaleConfig {
    pub n_classes: usize,
    pub separation: f64,
    pub subjects_per_class: usize,
    pub control_subjects: usize,
    pub control_label: String,
    pub patient_age_range: (f64, f64),
    pub control_age_range: (f64, f64),
    /// Age at which the divergence equals `separation`.
    pub reference_age: f64,
    pub onset_age: f64,
    pub seed: u64,
}

impl Default for DeskScaleConfig {
    fn default() -> DeskScaleConfig {
        DeskScaleConfig {
            n_classes: 4,
            separation: 2.0,
            subjects_per_class: 150,
            control_subjects: 300,
            control_label: "CN".into(),
            patient_age_range: (45.0, 90.0),
            control_age_range: (20.0, 90.0),
            reference_age: 65.0,
            onset_age: 45.0,
            seed: 0,
        }
    }
}

/// Build a desk-scale spec per the configuration.
pub fn desk_scale_spec(config: &DeskScaleConfig) -> CohortSpec {
    let k = config.n_classes.max(1);
    let block = STRUCTURE_COUNT / k;
    // Control decline: z = −0.015·(age − 50) beyond 50y, as a quadratic
    // basis cannot express the hinge; a gentle global linear stands in.
    let control_traj: Vec<Vec<f64>> = (0..STRUCTURE_COUNT)
        .map(|_| vec![0.45, -0.009])
        .collect();

    // Quadratic decline beyond onset for each class's structure block:
    //   z_p(age) = z_cn(age) − c·(age − onset)², with c set so the
    //   divergence hits `separation` at the reference age.
    let denom = (config.reference_age - config.onset_age).powi(2).max(1.0);
    let c = config.separation / denom;
    let onset = config.onset_age;

    let mut populations = Vec::new();
    populations.push(PopulationSpec {
        label: config.control_label.clone(),
        count: config.control_subjects,
        age_range: config.control_age_range,
        trajectories: control_traj.clone(),
    });
    for p in 0..k {
        let start = p * block;
        let end = if p == k - 1 {
            STRUCTURE_COUNT
        } else {
            start + block
        };
        let trajectories: Vec<Vec<f64>> = (0..STRUCTURE_COUNT)
            .map(|s| {
                if (start..end).contains(&s) {
                    // Expand −c(age − onset)² onto the raw-age basis and
                    // add the control's linear decline.
                    vec![
                        0.45 - c * onset * onset,
                        -0.009 + 2.0 * c * onset,
                        -c,
                    ]
                } else {
                    control_traj[s].clone()
                }
            })
            .collect();
        populations.push(PopulationSpec {
            label: format!("P{}", p + 1),
            count: config.subjects_per_class,
            age_range: config.patient_age_range,
            trajectories,
        });
    }

    // Means sized so even z ≈ −25 keeps ICV-percent positive (std is
    // mean/30), and a half-std male shift per structure.
    let cn_mean_percent: Vec<f64> = (0..STRUCTURE_COUNT)
        .map(|s| 0.05 + 0.006 * s as f64)
        .collect();
    let cn_std_percent: Vec<f64> = cn_mean_percent.iter().map(|m| m / 30.0).collect();
    let sex_effect_percent: Vec<f64> = cn_std_percent.iter().map(|s| 0.5 * s).collect();

    CohortSpec {
        populations,
        noise_std: 1.0,
        sex_effect_percent,
        cn_mean_percent,
        cn_std_percent,
        icv_log_mean: 14.152, // exp ≈ 1.4e6 mm³
        icv_log_std: 0.08,
        seed: config.seed,
    }
}
