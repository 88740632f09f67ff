//! Shared helpers for the integration and acceptance suites.
//!
//! Each test binary links this module separately, so helpers unused by
//! one binary are expected.
#![allow(dead_code)]

use lifetree::cohort::{PopulationPartition, StructureManifest};
use lifetree::embed::{fit_umap, EmbeddingModel, UmapParams};
use lifetree::eval::RankedPrediction;
use lifetree::normalize::{fit_normalization, NormalizationModel};
use lifetree::sampling::training_pool;
use lifetree::simulate::{generate_cohort, CohortSpec};
use lifetree::trajectory::{fit_model_set, LifespanModelSet};
use lifetree::tree::{build_tree, classify, DistanceRule, LifespanTree};
use ndarray::Array2;

pub struct PipelineOutput {
    pub branches: Vec<String>,
    pub norm: NormalizationModel,
    pub set: LifespanModelSet,
    pub embedding: EmbeddingModel,
    pub tree: LifespanTree,
    pub predictions: Vec<RankedPrediction>,
}

/// Train the full pipeline on `train_spec`'s cohort and classify
/// `test_spec`'s cohort. Branch labels are the non-control populations
/// of the training spec, in declaration order.
pub fn run_pipeline(
    train_spec: &CohortSpec,
    test_spec: &CohortSpec,
    control: &str,
    samples_per_year: usize,
    umap_seed: u64,
) -> PipelineOutput {
    let manifest = StructureManifest::canonical();
    let train = generate_cohort(train_spec).expect("train cohort");
    let test = generate_cohort(test_spec).expect("test cohort");

    let controls: Vec<_> = train
        .iter()
        .filter(|r| r.diagnosis == control)
        .cloned()
        .collect();
    let norm = fit_normalization(&controls, manifest).expect("normalization");

    let labels: Vec<String> = train_spec
        .populations
        .iter()
        .map(|p| p.label.clone())
        .collect();
    let branches: Vec<String> = labels.iter().filter(|l| *l != control).cloned().collect();
    let partition = PopulationPartition::new(&train, &labels, control).expect("partition");
    let set =
        fit_model_set(&partition, &norm, &branches, manifest.names()).expect("trajectories");

    let samples = training_pool(&set, samples_per_year, umap_seed).expect("samples");
    let params = UmapParams::for_populations(set.branches.len(), umap_seed);
    let embedding = fit_umap(&samples.matrix(), &params).expect("embedding");
    let tree = build_tree(&set, &embedding, &samples).expect("tree");

    let predictions: Vec<RankedPrediction> = test
        .iter()
        .map(|record| {
            let result =
                classify(&tree, &norm, &embedding, record, DistanceRule::Polyline)
                    .expect("classification");
            RankedPrediction {
                subject_id: result.subject_id,
                truth: record.diagnosis.clone(),
                ranking: result.ranking,
                scores: Some(result.ranked_scores),
            }
        })
        .collect();

    PipelineOutput {
        branches,
        norm,
        set,
        embedding,
        tree,
        predictions,
    }
}

/// A test-cohort spec derived from a training spec: same trajectories,
/// different counts, ages, and seed; the control population is dropped.
pub fn test_spec_from(
    train: &CohortSpec,
    control: &str,
    count: usize,
    age_range: (f64, f64),
    seed: u64,
) -> CohortSpec {
    let mut spec = train.clone();
    spec.populations.retain(|p| p.label != control);
    for population in &mut spec.populations {
        population.count = count;
        population.age_range = age_range;
    }
    spec.seed = seed;
    spec
}

/// Mean silhouette coefficient of a 2D embedding under known labels.
#[allow(clippy::needless_range_loop)]
pub fn silhouette(embedding: &Array2<f64>, labels: &[usize]) -> f64 {
    let n = embedding.nrows();
    let dist = |i: usize, j: usize| -> f64 {
        ((embedding[[i, 0]] - embedding[[j, 0]]).powi(2)
            + (embedding[[i, 1]] - embedding[[j, 1]]).powi(2))
        .sqrt()
    };
    let classes: Vec<usize> = {
        let mut c = labels.to_vec();
        c.sort_unstable();
        c.dedup();
        c
    };
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![(0.0f64, 0usize); classes.len()];
        for j in 0..n {
            if i == j {
                continue;
            }
            let c = classes.iter().position(|&x| x == labels[j]).unwrap();
            sums[c].0 += dist(i, j);
            sums[c].1 += 1;
        }
        let own = classes.iter().position(|&x| x == labels[i]).unwrap();
        let a = sums[own].0 / sums[own].1.max(1) as f64;
        let b = sums
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != own)
            .map(|(_, (s, m))| s / (*m).max(1) as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}
