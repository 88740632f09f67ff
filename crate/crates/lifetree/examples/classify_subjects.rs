//! End-to-end classification: train the pipeline on one cohort, project
//! held-out subjects into the tree, and print their ranked scores.
//!
//! ```bash
//! cargo run --example classify_subjects
//! ```

use lifetree::cohort::{PopulationPartition, StructureManifest};
use lifetree::embed::{fit_umap, UmapParams};
use lifetree::normalize::fit_normalization;
use lifetree::sampling::training_pool;
use lifetree::simulate::{desk_scale_spec, generate_cohort, DeskScaleConfig};
use lifetree::trajectory::fit_model_set;
use lifetree::tree::{build_tree, classify, DistanceRule};

fn main() -> lifetree::Result<()> {
    let config = DeskScaleConfig {
        n_classes: 3,
        separation: 2.0,
        subjects_per_class: 100,
        control_subjects: 250,
        seed: 55,
        ..DeskScaleConfig::default()
    };
    let train_spec = desk_scale_spec(&config);
    let mut test_spec = train_spec.clone();
    test_spec.populations.retain(|p| p.label != "CN");
    for population in &mut test_spec.populations {
        population.count = 5;
        population.age_range = (65.0, 88.0);
    }
    test_spec.seed = 56;

    let manifest = StructureManifest::canonical();
    let train = generate_cohort(&train_spec)?;
    let test = generate_cohort(&test_spec)?;

    let controls: Vec<_> = train
        .iter()
        .filter(|r| r.diagnosis == "CN")
        .cloned()
        .collect();
    let norm = fit_normalization(&controls, manifest)?;
    let labels: Vec<String> = train_spec.populations.iter().map(|p| p.label.clone()).collect();
    let branches: Vec<String> = labels.iter().filter(|l| *l != "CN").cloned().collect();
    let partition = PopulationPartition::new(&train, &labels, "CN")?;
    let set = fit_model_set(&partition, &norm, &branches, manifest.names())?;
    let samples = training_pool(&set, 20, 55)?;
    let model = fit_umap(&samples.matrix(), &UmapParams::for_populations(branches.len(), 55))?;
    let tree = build_tree(&set, &model, &samples)?;

    let mut correct = 0;
    for record in &test {
        let result = classify(&tree, &norm, &model, record, DistanceRule::Polyline)?;
        let hit = result.ranking[0] == record.diagnosis;
        correct += usize::from(hit);
        let scores: Vec<String> = result
            .ranking
            .iter()
            .zip(&result.ranked_scores)
            .map(|(label, score)| format!("{label} {score:.3}"))
            .collect();
        println!(
            "{} (true {}, age {:.0}): {} {}",
            result.subject_id,
            record.diagnosis,
            record.age,
            scores.join(" | "),
            if hit { "" } else { "  <- miss" }
        );
    }
    println!(
        "top-1 accuracy: {correct}/{} on held-out subjects",
        test.len()
    );
    Ok(())
}
