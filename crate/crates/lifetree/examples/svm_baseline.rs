//! Compare the tree classifier against the one-vs-one SVM/ECOC baseline
//! on the same simulated cohort, with a paired bootstrap p-value on the
//! top-1 balanced accuracy difference.
//!
//! ```bash
//! cargo run --example svm_baseline
//! ```

use lifetree::baseline::{predict_ecoc, train_ecoc};
use lifetree::cohort::{PopulationPartition, StructureManifest};
use lifetree::embed::{fit_umap, UmapParams};
use lifetree::eval::{bacc_metric, paired_bootstrap_pvalue, topk_bacc, RankedPrediction};
use lifetree::normalize::{apply_normalization, fit_normalization};
use lifetree::sampling::training_pool;
use lifetree::simulate::{desk_scale_spec, generate_cohort, DeskScaleConfig};
use lifetree::trajectory::fit_model_set;
use lifetree::tree::{build_tree, classify, DistanceRule};
use ndarray::Array2;

fn main() -> lifetree::Result<()> {
    let config = DeskScaleConfig {
        n_classes: 4,
        separation: 1.0, // mild separation keeps the comparison interesting
        subjects_per_class: 120,
        control_subjects: 250,
        seed: 77,
        ..DeskScaleConfig::default()
    };
    let train_spec = desk_scale_spec(&config);
    let mut test_spec = train_spec.clone();
    test_spec.populations.retain(|p| p.label != "CN");
    for population in &mut test_spec.populations {
        population.count = 60;
        population.age_range = (55.0, 90.0);
    }
    test_spec.seed = 78;

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

    // Tree classifier.
    let partition = PopulationPartition::new(&train, &labels, "CN")?;
    let set = fit_model_set(&partition, &norm, &branches, manifest.names())?;
    let samples = training_pool(&set, 20, 77)?;
    let model = fit_umap(&samples.matrix(), &UmapParams::for_populations(branches.len(), 77))?;
    let tree = build_tree(&set, &model, &samples)?;
    let tree_preds: Vec<RankedPrediction> = test
        .iter()
        .map(|record| {
            let result = classify(&tree, &norm, &model, record, DistanceRule::Polyline)?;
            Ok(RankedPrediction {
                subject_id: record.subject_id.clone(),
                truth: record.diagnosis.clone(),
                ranking: result.ranking,
                scores: Some(result.ranked_scores),
            })
        })
        .collect::<lifetree::Result<_>>()?;

    // Baseline on the same normalized features.
    let features = |records: &[lifetree::cohort::SubjectRecord]| -> lifetree::Result<Array2<f64>> {
        let mut x = Array2::zeros((records.len(), 124));
        for (i, record) in records.iter().enumerate() {
            let f = apply_normalization(record, &norm)?;
            for (j, z) in f.z.iter().enumerate() {
                x[[i, j]] = *z;
            }
        }
        Ok(x)
    };
    let baseline_train: Vec<_> = train
        .iter()
        .filter(|r| branches.contains(&r.diagnosis))
        .cloned()
        .collect();
    let x_train = features(&baseline_train)?;
    let y_train: Vec<String> = baseline_train.iter().map(|r| r.diagnosis.clone()).collect();
    let ecoc = train_ecoc(x_train.view(), &y_train, &branches, 1.0)?;
    println!(
        "baseline: {} pairwise learners over {} classes",
        ecoc.learners.len(),
        branches.len()
    );

    let x_test = features(&test)?;
    let svm_preds: Vec<RankedPrediction> = test
        .iter()
        .enumerate()
        .map(|(i, record)| {
            let row: Vec<f64> = x_test.row(i).to_vec();
            let pred = predict_ecoc(&ecoc, &row)?;
            Ok(RankedPrediction {
                subject_id: record.subject_id.clone(),
                truth: record.diagnosis.clone(),
                ranking: pred.ranking,
                scores: Some(pred.scores),
            })
        })
        .collect::<lifetree::Result<_>>()?;

    for k in 1..=2 {
        let tree_bacc = topk_bacc(&tree_preds, k, &branches)?.bacc;
        let svm_bacc = topk_bacc(&svm_preds, k, &branches)?.bacc;
        println!(
            "top-{k}: tree BACC {:.1}%, baseline BACC {:.1}%",
            100.0 * tree_bacc,
            100.0 * svm_bacc
        );
    }
    let p = paired_bootstrap_pvalue(
        &tree_preds,
        &svm_preds,
        bacc_metric(1, branches.clone()),
        10_000,
        5,
    )?;
    println!("paired bootstrap p-value (top-1 BACC difference): {p:.4}");
    Ok(())
}
