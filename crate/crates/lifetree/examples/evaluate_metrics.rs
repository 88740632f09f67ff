//! Metrics on ranked predictions: top-k sensitivity and balanced
//! accuracy with stratified bootstrap intervals, and class-merged binary
//! metrics.
//!
//! ```bash
//! cargo run --example evaluate_metrics
//! ```

use indexmap::IndexMap;
use lifetree::eval::{
    bacc_metric, bootstrap_ci, merge_classes, topk_bacc, MergeRule, RankedPrediction,
};
use lifetree::stats::RngStream;

/// A synthetic 4-class prediction set with class-dependent difficulty.
fn synthetic_predictions(n_per_class: usize, seed: u64) -> (Vec<RankedPrediction>, Vec<String>) {
    let labels: Vec<String> = ["CN", "D1", "D2", "D3"].iter().map(|s| s.to_string()).collect();
    let accuracy = [0.85, 0.6, 0.45, 0.7];
    let mut rng = RngStream::new(seed, 0);
    let mut preds = Vec::new();
    for (c, label) in labels.iter().enumerate() {
        for i in 0..n_per_class {
            let mut ranking = labels.clone();
            if rng.uniform() < accuracy[c] {
                ranking.swap(0, c);
            } else {
                // Wrong top-1: another class first, the truth at a
                // random later position.
                let other = (c + 1 + rng.index(labels.len() - 1)) % labels.len();
                ranking.swap(0, other);
                let truth_pos = ranking.iter().position(|l| l == label).unwrap();
                let target = 1 + rng.index(labels.len() - 1);
                ranking.swap(truth_pos, target);
            }
            preds.push(RankedPrediction {
                subject_id: format!("{label}-{i}"),
                truth: label.clone(),
                ranking,
                scores: None,
            });
        }
    }
    (preds, labels)
}

fn main() -> lifetree::Result<()> {
    let (preds, labels) = synthetic_predictions(120, 99);

    for k in 1..=3 {
        let report = topk_bacc(&preds, k, &labels)?;
        let ci = bootstrap_ci(&preds, bacc_metric(k, labels.clone()), 10_000, 0.95, 7)?;
        println!(
            "top-{k}: BACC {:.1}% [{:.1}, {:.1}]",
            100.0 * report.bacc,
            100.0 * ci.lower,
            100.0 * ci.upper
        );
        for (label, sensitivity, count) in &report.per_class {
            println!("    {label:<3} sensitivity {:.1}% (n = {count})", 100.0 * sensitivity);
        }
    }

    // Patients-vs-control merge.
    let map: IndexMap<String, String> = labels
        .iter()
        .map(|l| {
            let target = if l == "CN" { "CN" } else { "patient" };
            (l.clone(), target.to_string())
        })
        .collect();
    let merged = merge_classes(&preds, &labels, &map, MergeRule::Argmax)?;
    println!(
        "merged patient-vs-CN: SEN {:.1}%, SPE {:.1}%, BACC {:.1}%",
        100.0 * merged.sensitivity("patient").unwrap(),
        100.0 * merged.sensitivity("CN").unwrap(),
        100.0 * merged.bacc
    );
    Ok(())
}
