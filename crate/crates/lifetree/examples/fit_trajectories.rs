//! Fit lifespan trajectories on a simulated cohort: normalization on
//! controls, screened polynomial selection per population and structure,
//! the pooled age threshold, and divergence-from-control values.
//!
//! ```bash
//! cargo run --example fit_trajectories
//! ```

use lifetree::cohort::{PopulationPartition, StructureManifest};
use lifetree::normalize::fit_normalization;
use lifetree::simulate::{desk_scale_spec, generate_cohort, DeskScaleConfig};
use lifetree::trajectory::{divergence_from_control, fit_model_set};

fn main() -> lifetree::Result<()> {
    let config = DeskScaleConfig {
        n_classes: 3,
        separation: 2.0,
        subjects_per_class: 120,
        control_subjects: 250,
        seed: 21,
        ..DeskScaleConfig::default()
    };
    let spec = desk_scale_spec(&config);
    let records = generate_cohort(&spec)?;
    let manifest = StructureManifest::canonical();

    let controls: Vec<_> = records
        .iter()
        .filter(|r| r.diagnosis == "CN")
        .cloned()
        .collect();
    let norm = fit_normalization(&controls, manifest)?;
    let flagged = norm.structures.iter().filter(|s| s.sex_significant).count();
    println!("sex effect flagged on {flagged}/124 structures");

    let labels: Vec<String> = spec.populations.iter().map(|p| p.label.clone()).collect();
    let branches: Vec<String> = labels.iter().filter(|l| *l != "CN").cloned().collect();
    let partition = PopulationPartition::new(&records, &labels, "CN")?;
    let set = fit_model_set(&partition, &norm, &branches, manifest.names())?;

    println!("age threshold: {} years", set.age_threshold);
    for (label, models) in &set.populations {
        let mut by_degree = [0usize; 4];
        for model in models {
            by_degree[model.degree] += 1;
        }
        println!(
            "  {label:<4} selected degrees: constant {}, linear {}, quadratic {}, cubic {}",
            by_degree[0], by_degree[1], by_degree[2], by_degree[3]
        );
    }

    for label in &branches {
        for age in [60.0, 70.0, 80.0, 90.0] {
            let divergence = divergence_from_control(&set, label, age)?;
            let max = divergence.iter().cloned().fold(0.0, f64::max);
            let mean = divergence.iter().sum::<f64>() / divergence.len() as f64;
            println!("  {label} at {age:.0}y: mean |Δz| {mean:.2}, max {max:.2}");
        }
    }
    Ok(())
}
