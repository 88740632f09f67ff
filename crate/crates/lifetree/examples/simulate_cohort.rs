//! Generate a synthetic cohort with known ground truth and write it in
//! the subjects CSV schema.
//!
//! ```bash
//! cargo run --example simulate_cohort
//! ```

use lifetree::cohort::{save_subjects, StructureManifest};
use lifetree::simulate::{desk_scale_spec, generate_cohort, oracle_labels, DeskScaleConfig};

fn main() -> lifetree::Result<()> {
    let config = DeskScaleConfig {
        n_classes: 3,
        separation: 2.0,
        subjects_per_class: 60,
        control_subjects: 150,
        seed: 7,
        ..DeskScaleConfig::default()
    };
    let spec = desk_scale_spec(&config);
    let records = generate_cohort(&spec)?;
    let truth = oracle_labels(&spec, &records)?;

    let out_dir = std::path::Path::new("target/example-output/simulate_cohort");
    std::fs::create_dir_all(out_dir).expect("create output dir");
    let path = out_dir.join("cohort.csv");
    save_subjects(&path, &records, StructureManifest::canonical())?;

    println!("wrote {} subjects to {}", records.len(), path.display());
    for population in &spec.populations {
        let count = truth.values().filter(|l| **l == population.label).count();
        let ages: Vec<f64> = records
            .iter()
            .filter(|r| r.diagnosis == population.label)
            .map(|r| r.age)
            .collect();
        let (lo, hi) = ages.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &a| {
            (lo.min(a), hi.max(a))
        });
        println!("  {:<4} n = {count:>4}, ages {lo:.0}..{hi:.0}", population.label);
    }
    Ok(())
}
