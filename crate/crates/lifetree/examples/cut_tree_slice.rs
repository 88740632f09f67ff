//! Cut the tree at one age and export the slice as CSV and SVG: branch
//! points, synthetic cloud, and projected test subjects inside the
//! window.
//!
//! ```bash
//! cargo run --example cut_tree_slice
//! ```

use lifetree::cohort::{PopulationPartition, StructureManifest};
use lifetree::embed::{fit_umap, UmapParams};
use lifetree::normalize::fit_normalization;
use lifetree::sampling::training_pool;
use lifetree::simulate::{desk_scale_spec, generate_cohort, DeskScaleConfig};
use lifetree::trajectory::fit_model_set;
use lifetree::tree::{
    build_tree, classify, cut_tree, write_slice_csv, write_slice_svg, DistanceRule, TestPoint,
};

fn main() -> lifetree::Result<()> {
    let config = DeskScaleConfig {
        n_classes: 3,
        separation: 2.0,
        subjects_per_class: 100,
        control_subjects: 250,
        seed: 60,
        ..DeskScaleConfig::default()
    };
    let train_spec = desk_scale_spec(&config);
    let mut test_spec = train_spec.clone();
    test_spec.populations.retain(|p| p.label != "CN");
    for population in &mut test_spec.populations {
        population.count = 25;
        population.age_range = (56.0, 64.0);
    }
    test_spec.seed = 61;

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
    let samples = training_pool(&set, 20, 60)?;
    let model = fit_umap(&samples.matrix(), &UmapParams::for_populations(branches.len(), 60))?;
    let tree = build_tree(&set, &model, &samples)?;

    let test_points: Vec<TestPoint> = test
        .iter()
        .map(|record| {
            let result = classify(&tree, &norm, &model, record, DistanceRule::Polyline)?;
            Ok(TestPoint {
                label: record.diagnosis.clone(),
                age: record.age,
                x: result.x,
                y: result.y,
            })
        })
        .collect::<lifetree::Result<_>>()?;

    // The slice keeps everything within ±2 years of the cut age.
    let rows = cut_tree(&tree, 60.0, 2.0, &test_points)?;
    let out_dir = std::path::Path::new("target/example-output/cut_tree_slice");
    std::fs::create_dir_all(out_dir).expect("create output dir");
    let csv_path = out_dir.join("slice_60y.csv");
    let svg_path = out_dir.join("slice_60y.svg");
    write_slice_csv(&csv_path, &rows)?;
    write_slice_svg(&svg_path, &rows)?;
    println!(
        "cut at 60y ± 2y: {} rows ({} branch, {} cloud, {} test)",
        rows.len(),
        rows.iter().filter(|r| matches!(r.kind, lifetree::tree::SliceKind::Branch)).count(),
        rows.iter().filter(|r| matches!(r.kind, lifetree::tree::SliceKind::Cloud)).count(),
        rows.iter().filter(|r| matches!(r.kind, lifetree::tree::SliceKind::Test)).count(),
    );
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}
