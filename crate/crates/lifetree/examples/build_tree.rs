//! Build the 3D tree: synthetic samples along each branch trajectory,
//! the 2D embedding, and branch polylines with age as the third axis.
//! Writes the tree geometry JSON.
//!
//! ```bash
//! cargo run --example build_tree
//! ```

use lifetree::cohort::{PopulationPartition, StructureManifest};
use lifetree::embed::{fit_umap, UmapParams};
use lifetree::normalize::fit_normalization;
use lifetree::sampling::training_pool;
use lifetree::simulate::{desk_scale_spec, generate_cohort, DeskScaleConfig};
use lifetree::trajectory::fit_model_set;
use lifetree::tree::build_tree;

fn main() -> lifetree::Result<()> {
    let config = DeskScaleConfig {
        n_classes: 4,
        separation: 2.0,
        subjects_per_class: 100,
        control_subjects: 250,
        seed: 33,
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
    let labels: Vec<String> = spec.populations.iter().map(|p| p.label.clone()).collect();
    let branches: Vec<String> = labels.iter().filter(|l| *l != "CN").cloned().collect();
    let partition = PopulationPartition::new(&records, &labels, "CN")?;
    let set = fit_model_set(&partition, &norm, &branches, manifest.names())?;

    let samples = training_pool(&set, 20, 33)?;
    println!(
        "training pool: {} samples over years {}..",
        samples.rows.len(),
        set.age_threshold
    );

    let params = UmapParams::for_populations(set.branches.len(), 33);
    println!(
        "fitting embedding with n_neighbors = {} (10 × {} populations)",
        params.n_neighbors,
        set.branches.len()
    );
    let model = fit_umap(&samples.matrix(), &params)?;
    let tree = build_tree(&set, &model, &samples)?;

    for branch in &tree.branches {
        let (first, last) = (branch.points.first().unwrap(), branch.points.last().unwrap());
        println!(
            "  branch {:<4} years {}..{}, tip at ({:.2}, {:.2})",
            branch.label, first.0, last.0, last.1, last.2
        );
    }
    println!("trunk points: {}", tree.trunk.len());

    let out_dir = std::path::Path::new("target/example-output/build_tree");
    std::fs::create_dir_all(out_dir).expect("create output dir");
    let path = out_dir.join("tree.json");
    tree.save(&path)?;
    println!("geometry written to {}", path.display());
    Ok(())
}
