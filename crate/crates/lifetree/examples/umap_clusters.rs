//! The embedding module on its own: three Gaussian clusters in 124
//! dimensions reduced to 2D, then out-of-sample points projected into
//! the fitted space.
//!
//! ```bash
//! cargo run --example umap_clusters
//! ```

use lifetree::embed::{fit_umap, transform, UmapParams};
use lifetree::stats::RngStream;
use ndarray::Array2;

fn main() -> lifetree::Result<()> {
    let dims = 124;
    let per_cluster = 80;
    let mut rng = RngStream::new(3, 0);
    let mut data = Array2::zeros((3 * per_cluster, dims));
    for c in 0..3usize {
        for i in 0..per_cluster {
            for d in 0..dims {
                let center = if d % 3 == c { 8.0 } else { 0.0 };
                data[[c * per_cluster + i, d]] = center + rng.normal();
            }
        }
    }

    let params = UmapParams::new(15, 4);
    let model = fit_umap(&data, &params)?;
    println!(
        "fitted: curve a = {:.3}, b = {:.3}, epochs = {}, spectral init = {}",
        model.curve_a,
        model.curve_b,
        model.epochs_used,
        if model.spectral_fallback { "fallback" } else { "ok" }
    );

    for c in 0..3 {
        let (mut mx, mut my) = (0.0, 0.0);
        for i in 0..per_cluster {
            mx += model.embedding[[c * per_cluster + i, 0]] / per_cluster as f64;
            my += model.embedding[[c * per_cluster + i, 1]] / per_cluster as f64;
        }
        println!("  cluster {c} centroid: ({mx:.2}, {my:.2})");
    }

    // Project fresh draws from each cluster.
    let mut fresh = RngStream::new(4, 0);
    for c in 0..3usize {
        let point: Vec<f64> = (0..dims)
            .map(|d| if d % 3 == c { 8.0 } else { 0.0 } + fresh.normal())
            .collect();
        let (x, y) = transform(&model, &point)?;
        println!("  held-out draw from cluster {c} lands at ({x:.2}, {y:.2})");
    }
    Ok(())
}
