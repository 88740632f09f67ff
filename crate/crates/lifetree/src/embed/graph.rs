//! Local kernel calibration and the fuzzy neighborhood graph.

use std::collections::HashMap;

use super::knn::KnnResult;

/// Calibrated local kernel for one point.
#[derive(Debug, Clone)]
pub struct SmoothedRow {
    /// Distance to the nearest neighbor at positive distance.
    pub rho: f64,
    /// Bandwidth solving Σ exp(−max(0, d−ρ)/σ) = target.
    pub sigma: f64,
    pub weights: Vec<f64>,
    /// Set when every neighbor distance is zero.
    pub degenerate: bool,
}

const SIGMA_ITERS: usize = 64;

/// Solve for the per-point bandwidth by bisection (64 iterations,
/// clamped to [1e-3, 1e3] times the mean neighbor distance), then emit
/// the membership weights.
pub fn smooth_knn_sigma(distances: &[f64], target: f64) -> SmoothedRow {
    let k = distances.len();
    assert!(k >= 2, "need at least two neighbor distances");
    debug_assert!(
        distances.windows(2).all(|w| w[0] <= w[1]),
        "distances must be sorted ascending"
    );

    let mean_d = distances.iter().sum::<f64>() / k as f64;
    if distances[k - 1] <= 0.0 {
        return SmoothedRow {
            rho: 0.0,
            sigma: 1e-3 * mean_d,
            weights: vec![1.0; k],
            degenerate: true,
        };
    }

    let rho = distances.iter().cloned().find(|d| *d > 0.0).unwrap_or(0.0);
    let sum_at = |sigma: f64| -> f64 {
        distances
            .iter()
            .map(|d| (-((d - rho).max(0.0)) / sigma).exp())
            .sum()
    };

    let mut lo = 1e-3 * mean_d;
    let mut hi = 1e3 * mean_d;
    let mut sigma = mean_d;
    for _ in 0..SIGMA_ITERS {
        sigma = 0.5 * (lo + hi);
        if sum_at(sigma) > target {
            hi = sigma;
        } else {
            lo = sigma;
        }
    }

    let weights = distances
        .iter()
        .map(|d| (-((d - rho).max(0.0)) / sigma).exp())
        .collect();
    SmoothedRow {
        rho,
        sigma,
        weights,
        degenerate: false,
    }
}

/// Sparse symmetric fuzzy graph over training rows; no self loops,
/// weights in (0, 1]. Edges are stored once with `a < b` in canonical
/// (a, b) order.
#[derive(Debug, Clone)]
pub struct FuzzyGraph {
    pub n: usize,
    pub edges: Vec<(u32, u32, f64)>,
}

/// Combine directed membership weights into the symmetric graph via the
/// probabilistic union w + wᵀ − w∘wᵀ.
pub fn fuzzy_union(knn: &KnnResult, smoothed: &[SmoothedRow]) -> FuzzyGraph {
    let n = knn.indices.len();
    let mut directed: HashMap<(u32, u32), (f64, f64)> = HashMap::new();
    for (i, (neighbors, row)) in knn.indices.iter().zip(smoothed).enumerate() {
        let i = i as u32;
        for (&j, &w) in neighbors.iter().zip(&row.weights) {
            if i == j {
                continue;
            }
            let (key, forward) = if i < j { ((i, j), true) } else { ((j, i), false) };
            let entry = directed.entry(key).or_insert((0.0, 0.0));
            if forward {
                entry.0 = w;
            } else {
                entry.1 = w;
            }
        }
    }
    let mut edges: Vec<(u32, u32, f64)> = directed
        .into_iter()
        .map(|((a, b), (wab, wba))| (a, b, wab + wba - wab * wba))
        .filter(|(_, _, w)| *w > 0.0)
        .collect();
    edges.sort_unstable_by_key(|&(a, b, _)| (a, b));
    FuzzyGraph { n, edges }
}
