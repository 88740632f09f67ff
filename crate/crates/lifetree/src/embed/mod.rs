//! Nonlinear dimensionality reduction to 2D via a fuzzy neighborhood
//! graph: exact kNN, per-point kernel calibration, probabilistic union,
//! spectral initialization, and SGD layout with negative sampling, plus
//! an out-of-sample transform for test subjects and branch points.

mod curve;
mod graph;
mod knn;
mod sgd;
mod spectral;

pub use curve::{fit_curve_ab, CurveFit};
pub use graph::{fuzzy_union, smooth_knn_sigma, FuzzyGraph, SmoothedRow};
pub use knn::{knn, knn_query, KnnResult};

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{stream_id, RngStream};
use sgd::LayoutOptions;

/// Embedding hyperparameters. The output dimensionality is fixed at 2;
/// the age axis is appended downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmapParams {
    /// Neighborhood size; 10 × the number of populations when built via
    /// [`UmapParams::for_populations`].
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub spread: f64,
    /// None selects 500 epochs, or 200 when training exceeds 10,000 rows.
    pub epochs: Option<usize>,
    pub negative_sample_rate: usize,
    pub initial_learning_rate: f64,
    pub seed: u64,
}

impl UmapParams {
    pub fn new(n_neighbors: usize, seed: u64) -> UmapParams {
        UmapParams {
            n_neighbors,
            min_dist: 0.1,
            spread: 1.0,
            epochs: None,
            negative_sample_rate: 5,
            initial_learning_rate: 1.0,
            seed,
        }
    }

    /// Neighborhood scaled to the number of considered populations.
    pub fn for_populations(count: usize, seed: u64) -> UmapParams {
        UmapParams::new(10 * count.max(1), seed)
    }

    pub fn effective_epochs(&self, n_rows: usize) -> usize {
        self.epochs
            .unwrap_or(if n_rows > 10_000 { 200 } else { 500 })
    }
}

/// A fitted embedding: training matrix, its 2D layout, per-point kernel
/// state, and the similarity curve constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub format_version: u32,
    pub params: UmapParams,
    pub training: Array2<f64>,
    pub embedding: Array2<f64>,
    pub rhos: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub curve_a: f64,
    pub curve_b: f64,
    pub epochs_used: usize,
    /// Random-uniform initialization was used because the eigensolver
    /// failed.
    pub spectral_fallback: bool,
}

impl EmbeddingModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<EmbeddingModel> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Canonical serialized form; identical models produce identical
    /// bytes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(self)?)
    }
}

/// Fit the embedding on a training matrix (rows = samples).
pub fn fit_umap(data: &Array2<f64>, params: &UmapParams) -> Result<EmbeddingModel> {
    let n = data.nrows();
    if params.n_neighbors < 2 {
        return Err(Error::Domain("n_neighbors must be at least 2".into()));
    }
    if n <= params.n_neighbors {
        return Err(Error::Domain(format!(
            "training size {n} must exceed n_neighbors {}",
            params.n_neighbors
        )));
    }
    if !(params.min_dist > 0.0 && params.min_dist < params.spread) {
        return Err(Error::Domain(format!(
            "min_dist {} must lie in (0, spread = {})",
            params.min_dist, params.spread
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite training value".into()));
    }
    let has_variance = (0..data.ncols()).any(|c| {
        let col = data.column(c);
        let first = col[0];
        col.iter().any(|v| *v != first)
    });
    if !has_variance {
        return Err(Error::Validation(
            "zero-variance training data: all points identical".into(),
        ));
    }

    let k = params.n_neighbors;
    let knn_result = knn::knn(data.view(), k)?;
    let target = (k as f64).log2();
    let smoothed: Vec<SmoothedRow> = knn_result
        .distances
        .iter()
        .map(|d| smooth_knn_sigma(d, target))
        .collect();
    let fuzzy = fuzzy_union(&knn_result, &smoothed);

    let epochs = params.effective_epochs(n);
    let curve = fit_curve_ab(params.min_dist, params.spread);

    let (mut embedding, spectral_fallback) =
        match spectral::spectral_init(&fuzzy, params.seed, stream_id(&[b"spectral"])) {
            Some(init) => (init, false),
            None => {
                let mut rng = RngStream::new(params.seed, stream_id(&[b"init-fallback"]));
                let mut init = Array2::zeros((n, 2));
                init.iter_mut().for_each(|v| *v = rng.uniform_in(-10.0, 10.0));
                (init, true)
            }
        };

    let edges = sgd::directed_edges(&fuzzy.edges, epochs);
    let opts = LayoutOptions {
        a: curve.a,
        b: curve.b,
        initial_learning_rate: params.initial_learning_rate,
        negative_sample_rate: params.negative_sample_rate,
    };
    let mut rng = RngStream::new(params.seed, stream_id(&[b"layout"]));
    sgd::optimize_fit(&mut embedding, &edges, epochs, &opts, &mut rng);

    let rhos = smoothed.iter().map(|s| s.rho).collect();
    let sigmas = smoothed.iter().map(|s| s.sigma).collect();
    Ok(EmbeddingModel {
        format_version: 1,
        params: params.clone(),
        training: data.clone(),
        embedding,
        rhos,
        sigmas,
        curve_a: curve.a,
        curve_b: curve.b,
        epochs_used: epochs,
        spectral_fallback,
    })
}

/// Project an out-of-sample point into the fitted 2D space.
///
/// The point starts at the membership-weighted average of its nearest
/// training embeddings and is refined for a third of the training epochs
/// while the training layout stays fixed. Deterministic given the model
/// seed and the point; transforming a batch equals transforming each
/// point independently.
pub fn transform(model: &EmbeddingModel, point: &[f64]) -> Result<(f64, f64)> {
    if point.len() != model.training.ncols() {
        return Err(Error::Validation(format!(
            "point has {} features, model expects {}",
            point.len(),
            model.training.ncols()
        )));
    }
    let k = model.params.n_neighbors;
    let (neighbors, distances) = knn::knn_query(model.training.view(), point, k);
    let smooth = smooth_knn_sigma(&distances, (k as f64).log2());

    let wsum: f64 = smooth.weights.iter().sum();
    let mut init = [0.0f64; 2];
    for (&j, &w) in neighbors.iter().zip(&smooth.weights) {
        init[0] += w / wsum * model.embedding[[j as usize, 0]];
        init[1] += w / wsum * model.embedding[[j as usize, 1]];
    }

    let epochs = model.epochs_used.div_ceil(3);
    let opts = LayoutOptions {
        a: model.curve_a,
        b: model.curve_b,
        initial_learning_rate: model.params.initial_learning_rate,
        negative_sample_rate: model.params.negative_sample_rate,
    };
    let mut rng = RngStream::new(model.params.seed, stream_id(&[b"transform"]));
    sgd::optimize_transform(
        &mut init,
        &neighbors,
        &smooth.weights,
        &model.embedding,
        epochs,
        &opts,
        &mut rng,
    );
    Ok((init[0], init[1]))
}
