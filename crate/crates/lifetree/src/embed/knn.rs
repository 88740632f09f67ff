//! Exact k-nearest-neighbor search by brute force.
//!
//! Training pools here stay small enough (tens of thousands of rows at
//! most, 124 columns) that an exact scan is both tractable and removes a
//! stochastic dependency from the pipeline.

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Neighbor lists per point: indices and distances, each row sorted by
/// ascending distance with ties broken by lower index. Self is excluded.
#[derive(Debug, Clone)]
pub struct KnnResult {
    pub indices: Vec<Vec<u32>>,
    pub distances: Vec<Vec<f64>>,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Exact k nearest neighbors under the Euclidean metric.
pub fn knn(points: ArrayView2<'_, f64>, k: usize) -> Result<KnnResult> {
    let n = points.nrows();
    if k >= n {
        return Err(Error::Domain(format!(
            "k = {k} must be smaller than the number of points ({n})"
        )));
    }
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }

    let rows: Vec<(Vec<u32>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = points.row(i);
            let a = a.as_slice().expect("contiguous row");
            let mut candidates: Vec<(f64, u32)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let b = points.row(j);
                    (euclidean(a, b.as_slice().expect("contiguous row")), j as u32)
                })
                .collect();
            candidates.sort_unstable_by(|x, y| {
                x.0.partial_cmp(&y.0)
                    .expect("non-finite distance")
                    .then(x.1.cmp(&y.1))
            });
            candidates.truncate(k);
            let indices: Vec<u32> = candidates.iter().map(|c| c.1).collect();
            let distances: Vec<f64> = candidates.iter().map(|c| c.0).collect();
            (indices, distances)
        })
        .collect();

    let mut indices = Vec::with_capacity(n);
    let mut distances = Vec::with_capacity(n);
    for (idx, dist) in rows {
        indices.push(idx);
        distances.push(dist);
    }
    Ok(KnnResult { indices, distances })
}

/// Neighbors of a single query point against a fixed training matrix.
pub fn knn_query(points: ArrayView2<'_, f64>, query: &[f64], k: usize) -> (Vec<u32>, Vec<f64>) {
    let n = points.nrows();
    let mut candidates: Vec<(f64, u32)> = (0..n)
        .map(|j| {
            let b = points.row(j);
            (
                euclidean(query, b.as_slice().expect("contiguous row")),
                j as u32,
            )
        })
        .collect();
    candidates.sort_unstable_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .expect("non-finite distance")
            .then(x.1.cmp(&y.1))
    });
    candidates.truncate(k);
    (
        candidates.iter().map(|c| c.1).collect(),
        candidates.iter().map(|c| c.0).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RngStream;
    use ndarray::Array2;

    #[test]
    fn hand_geometry_on_a_line() {
        let points = Array2::from_shape_vec((3, 1), vec![0.0, 1.0, 3.0]).unwrap();
        let result = knn(points.view(), 1).unwrap();
        assert_eq!(result.indices, vec![vec![1], vec![0], vec![1]]);
    }

    #[test]
    fn duplicate_point_has_zero_distance_neighbor() {
        let points =
            Array2::from_shape_vec((3, 2), vec![1.0, 2.0, 1.0, 2.0, 5.0, 5.0]).unwrap();
        let result = knn(points.view(), 1).unwrap();
        assert_eq!(result.indices[0], vec![1]);
        assert_eq!(result.distances[0], vec![0.0]);
        assert_eq!(result.indices[1], vec![0]);
    }

    #[test]
    fn matches_brute_force_oracle() {
        // Independent all-pairs scan over a random 200×124 set.
        let mut rng = RngStream::new(17, 0);
        let n = 200;
        let d = 124;
        let data: Vec<f64> = (0..n * d).map(|_| rng.normal()).collect();
        let points = Array2::from_shape_vec((n, d), data).unwrap();
        let k = 12;
        let result = knn(points.view(), k).unwrap();

        for i in 0..n {
            let mut all: Vec<(f64, u32)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dist: f64 = (0..d)
                        .map(|c| (points[[i, c]] - points[[j, c]]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    (dist, j as u32)
                })
                .collect();
            all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
            let expected: Vec<u32> = all[..k].iter().map(|c| c.1).collect();
            assert_eq!(result.indices[i], expected, "row {i}");
        }
    }

    #[test]
    fn k_too_large_is_domain_error() {
        let points = Array2::zeros((3, 2));
        assert!(knn(points.view(), 3).is_err());
    }
}
