//! Spectral initialization of the embedding.
//!
//! Computes the two smallest nontrivial eigenvectors of the symmetric
//! normalized graph Laplacian by orthogonal iteration on the normalized
//! adjacency, deflating the known trivial eigenvector D^{1/2}·1. Falls
//! back to None on breakdown; the caller then seeds the layout randomly.

use ndarray::Array2;

use super::graph::FuzzyGraph;
use crate::stats::RngStream;

const MAX_ITER: usize = 1000;
const RESIDUAL_TOL: f64 = 1e-9;
/// Spectral coordinates are rescaled so the largest magnitude is 10.
const INIT_SCALE: f64 = 10.0;

#[allow(clippy::needless_range_loop)]
pub fn spectral_init(graph: &FuzzyGraph, seed: u64, stream: u64) -> Option<Array2<f64>> {
    let n = graph.n;
    if n < 3 || graph.edges.is_empty() {
        return None;
    }

    let mut degree = vec![0.0f64; n];
    for &(a, b, w) in &graph.edges {
        degree[a as usize] += w;
        degree[b as usize] += w;
    }
    if degree.iter().any(|d| *d <= 0.0) {
        return None;
    }
    let inv_sqrt_d: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    // Normalized adjacency weights, applied symmetrically in matvec.
    let norm_edges: Vec<(u32, u32, f64)> = graph
        .edges
        .iter()
        .map(|&(a, b, w)| (a, b, w * inv_sqrt_d[a as usize] * inv_sqrt_d[b as usize]))
        .collect();

    let matvec = |x: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(a, b, w) in &norm_edges {
            out[a as usize] += w * x[b as usize];
            out[b as usize] += w * x[a as usize];
        }
    };

    // Trivial top eigenvector of the normalized adjacency.
    let mut trivial: Vec<f64> = degree.iter().map(|d| d.sqrt()).collect();
    normalize(&mut trivial)?;

    let mut rng = RngStream::new(seed, stream);
    let mut cols: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..n).map(|_| rng.uniform() - 0.5).collect())
        .collect();
    let mut scratch = vec![0.0f64; n];

    for iter in 0..MAX_ITER {
        for c in 0..2 {
            matvec(&cols[c].clone(), &mut scratch);
            cols[c].copy_from_slice(&scratch);
        }
        // Deflate the trivial direction and orthonormalize.
        for c in 0..2 {
            let t = dot(&cols[c], &trivial);
            for (v, tv) in cols[c].iter_mut().zip(&trivial) {
                *v -= t * tv;
            }
        }
        normalize(&mut cols[0])?;
        {
            let (head, tail) = cols.split_at_mut(1);
            let d = dot(&tail[0], &head[0]);
            for (v, u) in tail[0].iter_mut().zip(head[0].iter()) {
                *v -= d * u;
            }
        }
        normalize(&mut cols[1])?;

        if iter % 16 == 15 || iter + 1 == MAX_ITER {
            let mut worst = 0.0f64;
            for col in cols.iter() {
                matvec(col, &mut scratch);
                let lambda = dot(&scratch, col);
                let mut res = 0.0;
                for (s, v) in scratch.iter().zip(col) {
                    res += (s - lambda * v) * (s - lambda * v);
                }
                worst = worst.max(res.sqrt());
            }
            if worst < RESIDUAL_TOL {
                break;
            }
        }
    }

    let mut max_abs = 0.0f64;
    for col in &cols {
        for v in col {
            if !v.is_finite() {
                return None;
            }
            max_abs = max_abs.max(v.abs());
        }
    }
    if max_abs <= 0.0 {
        return None;
    }
    let scale = INIT_SCALE / max_abs;
    let mut init = Array2::zeros((n, 2));
    for (c, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            init[[i, c]] = v * scale;
        }
    }
    Some(init)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> Option<()> {
    let norm = dot(v, v).sqrt();
    if norm < 1e-12 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(())
}
