//! Soft-margin linear SVM trained by sequential minimal optimization.
//!
//! The solver repeatedly updates the maximal violating pair of dual
//! variables (gradient-based working-set selection) until the KKT gap
//! drops below tolerance. Kernel rows are computed on demand; only the
//! diagonal is cached, which keeps memory linear in the sample count.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SvmParams {
    pub c: f64,
    /// KKT gap tolerance.
    pub tol: f64,
    /// Cap on pair updates.
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> SvmParams {
        SvmParams {
            c: 1.0,
            tol: 1e-3,
            max_iter: 10_000,
        }
    }
}

/// A trained binary classifier on the linear kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    /// Dual coefficients for every training row.
    pub alpha: Vec<f64>,
    pub support_indices: Vec<usize>,
    pub converged: bool,
    /// Final maximal KKT violation (m − M).
    pub kkt_gap: f64,
}

impl SvmModel {
    /// Signed decision value w·x + b.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.bias
    }

    /// Dual objective Σα − ½ ΣΣ αᵢαⱼyᵢyⱼ⟨xᵢ,xⱼ⟩ at the trained point.
    pub fn dual_objective(&self, x: ArrayView2<'_, f64>, y: &[f64]) -> f64 {
        let n = y.len();
        let mut obj: f64 = self.alpha.iter().sum();
        for i in 0..n {
            if self.alpha[i] == 0.0 {
                continue;
            }
            let xi = x.row(i);
            let xi = xi.as_slice().expect("contiguous row");
            for j in 0..n {
                if self.alpha[j] == 0.0 {
                    continue;
                }
                let xj = x.row(j);
                let k: f64 = xi
                    .iter()
                    .zip(xj.as_slice().expect("contiguous row"))
                    .map(|(a, b)| a * b)
                    .sum();
                obj -= 0.5 * self.alpha[i] * self.alpha[j] * y[i] * y[j] * k;
            }
        }
        obj
    }
}

/// Train with SMO on the linear-kernel dual.
#[allow(clippy::needless_range_loop)]
pub fn train_svm(x: ArrayView2<'_, f64>, y: &[f64], params: SvmParams) -> Result<SvmModel> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::Domain(format!(
            "{} rows but {} labels",
            n,
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientData(
            "svm needs at least two samples".into(),
        ));
    }
    if y.iter().any(|l| *l != 1.0 && *l != -1.0) {
        return Err(Error::Validation("labels must be ±1".into()));
    }
    if !y.iter().any(|l| *l > 0.0) || !y.iter().any(|l| *l < 0.0) {
        return Err(Error::Validation(
            "both classes must be present to train".into(),
        ));
    }
    let c = params.c;
    let dot = |i: usize, j: usize| -> f64 {
        let a = x.row(i);
        let b = x.row(j);
        a.as_slice()
            .expect("contiguous row")
            .iter()
            .zip(b.as_slice().expect("contiguous row"))
            .map(|(p, q)| p * q)
            .sum()
    };
    let diag: Vec<f64> = (0..n).map(|i| dot(i, i)).collect();

    let mut alpha = vec![0.0f64; n];
    // u[i] = Σ_j α_j y_j K(i, j); the decision value without bias.
    let mut u = vec![0.0f64; n];

    // Violating-pair bounds: m over the "up" set, M over the "low" set.
    let select = |alpha: &[f64], u: &[f64]| -> (Option<usize>, Option<usize>, f64, f64) {
        let mut best_up: Option<usize> = None;
        let mut best_low: Option<usize> = None;
        let mut m = f64::NEG_INFINITY;
        let mut big_m = f64::INFINITY;
        for i in 0..n {
            let g = y[i] - u[i];
            let in_up = (y[i] > 0.0 && alpha[i] < c) || (y[i] < 0.0 && alpha[i] > 0.0);
            let in_low = (y[i] > 0.0 && alpha[i] > 0.0) || (y[i] < 0.0 && alpha[i] < c);
            if in_up && g > m {
                m = g;
                best_up = Some(i);
            }
            if in_low && g < big_m {
                big_m = g;
                best_low = Some(i);
            }
        }
        (best_up, best_low, m, big_m)
    };

    let mut converged = false;
    for _ in 0..params.max_iter {
        let (up, low, m, big_m) = select(&alpha, &u);
        let (i, j) = match (up, low) {
            (Some(i), Some(j)) if m - big_m > params.tol => (i, j),
            _ => {
                converged = true;
                break;
            }
        };

        let kij = dot(i, j);
        let eta = (diag[i] + diag[j] - 2.0 * kij).max(1e-12);
        // Step along α_i += y_i t, α_j -= y_j t preserving Σαy.
        let mut t = ((y[i] - u[i]) - (y[j] - u[j])) / eta;

        // Box constraints on both coordinates.
        let t_max_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let t_max_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        t = t.min(t_max_i).min(t_max_j);
        if t <= 0.0 {
            // Selection guarantees positive headroom; reaching this means
            // the pair is numerically saturated.
            break;
        }

        alpha[i] += y[i] * t;
        alpha[j] -= y[j] * t;
        // Δα_i·y_i = t and Δα_j·y_j = −t, so the decision values move by
        // t·(K(r,i) − K(r,j)).
        for r in 0..n {
            u[r] += t * (dot(r, i) - dot(r, j));
        }
    }

    let (_, _, m, big_m) = select(&alpha, &u);
    let gap = m - big_m;
    if gap <= params.tol {
        converged = true;
    }

    // Primal weights for the linear kernel.
    let d = x.ncols();
    let mut weights = vec![0.0f64; d];
    for i in 0..n {
        if alpha[i] > 0.0 {
            let row = x.row(i);
            for (w, v) in weights.iter_mut().zip(row.as_slice().expect("contiguous")) {
                *w += alpha[i] * y[i] * v;
            }
        }
    }

    // Bias from free support vectors; fall back to the violating-pair
    // midpoint when the margin set is empty.
    let margin_eps = 1e-8 * c;
    let free: Vec<usize> = (0..n)
        .filter(|&i| alpha[i] > margin_eps && alpha[i] < c - margin_eps)
        .collect();
    let bias = if !free.is_empty() {
        free.iter().map(|&i| y[i] - u[i]).sum::<f64>() / free.len() as f64
    } else if m.is_finite() && big_m.is_finite() {
        (m + big_m) / 2.0
    } else {
        (0..n).map(|i| y[i] - u[i]).sum::<f64>() / n as f64
    };

    let support_indices: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0.0).collect();

    // Post-fit feasibility: box bounds and the equality constraint.
    let balance: f64 = alpha.iter().zip(y).map(|(a, l)| a * l).sum();
    debug_assert!(balance.abs() < 1e-6 * c * n as f64);
    debug_assert!(alpha.iter().all(|a| (-1e-12..=c + 1e-12).contains(a)));

    Ok(SvmModel {
        weights,
        bias,
        c,
        alpha,
        support_indices,
        converged,
        kkt_gap: gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RngStream;
    use ndarray::Array2;

    fn embed_1d(values: &[f64], dims: usize) -> Array2<f64> {
        let mut m = Array2::zeros((values.len(), dims));
        for (i, v) in values.iter().enumerate() {
            m[[i, 0]] = *v;
        }
        m
    }

    #[test]
    fn two_point_max_margin_solution() {
        // Points at ±1 with labels ±1: f(x) = x, margin 2, α = 1/2.
        let x = embed_1d(&[-1.0, 1.0], 124);
        let y = [-1.0, 1.0];
        let params = SvmParams {
            c: 10.0,
            ..SvmParams::default()
        };
        let model = train_svm(x.view(), &y, params).unwrap();
        assert!((model.weights[0] - 1.0).abs() < 1e-6, "w0 {}", model.weights[0]);
        assert!(model.weights[1..].iter().all(|w| w.abs() < 1e-9));
        assert!(model.bias.abs() < 1e-6);
        assert!((model.alpha[0] - 0.5).abs() < 1e-6);
        assert!((model.alpha[1] - 0.5).abs() < 1e-6);
        assert!((model.decision(&{
            let mut v = vec![0.0; 124];
            v[0] = 1.0;
            v
        }) - 1.0)
            .abs()
            < 1e-6);
        assert!(model.converged);
        assert!(model.kkt_gap <= 1e-3);
    }

    #[test]
    fn duplicated_dataset_same_boundary() {
        let mut rng = RngStream::new(51, 0);
        let n = 20;
        let mut data = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            data.push(vec![
                label * 1.5 + rng.normal() * 0.4,
                rng.normal() * 0.4,
            ]);
            y.push(label);
        }
        let flat: Vec<f64> = data.iter().flatten().cloned().collect();
        let x = Array2::from_shape_vec((n, 2), flat.clone()).unwrap();
        let doubled: Vec<f64> = flat.iter().chain(flat.iter()).cloned().collect();
        let x2 = Array2::from_shape_vec((2 * n, 2), doubled).unwrap();
        let y2: Vec<f64> = y.iter().chain(y.iter()).cloned().collect();

        let m1 = train_svm(x.view(), &y, SvmParams::default()).unwrap();
        let m2 = train_svm(x2.view(), &y2, SvmParams::default()).unwrap();
        // Same predictions on a probe grid.
        for gx in [-2.0, -1.0, -0.2, 0.2, 1.0, 2.0] {
            for gy in [-1.0, 0.0, 1.0] {
                let p = [gx, gy];
                assert_eq!(
                    m1.decision(&p) > 0.0,
                    m2.decision(&p) > 0.0,
                    "boundary moved at {p:?}"
                );
            }
        }
    }

    #[test]
    fn dual_objective_matches_grid_oracle() {
        // 6-point instance in 2-D, C = 1. The oracle is a coarse-to-fine
        // grid search over the feasible box with the Σαy = 0 constraint.
        let x = Array2::from_shape_vec(
            (6, 2),
            vec![
                1.1, 0.2, //
                1.6, -0.5, //
                0.7, 0.9, //
                -0.9, 0.1, //
                -1.4, -0.3, //
                -0.6, 0.8,
            ],
        )
        .unwrap();
        let y = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
        let c = 1.0;
        let model = train_svm(
            x.view(),
            &y,
            SvmParams {
                c,
                tol: 1e-6,
                max_iter: 100_000,
            },
        )
        .unwrap();
        let smo_obj = model.dual_objective(x.view(), &y);

        let objective = |alpha: &[f64; 6]| -> f64 {
            let mut obj: f64 = alpha.iter().sum();
            for i in 0..6 {
                for j in 0..6 {
                    let k = x[[i, 0]] * x[[j, 0]] + x[[i, 1]] * x[[j, 1]];
                    obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * k;
                }
            }
            obj
        };

        // Coarse-to-fine search: positives (α1, α2, α3) and negatives
        // (α4, α5) on a grid, α6 = Σ₊ − α4 − α5 from the constraint.
        let mut best = [0.0f64; 6];
        let mut best_obj = f64::NEG_INFINITY;
        let mut centers = [0.5f64; 5];
        let mut width = 0.5f64;
        for _ in 0..6 {
            let steps = 8;
            let grid: Vec<Vec<f64>> = centers
                .iter()
                .map(|&ctr| {
                    (0..=steps)
                        .map(|s| {
                            (ctr - width + 2.0 * width * s as f64 / steps as f64)
                                .clamp(0.0, c)
                        })
                        .collect()
                })
                .collect();
            for &a1 in &grid[0] {
                for &a2 in &grid[1] {
                    for &a3 in &grid[2] {
                        let pos = a1 + a2 + a3;
                        for &a4 in &grid[3] {
                            for &a5 in &grid[4] {
                                let a6 = pos - a4 - a5;
                                if !(0.0..=c).contains(&a6) {
                                    continue;
                                }
                                let alpha = [a1, a2, a3, a4, a5, a6];
                                let obj = objective(&alpha);
                                if obj > best_obj {
                                    best_obj = obj;
                                    best = alpha;
                                }
                            }
                        }
                    }
                }
            }
            centers = [best[0], best[1], best[2], best[3], best[4]];
            width /= 3.0;
        }

        assert!(
            (smo_obj - best_obj).abs() < 1e-3,
            "smo {smo_obj} vs grid oracle {best_obj}"
        );
        // The solver should never fall below a feasible point's value.
        assert!(smo_obj >= best_obj - 1e-3);
    }

    #[test]
    fn single_class_rejected() {
        let x = embed_1d(&[0.0, 1.0, 2.0], 3);
        assert!(train_svm(x.view(), &[1.0, 1.0, 1.0], SvmParams::default()).is_err());
    }

    #[test]
    fn feasibility_invariants_post_fit() {
        let mut rng = RngStream::new(52, 0);
        let n = 60;
        let d = 5;
        let mut data = Array2::zeros((n, d));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            for j in 0..d {
                data[[i, j]] = rng.normal() + 0.8 * label * f64::from(j == 0);
            }
            y.push(label);
        }
        let model = train_svm(data.view(), &y, SvmParams::default()).unwrap();
        let balance: f64 = model.alpha.iter().zip(&y).map(|(a, l)| a * l).sum();
        assert!(balance.abs() < 1e-6);
        assert!(model
            .alpha
            .iter()
            .all(|a| *a >= -1e-12 && *a <= model.c + 1e-12));
        assert!(model.kkt_gap <= 1e-3 || !model.converged);
    }
}
