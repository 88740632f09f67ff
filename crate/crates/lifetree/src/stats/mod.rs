//! Statistical kernel: polynomial least squares, t/F tail probabilities,
//! percentiles, and seeded random streams.

mod rng;
mod special;

pub use rng::{labeled_stream_id, stream_id, RngStream};
pub use special::{ln_gamma, reg_inc_beta};

use crate::error::{Error, Result};

/// Result of an ordinary least-squares polynomial fit.
///
/// Coefficients are reported on the raw age axis, intercept first, even
/// though the solve happens on a centered/scaled basis internally.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub rss: f64,
    pub n: usize,
    pub coefficient_standard_errors: Vec<f64>,
    pub residual_df: usize,
}

impl FitResult {
    /// Two-sided p-value for coefficient `idx` being zero.
    pub fn coefficient_pvalue(&self, idx: usize) -> f64 {
        let coef = self.coefficients[idx];
        let se = self.coefficient_standard_errors[idx];
        if se == 0.0 {
            // Exact fit: a nonzero coefficient is unambiguously nonzero.
            return if coef == 0.0 { 1.0 } else { 0.0 };
        }
        t_pvalue(coef / se, self.residual_df as u64)
    }

    /// Polynomial evaluation at `x` (Horner).
    pub fn evaluate(&self, x: f64) -> f64 {
        horner(&self.coefficients, x)
    }
}

/// Horner evaluation of a polynomial given coefficients intercept-first.
pub fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Least-squares polynomial fit of `values` against `ages`.
///
/// The design is built on a centered and scaled age basis to tame the
/// conditioning of cubic fits over wide age ranges, then coefficients and
/// their covariance are mapped back to the raw axis.
#[allow(clippy::needless_range_loop)] // index symmetry in the normal equations
pub fn ols_polyfit(ages: &[f64], values: &[f64], degree: usize) -> Result<FitResult> {
    let n = ages.len();
    if n != values.len() {
        return Err(Error::Domain(format!(
            "ages ({n}) and values ({}) length mismatch",
            values.len()
        )));
    }
    if degree > 3 {
        return Err(Error::Domain(format!("degree {degree} not in 0..=3")));
    }
    if n < degree + 2 {
        return Err(Error::InsufficientData(format!(
            "need at least {} points for degree {degree}, got {n}",
            degree + 2
        )));
    }
    let p = degree + 1;

    if degree == 0 {
        let mean = values.iter().sum::<f64>() / n as f64;
        let rss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        let residual_df = n - 1;
        let se = (rss / residual_df as f64 / n as f64).sqrt();
        return Ok(FitResult {
            degree: 0,
            coefficients: vec![mean],
            rss,
            n,
            coefficient_standard_errors: vec![se],
            residual_df,
        });
    }

    let center = ages.iter().sum::<f64>() / n as f64;
    let age_var = ages.iter().map(|a| (a - center).powi(2)).sum::<f64>() / (n - 1) as f64;
    if age_var <= 0.0 {
        return Err(Error::SingularDesign(
            "all ages identical; cannot fit a non-constant polynomial".into(),
        ));
    }
    let scale = age_var.sqrt();

    // Normal equations on the scaled basis t = (age − center)/scale.
    let mut xtx = vec![vec![0.0f64; p]; p];
    let mut xty = vec![0.0f64; p];
    let mut basis = vec![0.0f64; p];
    for (&age, &y) in ages.iter().zip(values) {
        let t = (age - center) / scale;
        basis[0] = 1.0;
        for k in 1..p {
            basis[k] = basis[k - 1] * t;
        }
        for j in 0..p {
            for k in j..p {
                xtx[j][k] += basis[j] * basis[k];
            }
            xty[j] += basis[j] * y;
        }
    }
    for j in 0..p {
        for k in 0..j {
            xtx[j][k] = xtx[k][j];
        }
    }

    let inv = invert_spd(&xtx).ok_or_else(|| {
        Error::SingularDesign(format!("rank-deficient degree-{degree} design"))
    })?;
    let gamma: Vec<f64> = (0..p)
        .map(|j| (0..p).map(|k| inv[j][k] * xty[k]).sum())
        .collect();

    let mut rss = 0.0;
    for (&age, &y) in ages.iter().zip(values) {
        let t = (age - center) / scale;
        let fitted = horner(&gamma, t);
        rss += (y - fitted) * (y - fitted);
    }
    rss = rss.max(0.0);

    let residual_df = n - p;
    let sigma2 = rss / residual_df as f64;

    // Map scaled-basis coefficients to the raw axis:
    //   Σ_k γ_k ((x − m)/s)^k = Σ_j β_j x^j  with  β = T γ,
    //   T[j][k] = C(k, j) (−m)^{k−j} / s^k  for j ≤ k.
    let mut transform = vec![vec![0.0f64; p]; p];
    for k in 0..p {
        for j in 0..=k {
            transform[j][k] =
                binomial(k, j) * (-center).powi((k - j) as i32) / scale.powi(k as i32);
        }
    }
    let coefficients: Vec<f64> = (0..p)
        .map(|j| (0..p).map(|k| transform[j][k] * gamma[k]).sum())
        .collect();

    // cov_raw = T cov_scaled Tᵀ with cov_scaled = σ̂² (XᵀX)⁻¹.
    let mut standard_errors = vec![0.0f64; p];
    for j in 0..p {
        let mut var = 0.0;
        for a in 0..p {
            for b in 0..p {
                var += transform[j][a] * sigma2 * inv[a][b] * transform[j][b];
            }
        }
        standard_errors[j] = var.max(0.0).sqrt();
    }

    for c in &coefficients {
        if !c.is_finite() {
            return Err(Error::SingularDesign(
                "non-finite coefficients from ill-conditioned design".into(),
            ));
        }
    }

    Ok(FitResult {
        degree,
        coefficients,
        rss,
        n,
        coefficient_standard_errors: standard_errors,
        residual_df,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Gauss-Jordan inverse of a small symmetric positive-definite matrix.
/// Returns None when a pivot collapses (rank-deficient input).
fn invert_spd(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let p = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv = vec![vec![0.0f64; p]; p];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale_ref: f64 = (0..p).map(|i| m[i][i].abs()).fold(0.0, f64::max).max(1.0);
    for col in 0..p {
        let mut pivot_row = col;
        for r in col + 1..p {
            if a[r][col].abs() > a[pivot_row][col].abs() {
                pivot_row = r;
            }
        }
        if a[pivot_row][col].abs() < 1e-12 * scale_ref {
            return None;
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot = a[col][col];
        for k in 0..p {
            a[col][k] /= pivot;
            inv[col][k] /= pivot;
        }
        for r in 0..p {
            if r != col {
                let factor = a[r][col];
                for k in 0..p {
                    a[r][k] -= factor * a[col][k];
                    inv[r][k] -= factor * inv[col][k];
                }
            }
        }
    }
    Some(inv)
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub fn t_pvalue(t_stat: f64, df: u64) -> f64 {
    assert!(df >= 1, "t test requires df >= 1");
    if t_stat == 0.0 {
        return 1.0;
    }
    if !t_stat.is_finite() {
        return 0.0;
    }
    let dff = df as f64;
    let x = dff / (dff + t_stat * t_stat);
    reg_inc_beta(x, dff / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Upper-tail probability of an F statistic with (df1, df2) degrees of
/// freedom.
pub fn f_pvalue(f_stat: f64, df1: u64, df2: u64) -> f64 {
    assert!(df1 >= 1 && df2 >= 1, "F test requires positive df");
    if f_stat <= 0.0 {
        return 1.0;
    }
    if !f_stat.is_finite() {
        return 0.0;
    }
    let (d1, d2) = (df1 as f64, df2 as f64);
    let x = d2 / (d2 + d1 * f_stat);
    reg_inc_beta(x, d2 / 2.0, d1 / 2.0).clamp(0.0, 1.0)
}

/// F test of a fitted polynomial against the constant model on the same
/// values. Returns the upper-tail p-value.
pub fn f_test_vs_constant(fit: &FitResult, values: &[f64]) -> Result<f64> {
    if fit.degree < 1 {
        return Err(Error::Domain("F test needs a non-constant model".into()));
    }
    let n = values.len();
    if n != fit.n {
        return Err(Error::Domain(
            "fit was computed on a different sample".into(),
        ));
    }
    let d = fit.degree;
    if n < d + 2 {
        return Err(Error::InsufficientData(format!(
            "n − d − 1 < 1 for n = {n}, d = {d}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let rss0: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    if rss0 == 0.0 {
        // Constant data: the polynomial adds nothing.
        return Ok(1.0);
    }
    if fit.rss == 0.0 {
        return Ok(0.0);
    }
    let df2 = (n - d - 1) as f64;
    let f = ((rss0 - fit.rss) / d as f64) / (fit.rss / df2);
    Ok(f_pvalue(f.max(0.0), d as u64, n as u64 - d as u64 - 1))
}

/// Linear-interpolation percentile with rank h = (n−1)·q + 1 on the
/// sorted list.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("percentile of an empty list".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("q = {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in percentile"));
    let n = sorted.len();
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n || frac == 0.0 {
        Ok(sorted[lo.min(n - 1)])
    } else {
        Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
    }
}
