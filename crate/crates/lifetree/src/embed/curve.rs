//! Fit of the low-dimensional similarity curve Φ(d) = 1/(1 + a·d^{2b})
//! to the min_dist/spread target shape.

/// Fitted curve constants; `from_fallback` is set when the
/// Levenberg-Marquardt loop failed to converge and the dense grid result
/// was used instead.
#[derive(Debug, Clone, Copy)]
pub struct CurveFit {
    pub a: f64,
    pub b: f64,
    pub from_fallback: bool,
}

const GRID_POINTS: usize = 300;
const LM_TOL: f64 = 1e-6;
const LM_MAX_ITER: usize = 200;

fn target_grid(min_dist: f64, spread: f64) -> (Vec<f64>, Vec<f64>) {
    let hi = 3.0 * spread;
    let xs: Vec<f64> = (0..GRID_POINTS)
        .map(|i| hi * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            if x <= min_dist {
                1.0
            } else {
                (-(x - min_dist) / spread).exp()
            }
        })
        .collect();
    (xs, ys)
}

pub fn curve_value(a: f64, b: f64, d: f64) -> f64 {
    1.0 / (1.0 + a * d.powf(2.0 * b))
}

fn sse(a: f64, b: f64, xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = curve_value(a, b, x) - y;
            r * r
        })
        .sum()
}

/// Least-squares fit of (a, b), Levenberg-Marquardt with a dense
/// grid-search fallback.
pub fn fit_curve_ab(min_dist: f64, spread: f64) -> CurveFit {
    assert!(
        0.0 < min_dist && min_dist < spread,
        "requires 0 < min_dist < spread"
    );
    let (xs, ys) = target_grid(min_dist, spread);

    let mut a = 1.0f64;
    let mut b = 1.0f64;
    let mut lambda = 1e-3f64;
    let mut current = sse(a, b, &xs, &ys);
    let mut converged = false;

    for _ in 0..LM_MAX_ITER {
        // Accumulate JᵀJ and Jᵀr for the two parameters.
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for (&x, &y) in xs.iter().zip(&ys) {
            let pw = if x > 0.0 { x.powf(2.0 * b) } else { 0.0 };
            let denom = 1.0 + a * pw;
            let value = 1.0 / denom;
            let r = value - y;
            let da = -pw / (denom * denom);
            let db = if x > 0.0 {
                -a * pw * 2.0 * x.ln() / (denom * denom)
            } else {
                0.0
            };
            jtj[0][0] += da * da;
            jtj[0][1] += da * db;
            jtj[1][1] += db * db;
            jtr[0] += da * r;
            jtr[1] += db * r;
        }
        jtj[1][0] = jtj[0][1];

        // Damped 2×2 solve for the step.
        let m00 = jtj[0][0] * (1.0 + lambda);
        let m11 = jtj[1][1] * (1.0 + lambda);
        let m01 = jtj[0][1];
        let det = m00 * m11 - m01 * m01;
        if det.abs() < 1e-300 {
            break;
        }
        let step_a = (-jtr[0] * m11 + jtr[1] * m01) / det;
        let step_b = (-jtr[1] * m00 + jtr[0] * m01) / det;

        let cand_a = a + step_a;
        let cand_b = b + step_b;
        if cand_a <= 0.0 || cand_b <= 0.0 || !cand_a.is_finite() || !cand_b.is_finite() {
            lambda *= 10.0;
            continue;
        }
        let cand_sse = sse(cand_a, cand_b, &xs, &ys);
        if cand_sse < current {
            a = cand_a;
            b = cand_b;
            current = cand_sse;
            lambda = (lambda / 3.0).max(1e-12);
            if step_a.abs() < LM_TOL && step_b.abs() < LM_TOL {
                converged = true;
                break;
            }
        } else {
            lambda *= 3.0;
            if lambda > 1e12 {
                break;
            }
        }
    }

    if converged {
        return CurveFit {
            a,
            b,
            from_fallback: false,
        };
    }
    let (a, b) = grid_search(&xs, &ys);
    CurveFit {
        a,
        b,
        from_fallback: true,
    }
}

/// Coarse-to-fine grid search over (a, b), used as the fallback path.
fn grid_search(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mut best = (1.0f64, 1.0f64);
    let mut best_sse = f64::INFINITY;
    for ia in 0..=200 {
        let a = 10f64.powf(-3.0 + 6.0 * ia as f64 / 200.0);
        for ib in 0..=120 {
            let b = 0.05 + 2.95 * ib as f64 / 120.0;
            let s = sse(a, b, xs, ys);
            if s < best_sse {
                best_sse = s;
                best = (a, b);
            }
        }
    }
    // Two refinement rounds around the best cell.
    let (mut a0, mut b0) = best;
    let mut wa = a0 * 0.5;
    let mut wb = 0.1;
    for _ in 0..2 {
        for ia in 0..=80 {
            let a = (a0 - wa + 2.0 * wa * ia as f64 / 80.0).max(1e-6);
            for ib in 0..=80 {
                let b = (b0 - wb + 2.0 * wb * ib as f64 / 80.0).max(1e-3);
                let s = sse(a, b, xs, ys);
                if s < best_sse {
                    best_sse = s;
                    best = (a, b);
                }
            }
        }
        a0 = best.0;
        b0 = best.1;
        wa /= 10.0;
        wb /= 10.0;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameters_match_independent_oracle() {
        // Independent oracle: the grid-search path, run regardless of
        // whether LM converged.
        let (xs, ys) = target_grid(0.1, 1.0);
        let (oracle_a, oracle_b) = grid_search(&xs, &ys);
        let fit = fit_curve_ab(0.1, 1.0);
        assert!(
            (fit.a - oracle_a).abs() < 0.01 && (fit.b - oracle_b).abs() < 0.01,
            "LM ({}, {}) vs grid oracle ({oracle_a}, {oracle_b})",
            fit.a,
            fit.b
        );
        // Known constants for the default configuration.
        assert!((fit.a - 1.577).abs() < 0.01, "a = {}", fit.a);
        assert!((fit.b - 0.895).abs() < 0.01, "b = {}", fit.b);
    }

    #[test]
    fn value_at_zero_is_one() {
        for &(a, b) in &[(0.5, 0.5), (1.577, 0.895), (10.0, 2.0)] {
            assert_eq!(curve_value(a, b, 0.0), 1.0);
        }
    }

    #[test]
    fn fitted_curve_tracks_target_shape() {
        let fit = fit_curve_ab(0.1, 1.0);
        let (xs, ys) = target_grid(0.1, 1.0);
        let max_err = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| (curve_value(fit.a, fit.b, x) - y).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= 0.05, "max residual {max_err}");
    }
}
