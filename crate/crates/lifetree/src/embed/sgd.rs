//! Stochastic gradient layout optimization with negative sampling.
//!
//! Edges are visited on the sampled-edge schedule: an edge with weight w
//! is touched every w_max/w epochs, applying one attractive update and a
//! rate-proportional number of repulsive updates against random
//! non-endpoint rows. The loop is single-threaded and walks edges in
//! canonical order, so a fixed seed reproduces the layout bit-exactly.

use ndarray::Array2;

use crate::stats::RngStream;

/// Standard gradient clip magnitude.
const CLIP: f64 = 4.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LayoutOptions {
    pub a: f64,
    pub b: f64,
    pub initial_learning_rate: f64,
    pub negative_sample_rate: usize,
}

struct EdgeSchedule {
    epochs_per_sample: Vec<f64>,
    next_sample: Vec<f64>,
    epochs_per_negative: Vec<f64>,
    next_negative: Vec<f64>,
}

impl EdgeSchedule {
    fn new(weights: &[f64], negative_sample_rate: usize) -> EdgeSchedule {
        let w_max = weights.iter().cloned().fold(0.0f64, f64::max);
        let epochs_per_sample: Vec<f64> = weights.iter().map(|w| w_max / w).collect();
        let epochs_per_negative: Vec<f64> = epochs_per_sample
            .iter()
            .map(|e| e / negative_sample_rate.max(1) as f64)
            .collect();
        EdgeSchedule {
            next_sample: epochs_per_sample.clone(),
            next_negative: epochs_per_negative.clone(),
            epochs_per_sample,
            epochs_per_negative,
        }
    }
}

fn clip(x: f64) -> f64 {
    x.clamp(-CLIP, CLIP)
}

/// Drop edges too weak to ever be sampled within the epoch budget, then
/// expand to a directed list in canonical order.
pub(crate) fn directed_edges(
    undirected: &[(u32, u32, f64)],
    n_epochs: usize,
) -> Vec<(u32, u32, f64)> {
    let w_max = undirected.iter().map(|e| e.2).fold(0.0f64, f64::max);
    let floor = w_max / n_epochs as f64;
    let mut edges = Vec::with_capacity(undirected.len() * 2);
    for &(a, b, w) in undirected {
        if w >= floor {
            edges.push((a, b, w));
            edges.push((b, a, w));
        }
    }
    edges.sort_unstable_by_key(|&(a, b, _)| (a, b));
    edges
}

fn attract(head: &mut [f64], tail: &mut [f64], opts: &LayoutOptions, alpha: f64) {
    let d2: f64 = head
        .iter()
        .zip(tail.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    if d2 <= 0.0 {
        return;
    }
    let coeff = (-2.0 * opts.a * opts.b * d2.powf(opts.b - 1.0)) / (opts.a * d2.powf(opts.b) + 1.0);
    for (h, t) in head.iter_mut().zip(tail.iter_mut()) {
        let g = clip(coeff * (*h - *t));
        debug_assert!(g.abs() <= CLIP);
        *h += g * alpha;
        *t -= g * alpha;
    }
}

fn attract_head_only(head: &mut [f64], tail: &[f64], opts: &LayoutOptions, alpha: f64) {
    let d2: f64 = head
        .iter()
        .zip(tail.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    if d2 <= 0.0 {
        return;
    }
    let coeff = (-2.0 * opts.a * opts.b * d2.powf(opts.b - 1.0)) / (opts.a * d2.powf(opts.b) + 1.0);
    for (h, t) in head.iter_mut().zip(tail.iter()) {
        let g = clip(coeff * (*h - *t));
        *h += g * alpha;
    }
}

fn repulse(head: &mut [f64], other: &[f64], opts: &LayoutOptions, alpha: f64) {
    let d2: f64 = head
        .iter()
        .zip(other.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    if d2 <= 0.0 {
        return;
    }
    let coeff = 2.0 * opts.b / ((0.001 + d2) * (opts.a * d2.powf(opts.b) + 1.0));
    for (h, o) in head.iter_mut().zip(other.iter()) {
        let g = clip(coeff * (*h - *o));
        debug_assert!(g.abs() <= CLIP);
        *h += g * alpha;
    }
}

/// Pick a random row index that is neither endpoint; bounded retries keep
/// the draw count deterministic and finite.
fn negative_candidate(rng: &mut RngStream, n: usize, i: u32, j: u32) -> Option<usize> {
    for _ in 0..8 {
        let c = rng.index(n);
        if c as u32 != i && c as u32 != j {
            return Some(c);
        }
    }
    None
}

/// Optimize the training layout in place. `edges` must be the directed
/// canonical list from [`directed_edges`].
pub(crate) fn optimize_fit(
    embedding: &mut Array2<f64>,
    edges: &[(u32, u32, f64)],
    n_epochs: usize,
    opts: &LayoutOptions,
    rng: &mut RngStream,
) {
    let n = embedding.nrows();
    let weights: Vec<f64> = edges.iter().map(|e| e.2).collect();
    let mut schedule = EdgeSchedule::new(&weights, opts.negative_sample_rate);

    for epoch in 0..n_epochs {
        let alpha = opts.initial_learning_rate * (1.0 - epoch as f64 / n_epochs as f64);
        let now = epoch as f64;
        for (e, &(i, j, _)) in edges.iter().enumerate() {
            if schedule.next_sample[e] > now {
                continue;
            }
            let (hi, ti) = (i as usize, j as usize);
            {
                // Two distinct rows: split via raw pointers into the
                // flat storage, bounded by the distinct-index check.
                let flat = embedding.as_slice_mut().expect("contiguous embedding");
                debug_assert_ne!(hi, ti);
                let (lo, hi_i) = if hi < ti { (hi, ti) } else { (ti, hi) };
                let (left, right) = flat.split_at_mut(hi_i * 2);
                let (head, tail): (&mut [f64], &mut [f64]) = if hi < ti {
                    (&mut left[lo * 2..lo * 2 + 2], &mut right[..2])
                } else {
                    (&mut right[..2], &mut left[lo * 2..lo * 2 + 2])
                };
                attract(head, tail, opts, alpha);
            }

            let n_neg = ((now - schedule.next_negative[e]) / schedule.epochs_per_negative[e])
                .max(0.0) as usize;
            for _ in 0..n_neg {
                if let Some(c) = negative_candidate(rng, n, i, j) {
                    let other = [embedding[[c, 0]], embedding[[c, 1]]];
                    let flat = embedding.as_slice_mut().expect("contiguous embedding");
                    repulse(&mut flat[hi * 2..hi * 2 + 2], &other, opts, alpha);
                }
            }

            schedule.next_sample[e] += schedule.epochs_per_sample[e];
            schedule.next_negative[e] += n_neg as f64 * schedule.epochs_per_negative[e];
        }
        debug_assert!(
            embedding.iter().all(|v| v.is_finite()),
            "non-finite coordinate after epoch {epoch}"
        );
    }
}

/// Optimize a single out-of-sample point against the fixed reference
/// embedding. Only the point moves.
pub(crate) fn optimize_transform(
    point: &mut [f64; 2],
    neighbors: &[u32],
    weights: &[f64],
    reference: &Array2<f64>,
    n_epochs: usize,
    opts: &LayoutOptions,
    rng: &mut RngStream,
) {
    let n = reference.nrows();
    let mut schedule = EdgeSchedule::new(weights, opts.negative_sample_rate);

    for epoch in 0..n_epochs {
        let alpha = opts.initial_learning_rate * (1.0 - epoch as f64 / n_epochs as f64);
        let now = epoch as f64;
        for (e, &j) in neighbors.iter().enumerate() {
            if schedule.next_sample[e] > now {
                continue;
            }
            let tail = [reference[[j as usize, 0]], reference[[j as usize, 1]]];
            attract_head_only(point, &tail, opts, alpha);

            let n_neg = ((now - schedule.next_negative[e]) / schedule.epochs_per_negative[e])
                .max(0.0) as usize;
            for _ in 0..n_neg {
                if let Some(c) = negative_candidate(rng, n, u32::MAX, j) {
                    let other = [reference[[c, 0]], reference[[c, 1]]];
                    repulse(point, &other, opts, alpha);
                }
            }
            schedule.next_sample[e] += schedule.epochs_per_sample[e];
            schedule.next_negative[e] += n_neg as f64 * schedule.epochs_per_negative[e];
        }
    }
    debug_assert!(point.iter().all(|v| v.is_finite()));
}
