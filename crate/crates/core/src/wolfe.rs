//! Wolfe's minimum-norm-point algorithm over a polytope given by a linear
//! minimization oracle.

use nalgebra::{DMatrix, DVector};

/// Barycentric weights at or below this are dropped from the corral.
const WEIGHT_EPS: f64 = 1e-13;

#[derive(Debug, Clone)]
pub(crate) struct MinNormOutcome {
    pub point: Vec<f64>,
    /// Last value of `‖x‖² − min_{s} xᵀs`.
    pub gap: f64,
    pub cycles: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn combine(points: &[Vec<f64>], weights: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (p, &w) in points.iter().zip(weights) {
        for (xi, pi) in x.iter_mut().zip(p) {
            *xi += w * pi;
        }
    }
    x
}

/// Barycentric coordinates of the minimum-norm point of the affine hull of
/// `points`, via a least-squares solve in the difference basis.
fn affine_minimizer(points: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let m = points.len();
    if m == 1 {
        return vec![1.0];
    }
    let base = &points[0];
    let diffs = DMatrix::from_fn(dim, m - 1, |i, j| points[j + 1][i] - base[i]);
    let rhs = DVector::from_fn(dim, |i, _| -base[i]);
    let svd = diffs.svd(true, true);
    let scale = svd.singular_values.iter().fold(0.0_f64, |a, &b| a.max(b));
    let alpha = svd
        .solve(&rhs, 1e-12 * scale.max(1.0))
        .expect("both factors were requested");
    let mut mu = Vec::with_capacity(m);
    mu.push(1.0 - alpha.iter().sum::<f64>());
    mu.extend(alpha.iter().copied());
    mu
}

/// Minimum-norm point of the polytope whose linear minimization oracle is
/// `argmin`. Stops when `‖x‖² − xᵀq ≤ tol · max(1, max‖p‖²)` over the corral.
pub(crate) fn min_norm_point<O>(dim: usize, argmin: O, tol: f64, max_cycles: usize) -> MinNormOutcome
where
    O: Fn(&[f64]) -> Vec<f64>,
{
    let start = argmin(&vec![0.0; dim]);
    let mut corral = vec![start];
    let mut weights = vec![1.0];
    let mut x = corral[0].clone();
    let mut gap = f64::INFINITY;

    for cycle in 0..max_cycles {
        let q = argmin(&x);
        let scale = corral
            .iter()
            .chain(std::iter::once(&q))
            .map(|p| dot(p, p))
            .fold(1.0_f64, f64::max);
        gap = dot(&x, &x) - dot(&x, &q);
        if gap <= tol * scale {
            return MinNormOutcome {
                point: x,
                gap: gap.max(0.0),
                cycles: cycle,
                converged: true,
            };
        }
        if corral
            .iter()
            .any(|p| p.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-14 * scale.sqrt()))
        {
            // The oracle returned a corral point: x is affine-optimal and the
            // remaining gap is rounding noise that cannot be reduced.
            return MinNormOutcome {
                point: x,
                gap: gap.max(0.0),
                cycles: cycle,
                converged: gap <= 1e-6 * scale,
            };
        }
        corral.push(q);
        weights.push(0.0);

        loop {
            let mu = affine_minimizer(&corral, dim);
            if mu.iter().all(|&v| v > WEIGHT_EPS) {
                weights = mu;
                x = combine(&corral, &weights, dim);
                break;
            }
            // Step from the current weights toward mu until a weight hits zero.
            let mut theta = 1.0_f64;
            for (&l, &m) in weights.iter().zip(&mu) {
                if m <= WEIGHT_EPS && l - m > 0.0 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, &m) in weights.iter_mut().zip(&mu) {
                *l = theta * m + (1.0 - theta) * *l;
            }
            let mut keep_any = false;
            let mut i = 0;
            while i < corral.len() {
                if weights[i] <= WEIGHT_EPS {
                    corral.swap_remove(i);
                    weights.swap_remove(i);
                } else {
                    keep_any = true;
                    i += 1;
                }
            }
            debug_assert!(keep_any);
            let total: f64 = weights.iter().sum();
            for l in weights.iter_mut() {
                *l /= total;
            }
        }
    }
    MinNormOutcome {
        point: x,
        gap: gap.max(0.0),
        cycles: max_cycles,
        converged: false,
    }
}
