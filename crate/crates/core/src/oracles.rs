//! Slow, independent checks for the projectors: a Frank–Wolfe projection, an
//! exhaustive base-polytope membership test and a variational-inequality
//! certificate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::component::{SimpleComponent, EXHAUSTIVE_PAIR_LIMIT};
use crate::error::{Result, SfmError};

/// Seed of the random directions used by [`variational_check`].
pub const VARIATIONAL_SEED: u64 = 0x5eed_f00d;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleReport {
    /// Largest violation of the base-polytope constraints.
    pub max_violation: f64,
    /// Largest value of `(z − s)ᵀ(v − s)` over the probed vertices `v`.
    pub variational_residual: f64,
    /// `‖s − s_ref‖_∞` against the reference solution.
    pub reference_distance: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwOutcome {
    pub point: Vec<f64>,
    /// Frank–Wolfe gap `(s − z)ᵀ(s − v)`; bounds `½‖s − s*‖²`.
    pub gap: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `½‖s − z‖²` over `B(F_r)` by away-step Frank–Wolfe with exact
/// line search, using only the greedy vertex oracle.
pub fn fw_project(c: &SimpleComponent, z: &[f64], iters: usize) -> Result<FwOutcome> {
    if iters == 0 {
        return Err(SfmError::input("Frank-Wolfe needs at least one iteration"));
    }
    if z.len() < c.min_ground_size() || z.iter().any(|v| !v.is_finite()) {
        return Err(SfmError::input("z must be finite and cover the component's support"));
    }
    let scale = 1.0 + dot(z, z);
    let mut active: Vec<(Vec<f64>, f64)> = vec![(c.greedy_base_vertex(z), 1.0)];
    let mut s = active[0].0.clone();
    let mut gap = f64::INFINITY;
    for it in 0..iters {
        let g: Vec<f64> = s.iter().zip(z).map(|(a, b)| a - b).collect();
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let v = c.greedy_base_vertex(&neg);
        gap = dot(&g, &s) - dot(&g, &v);
        if gap <= 1e-15 * scale {
            return Ok(FwOutcome {
                point: s,
                gap: gap.max(0.0),
                iterations: it,
            });
        }
        let (away, away_score) = active
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (i, dot(&g, p)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("active set is never empty");
        let fw_gain = dot(&g, &s) - dot(&g, &v);
        let away_gain = away_score - dot(&g, &s);
        let (dir, gamma_max, toward) = if fw_gain >= away_gain || active.len() == 1 {
            (v.iter().zip(&s).map(|(a, b)| a - b).collect::<Vec<_>>(), 1.0, true)
        } else {
            let w = active[away].1;
            let d: Vec<f64> = s.iter().zip(&active[away].0).map(|(a, b)| a - b).collect();
            (d, w / (1.0 - w), false)
        };
        let dd = dot(&dir, &dir);
        if dd == 0.0 {
            break;
        }
        let gamma = (-dot(&g, &dir) / dd).clamp(0.0, gamma_max);
        for (si, di) in s.iter_mut().zip(&dir) {
            *si += gamma * di;
        }
        if toward {
            if gamma >= 1.0 {
                active.clear();
                active.push((v, 1.0));
            } else {
                for entry in active.iter_mut() {
                    entry.1 *= 1.0 - gamma;
                }
                match active.iter_mut().find(|(p, _)| *p == v) {
                    Some(entry) => entry.1 += gamma,
                    None => active.push((v, gamma)),
                }
            }
        } else {
            for entry in active.iter_mut() {
                entry.1 *= 1.0 + gamma;
            }
            active[away].1 -= gamma;
            if gamma >= gamma_max {
                active.swap_remove(away);
            }
        }
        active.retain(|&(_, w)| w > 0.0);
    }
    Ok(FwOutcome {
        point: s,
        gap: gap.max(0.0),
        iterations: iters,
    })
}

/// Outcome of [`check_in_base`].
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCheck {
    pub member: bool,
    /// Largest of `s(A) − F(A)`, `|s(V) − F(V)|` and `|s_i|` off the support.
    pub violation: f64,
    /// Ground indices of the most violated set.
    pub worst_set: Vec<usize>,
}

/// Exhaustive test of `s ∈ B(F_r)` on the full-length vector `s`.
pub fn check_in_base(c: &SimpleComponent, s: &[f64], tol: f64) -> Result<BaseCheck> {
    let q = c.support().len();
    if q > EXHAUSTIVE_PAIR_LIMIT {
        return Err(SfmError::CapabilityExceeded {
            what: "base membership check",
            size: q,
            limit: EXHAUSTIVE_PAIR_LIMIT,
        });
    }
    if s.len() < c.min_ground_size() {
        return Err(SfmError::input("s is shorter than the component's support"));
    }
    let local: Vec<f64> = c.support().iter().map(|&i| s[i]).collect();
    let full_mask = (1u64 << q) - 1;
    let mut violation = f64::NEG_INFINITY;
    let mut worst = 0u64;
    for mask in 1..=full_mask {
        let sum: f64 = (0..q).filter(|p| mask >> p & 1 == 1).map(|p| local[p]).sum();
        let f = c.eval_mask(mask);
        let excess = if mask == full_mask { (sum - f).abs() } else { sum - f };
        if excess > violation {
            violation = excess;
            worst = mask;
        }
    }
    let mut worst_set = c.mask_to_ground(worst);
    for (i, &v) in s.iter().enumerate() {
        if !c.support().contains(&i) && v.abs() > violation {
            violation = v.abs();
            worst_set = vec![i];
        }
    }
    let violation = violation.max(0.0);
    Ok(BaseCheck {
        member: violation <= tol,
        violation,
        worst_set,
    })
}

/// Max of `(z − s)ᵀ(v − s)` over greedy vertices `v` for `trials` random unit
/// directions, plus the direction `z − s` itself, whose vertex attains the
/// maximum over the whole polytope. Nonpositive iff `s = Π_B(z)` when `s ∈ B`.
pub fn variational_check(c: &SimpleComponent, z: &[f64], s: &[f64], trials: usize) -> f64 {
    variational_check_seeded(c, z, s, trials, VARIATIONAL_SEED)
}

pub fn variational_check_seeded(c: &SimpleComponent, z: &[f64], s: &[f64], trials: usize, seed: u64) -> f64 {
    assert_eq!(z.len(), s.len(), "z and s must have equal length");
    let resid: Vec<f64> = z.iter().zip(s).map(|(a, b)| a - b).collect();
    let score = |x: &[f64]| {
        let v = c.greedy_base_vertex(x);
        resid.iter().zip(v.iter().zip(s)).map(|(r, (vi, si))| r * (vi - si)).sum::<f64>()
    };
    let mut best = score(&resid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; z.len()];
    for _ in 0..trials {
        for xi in x.iter_mut() {
            *xi = StandardNormal.sample(&mut rng);
        }
        let norm = dot(&x, &x).sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        }
        best = best.max(score(&x));
    }
    best
}

/// Runs the membership and variational checks on a claimed projection `s` of
/// `z`, and compares it with `reference`.
pub fn certify_projection(c: &SimpleComponent, z: &[f64], s: &[f64], reference: &[f64], trials: usize) -> Result<OracleReport> {
    let base = check_in_base(c, s, 0.0)?;
    Ok(OracleReport {
        max_violation: base.violation,
        variational_residual: variational_check(c, z, s, trials).max(0.0),
        reference_distance: s.iter().zip(reference).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())),
        iterations: trials,
    })
}
