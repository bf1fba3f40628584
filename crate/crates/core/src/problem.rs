//! Decomposable functions `F = Σ_r F_r` and exhaustive baselines.

use std::cmp::Ordering;

use crate::component::SimpleComponent;
use crate::error::{Result, SfmError};
use crate::subset::Subset;

/// Largest ground set scanned by the `2^N` brute-force routines.
pub const EXHAUSTIVE_SCAN_LIMIT: usize = 20;

#[derive(Debug, Clone)]
pub struct DecomposableProblem {
    n: usize,
    components: Vec<SimpleComponent>,
}

impl DecomposableProblem {
    pub fn new(n: usize, components: Vec<SimpleComponent>) -> Result<Self> {
        if n == 0 {
            return Err(SfmError::input("ground set must have at least one element"));
        }
        if components.is_empty() {
            return Err(SfmError::input("a problem needs at least one component"));
        }
        for (r, c) in components.iter().enumerate() {
            if c.min_ground_size() > n {
                return Err(SfmError::input(format!(
                    "component {r} uses element {} outside the ground set of size {n}",
                    c.min_ground_size() - 1
                )));
            }
        }
        Ok(DecomposableProblem { n, components })
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[SimpleComponent] {
        &self.components
    }

    pub fn component(&self, r: usize) -> &SimpleComponent {
        &self.components[r]
    }

    /// `F(A) = Σ_r F_r(A)`.
    pub fn eval_sum(&self, set: &Subset) -> Result<f64> {
        if set.ground_size() != self.n {
            return Err(SfmError::input(format!(
                "set is over {} elements, problem has {}",
                set.ground_size(),
                self.n
            )));
        }
        Ok(self.eval_members(set.as_slice()))
    }

    pub(crate) fn eval_members(&self, members: &[bool]) -> f64 {
        self.components.iter().map(|c| c.eval_members(members)).sum()
    }

    /// Sum of the components' greedy vertices: a vertex of `B(F)` maximizing `sᵀx`.
    pub fn greedy_base_vertex(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "direction length must equal N");
        let mut s = vec![0.0; self.n];
        for c in &self.components {
            for (si, v) in s.iter_mut().zip(c.greedy_base_vertex(x)) {
                *si += v;
            }
        }
        s
    }

    /// Lovász extension of the sum; additive across components.
    pub fn lovasz(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "direction length must equal N");
        self.components.iter().map(|c| c.lovasz(x)).sum()
    }

    fn check_scan(&self, what: &'static str) -> Result<()> {
        if self.n > EXHAUSTIVE_SCAN_LIMIT {
            return Err(SfmError::CapabilityExceeded {
                what,
                size: self.n,
                limit: EXHAUSTIVE_SCAN_LIMIT,
            });
        }
        Ok(())
    }

    /// Values of `F` on every subset, indexed by bit mask.
    pub fn all_values(&self) -> Result<Vec<f64>> {
        self.check_scan("exhaustive evaluation")?;
        let mut members = vec![false; self.n];
        Ok((0..1u64 << self.n)
            .map(|mask| {
                for (i, m) in members.iter_mut().enumerate() {
                    *m = mask >> i & 1 == 1;
                }
                self.eval_members(&members)
            })
            .collect())
    }

    /// Exact minimizer over all `2^N` subsets. Ties go to the smaller set,
    /// then to the lexicographically smaller sorted index list.
    pub fn brute_force_min(&self) -> Result<(Subset, f64)> {
        self.check_scan("brute-force minimization")?;
        let values = self.all_values()?;
        let mut best = 0u64;
        for mask in 1..values.len() as u64 {
            if compare_candidates(values[mask as usize], mask, values[best as usize], best)
                == Ordering::Less
            {
                best = mask;
            }
        }
        Ok((Subset::from_mask(self.n, best), values[best as usize]))
    }

    /// `F_max = max_A |F(A)|`.
    pub fn brute_force_fmax(&self) -> Result<f64> {
        self.check_scan("F_max scan")?;
        Ok(self.all_values()?.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }
}

fn compare_candidates(va: f64, a: u64, vb: f64, b: u64) -> Ordering {
    va.total_cmp(&vb)
        .then(a.count_ones().cmp(&b.count_ones()))
        .then_with(|| {
            if a == b {
                return Ordering::Equal;
            }
            // Equal cardinality: the sorted list that is lexicographically
            // smaller is the one holding the least element of the symmetric
            // difference.
            let low = (a ^ b) & (a ^ b).wrapping_neg();
            if a & low != 0 {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        })
}
