//! Euclidean projections onto base polytopes, the zero-sum subspace and their
//! product.
//!
//! `B(F_r)` is projected with a closed form where one exists (single edge
//! cuts, vertex-disjoint edge sets, modular functions), by isotonic
//! regression for concave-of-cardinality functions, and otherwise by Wolfe's
//! minimum-norm-point algorithm through `Π_B(z) = z + minnorm(B(F_r − z))`.

use rayon::prelude::*;

use crate::component::SimpleComponent;
use crate::error::{Result, SfmError};
use crate::problem::DecomposableProblem;
use crate::wolfe;

/// A point of `ℝ^{N·R}` stored block by block; block `r` holds the coordinate
/// of component `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    n: usize,
    r: usize,
    data: Vec<f64>,
}

/// A point asserted to lie in the product of base polytopes.
pub type ProductPoint = BlockVector;
/// A point asserted to lie in the zero-sum subspace.
pub type SubspacePoint = BlockVector;

impl BlockVector {
    pub fn zeros(n: usize, r: usize) -> Self {
        BlockVector {
            n,
            r,
            data: vec![0.0; n * r],
        }
    }

    pub fn from_flat(n: usize, r: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * r {
            return Err(SfmError::input(format!(
                "flat vector has length {}, expected {}",
                data.len(),
                n * r
            )));
        }
        Ok(BlockVector { n, r, data })
    }

    pub fn from_blocks(blocks: Vec<Vec<f64>>) -> Result<Self> {
        let r = blocks.len();
        let n = blocks.first().map_or(0, Vec::len);
        if r == 0 || blocks.iter().any(|b| b.len() != n) {
            return Err(SfmError::input("blocks must be nonempty and of equal length"));
        }
        Ok(BlockVector {
            n,
            r,
            data: blocks.concat(),
        })
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.r
    }

    pub fn block(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn block_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `Σ_r w_r`.
    pub fn block_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for b in self.blocks() {
            for (si, v) in s.iter_mut().zip(b) {
                *si += v;
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &BlockVector) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, factor: f64) -> BlockVector {
        BlockVector {
            n: self.n,
            r: self.r,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionConfig {
    /// Relative tolerance on the Wolfe duality criterion.
    pub wolfe_tol: f64,
    pub max_cycles: usize,
    /// Largest support handed to the generic projector.
    pub max_support: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            wolfe_tol: 1e-10,
            max_cycles: 2000,
            max_support: 64,
        }
    }
}

fn require_finite(z: &[f64]) -> Result<()> {
    if z.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SfmError::input("cannot project a vector with NaN or infinite entries"))
    }
}

/// Orthogonal projection onto `{Σ_r a_r = 0}`: subtract the block mean.
pub fn project_subspace(w: &BlockVector) -> SubspacePoint {
    let mean: Vec<f64> = w.block_sum().iter().map(|s| s / w.r as f64).collect();
    let mut out = w.clone();
    for r in 0..w.r {
        for (v, m) in out.block_mut(r).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    out
}

/// `t = clamp((z_a − z_b)/2, −w, w)`; `B(w·G_ab)` is the segment `{(t, −t)}`.
fn edge_segment(za: f64, zb: f64, w: f64) -> f64 {
    (0.5 * (za - zb)).clamp(-w, w)
}

/// Projection onto the base polytope of `weight · G_uv`.
pub fn project_edge_cut(u: usize, v: usize, weight: f64, z: &[f64]) -> Result<Vec<f64>> {
    require_finite(z)?;
    if u == v || u >= z.len() || v >= z.len() {
        return Err(SfmError::input("edge endpoints must be distinct and inside the vector"));
    }
    if !(weight >= 0.0) {
        return Err(SfmError::input("edge weight must be nonnegative"));
    }
    let t = edge_segment(z[u], z[v], weight);
    let mut s = vec![0.0; z.len()];
    s[u] = t;
    s[v] = -t;
    Ok(s)
}

/// Nonincreasing least-squares fit by pool-adjacent-violators.
fn isotonic_nonincreasing(y: &[f64]) -> Vec<f64> {
    // (sum, count) per pooled block
    let mut pools: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        pools.push((v, 1));
        while pools.len() > 1 {
            let (s1, c1) = pools[pools.len() - 1];
            let (s0, c0) = pools[pools.len() - 2];
            if s0 / c0 as f64 >= s1 / c1 as f64 {
                break;
            }
            pools.pop();
            *pools.last_mut().unwrap() = (s0 + s1, c0 + c1);
        }
    }
    pools
        .into_iter()
        .flat_map(|(s, c)| std::iter::repeat_n(s / c as f64, c))
        .collect()
}

/// Local projection onto `B(g(|·|))`. Ties in `z` are ordered by `keys`.
fn concave_local(g: &[f64], keys: &[usize], z: &[f64]) -> Vec<f64> {
    let q = z.len();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(keys[a].cmp(&keys[b])));
    let y: Vec<f64> = order
        .iter()
        .enumerate()
        .map(|(k, &p)| z[p] - (g[k + 1] - g[k]))
        .collect();
    let fit = isotonic_nonincreasing(&y);
    let mut s = vec![0.0; q];
    for (k, &p) in order.iter().enumerate() {
        s[p] = z[p] - fit[k];
    }
    s
}

/// Projection onto the base polytope of `A ↦ g(|A ∩ support|)`.
pub fn project_concave_cardinality(g: &[f64], support: &[usize], z: &[f64]) -> Result<Vec<f64>> {
    require_finite(z)?;
    let c = SimpleComponent::concave_cardinality(g.to_vec(), support.to_vec())?;
    if c.min_ground_size() > z.len() {
        return Err(SfmError::input("support exceeds the vector length"));
    }
    let zl = c.gather(z);
    Ok(c.scatter(&concave_local(g, support, &zl), z.len()))
}

/// Closed-form or isotonic projection in local coordinates, if the component
/// has one. Shifts are handled through `Π_{B(F−o)}(y) = Π_{B(F)}(y + o) − o`.
fn specialized_local(c: &SimpleComponent, zl: &[f64]) -> Option<Vec<f64>> {
    let shifted: Vec<f64> = match c.shift() {
        Some(o) => zl.iter().zip(o).map(|(a, b)| a + b).collect(),
        None => zl.to_vec(),
    };
    let mut s = if let Some((a, b, w)) = c.edge_local() {
        let mut s = vec![0.0; 2];
        let t = edge_segment(shifted[a], shifted[b], w);
        s[a] = t;
        s[b] = -t;
        s
    } else if let Some(edges) = c.matching_edges() {
        let mut s = vec![0.0; shifted.len()];
        for &(a, b, w) in edges {
            let t = edge_segment(shifted[a], shifted[b], w);
            s[a] = t;
            s[b] = -t;
        }
        s
    } else if let Some(g) = c.concave_values() {
        concave_local(g, c.support(), &shifted)
    } else if let Some(w) = c.modular_weights() {
        w.to_vec()
    } else {
        return None;
    };
    if let Some(o) = c.shift() {
        for (si, oi) in s.iter_mut().zip(o) {
            *si -= oi;
        }
    }
    Some(s)
}

/// True if `project_component` uses a fast path for this component.
pub fn has_specialized_projection(c: &SimpleComponent) -> bool {
    c.edge_local().is_some()
        || c.matching_edges().is_some()
        || c.concave_values().is_some()
        || c.modular_weights().is_some()
}

fn generic_local(c: &SimpleComponent, zl: &[f64], cfg: &ProjectionConfig) -> Result<Vec<f64>> {
    let q = zl.len();
    if q > cfg.max_support {
        return Err(SfmError::CapabilityExceeded {
            what: "generic projection support",
            size: q,
            limit: cfg.max_support,
        });
    }
    // B(F − z) = B(F) − z; its linear oracle is the shifted greedy vertex.
    let z_full = c.scatter(zl, c.min_ground_size());
    let shifted = c.shift_modular(&z_full);
    let argmin = |x: &[f64]| {
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        shifted.greedy_local(&neg)
    };
    let out = wolfe::min_norm_point(q, argmin, cfg.wolfe_tol, cfg.max_cycles);
    let s: Vec<f64> = zl.iter().zip(&out.point).map(|(a, b)| a + b).collect();
    if !out.converged {
        return Err(SfmError::ProjectionFailed {
            component: None,
            residual: out.gap,
            cycles: out.cycles,
            best: s,
        });
    }
    Ok(s)
}

/// Projection through Wolfe's min-norm-point algorithm, whatever the kind.
pub fn project_generic(c: &SimpleComponent, z: &[f64]) -> Result<Vec<f64>> {
    project_generic_with(c, z, &ProjectionConfig::default())
}

pub fn project_generic_with(c: &SimpleComponent, z: &[f64], cfg: &ProjectionConfig) -> Result<Vec<f64>> {
    require_finite(z)?;
    if c.min_ground_size() > z.len() {
        return Err(SfmError::input("support exceeds the vector length"));
    }
    let s = generic_local(c, &c.gather(z), cfg)?;
    Ok(c.scatter(&s, z.len()))
}

/// Projection onto `B(F_r)`, specialized when available.
pub fn project_component(c: &SimpleComponent, z: &[f64], cfg: &ProjectionConfig) -> Result<Vec<f64>> {
    require_finite(z)?;
    if c.min_ground_size() > z.len() {
        return Err(SfmError::input("support exceeds the vector length"));
    }
    let zl = c.gather(z);
    let s = match specialized_local(c, &zl) {
        Some(s) => s,
        None => generic_local(c, &zl, cfg)?,
    };
    Ok(c.scatter(&s, z.len()))
}

/// `min_{s ∈ B(F_r)} ‖s‖`.
pub fn min_norm_point(c: &SimpleComponent) -> Result<Vec<f64>> {
    project_generic(c, &vec![0.0; c.min_ground_size()])
}

/// Block-wise projection onto `B(F_1) × … × B(F_R)`. With `parallel` the
/// blocks are computed on the rayon pool; the result is identical.
pub fn project_product(
    p: &DecomposableProblem,
    w: &BlockVector,
    cfg: &ProjectionConfig,
    parallel: bool,
) -> Result<ProductPoint> {
    let n = p.ground_size();
    if w.block_len() != n || w.num_blocks() != p.num_components() {
        return Err(SfmError::input("block vector shape does not match the problem"));
    }
    let project = |(r, c): (usize, &SimpleComponent)| {
        project_component(c, w.block(r), cfg).map_err(|e| e.with_component(r))
    };
    let blocks: Vec<Result<Vec<f64>>> = if parallel {
        p.components().par_iter().enumerate().map(project).collect()
    } else {
        p.components().iter().enumerate().map(project).collect()
    };
    let blocks = blocks.into_iter().collect::<Result<Vec<_>>>()?;
    BlockVector::from_blocks(blocks)
}
