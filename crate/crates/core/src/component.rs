//! Simple submodular summands: evaluation, greedy base vertices and the
//! Lovász extension.
//!
//! A component depends only on its support. Every vector passed in or out of
//! a component is full length `N`; coordinates off the support are ignored on
//! input and zero on output.

use crate::error::{Result, SfmError};
use crate::subset::Subset;

/// Largest support on which pairwise submodularity and base membership are
/// checked exhaustively.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 15;

/// Largest table support accepted (the table holds `2^q` values).
pub const TABLE_SUPPORT_LIMIT: usize = 24;

/// Declarative description of a component, in ground-set indices.
#[derive(Debug, Clone, PartialEq)]
pub enum ComponentKind {
    /// `weight` if exactly one of `u`, `v` is in the set.
    EdgeCut { u: usize, v: usize, weight: f64 },
    /// Weighted cut of an undirected edge list.
    GraphCut { edges: Vec<(usize, usize, f64)> },
    /// `values[|A ∩ support|]` with `values` concave and `values[0] = 0`.
    ConcaveCardinality { values: Vec<f64>, support: Vec<usize> },
    /// `Σ_{i ∈ A} weights[i]`, weights aligned with `support`.
    Modular { weights: Vec<f64>, support: Vec<usize> },
    /// Explicit values in binary-counter order: bit `p` of the table index is
    /// membership of `support[p]`. `support` must be increasing.
    Table { support: Vec<usize>, values: Vec<f64> },
}

#[derive(Debug, Clone)]
enum Local {
    EdgeCut {
        a: usize,
        b: usize,
        w: f64,
    },
    GraphCut {
        edges: Vec<(usize, usize, f64)>,
        adjacency: Vec<Vec<(usize, f64)>>,
    },
    Concave {
        g: Vec<f64>,
    },
    Modular {
        w: Vec<f64>,
    },
    Table {
        values: Vec<f64>,
    },
}

/// One summand `F_r` of a decomposable function, optionally shifted by a
/// modular term: the value is `base(A) − shift(A)`.
#[derive(Debug, Clone)]
pub struct SimpleComponent {
    kind: ComponentKind,
    support: Vec<usize>,
    local: Local,
    shift: Option<Vec<f64>>,
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SfmError::input(format!("{what} must be finite")))
    }
}

fn check_distinct(support: &[usize]) -> Result<()> {
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(SfmError::input("support contains a repeated element"));
    }
    Ok(())
}

impl SimpleComponent {
    pub fn new(kind: ComponentKind) -> Result<Self> {
        let (support, local) = match &kind {
            ComponentKind::EdgeCut { u, v, weight } => {
                if u == v {
                    return Err(SfmError::input("edge cut needs two distinct endpoints"));
                }
                if !weight.is_finite() || *weight < 0.0 {
                    return Err(SfmError::input("edge weight must be finite and nonnegative"));
                }
                let support = vec![(*u).min(*v), (*u).max(*v)];
                let (a, b) = if u < v { (0, 1) } else { (1, 0) };
                (support, Local::EdgeCut { a, b, w: *weight })
            }
            ComponentKind::GraphCut { edges } => {
                let mut support: Vec<usize> = edges.iter().flat_map(|&(u, v, _)| [u, v]).collect();
                support.sort_unstable();
                support.dedup();
                let pos = |i: usize| support.binary_search(&i).unwrap();
                let mut adjacency = vec![Vec::new(); support.len()];
                let mut local_edges = Vec::with_capacity(edges.len());
                for &(u, v, w) in edges {
                    if !w.is_finite() || w < 0.0 {
                        return Err(SfmError::input("edge weight must be finite and nonnegative"));
                    }
                    if u == v {
                        // A self loop is never cut.
                        continue;
                    }
                    let (pu, pv) = (pos(u), pos(v));
                    adjacency[pu].push((pv, w));
                    adjacency[pv].push((pu, w));
                    local_edges.push((pu, pv, w));
                }
                (
                    support,
                    Local::GraphCut {
                        edges: local_edges,
                        adjacency,
                    },
                )
            }
            ComponentKind::ConcaveCardinality { values, support } => {
                check_distinct(support)?;
                check_finite(values, "cardinality values")?;
                if values.len() != support.len() + 1 {
                    return Err(SfmError::input(format!(
                        "concave cardinality needs {} values for a support of size {}, got {}",
                        support.len() + 1,
                        support.len(),
                        values.len()
                    )));
                }
                if values[0] != 0.0 {
                    return Err(SfmError::input("concave cardinality requires g(0) = 0"));
                }
                let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                for k in 1..values.len().saturating_sub(1) {
                    let (d0, d1) = (values[k] - values[k - 1], values[k + 1] - values[k]);
                    if d1 > d0 + 1e-12 * scale {
                        return Err(SfmError::input(format!(
                            "cardinality values are not concave at k = {k}"
                        )));
                    }
                }
                (support.clone(), Local::Concave { g: values.clone() })
            }
            ComponentKind::Modular { weights, support } => {
                check_distinct(support)?;
                check_finite(weights, "modular weights")?;
                if weights.len() != support.len() {
                    return Err(SfmError::input("modular weights and support differ in length"));
                }
                (support.clone(), Local::Modular { w: weights.clone() })
            }
            ComponentKind::Table { support, values } => {
                if support.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(SfmError::input("table support must be strictly increasing"));
                }
                if support.len() > TABLE_SUPPORT_LIMIT {
                    return Err(SfmError::CapabilityExceeded {
                        what: "table support",
                        size: support.len(),
                        limit: TABLE_SUPPORT_LIMIT,
                    });
                }
                check_finite(values, "table values")?;
                if values.len() != 1usize << support.len() {
                    return Err(SfmError::input(format!(
                        "table over {} elements needs {} values, got {}",
                        support.len(),
                        1usize << support.len(),
                        values.len()
                    )));
                }
                if values[0] != 0.0 {
                    return Err(SfmError::input("table value on the empty set must be 0"));
                }
                (support.clone(), Local::Table { values: values.clone() })
            }
        };
        Ok(SimpleComponent {
            kind,
            support,
            local,
            shift: None,
        })
    }

    pub fn edge_cut(u: usize, v: usize, weight: f64) -> Result<Self> {
        Self::new(ComponentKind::EdgeCut { u, v, weight })
    }

    pub fn graph_cut(edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        Self::new(ComponentKind::GraphCut { edges })
    }

    pub fn concave_cardinality(values: Vec<f64>, support: Vec<usize>) -> Result<Self> {
        Self::new(ComponentKind::ConcaveCardinality { values, support })
    }

    pub fn modular(weights: Vec<f64>, support: Vec<usize>) -> Result<Self> {
        Self::new(ComponentKind::Modular { weights, support })
    }

    pub fn table(support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        Self::new(ComponentKind::Table { support, values })
    }

    /// The zero function on `0..n`; its base polytope is `{0}`.
    pub fn zero(n: usize) -> Self {
        Self::modular(vec![0.0; n], (0..n).collect()).expect("zero function is valid")
    }

    pub fn kind(&self) -> &ComponentKind {
        &self.kind
    }

    /// Ground elements the component depends on, in local position order.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Modular shift (aligned with `support`), if any.
    pub fn shift(&self) -> Option<&[f64]> {
        self.shift.as_deref()
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ComponentKind::EdgeCut { .. } => "edge_cut",
            ComponentKind::GraphCut { .. } => "graph_cut",
            ComponentKind::ConcaveCardinality { .. } => "concave_cardinality",
            ComponentKind::Modular { .. } => "modular",
            ComponentKind::Table { .. } => "table",
        }
    }

    /// Smallest ground-set size that contains the support.
    pub fn min_ground_size(&self) -> usize {
        self.support.iter().max().map_or(0, |&m| m + 1)
    }

    /// True when the graph cut's edges are pairwise vertex-disjoint, so the
    /// component is a sum of independent single-edge cuts.
    pub(crate) fn matching_edges(&self) -> Option<&[(usize, usize, f64)]> {
        match &self.local {
            Local::GraphCut { edges, adjacency } => {
                if adjacency.iter().all(|a| a.len() <= 1) {
                    Some(edges)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub(crate) fn edge_local(&self) -> Option<(usize, usize, f64)> {
        match self.local {
            Local::EdgeCut { a, b, w } => Some((a, b, w)),
            _ => None,
        }
    }

    pub(crate) fn concave_values(&self) -> Option<&[f64]> {
        match &self.local {
            Local::Concave { g } => Some(g),
            _ => None,
        }
    }

    pub(crate) fn modular_weights(&self) -> Option<&[f64]> {
        match &self.local {
            Local::Modular { w } => Some(w),
            _ => None,
        }
    }

    fn shift_sum(&self, members: &[bool]) -> f64 {
        match &self.shift {
            Some(z) => z.iter().zip(members).filter(|(_, &m)| m).map(|(v, _)| v).sum(),
            None => 0.0,
        }
    }

    /// Value on a set given by local membership flags (one per support position).
    pub fn eval_local(&self, members: &[bool]) -> f64 {
        debug_assert_eq!(members.len(), self.support.len());
        let base = match &self.local {
            Local::EdgeCut { a, b, w } => {
                if members[*a] != members[*b] {
                    *w
                } else {
                    0.0
                }
            }
            Local::GraphCut { edges, .. } => edges
                .iter()
                .filter(|&&(u, v, _)| members[u] != members[v])
                .map(|&(_, _, w)| w)
                .sum(),
            Local::Concave { g } => g[members.iter().filter(|&&m| m).count()],
            Local::Modular { w } => w.iter().zip(members).filter(|(_, &m)| m).map(|(v, _)| v).sum(),
            Local::Table { values } => {
                let idx = members
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (p, &m)| if m { acc | (1 << p) } else { acc });
                values[idx]
            }
        };
        base - self.shift_sum(members)
    }

    /// Value on the set whose local membership is the bit pattern `mask`.
    pub fn eval_mask(&self, mask: u64) -> f64 {
        let members: Vec<bool> = (0..self.support.len()).map(|p| mask >> p & 1 == 1).collect();
        self.eval_local(&members)
    }

    /// Value on a full-length membership slice.
    pub(crate) fn eval_members(&self, members: &[bool]) -> f64 {
        let local: Vec<bool> = self.support.iter().map(|&i| members[i]).collect();
        self.eval_local(&local)
    }

    /// `F_r(A)`; elements of `A` outside the support do not matter.
    pub fn eval(&self, set: &Subset) -> Result<f64> {
        if set.ground_size() < self.min_ground_size() {
            return Err(SfmError::input(format!(
                "set over {} elements cannot index support element {}",
                set.ground_size(),
                self.min_ground_size() - 1
            )));
        }
        Ok(self.eval_members(set.as_slice()))
    }

    /// Support positions sorted by decreasing direction value; ties go to the
    /// smaller ground index.
    fn greedy_order(&self, x_local: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.support.len()).collect();
        order.sort_by(|&p, &q| {
            x_local[q]
                .total_cmp(&x_local[p])
                .then(self.support[p].cmp(&self.support[q]))
        });
        order
    }

    /// Greedy vertex in local coordinates for a local direction.
    pub(crate) fn greedy_local(&self, x_local: &[f64]) -> Vec<f64> {
        let q = self.support.len();
        let order = self.greedy_order(x_local);
        let mut s = vec![0.0; q];
        match &self.local {
            Local::EdgeCut { a, b, w } => {
                let first = order[0];
                s[first] = *w;
                s[if first == *a { *b } else { *a }] = -*w;
            }
            Local::GraphCut { adjacency, .. } => {
                let mut inside = vec![false; q];
                for &p in &order {
                    s[p] = adjacency[p]
                        .iter()
                        .map(|&(o, w)| if inside[o] { -w } else { w })
                        .sum();
                    inside[p] = true;
                }
            }
            Local::Concave { g } => {
                for (k, &p) in order.iter().enumerate() {
                    s[p] = g[k + 1] - g[k];
                }
            }
            Local::Modular { w } => s.copy_from_slice(w),
            Local::Table { values } => {
                let mut mask = 0usize;
                for &p in &order {
                    let next = mask | (1 << p);
                    s[p] = values[next] - values[mask];
                    mask = next;
                }
            }
        }
        if let Some(z) = &self.shift {
            for (sp, zp) in s.iter_mut().zip(z) {
                *sp -= zp;
            }
        }
        s
    }

    pub(crate) fn gather(&self, x: &[f64]) -> Vec<f64> {
        self.support.iter().map(|&i| x[i]).collect()
    }

    pub(crate) fn scatter(&self, local: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&i, &v) in self.support.iter().zip(local) {
            out[i] = v;
        }
        out
    }

    /// Edmonds' greedy vertex of `B(F_r)` maximizing `sᵀx`.
    ///
    /// Support elements are visited by decreasing `x` (ties by ascending
    /// index) and each receives its marginal gain. Panics if `x` is shorter
    /// than the support requires.
    pub fn greedy_base_vertex(&self, x: &[f64]) -> Vec<f64> {
        assert!(x.len() >= self.min_ground_size(), "direction too short for support");
        let s = self.greedy_local(&self.gather(x));
        self.scatter(&s, x.len())
    }

    /// Lovász extension `f_r(x) = max_{s ∈ B(F_r)} sᵀx`.
    pub fn lovasz(&self, x: &[f64]) -> f64 {
        let xl = self.gather(x);
        let s = self.greedy_local(&xl);
        s.iter().zip(&xl).map(|(a, b)| a * b).sum()
    }

    /// The component `A ↦ F_r(A) − z(A)`; `z` is full length and read only on
    /// the support.
    pub fn shift_modular(&self, z: &[f64]) -> SimpleComponent {
        assert!(z.len() >= self.min_ground_size(), "shift too short for support");
        let mut shift = self.shift.clone().unwrap_or_else(|| vec![0.0; self.support.len()]);
        for (sp, &i) in shift.iter_mut().zip(&self.support) {
            *sp += z[i];
        }
        let mut out = self.clone();
        out.shift = if shift.iter().all(|&v| v == 0.0) {
            None
        } else {
            Some(shift)
        };
        out
    }

    /// Exhaustive submodularity test. Returns the first violating pair
    /// `(A, B)` in ground indices, or `None` if the function is submodular.
    ///
    /// Uses the equivalent local form `F(S+i) + F(S+j) ≥ F(S+i+j) + F(S)`.
    pub fn check_submodular(&self) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
        let q = self.support.len();
        if q > EXHAUSTIVE_PAIR_LIMIT {
            return Err(SfmError::CapabilityExceeded {
                what: "submodularity check",
                size: q,
                limit: EXHAUSTIVE_PAIR_LIMIT,
            });
        }
        let values: Vec<f64> = (0..1u64 << q).map(|m| self.eval_mask(m)).collect();
        let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let tol = 1e-10 * scale;
        for mask in 0..1u64 << q {
            for i in 0..q {
                if mask >> i & 1 == 1 {
                    continue;
                }
                for j in i + 1..q {
                    if mask >> j & 1 == 1 {
                        continue;
                    }
                    let (a, b) = (mask | 1 << i, mask | 1 << j);
                    let lhs = values[a as usize] + values[b as usize];
                    let rhs = values[(a | b) as usize] + values[mask as usize];
                    if lhs < rhs - tol {
                        return Ok(Some((self.mask_to_ground(a), self.mask_to_ground(b))));
                    }
                }
            }
        }
        Ok(None)
    }

    pub(crate) fn mask_to_ground(&self, mask: u64) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.support.len())
            .filter(|p| mask >> p & 1 == 1)
            .map(|p| self.support[p])
            .collect();
        v.sort_unstable();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn edge_cut_values() {
        let c = SimpleComponent::edge_cut(0, 1, 1.0).unwrap();
        assert_eq!(c.eval(&Subset::from_indices(2, &[0]).unwrap()).unwrap(), 1.0);
        assert_eq!(c.eval(&Subset::empty(2)).unwrap(), 0.0);
        assert_eq!(c.eval(&Subset::full(2)).unwrap(), 0.0);
    }

    #[test]
    fn concave_full_set() {
        let c = SimpleComponent::concave_cardinality(vec![0.0, 1.0, 2.0, 2.0], vec![0, 1, 2]).unwrap();
        assert_eq!(c.eval(&Subset::full(3)).unwrap(), 2.0);
        assert_eq!(c.eval(&Subset::empty(3)).unwrap(), 0.0);
    }

    #[test]
    fn elements_off_support_are_ignored() {
        let c = SimpleComponent::edge_cut(1, 3, 2.0).unwrap();
        let a = Subset::from_indices(5, &[1]).unwrap();
        let b = Subset::from_indices(5, &[0, 1, 2, 4]).unwrap();
        assert_eq!(c.eval(&a).unwrap(), c.eval(&b).unwrap());
    }

    #[test]
    fn eval_rejects_short_sets() {
        let c = SimpleComponent::edge_cut(0, 4, 1.0).unwrap();
        assert!(matches!(c.eval(&Subset::empty(3)), Err(SfmError::InvalidInput(_))));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SimpleComponent::edge_cut(0, 1, -1.0).is_err());
        assert!(SimpleComponent::edge_cut(2, 2, 1.0).is_err());
        assert!(SimpleComponent::concave_cardinality(vec![0.0, 1.0, 3.0], vec![0, 1]).is_err());
        assert!(SimpleComponent::concave_cardinality(vec![1.0, 1.0], vec![0]).is_err());
        assert!(SimpleComponent::table(vec![0, 1], vec![0.0, 1.0, 1.0]).is_err());
        assert!(SimpleComponent::table(vec![1, 0], vec![0.0; 4]).is_err());
        assert!(SimpleComponent::modular(vec![1.0], vec![0, 1]).is_err());
        assert!(SimpleComponent::modular(vec![1.0, 2.0], vec![0, 0]).is_err());
    }

    #[test]
    fn greedy_examples() {
        let c = SimpleComponent::edge_cut(0, 1, 1.0).unwrap();
        assert!(approx(&c.greedy_base_vertex(&[0.7, 0.2]), &[1.0, -1.0]));
        // constant direction: ascending index order
        assert!(approx(&c.greedy_base_vertex(&[0.3, 0.3]), &[1.0, -1.0]));

        let g = SimpleComponent::concave_cardinality(vec![0.0, 1.0, 2.0, 2.0], vec![0, 1, 2]).unwrap();
        assert!(approx(&g.greedy_base_vertex(&[3.0, 2.0, 1.0]), &[1.0, 1.0, 0.0]));
        assert!(approx(&g.greedy_base_vertex(&[1.0, 2.0, 3.0]), &[0.0, 1.0, 1.0]));
        assert!(approx(&g.greedy_base_vertex(&[0.0, 0.0, 0.0]), &[1.0, 1.0, 0.0]));
    }

    #[test]
    fn greedy_ties_use_ground_index_not_support_position() {
        let c = SimpleComponent::modular(vec![1.0, 2.0], vec![3, 1]).unwrap();
        let s = c.greedy_base_vertex(&[0.0; 4]);
        assert!(approx(&s, &[0.0, 2.0, 0.0, 1.0]));
        let t = SimpleComponent::concave_cardinality(vec![0.0, 2.0, 3.0], vec![3, 1]).unwrap();
        assert!(approx(&t.greedy_base_vertex(&[0.0; 4]), &[0.0, 2.0, 0.0, 1.0]));
    }

    #[test]
    fn lovasz_examples() {
        let c = SimpleComponent::edge_cut(0, 1, 1.0).unwrap();
        assert!((c.lovasz(&[0.7, 0.2]) - 0.5).abs() < 1e-15);
        assert_eq!(c.lovasz(&[0.0, 0.0]), 0.0);
        let t = SimpleComponent::table(vec![0, 1, 2], vec![0.0, 1.0, 1.5, 2.0, 0.5, 1.2, 1.8, 1.0]).unwrap();
        for mask in 0..8u64 {
            let x: Vec<f64> = (0..3).map(|i| (mask >> i & 1) as f64).collect();
            assert!((t.lovasz(&x) - t.eval_mask(mask)).abs() < 1e-12);
        }
    }

    #[test]
    fn submodularity_examples() {
        assert_eq!(SimpleComponent::edge_cut(0, 1, 1.0).unwrap().check_submodular().unwrap(), None);
        let bad = SimpleComponent::table(vec![0, 1], vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(bad.check_submodular().unwrap(), Some((vec![0], vec![1])));
        let g = SimpleComponent::concave_cardinality(vec![0.0, 1.0, 1.5], vec![0, 1]).unwrap();
        assert_eq!(g.check_submodular().unwrap(), None);
        let big = SimpleComponent::zero(16);
        assert!(matches!(
            big.check_submodular(),
            Err(SfmError::CapabilityExceeded { .. })
        ));
    }

    #[test]
    fn shift_examples() {
        let c = SimpleComponent::edge_cut(0, 1, 1.0).unwrap();
        let shifted = c.shift_modular(&[1.0, 0.0]);
        assert_eq!(shifted.eval(&Subset::from_indices(2, &[0]).unwrap()).unwrap(), 0.0);
        let z = [0.3, -1.2];
        let back = c.shift_modular(&z).shift_modular(&[-0.3, 1.2]);
        assert!(back.shift().is_none());
        for m in 0..4 {
            assert_eq!(back.eval_mask(m), c.eval_mask(m));
            assert_eq!(c.shift_modular(&[0.0, 0.0]).eval_mask(m), c.eval_mask(m));
        }
        assert_eq!(shifted.check_submodular().unwrap(), None);
    }

    #[test]
    fn graph_cut_marginals_match_evaluation() {
        let c = SimpleComponent::graph_cut(vec![(0, 1, 1.0), (1, 2, 2.0), (0, 2, 0.5), (2, 3, 1.5)]).unwrap();
        let x = [0.1, 0.9, -0.3, 0.4];
        let s = c.greedy_base_vertex(&x);
        // prefix sums of the greedy vertex reproduce F on the greedy chain
        let order = [1usize, 3, 0, 2];
        let mut members = vec![false; 4];
        let mut acc = 0.0;
        for &i in &order {
            members[i] = true;
            acc += s[i];
            assert!((acc - c.eval_members(&members)).abs() < 1e-12);
        }
    }
}
