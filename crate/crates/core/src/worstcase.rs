//! The cycle instance on which alternating projections attain its slowest
//! known rate, with its closed-form face angle and worst-case starts.
//!
//! Component 1 cuts the edges `(0,1), (2,3), …`, component 2 cuts
//! `(1,2), (3,4), …, (N−1,0)`, and every further component is zero. Near the
//! origin `𝓑` agrees with its affine hull, so the run behaves like
//! alternating projections between two subspaces.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::component::SimpleComponent;
use crate::error::{Result, SfmError};
use crate::problem::DecomposableProblem;
use crate::projection::{project_product, project_subspace, BlockVector, ProjectionConfig, SubspacePoint};
use crate::spectral::{build_s, build_t, nullspace_basis, FacePartitionSpec, OrthoRowMatrix, DEFAULT_TOL_ONE};

/// Default norm of generated starting points.
pub const DEFAULT_INIT_SCALE: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct LowerBoundInstance {
    n: usize,
    r: usize,
    problem: DecomposableProblem,
    face: FacePartitionSpec,
}

impl LowerBoundInstance {
    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn num_components(&self) -> usize {
        self.r
    }

    pub fn problem(&self) -> &DecomposableProblem {
        &self.problem
    }

    /// Partitions describing the affine hull of `𝓑` for this instance.
    pub fn face_spec(&self) -> &FacePartitionSpec {
        &self.face
    }
}

/// Builds the instance for even `N ≥ 4` and `R ≥ 2`.
pub fn build_lb_instance(n: usize, r: usize) -> Result<LowerBoundInstance> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(SfmError::input(format!("N must be even and at least 4, got {n}")));
    }
    if r < 2 {
        return Err(SfmError::input(format!("R must be at least 2, got {r}")));
    }
    let even: Vec<(usize, usize)> = (0..n / 2).map(|i| (2 * i, 2 * i + 1)).collect();
    let odd: Vec<(usize, usize)> = (0..n / 2).map(|i| (2 * i + 1, (2 * i + 2) % n)).collect();
    let cut = |edges: &[(usize, usize)]| SimpleComponent::graph_cut(edges.iter().map(|&(u, v)| (u, v, 1.0)).collect());
    let mut components = vec![cut(&even)?, cut(&odd)?];
    components.extend((2..r).map(|_| SimpleComponent::zero(n)));
    let problem = DecomposableProblem::new(n, components)?;

    let pairs = |edges: &[(usize, usize)]| edges.iter().map(|&(u, v)| vec![u, v]).collect::<Vec<_>>();
    let mut parts = vec![pairs(&even), pairs(&odd)];
    parts.extend((2..r).map(|_| (0..n).map(|i| vec![i]).collect()));
    let face = FacePartitionSpec::new(n, parts)?;
    Ok(LowerBoundInstance { n, r, problem, face })
}

/// `1 − (1/R)(1 − cos(2π/N))`.
pub fn predicted_cf2(n: usize, r: usize) -> f64 {
    1.0 - (1.0 - (2.0 * PI / n as f64).cos()) / r as f64
}

/// `Cᵀ C` for the `N × N` circulant `C = (I + shift)/√2`.
pub fn circulant_gram(n: usize) -> DMatrix<f64> {
    let c = DMatrix::from_fn(n, n, |i, j| {
        if j == i || j == (i + 1) % n {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            0.0
        }
    });
    c.transpose() * c
}

/// Eigenvalues of [`circulant_gram`], ascending, by dense eigensolve.
pub fn circulant_spectrum(n: usize) -> Result<Vec<f64>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(SfmError::input(format!("N must be even, got {n}")));
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(circulant_gram(n)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `S` and the block matrix `T` whose nullspaces are `𝓐` and the affine
/// hull of `𝓑` for this instance.
pub fn lb_face_matrices(inst: &LowerBoundInstance) -> Result<(OrthoRowMatrix, OrthoRowMatrix)> {
    Ok((build_s(inst.n, inst.r)?, build_t(&inst.face)?))
}

/// Start on `null(S)` along the principal vector of the largest principal
/// cosine below one, scaled to norm `scale`. It is orthogonal to
/// `null(S) ∩ null(T)`. `S` is the `N × NR` matrix of [`build_s`].
pub fn worst_case_init(s: &OrthoRowMatrix, t: &OrthoRowMatrix, scale: f64) -> Result<SubspacePoint> {
    if s.ncols() != t.ncols() || s.nrows() == 0 || !s.ncols().is_multiple_of(s.nrows()) {
        return Err(SfmError::input("S must be N x NR and T must have NR columns"));
    }
    let qs = nullspace_basis(s.matrix());
    let qt = nullspace_basis(t.matrix());
    let no_angle = SfmError::CapabilityExceeded {
        what: "principal angle below one",
        size: 0,
        limit: 1,
    };
    if qs.ncols() == 0 || qt.ncols() == 0 {
        return Err(no_angle);
    }
    let cross = qs.transpose() * &qt;
    let svd = cross.svd(true, false);
    let u = svd.u.expect("left factor was requested");
    let pick = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v < 1.0 - DEFAULT_TOL_ONE && v > 0.0)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .ok_or(no_angle)?;
    let v = &qs * u.column(pick);
    let v = v.scale(scale / v.norm());
    BlockVector::from_flat(s.nrows(), s.ncols() / s.nrows(), v.iter().copied().collect())
}

/// Starting point of a ratio experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioInit {
    Random { seed: u64 },
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub k: usize,
    /// `d(a_k, E)`.
    pub dist_to_e: f64,
    /// `d(a_{k+1}, E) / d(a_k, E)`.
    pub ratio: f64,
    /// `1 − 1/κ(a_k)²` with `κ(a) = d(a, E) / max(d(a, 𝓐), d(a, aff 𝓑))`.
    pub kappa_term: f64,
}

#[derive(Debug, Clone)]
pub struct RatioSeries {
    pub rows: Vec<RatioRow>,
    pub predicted_cf2: f64,
    /// Set when some `b_k` left the box `‖b‖_∞ ≤ 1`, where `𝓑` stops
    /// matching its affine hull.
    pub left_box: bool,
}

impl RatioSeries {
    /// CSV with columns `k,dist_to_E,ratio,predicted_cf2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,dist_to_E,ratio,predicted_cf2\n");
        for row in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", row.k, row.dist_to_e, row.ratio, self.predicted_cf2);
        }
        out
    }
}

/// Uniform point of `[−1,1]^{NR}` projected onto `𝓐` and scaled to `scale`.
pub fn random_subspace_point(n: usize, r: usize, seed: u64, scale: f64) -> SubspacePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * r).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let a = project_subspace(&BlockVector::from_flat(n, r, data).expect("length matches"));
    let norm = a.norm();
    if norm > 0.0 {
        a.scaled(scale / norm)
    } else {
        a
    }
}

/// Runs `iters` steps of alternating projections on the instance and records
/// the distance of each `a_k` to `E = null(S) ∩ null(T)`.
pub fn ratio_experiment(inst: &LowerBoundInstance, init: RatioInit, iters: usize, scale: f64) -> Result<RatioSeries> {
    if iters < 2 {
        return Err(SfmError::input("a ratio experiment needs at least 2 iterations"));
    }
    let (n, r) = (inst.n, inst.r);
    let (s, t) = lb_face_matrices(inst)?;
    let a0 = match init {
        RatioInit::Random { seed } => random_subspace_point(n, r, seed, scale),
        RatioInit::WorstCase => worst_case_init(&s, &t, scale)?,
    };
    let mut stacked = DMatrix::zeros(s.nrows() + t.nrows(), n * r);
    stacked.rows_mut(0, s.nrows()).copy_from(s.matrix());
    stacked.rows_mut(s.nrows(), t.nrows()).copy_from(t.matrix());
    let qe = nullspace_basis(&stacked);
    let dist_e = |a: &BlockVector| {
        let v = DVector::from_column_slice(a.as_slice());
        (&v - &qe * (qe.transpose() * &v)).norm()
    };
    // rows of T are orthonormal, so ‖T a‖ is the distance to null(T)
    let dist_face = |a: &BlockVector| (t.matrix() * DVector::from_column_slice(a.as_slice())).norm();

    let cfg = ProjectionConfig::default();
    let mut a = a0;
    let mut left_box = false;
    let mut dists = Vec::with_capacity(iters + 1);
    let mut kappa = Vec::with_capacity(iters + 1);
    for k in 0..=iters {
        let d = dist_e(&a);
        dists.push(d);
        let denom = dist_face(&a);
        kappa.push(if d > 0.0 { 1.0 - (denom / d).powi(2) } else { 0.0 });
        if k == iters {
            break;
        }
        let b = project_product(inst.problem(), &a, &cfg, false)?;
        if b.as_slice().iter().any(|v| v.abs() > 1.0) {
            left_box = true;
        }
        a = project_subspace(&b);
    }
    let rows = (0..iters)
        .map(|k| RatioRow {
            k,
            dist_to_e: dists[k],
            ratio: dists[k + 1] / dists[k],
            kappa_term: kappa[k],
        })
        .collect();
    Ok(RatioSeries {
        rows,
        predicted_cf2: predicted_cf2(n, r),
        left_box,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::friedrichs;
    use crate::subset::Subset;

    #[test]
    fn small_instance() {
        let inst = build_lb_instance(4, 2).unwrap();
        let p = inst.problem();
        assert_eq!(p.num_components(), 2);
        assert_eq!(p.eval_sum(&Subset::from_indices(4, &[0]).unwrap()).unwrap(), 2.0);
        assert_eq!(p.eval_sum(&Subset::from_indices(4, &[1, 3]).unwrap()).unwrap(), 4.0);
        let (set, v) = p.brute_force_min().unwrap();
        assert!(set.is_empty() && v == 0.0);
        assert!(build_lb_instance(5, 2).is_err());
        assert!(build_lb_instance(4, 1).is_err());
    }

    #[test]
    fn angle_matches_formula() {
        for (n, r) in [(4, 2), (10, 10), (6, 3)] {
            let inst = build_lb_instance(n, r).unwrap();
            let (s, t) = lb_face_matrices(&inst).unwrap();
            let c = friedrichs(&s, &t, DEFAULT_TOL_ONE).unwrap();
            assert!((c * c - predicted_cf2(n, r)).abs() < 1e-9, "N={n} R={r}");
        }
        assert!((predicted_cf2(4, 2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn circulant_ends() {
        let ev = circulant_spectrum(8).unwrap();
        assert!(ev[0].abs() < 1e-12);
        assert!((ev[7] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn worst_case_start() {
        let inst = build_lb_instance(6, 3).unwrap();
        let (s, t) = lb_face_matrices(&inst).unwrap();
        let v = worst_case_init(&s, &t, 0.1).unwrap();
        assert!((v.norm() - 0.1).abs() < 1e-14);
        let v = DVector::from_column_slice(v.as_slice());
        assert!((s.matrix() * &v).norm() < 1e-12);
        let series = ratio_experiment(&inst, RatioInit::WorstCase, 20, 0.1).unwrap();
        let c2 = predicted_cf2(6, 3);
        assert!(!series.left_box);
        for row in &series.rows {
            assert!((row.ratio - c2).abs() < 1e-8 * c2);
            assert!(row.kappa_term <= c2 + 1e-6);
        }
        assert!(series.to_csv().starts_with("k,dist_to_E,ratio,predicted_cf2\n"));
    }
}
