//! Alternating projections for the best-approximation problem between the
//! zero-sum subspace `𝓐` and the product `𝓑` of base polytopes, with primal
//! recovery, suplevel rounding and duality-gap certificates.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SfmError};
use crate::problem::DecomposableProblem;
use crate::projection::{project_product, project_subspace, BlockVector, ProductPoint, ProjectionConfig, SubspacePoint};
use crate::subset::Subset;

/// Ground sets up to this size get the exhaustive membership check in
/// [`continuous_gap`] and [`discrete_gap`].
pub const MEMBERSHIP_CHECK_LIMIT: usize = 15;

/// Column header of the trace CSV.
pub const TRACE_HEADER: &str = "k,dist_ab,primal_obj,cont_gap,best_discrete,discrete_gap,ratio";

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stop once `‖a_k − a_{k−1}‖` falls to this value.
    pub tol_pair: f64,
    pub tol_discrete_gap: f64,
    /// Stop as soon as the discrete gap certifies the rounded set.
    pub stop_on_certificate: bool,
    pub record_trace: bool,
    /// Keep every `a_k` in the trace (needed by [`estimate_rate`]).
    pub keep_iterates: bool,
    pub parallel: bool,
    /// `None` starts from `a_0 = 0`; otherwise from a uniform point of
    /// `[−1, 1]^{NR}` projected onto `𝓐`.
    pub seed: Option<u64>,
    pub projection: ProjectionConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 100_000,
            tol_pair: 1e-14,
            tol_discrete_gap: 1e-6,
            stop_on_certificate: true,
            record_trace: true,
            keep_iterates: false,
            parallel: false,
            seed: None,
            projection: ProjectionConfig::default(),
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(SfmError::input("max_iters must be at least 1"));
        }
        if !(self.tol_pair > 0.0) || !(self.tol_discrete_gap > 0.0) {
            return Err(SfmError::input("tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `‖a_k − b_k‖`.
    pub dist_ab: f64,
    /// `f(x_k) + ½‖x_k‖²`.
    pub primal_obj: f64,
    pub cont_gap: f64,
    /// Smallest `F` value among the rounded sets seen so far.
    pub best_discrete: f64,
    /// Gap of the rounding of `x_k` against `s = −x_k`.
    pub discrete_gap: f64,
    /// `‖a_k − a_{k−1}‖ / ‖a_{k−1} − a_{k−2}‖`, NaN for `k < 2`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    /// `a_0, a_1, …` when iterates were kept.
    pub iterates: Vec<SubspacePoint>,
}

impl SolveTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV with header [`TRACE_HEADER`]; reals use the shortest round-trip
    /// decimal form.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.k, r.dist_ab, r.primal_obj, r.cont_gap, r.best_discrete, r.discrete_gap, r.ratio
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    NumericError,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::NumericError => "numeric_error",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub a_final: SubspacePoint,
    pub b_final: ProductPoint,
    /// `b_0 = Π_𝓑 a_0`; `‖b_0 − b_final‖` stands in for the distance to the
    /// optimum in [`iteration_bound`].
    pub b_initial: ProductPoint,
    pub x_final: Vec<f64>,
    pub minimizer_set: Subset,
    pub min_value: f64,
    pub discrete_gap: f64,
    pub continuous_gap: f64,
    /// Number of `𝓑`-projections performed.
    pub iterations: usize,
    pub status: SolveStatus,
    /// True when `discrete_gap ≤ tol_discrete_gap`.
    pub certified: bool,
    pub trace: SolveTrace,
    pub error: Option<SfmError>,
}

/// `x = −Σ_r b_r`.
pub fn primal_point(b: &ProductPoint) -> Vec<f64> {
    b.block_sum().into_iter().map(|v| -v).collect()
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `f(x) + ½‖x‖²`.
pub fn primal_objective(p: &DecomposableProblem, x: &[f64]) -> f64 {
    p.lovasz(x) + 0.5 * sq_norm(x)
}

fn check_neg_in_base(p: &DecomposableProblem, x: &[f64]) -> Result<()> {
    let n = p.ground_size();
    if x.len() != n || x.iter().any(|v| !v.is_finite()) {
        return Err(SfmError::input("x must be a finite vector of length N"));
    }
    let members: Vec<bool> = vec![true; n];
    let full = p.eval_members(&members);
    let total: f64 = -x.iter().sum::<f64>();
    let scale = 1.0 + full.abs() + x.iter().map(|v| v.abs()).sum::<f64>();
    let tol = 1e-8 * scale;
    if (total - full).abs() > tol {
        return Err(SfmError::input(format!(
            "-x is not in B(F): s(V) = {total} but F(V) = {full}"
        )));
    }
    if n <= MEMBERSHIP_CHECK_LIMIT {
        let mut m = vec![false; n];
        for mask in 1u64..(1u64 << n) - 1 {
            let mut s = 0.0;
            for (i, mi) in m.iter_mut().enumerate() {
                *mi = mask >> i & 1 == 1;
                if *mi {
                    s -= x[i];
                }
            }
            let f = p.eval_members(&m);
            if s > f + tol {
                return Err(SfmError::input(format!(
                    "-x is not in B(F): s(A) exceeds F(A) by {} on {}",
                    s - f,
                    Subset::from_mask(n, mask)
                )));
            }
        }
    }
    Ok(())
}

fn continuous_gap_unchecked(p: &DecomposableProblem, x: &[f64]) -> f64 {
    p.lovasz(x) + sq_norm(x)
}

/// `s_−(V) = Σ_i min(s_i, 0)` with `s = −x`.
fn negative_mass(x: &[f64]) -> f64 {
    x.iter().map(|&v| (-v).min(0.0)).sum()
}

/// Duality gap `f(x) + ‖x‖²` of the pair `(x, −x)` for the proximal problem.
/// Requires `−x ∈ B(F)`; checked exhaustively when `N ≤ 15`, otherwise only
/// `s(V) = F(V)` is checked.
pub fn continuous_gap(p: &DecomposableProblem, x: &[f64]) -> Result<f64> {
    check_neg_in_base(p, x)?;
    Ok(continuous_gap_unchecked(p, x))
}

/// `F(A) − Σ_i min(−x_i, 0)`; zero certifies that `A` minimizes `F`.
pub fn discrete_gap(p: &DecomposableProblem, x: &[f64], set: &Subset) -> Result<f64> {
    check_neg_in_base(p, x)?;
    Ok(p.eval_sum(set)? - negative_mass(x))
}

/// Best of the suplevel sets `{i : x_i ≥ c}` (including `∅`). Ties go to the
/// smaller set.
pub fn round_suplevel(p: &DecomposableProblem, x: &[f64]) -> (Subset, f64) {
    let n = p.ground_size();
    assert_eq!(x.len(), n, "x must have length N");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut members = vec![false; n];
    let mut best = (members.clone(), p.eval_members(&members));
    let mut k = 0;
    while k < n {
        // add the whole block of equal values at once
        let level = x[order[k]];
        while k < n && x[order[k]] == level {
            members[order[k]] = true;
            k += 1;
        }
        let v = p.eval_members(&members);
        if v < best.1 {
            best = (members.clone(), v);
        }
    }
    (Subset::from_members(best.0), best.1)
}

/// Iteration count `2N²R² ln(√(6·F_max·N·√R·dist0) / ε)` after which the
/// discrete objective is within `ε` of optimal. Non-positive when no
/// iterations are needed; `−∞` when `F_max` or `dist0` is zero.
pub fn iteration_bound(n: usize, r: usize, f_max: f64, dist0: f64, eps: f64) -> f64 {
    let (n, r) = (n as f64, r as f64);
    let inner = (6.0 * f_max * n * r.sqrt() * dist0).sqrt() / eps;
    2.0 * n * n * r * r * inner.ln()
}

fn random_start(n: usize, r: usize, seed: u64) -> SubspacePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * r).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    project_subspace(&BlockVector::from_flat(n, r, data).expect("length matches"))
}

/// Runs alternating projections from `a_0 = 0` or a seeded random point.
pub fn run_ap(p: &DecomposableProblem, opts: &SolveOptions) -> Result<SolveResult> {
    let (n, r) = (p.ground_size(), p.num_components());
    let a0 = match opts.seed {
        Some(seed) => random_start(n, r, seed),
        None => BlockVector::zeros(n, r),
    };
    run_ap_from(p, a0, opts)
}

/// Runs alternating projections `b_k = Π_𝓑 a_k`, `a_{k+1} = Π_𝓐 b_k` from a
/// given `a_0`, which is first projected onto `𝓐`.
pub fn run_ap_from(p: &DecomposableProblem, a0: SubspacePoint, opts: &SolveOptions) -> Result<SolveResult> {
    opts.validate()?;
    let (n, r) = (p.ground_size(), p.num_components());
    if a0.block_len() != n || a0.num_blocks() != r || !a0.is_finite() {
        return Err(SfmError::input("initial point must be finite with shape N x R"));
    }
    let mut a = project_subspace(&a0);
    let mut trace = SolveTrace::default();
    let mut prev_a: Option<SubspacePoint> = None;
    let mut prev_step = f64::NAN;
    let mut best_discrete = f64::INFINITY;
    let mut b_initial: Option<ProductPoint> = None;
    let mut last: Option<(ProductPoint, Vec<f64>, Subset, f64, f64, f64)> = None;
    let mut status = SolveStatus::MaxIters;
    let mut error = None;
    let mut iterations = 0;
    let mut final_a = a.clone();

    for k in 0..opts.max_iters {
        let b = match project_product(p, &a, &opts.projection, opts.parallel) {
            Ok(b) => b,
            Err(e) => {
                status = SolveStatus::NumericError;
                error = Some(e);
                break;
            }
        };
        iterations = k + 1;
        if b_initial.is_none() {
            b_initial = Some(b.clone());
        }
        let x = primal_point(&b);
        let (set, value) = round_suplevel(p, &x);
        best_discrete = best_discrete.min(value);
        let dgap = value - negative_mass(&x);
        let cgap = continuous_gap_unchecked(p, &x);
        let step = prev_a.as_ref().map_or(f64::NAN, |pa| a.distance(pa));
        if opts.record_trace {
            trace.records.push(TraceRecord {
                k,
                dist_ab: a.distance(&b),
                primal_obj: primal_objective(p, &x),
                cont_gap: cgap,
                best_discrete,
                discrete_gap: dgap,
                ratio: if k >= 2 { step / prev_step } else { f64::NAN },
            });
            if opts.keep_iterates {
                trace.iterates.push(a.clone());
            }
        }
        let next = project_subspace(&b);
        last = Some((b, x, set, value, dgap, cgap));
        final_a = a.clone();

        if !next.is_finite() {
            status = SolveStatus::NumericError;
            error = Some(SfmError::input("iterate became non-finite"));
            break;
        }
        if opts.stop_on_certificate && dgap <= opts.tol_discrete_gap {
            status = SolveStatus::Converged;
            break;
        }
        if step <= opts.tol_pair || (r == 1 && k == 0) {
            status = SolveStatus::Converged;
            break;
        }
        prev_step = step;
        prev_a = Some(std::mem::replace(&mut a, next));
    }

    let (b_final, x_final, minimizer_set, min_value, dgap, cgap) = match last {
        Some(t) => t,
        None => {
            let b = BlockVector::zeros(n, r);
            let x = vec![0.0; n];
            let (set, value) = round_suplevel(p, &x);
            (b, x, set, value, f64::NAN, f64::NAN)
        }
    };
    Ok(SolveResult {
        a_final: final_a,
        b_initial: b_initial.unwrap_or_else(|| b_final.clone()),
        b_final,
        x_final,
        minimizer_set,
        min_value,
        discrete_gap: dgap,
        continuous_gap: cgap,
        iterations,
        certified: dgap <= opts.tol_discrete_gap,
        status,
        trace,
        error,
    })
}

/// Geometric-mean contraction of a decaying error sequence. Values at or
/// below `floor` are treated as converged; the estimate uses the last half of
/// the leading run above it. Fewer than four usable points give 0.
pub fn geometric_rate(errors: &[f64], floor: f64) -> f64 {
    let run = errors.iter().take_while(|&&e| e > floor).count();
    if run < 4 {
        return 0.0;
    }
    let start = run / 2;
    let steps = (run - 1 - start) as f64;
    (errors[run - 1] / errors[start]).powf(1.0 / steps)
}

fn rate_floor(first: f64, last_step: f64, absolute: f64) -> f64 {
    (1e-6 * first).max(1e6 * last_step).max(absolute)
}

fn kept_iterates(trace: &SolveTrace) -> Result<&[SubspacePoint]> {
    if trace.iterates.len() < 10 {
        return Err(SfmError::input(format!(
            "rate estimation needs at least 10 recorded iterates, got {}",
            trace.iterates.len()
        )));
    }
    Ok(&trace.iterates)
}

/// Observed linear rate of `‖a_k − a_final‖`, with the last recorded iterate
/// standing in for the limit.
pub fn estimate_rate(trace: &SolveTrace) -> Result<f64> {
    let its = kept_iterates(trace)?;
    let fin = its.last().expect("nonempty");
    let errors: Vec<f64> = its[..its.len() - 1].iter().map(|a| a.distance(fin)).collect();
    let last_step = its[its.len() - 2].distance(fin);
    let floor = rate_floor(errors[0], last_step, 1e-13 * (1.0 + fin.norm()));
    Ok(geometric_rate(&errors, floor))
}

/// Observed linear rate of the primal objective error against its final value.
pub fn estimate_primal_rate(trace: &SolveTrace) -> Result<f64> {
    let its = kept_iterates(trace)?;
    let recs = &trace.records;
    if recs.len() != its.len() {
        return Err(SfmError::input("trace records and iterates differ in length"));
    }
    let fin = recs.last().expect("nonempty").primal_obj;
    let errors: Vec<f64> = recs[..recs.len() - 1].iter().map(|t| (t.primal_obj - fin).abs()).collect();
    let last_step = its[its.len() - 2].distance(its.last().expect("nonempty"));
    let floor = rate_floor(errors[0], last_step, 1e-11 * (1.0 + fin.abs()));
    Ok(geometric_rate(&errors, floor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::component::SimpleComponent;

    fn cycle4() -> DecomposableProblem {
        DecomposableProblem::new(
            4,
            vec![
                SimpleComponent::graph_cut(vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap(),
                SimpleComponent::graph_cut(vec![(1, 2, 1.0), (3, 0, 1.0)]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn primal_point_examples() {
        let b = BlockVector::from_blocks(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(primal_point(&b), vec![-1.0, -1.0]);
        assert_eq!(primal_point(&BlockVector::zeros(3, 2)), vec![0.0; 3]);
    }

    #[test]
    fn primal_objective_examples() {
        let p = cycle4();
        assert_eq!(primal_objective(&p, &[0.0; 4]), 0.0);
        assert_eq!(primal_objective(&p, &[1.0, 0.0, 0.0, 0.0]), 2.5);
    }

    #[test]
    fn single_component_is_one_step() {
        let g = SimpleComponent::concave_cardinality(vec![0.0, 1.0, 2.0, 2.0], vec![0, 1, 2]).unwrap();
        let p = DecomposableProblem::new(3, vec![g]).unwrap();
        let res = run_ap(&p, &SolveOptions::default()).unwrap();
        assert_eq!(res.iterations, 1);
        for v in &res.x_final {
            assert!((v + 2.0 / 3.0).abs() < 1e-10);
        }
        assert!(res.minimizer_set.is_empty());
        assert_eq!(res.min_value, 0.0);
    }

    #[test]
    fn lower_bound_cycle_converges_to_zero() {
        let res = run_ap(&cycle4(), &SolveOptions::default()).unwrap();
        assert!(res.certified);
        assert_eq!(res.status, SolveStatus::Converged);
        assert!(res.minimizer_set.is_empty());
        assert_eq!(res.min_value, 0.0);
        assert!(res.x_final.iter().all(|v| v.abs() < 1e-12));

        let opts = SolveOptions {
            seed: Some(7),
            stop_on_certificate: false,
            tol_pair: 1e-13,
            ..SolveOptions::default()
        };
        // from a random start the iterates meet in a point of 𝓐 ∩ 𝓑, and the
        // primal point is still the all-zeros optimum
        let res = run_ap(&cycle4(), &opts).unwrap();
        assert!(res.a_final.distance(&res.b_final) < 1e-10);
        assert!(res.x_final.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn single_edge_minimizer() {
        let p = DecomposableProblem::new(2, vec![SimpleComponent::edge_cut(0, 1, 1.0).unwrap()]).unwrap();
        let res = run_ap(&p, &SolveOptions::default()).unwrap();
        assert!(res.minimizer_set.is_empty() || res.minimizer_set.len() == 2);
        assert_eq!(res.min_value, 0.0);
    }

    #[test]
    fn gaps_and_rounding() {
        let p = cycle4();
        assert_eq!(continuous_gap(&p, &[0.0; 4]).unwrap(), 0.0);
        assert_eq!(discrete_gap(&p, &[0.0; 4], &Subset::empty(4)).unwrap(), 0.0);
        assert!(continuous_gap(&p, &[1.0, 0.0, 0.0, 0.0]).is_err());
        let (set, v) = round_suplevel(&p, &[0.0; 4]);
        assert!(set.is_empty());
        assert_eq!(v, 0.0);

        // modular w: prox minimizer x* = -w, rounding picks the negative weights
        let m = DecomposableProblem::new(2, vec![SimpleComponent::modular(vec![1.0, -2.0], vec![0, 1]).unwrap()]).unwrap();
        let x = [-1.0, 2.0];
        let (set, v) = round_suplevel(&m, &x);
        assert_eq!(set.indices(), vec![1]);
        assert_eq!(v, -2.0);
        assert_eq!(discrete_gap(&m, &x, &set).unwrap(), 0.0);
    }

    #[test]
    fn iteration_bound_examples() {
        assert!(iteration_bound(4, 2, 1.0, 1.0, 10.0) <= 0.0);
        let direct = 2.0 * 100.0 * 4.0 * ((6.0 * 4.0 * 10.0 * 2f64.sqrt()).sqrt() / 1e-6).ln();
        assert!((iteration_bound(10, 2, 4.0, 1.0, 1e-6) - direct).abs() < 1e-9 * direct);
        assert_eq!(iteration_bound(4, 2, 4.0, 0.0, 1e-6), f64::NEG_INFINITY);
    }

    #[test]
    fn geometric_rate_examples() {
        let e: Vec<f64> = (0..40).map(|k| 0.5f64.powi(k)).collect();
        assert!((geometric_rate(&e, 0.0) - 0.5).abs() < 1e-12);
        assert_eq!(geometric_rate(&[1.0, 0.0, 0.0], 0.0), 0.0);
    }

    #[test]
    fn trace_csv_shape() {
        let res = run_ap(&cycle4(), &SolveOptions { seed: Some(1), ..SolveOptions::default() }).unwrap();
        let csv = res.trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        assert!(lines.all(|l| l.split(',').count() == 7));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn estimate_rate_needs_iterates() {
        assert!(estimate_rate(&SolveTrace::default()).is_err());
    }
}
