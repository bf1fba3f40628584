//! Friedrichs angles of face pairs, the face-intersection graph, its Cheeger
//! constant and normalized-Laplacian spectrum.
//!
//! A face of `𝓑` is described by one ordered partition of the ground set per
//! component. Its affine hull is the nullspace of `T`, whose rows are the
//! normalized indicators `1_A/√|A|` of the blocks, placed in the component's
//! coordinate block. `𝓐` is the nullspace of `S = (1/√R)(I … I)`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Result, SfmError};

/// Largest face graph accepted by [`cheeger_constant`].
pub const CHEEGER_VERTEX_LIMIT: usize = 22;

/// Singular values at or above `1 − DEFAULT_TOL_ONE` count as one.
pub const DEFAULT_TOL_ONE: f64 = 1e-9;

const ORTHONORMAL_TOL: f64 = 1e-12;

/// One ordered partition `(A_1, …, A_M)` of the ground set per component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FacePartitionSpec {
    n: usize,
    parts: Vec<Vec<Vec<usize>>>,
}

impl FacePartitionSpec {
    pub fn new(n: usize, parts: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if n == 0 {
            return Err(SfmError::input("ground set must have at least one element"));
        }
        if parts.is_empty() {
            return Err(SfmError::input("a face spec needs at least one component"));
        }
        for (r, blocks) in parts.iter().enumerate() {
            let mut seen = vec![false; n];
            for block in blocks {
                if block.is_empty() {
                    return Err(SfmError::input(format!("component {r} has an empty block")));
                }
                for &i in block {
                    if i >= n {
                        return Err(SfmError::input(format!(
                            "component {r}: element {i} is outside the ground set of size {n}"
                        )));
                    }
                    if seen[i] {
                        return Err(SfmError::input(format!(
                            "component {r}: element {i} appears in two blocks"
                        )));
                    }
                    seen[i] = true;
                }
            }
            if let Some(i) = seen.iter().position(|&s| !s) {
                return Err(SfmError::input(format!("component {r}: element {i} is in no block")));
            }
        }
        Ok(FacePartitionSpec { n, parts })
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn num_components(&self) -> usize {
        self.parts.len()
    }

    pub fn blocks(&self, r: usize) -> &[Vec<usize>] {
        &self.parts[r]
    }

    pub fn parts(&self) -> &[Vec<Vec<usize>>] {
        &self.parts
    }

    /// Total number of blocks over all components.
    pub fn total_blocks(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }

    /// `(component, block)` for every block, in row order of [`build_t`].
    fn vertices(&self) -> Vec<(usize, usize)> {
        self.parts
            .iter()
            .enumerate()
            .flat_map(|(r, b)| (0..b.len()).map(move |m| (r, m)))
            .collect()
    }

    /// True when every block is a singleton, so the face is a vertex.
    pub fn is_vertex_face(&self) -> bool {
        self.parts.iter().flatten().all(|b| b.len() == 1)
    }
}

/// A dense matrix whose rows are orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoRowMatrix(DMatrix<f64>);

impl OrthoRowMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let gram = &m * m.transpose();
        let dev = (gram - DMatrix::identity(m.nrows(), m.nrows())).amax();
        if dev > ORTHONORMAL_TOL {
            return Err(SfmError::input(format!("rows are not orthonormal (deviation {dev:e})")));
        }
        Ok(OrthoRowMatrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }
}

/// `S = (1/√R)(I_N … I_N)`; its nullspace is `{Σ_r w_r = 0}`.
pub fn build_s(n: usize, r: usize) -> Result<OrthoRowMatrix> {
    if n == 0 || r == 0 {
        return Err(SfmError::input("N and R must be positive"));
    }
    let c = 1.0 / (r as f64).sqrt();
    OrthoRowMatrix::new(DMatrix::from_fn(n, n * r, |i, j| if j % n == i { c } else { 0.0 }))
}

/// Block-diagonal matrix of normalized block indicators, one row per block.
pub fn build_t(spec: &FacePartitionSpec) -> Result<OrthoRowMatrix> {
    let n = spec.ground_size();
    let mut t = DMatrix::zeros(spec.total_blocks(), n * spec.num_components());
    let mut row = 0;
    for (r, blocks) in spec.parts().iter().enumerate() {
        for block in blocks {
            let c = 1.0 / (block.len() as f64).sqrt();
            for &i in block {
                t[(row, r * n + i)] = c;
            }
            row += 1;
        }
    }
    OrthoRowMatrix::new(t)
}

/// Cosine of the Friedrichs angle between `null(S)` and `null(T)`: the
/// largest singular value of `STᵀ` below `1 − tol_one`, or 0 if there is none.
pub fn friedrichs(s: &OrthoRowMatrix, t: &OrthoRowMatrix, tol_one: f64) -> Result<f64> {
    if s.ncols() != t.ncols() {
        return Err(SfmError::input(format!(
            "column counts differ: {} vs {}",
            s.ncols(),
            t.ncols()
        )));
    }
    let m = s.matrix() * t.matrix().transpose();
    let sv = m.singular_values();
    Ok(sv.iter().copied().filter(|&v| v < 1.0 - tol_one).fold(0.0, f64::max))
}

/// Orthonormal basis (as columns) of the nullspace of `m`.
pub fn nullspace_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right factor was requested");
    let scale = svd.singular_values.iter().fold(1.0_f64, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..cols)
        .filter(|&k| svd.singular_values[k] <= 1e-9 * scale)
        .collect();
    DMatrix::from_fn(cols, keep.len(), |i, j| v_t[(keep[j], i)])
}

/// Weighted graph on the blocks `(r, m)`; blocks of different components are
/// joined with weight `|A_{r₁m₁} ∩ A_{r₂m₂}|`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceGraph {
    vertices: Vec<(usize, usize)>,
    weights: Vec<Vec<u64>>,
    degrees: Vec<u64>,
    /// Ground elements of each block.
    blocks: Vec<Vec<usize>>,
    n: usize,
    r: usize,
}

fn face_graph_unchecked(spec: &FacePartitionSpec) -> FaceGraph {
    let n = spec.ground_size();
    let vertices = spec.vertices();
    let blocks: Vec<Vec<usize>> = vertices.iter().map(|&(r, m)| spec.blocks(r)[m].clone()).collect();
    let v = vertices.len();
    // block index of each element, per component
    let mut owner = vec![vec![0usize; n]; spec.num_components()];
    for (idx, &(r, _)) in vertices.iter().enumerate() {
        for &i in &blocks[idx] {
            owner[r][i] = idx;
        }
    }
    let mut weights = vec![vec![0u64; v]; v];
    for (idx, &(r, _)) in vertices.iter().enumerate() {
        for &i in &blocks[idx] {
            for (r2, own) in owner.iter().enumerate() {
                if r2 != r {
                    weights[idx][own[i]] += 1;
                }
            }
        }
    }
    let degrees = weights.iter().map(|row| row.iter().sum()).collect();
    FaceGraph {
        vertices,
        weights,
        degrees,
        blocks,
        n,
        r: spec.num_components(),
    }
}

/// Builds the face graph; needs at least two components.
pub fn build_face_graph(spec: &FacePartitionSpec) -> Result<FaceGraph> {
    if spec.num_components() < 2 {
        return Err(SfmError::CapabilityExceeded {
            what: "face graph components",
            size: spec.num_components(),
            limit: 2,
        });
    }
    Ok(face_graph_unchecked(spec))
}

impl FaceGraph {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// `(component, block)` label of vertex `v`.
    pub fn vertex(&self, v: usize) -> (usize, usize) {
        self.vertices[v]
    }

    pub fn weight(&self, u: usize, v: usize) -> u64 {
        self.weights[u][v]
    }

    pub fn degree(&self, v: usize) -> u64 {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn block_size(&self, v: usize) -> usize {
        self.blocks[v].len()
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn num_components(&self) -> usize {
        self.r
    }

    /// Vertex sets of the connected components, each sorted, ordered by
    /// smallest vertex.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let v = self.num_vertices();
        let mut label = vec![usize::MAX; v];
        let mut comps = Vec::new();
        for root in 0..v {
            if label[root] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = vec![root];
            label[root] = id;
            let mut head = 0;
            while head < members.len() {
                let u = members[head];
                head += 1;
                for w in 0..v {
                    if self.weights[u][w] > 0 && label[w] == usize::MAX {
                        label[w] = id;
                        members.push(w);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() == 1
    }

    /// Symmetric normalized Laplacian `I − D^{−1/2} W D^{−1/2}`. Isolated
    /// vertices get a zero row and column.
    pub fn normalized_laplacian(&self) -> DMatrix<f64> {
        let v = self.num_vertices();
        let inv_sqrt: Vec<f64> = self
            .degrees
            .iter()
            .map(|&d| if d > 0 { 1.0 / (d as f64).sqrt() } else { 0.0 })
            .collect();
        DMatrix::from_fn(v, v, |i, j| {
            let off = -(self.weights[i][j] as f64) * inv_sqrt[i] * inv_sqrt[j];
            if i == j && self.degrees[i] > 0 {
                1.0 + off
            } else {
                off
            }
        })
    }
}

/// `min_U w(U, Uᶜ) / min(vol U, vol Uᶜ)` over nonempty proper vertex subsets,
/// by exhaustive Gray-code enumeration. A disconnected graph gives 0.
pub fn cheeger_constant(g: &FaceGraph) -> Result<f64> {
    let v = g.num_vertices();
    if v > CHEEGER_VERTEX_LIMIT {
        return Err(SfmError::CapabilityExceeded {
            what: "exhaustive Cheeger constant",
            size: v,
            limit: CHEEGER_VERTEX_LIMIT,
        });
    }
    if v < 2 || !g.is_connected() {
        return Ok(0.0);
    }
    let total: u64 = g.degrees.iter().sum();
    // The last vertex stays outside U; U and its complement give the same ratio.
    let free = v - 1;
    let mut inside = vec![false; v];
    let (mut cut, mut vol) = (0i64, 0u64);
    let mut best = f64::INFINITY;
    for step in 1u64..1u64 << free {
        let flip = step.trailing_zeros() as usize;
        let delta: i64 = (0..v)
            .filter(|&w| w != flip)
            .map(|w| {
                let wt = g.weights[flip][w] as i64;
                if inside[w] {
                    -wt
                } else {
                    wt
                }
            })
            .sum();
        if inside[flip] {
            cut -= delta;
            vol -= g.degrees[flip];
        } else {
            cut += delta;
            vol += g.degrees[flip];
        }
        inside[flip] = !inside[flip];
        let denom = vol.min(total - vol);
        if denom > 0 {
            best = best.min(cut as f64 / denom as f64);
        }
    }
    Ok(best)
}

/// Second-smallest eigenvalue of the normalized Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda2 {
    pub value: f64,
    /// Set when the graph is disconnected: eigenvalue 0 is repeated and
    /// `value` is reported as 0.
    pub disconnected: bool,
}

pub fn lambda2(g: &FaceGraph) -> Lambda2 {
    if g.num_vertices() < 2 || !g.is_connected() {
        return Lambda2 {
            value: 0.0,
            disconnected: true,
        };
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(g.normalized_laplacian()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Lambda2 {
        value: ev[1],
        disconnected: false,
    }
}

/// Max-abs entry of `(STᵀ)ᵀ(STᵀ) − (I − ((R−1)/R)𝓛)`.
pub fn check_laplacian_identity(s: &OrthoRowMatrix, t: &OrthoRowMatrix, g: &FaceGraph) -> Result<f64> {
    let m = s.matrix() * t.matrix().transpose();
    let lhs = m.transpose() * &m;
    let v = g.num_vertices();
    if lhs.nrows() != v {
        return Err(SfmError::input("T and the face graph disagree on the number of blocks"));
    }
    let r = g.num_components() as f64;
    let rhs = DMatrix::identity(v, v) - g.normalized_laplacian() * ((r - 1.0) / r);
    Ok((lhs - rhs).amax())
}

/// `1 − ((R−1)/R)·2/(N²R²)`, the bound on squared face cosines.
pub fn angle_upper_bound(n: usize, r: usize) -> f64 {
    let (n, r) = (n as f64, r as f64);
    1.0 - ((r - 1.0) / r) * 2.0 / (n * n * r * r)
}

/// `1 − 1/(N²R²)`, the bound on the alternating projections rate.
pub fn rate_upper_bound(n: usize, r: usize) -> f64 {
    let (n, r) = (n as f64, r as f64);
    1.0 - 1.0 / (n * n * r * r)
}

/// `(1 − c²)^{−1/2}`.
pub fn kappa_star_bound(cf: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&cf) {
        return Err(SfmError::input(format!("cosine {cf} must lie in [0, 1)")));
    }
    Ok(1.0 / (1.0 - cf * cf).sqrt())
}

/// Largest number of ground elements covered by the blocks of one connected
/// component of the face graph. `None` for a vertex face.
pub fn effective_ground_size(spec: &FacePartitionSpec) -> Option<usize> {
    if spec.is_vertex_face() {
        return None;
    }
    let g = face_graph_unchecked(spec);
    g.connected_components()
        .iter()
        .map(|comp| {
            let mut covered = vec![false; spec.ground_size()];
            for &v in comp {
                for &i in &g.blocks[v] {
                    covered[i] = true;
                }
            }
            covered.iter().filter(|&&c| c).count()
        })
        .max()
}

/// The spectral quantities of one face; `None` marks a value that was not
/// computed.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub cf2: f64,
    pub lambda2: Option<f64>,
    pub cheeger: Option<f64>,
    pub bound_thm7: f64,
    pub residual_eq11: Option<f64>,
    pub connected_components: Option<usize>,
    pub effective_ground_size: Option<usize>,
}

pub fn spectral_report(spec: &FacePartitionSpec) -> Result<SpectralReport> {
    let (n, r) = (spec.ground_size(), spec.num_components());
    let s = build_s(n, r)?;
    let t = build_t(spec)?;
    let cf = friedrichs(&s, &t, DEFAULT_TOL_ONE)?;
    let mut report = SpectralReport {
        cf2: cf * cf,
        lambda2: None,
        cheeger: None,
        bound_thm7: rate_upper_bound(n, r),
        residual_eq11: None,
        connected_components: None,
        effective_ground_size: effective_ground_size(spec),
    };
    if let Ok(g) = build_face_graph(spec) {
        report.lambda2 = Some(lambda2(&g).value);
        report.cheeger = cheeger_constant(&g).ok();
        report.residual_eq11 = Some(check_laplacian_identity(&s, &t, &g)?);
        report.connected_components = Some(g.connected_components().len());
    }
    Ok(report)
}

fn write_opt<T: fmt::Display>(f: &mut fmt::Formatter<'_>, key: &str, v: &Option<T>) -> fmt::Result {
    match v {
        Some(v) => writeln!(f, "{key}={v}"),
        None => writeln!(f, "{key}=NA"),
    }
}

impl fmt::Display for SpectralReport {
    /// One `key=value` line per quantity; `NA` where not computed.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cF2={}", self.cf2)?;
        write_opt(f, "lambda2", &self.lambda2)?;
        write_opt(f, "cheeger", &self.cheeger)?;
        writeln!(f, "bound_thm7={}", self.bound_thm7)?;
        write_opt(f, "residual_eq11", &self.residual_eq11)?;
        write_opt(f, "connected_components", &self.connected_components)?;
        write_opt(f, "effective_ground_size", &self.effective_ground_size)
    }
}
