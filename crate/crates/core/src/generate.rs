//! Random instances for experiments and tests.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::component::SimpleComponent;
use crate::problem::DecomposableProblem;
use crate::spectral::FacePartitionSpec;

/// Largest support given to random table components (`2^q` values).
pub const RANDOM_TABLE_SUPPORT: usize = 6;

fn random_support<R: Rng>(rng: &mut R, n: usize, size: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(size);
    all
}

fn random_concave_values<R: Rng>(rng: &mut R, q: usize) -> Vec<f64> {
    let mut steps: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0..2.0)).collect();
    steps.sort_by(|a, b| b.total_cmp(a));
    let mut g = vec![0.0];
    for d in steps {
        g.push(g.last().unwrap() + d);
    }
    g
}

fn random_edges<R: Rng>(rng: &mut R, support: &[usize]) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for (a, &u) in support.iter().enumerate() {
        for &v in &support[a + 1..] {
            if rng.gen_bool(0.5) {
                edges.push((u, v, rng.gen_range(0.1..2.0)));
            }
        }
    }
    if edges.is_empty() && support.len() >= 2 {
        edges.push((support[0], support[1], rng.gen_range(0.1..2.0)));
    }
    edges
}

/// Sum of a random cut, a concave-of-cardinality term and a modular term on
/// random parts of `support`, tabulated over all subsets.
fn random_table<R: Rng>(rng: &mut R, mut support: Vec<usize>) -> SimpleComponent {
    support.sort_unstable();
    let q = support.len();
    let local: Vec<usize> = (0..q).collect();
    let cut = SimpleComponent::graph_cut(random_edges(rng, &local)).expect("valid edges");
    let size = rng.gen_range(1..=q);
    let sub = random_support(rng, q, size);
    let concave = SimpleComponent::concave_cardinality(random_concave_values(rng, sub.len()), sub).expect("concave");
    let weights = (0..q).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let modular = SimpleComponent::modular(weights, local).expect("finite");
    let values = (0..1u64 << q)
        .map(|mask| {
            let members: Vec<bool> = (0..q).map(|p| mask >> p & 1 == 1).collect();
            cut.eval_members(&members) + concave.eval_members(&members) + modular.eval_members(&members)
        })
        .collect();
    SimpleComponent::table(support, values).expect("tabulated submodular sum")
}

/// A random component of a random kind on at most `max_support` elements of `0..n`.
pub fn random_component<R: Rng>(rng: &mut R, n: usize, max_support: usize) -> SimpleComponent {
    let cap = max_support.min(n).max(1);
    let size = rng.gen_range(1..=cap);
    let kind = if n >= 2 { rng.gen_range(0..5) } else { rng.gen_range(2..4) };
    match kind {
        0 => {
            let s = random_support(rng, n, 2);
            SimpleComponent::edge_cut(s[0], s[1], rng.gen_range(0.1..2.0)).expect("valid edge")
        }
        1 => {
            let s = random_support(rng, n, size.max(2));
            SimpleComponent::graph_cut(random_edges(rng, &s)).expect("valid edges")
        }
        2 => {
            let s = random_support(rng, n, size);
            SimpleComponent::concave_cardinality(random_concave_values(rng, s.len()), s).expect("concave")
        }
        3 => {
            let s = random_support(rng, n, size);
            let weights = s.iter().map(|_| rng.gen_range(-2.0..2.0)).collect();
            SimpleComponent::modular(weights, s).expect("finite")
        }
        _ => {
            let s = random_support(rng, n, size.clamp(2, RANDOM_TABLE_SUPPORT));
            random_table(rng, s)
        }
    }
}

/// `r` random components over a ground set of size `n`.
pub fn random_problem<R: Rng>(rng: &mut R, n: usize, r: usize, max_support: usize) -> DecomposableProblem {
    let components = (0..r).map(|_| random_component(rng, n, max_support)).collect();
    DecomposableProblem::new(n, components).expect("generated components fit the ground set")
}

/// One random ordered partition of `0..n` per component.
pub fn random_face_spec<R: Rng>(rng: &mut R, n: usize, r: usize) -> FacePartitionSpec {
    let parts = (0..r)
        .map(|_| {
            let m = rng.gen_range(1..=n);
            let mut blocks = vec![Vec::new(); m];
            for i in 0..n {
                blocks[rng.gen_range(0..m)].push(i);
            }
            blocks.retain(|b| !b.is_empty());
            blocks.shuffle(rng);
            blocks
        })
        .collect();
    FacePartitionSpec::new(n, parts).expect("blocks partition the ground set")
}
