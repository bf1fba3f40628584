//! Decomposable submodular function minimization by alternating projections
//! between the zero-sum subspace and a product of base polytopes.

pub mod component;
pub mod oracles;
pub mod error;
pub mod generate;
pub mod problem;
pub mod projection;
pub mod solver;
pub mod spectral;
pub mod subset;
pub mod worstcase;
mod wolfe;

pub use component::{ComponentKind, SimpleComponent, EXHAUSTIVE_PAIR_LIMIT, TABLE_SUPPORT_LIMIT};
pub use error::{Result, SfmError};
pub use problem::{DecomposableProblem, EXHAUSTIVE_SCAN_LIMIT};
pub use projection::{BlockVector, ProductPoint, ProjectionConfig, SubspacePoint};
pub use subset::Subset;
pub use solver::{run_ap, run_ap_from, SolveOptions, SolveResult, SolveStatus, SolveTrace, TraceRecord};
