//! Critical and maximal angles between closed convex cones represented as
//! linear images of symmetric cones.
//!
//! The angle maximization is recast as a fractional program over a product
//! of spectraplexes and solved by a regularized partial-linearization
//! iteration whose subproblems are spectraplex projections. Terminal
//! iterates map to unit critical pairs, which [`verify`] checks against the
//! first-order conditions independently of the solver path.
//!
//! Modules:
//! - [`eja`]: Euclidean Jordan algebra primitives (inner products, traces,
//!   spectral decompositions) for coordinate vectors, spin elements, and
//!   symmetric matrices.
//! - [`cones`]: linear maps, their adjoints, and cone constructors.
//! - [`projection`]: simplex and spectraplex projections.
//! - [`solver`]: the partial-linearization iteration with Armijo steps.
//! - [`verify`]: objective/gradient evaluation, stationarity and
//!   criticality residuals, and a brute-force angle oracle.
//! - [`harness`]: problem specs, seeded multi-start batches, reports.

pub mod cones;
pub mod eja;
pub mod error;
pub mod harness;
pub mod projection;
pub mod solver;
pub mod verify;

pub use cones::{
    make_ellipsoidal, make_nonneg_sym, make_orthant, make_polyhedral, make_schur,
    make_sdp_identity, sym_inv_sqrt, ConePair, LinearMap, LiscCone,
};
pub use eja::{Algebra, AlgebraElement, AlgebraKind, SpectralDecomposition};
pub use error::{Error, Result};
pub use harness::{
    emit_report, run_batch, sample_initial, AngleCluster, BatchReport, ConeSpec, Family,
    MatrixSpec, ProblemSpec, ReportFormat, RunRecord,
};
pub use projection::{project_simplex, project_simplex_condat, project_spectraplex, SimplexSpec};
pub use solver::{
    armijo_search, compute_delta, solve, subproblem, IterState, Side, SolveResult, SolverConfig,
    Termination,
};
pub use verify::{
    brute_force_angle, criticality_residual, grad_phi, phi, stationarity_residual,
    StationarityReport,
};
