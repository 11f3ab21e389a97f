//! Adaptive lowest-order finite elements for the Poisson problem
//!
//! ```text
//!   -Δu = f      in Ω
//!     u = g      on Γ_D
//!  ∂u/∂n = φ      on Γ_N
//! ```
//!
//! with inhomogeneous mixed boundary data. The Dirichlet data are discretized by a
//! projection onto the discrete trace space (boundary L² projection, Scott-Zhang,
//! or nodal interpolation), the residual estimator is augmented by Dirichlet data
//! oscillations, and marking switches between element and Dirichlet-facet
//! Dörfler marking. Meshes are refined by newest vertex bisection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod driver;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod marking;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod trace;

pub use driver::{
    fit_rate, run, run_problem, ConvergenceRecord, RefinementMode, RunConfig, RunOutcome,
};
pub use error::{Error, Result};
pub use estimator::{estimate, EstimatorBreakdown};
pub use fem::{assemble, solve, DiscreteFunction, SparseSystem};
pub use marking::{mark, MarkingBranch, MarkingOutcome, MarkingParams, MarkingStrategy};
pub use mesh::{BoundaryLabel, MarkedSet, Mesh, Point};
pub use problems::ProblemSpec;
pub use trace::{DirichletTrace, ProjectionKind};
