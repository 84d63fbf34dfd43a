//! Static sensor placement that maximizes coverage of an event-likelihood
//! density while keeping a smooth algebraic-connectivity measure of the
//! communication graph above a threshold.
//!
//! The pieces, bottom up:
//!
//! - [`geometry`]: box domains, Gaussian-mixture densities, midpoint quadrature.
//! - [`connectivity`]: sigmoid edge weights, weighted Laplacian, reduced Laplacian
//!   `M = P^T L P`, its determinant and the analytic determinant gradient.
//! - [`coverage`]: the expected-value multicenter objective and its gradient.
//! - [`constraints`]: stacked inequality constraints, their Jacobian and an MFCQ check.
//! - [`regularization`]: separable regularizers and the exact proximal x-update.
//! - [`solver`]: the proximal-perturbed augmented Lagrangian iteration.
//! - [`scenario`]: config files, presets, trajectory files and run summaries.

pub mod connectivity;
pub mod constraints;
pub mod coverage;
pub mod error;
pub mod geometry;
pub mod regularization;
pub mod scenario;
pub mod solver;

pub use connectivity::{EdgeWeightParams, ReducedLaplacian};
pub use constraints::{ConstraintEvaluation, ConstraintSpec, MfcqReport};
pub use coverage::{CoverageEvaluation, UncertaintyFunction};
pub use error::{Error, Result};
pub use geometry::{
    Domain, GaussianComponent, GaussianMixtureDensity, QuadratureGrid, SensorConfiguration,
};
pub use regularization::{Regularizer, RegularizerKind};
pub use scenario::{RunSummary, ScenarioConfig, TrajectoryFile};
pub use solver::{
    InitialPositions, IterateRecord, KktResidual, Problem, SolverParams, SolverState,
    TerminationReason, Trajectory,
};
