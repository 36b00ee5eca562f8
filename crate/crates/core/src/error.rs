//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised while constructing or querying configuration triples.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("template polytope is not simple: a vertex has {count} active facets, expected {expected}")]
    NotSimple { count: usize, expected: usize },
    #[error("facet normals do not positively span the space; X(y) is unbounded")]
    Unbounded,
    #[error("facet subset {subset:?} is near-singular (singular value ratio {ratio:.3e})")]
    Degenerate { subset: Vec<usize>, ratio: f64 },
    #[error("offset violates the configuration cone: row {row} residual {residual:.3e}")]
    OutsideCone { row: usize, residual: f64 },
    #[error("facet {facet} supports no vertex of the template polytope")]
    RedundantFacet { facet: usize },
    #[error("template polytope is empty")]
    EmptyTemplate,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Errors raised by the uncertain-system model.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("disturbance set is unbounded along facet row {row}")]
    UnboundedW { row: usize },
    #[error("disturbance set is empty")]
    EmptyW,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Errors raised during constraint assembly.
#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("period T={period} must exceed horizon N={horizon}")]
    PeriodTooShort { period: usize, horizon: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Errors raised by the optimization layer.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("contraction factor must lie in [0, 1), got {0}")]
    GammaOutOfRange(f64),
    #[error("state outside tube cross-section: max facet violation {0:.3e}")]
    NotInTube(f64),
    #[error("stage-cost gradient unavailable: {0}")]
    GradientUnavailable(String),
    #[error("matrix is not symmetric")]
    NonSymmetric,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}
