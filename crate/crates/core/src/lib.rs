//! Robust MPC for polytopic linear differential inclusions using
//! configuration-constrained polytopic tubes with periodic references.
//!
//! The crate builds polytope families with fixed combinatorics
//! ([`polytope`]), models the uncertain system ([`model`]), assembles the
//! robust one-step constraint blocks ([`constraints`]), formulates and
//! solves the periodic-tube and online MPC programs over a pluggable QP
//! interface ([`optimizer`], [`qp`]), and simulates the closed loop with
//! Lyapunov monitoring ([`sim`]). Scenario files and built-in benchmark
//! systems live in [`scenario`].

pub mod constraints;
pub mod cost;
pub mod error;
pub mod exec;
pub mod geom;
pub mod model;
pub mod optimizer;
pub mod polytope;
pub mod qp;
pub mod scenario;
pub mod sim;

pub use error::{ConstraintError, GeometryError, ModelError, SolveError};
pub use exec::ExecMode;
pub use qp::{InteriorPointQp, QpSolver};
