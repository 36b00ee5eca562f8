//! Convex-QP solver interface.
//!
//! Every optimization problem in this crate compiles down to the same
//! contract: minimize `½ xᵀHx + gᵀx + c` subject to sparse `A x ≤ b` and
//! `A_eq x = b_eq`. Linear programs are the `H = 0` special case. The
//! default backend is an interior-point conic solver; it is consumed
//! behind [`QpSolver`] so the problem builders stay solver-agnostic.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus,
    SupportedConeT, ZeroConeT,
};
use nalgebra::DVector;
use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use crate::error::SolveError;

/// Additive sparse triplets for an `nrows × ncols` matrix.
#[derive(Debug, Clone, Default)]
pub struct SparseTriplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseTriplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    /// Appends an empty row and returns its index.
    pub fn add_row(&mut self) -> usize {
        self.nrows += 1;
        self.nrows - 1
    }

    /// Dense `value += M x` application, summing duplicate entries.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for &(r, c, v) in &self.entries {
            out[r] += v * x[c];
        }
    }

    /// Compressed-sparse-column form with duplicates summed.
    pub fn to_csc(&self) -> CscMatrix<f64> {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(r, c, v) in &self.entries {
            *merged.entry((c, r)).or_insert(0.0) += v;
        }
        let mut colptr = vec![0usize; self.ncols + 1];
        let mut rowval = Vec::with_capacity(merged.len());
        let mut nzval = Vec::with_capacity(merged.len());
        for (&(c, r), &v) in &merged {
            colptr[c + 1] += 1;
            rowval.push(r);
            nzval.push(v);
        }
        for c in 0..self.ncols {
            colptr[c + 1] += colptr[c];
        }
        CscMatrix::new(self.nrows, self.ncols, colptr, rowval, nzval)
    }
}

/// A convex QP over dense decision vector `x ∈ R^n`:
/// minimize `½ xᵀHx + gᵀx + c` s.t. `A x ≤ b`, `A_eq x = b_eq`.
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    num_vars: usize,
    quad: SparseTriplets,
    linear: Vec<f64>,
    constant: f64,
    ineq: SparseTriplets,
    ineq_rhs: Vec<f64>,
    eq: SparseTriplets,
    eq_rhs: Vec<f64>,
}

impl QuadraticProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            quad: SparseTriplets::new(num_vars, num_vars),
            linear: vec![0.0; num_vars],
            constant: 0.0,
            ineq: SparseTriplets::new(0, num_vars),
            ineq_rhs: Vec::new(),
            eq: SparseTriplets::new(0, num_vars),
            eq_rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_ineq(&self) -> usize {
        self.ineq_rhs.len()
    }

    pub fn num_eq(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn add_quad(&mut self, i: usize, j: usize, value: f64) {
        self.quad.push(i, j, value);
    }

    pub fn add_linear(&mut self, i: usize, value: f64) {
        self.linear[i] += value;
    }

    pub fn add_constant(&mut self, value: f64) {
        self.constant += value;
    }

    /// Adds `‖ x[plus] − x[minus] ‖²_W` to the objective, where `W` is given
    /// as dense row-major symmetric weights over the selected index lists.
    pub fn add_weighted_square(
        &mut self,
        weights: &nalgebra::DMatrix<f64>,
        plus: &[usize],
        minus: Option<&[usize]>,
    ) {
        let k = weights.nrows();
        debug_assert_eq!(weights.ncols(), k);
        debug_assert_eq!(plus.len(), k);
        if let Some(m) = minus {
            debug_assert_eq!(m.len(), k);
        }
        for a in 0..k {
            for b in 0..k {
                let w = weights[(a, b)];
                if w == 0.0 {
                    continue;
                }
                // ‖s‖²_W contributes 2·W to the ½xᵀHx Hessian through s = D x.
                let terms_a: &[(usize, f64)] = &match minus {
                    Some(m) => vec![(plus[a], 1.0), (m[a], -1.0)],
                    None => vec![(plus[a], 1.0)],
                };
                let terms_b: &[(usize, f64)] = &match minus {
                    Some(m) => vec![(plus[b], 1.0), (m[b], -1.0)],
                    None => vec![(plus[b], 1.0)],
                };
                for &(ia, sa) in terms_a {
                    for &(ib, sb) in terms_b {
                        self.quad.push(ia, ib, 2.0 * w * sa * sb);
                    }
                }
            }
        }
    }

    /// Appends one inequality row `Σ coeff·x ≤ rhs`; returns the row index.
    pub fn add_ineq_row(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        let row = self.ineq.add_row();
        for &(c, v) in entries {
            self.ineq.push(row, c, v);
        }
        self.ineq_rhs.push(rhs);
        row
    }

    /// Appends one equality row `Σ coeff·x = rhs`; returns the row index.
    pub fn add_eq_row(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        let row = self.eq.add_row();
        for &(c, v) in entries {
            self.eq.push(row, c, v);
        }
        self.eq_rhs.push(rhs);
        row
    }

    pub fn ineq(&self) -> (&SparseTriplets, &[f64]) {
        (&self.ineq, &self.ineq_rhs)
    }

    pub fn eq(&self) -> (&SparseTriplets, &[f64]) {
        (&self.eq, &self.eq_rhs)
    }

    pub fn quad(&self) -> &SparseTriplets {
        &self.quad
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Objective `½ xᵀHx + gᵀx + c` at `x`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let mut hx = vec![0.0; self.num_vars];
        self.quad.apply(x, &mut hx);
        let mut val = self.constant;
        for i in 0..self.num_vars {
            val += 0.5 * x[i] * hx[i] + self.linear[i] * x[i];
        }
        val
    }

    /// Maximum inequality violation and maximum absolute equality residual.
    pub fn residuals(&self, x: &[f64]) -> (f64, f64) {
        let mut ax = vec![0.0; self.ineq.nrows()];
        self.ineq.apply(x, &mut ax);
        let ineq_res = ax
            .iter()
            .zip(&self.ineq_rhs)
            .map(|(lhs, rhs)| lhs - rhs)
            .fold(0.0f64, f64::max);
        let mut ex = vec![0.0; self.eq.nrows()];
        self.eq.apply(x, &mut ex);
        let eq_res = ex
            .iter()
            .zip(&self.eq_rhs)
            .map(|(lhs, rhs)| (lhs - rhs).abs())
            .fold(0.0f64, f64::max);
        (ineq_res, eq_res)
    }

    /// Upper-triangular symmetric part of the Hessian in CSC form.
    fn hessian_upper_csc(&self) -> CscMatrix<f64> {
        // Quadratic forms only see the symmetric part, so fold (i,j)/(j,i)
        // into the upper triangle.
        let mut sym: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(r, c, v) in self.quad.entries() {
            if r == c {
                *sym.entry((c, r)).or_insert(0.0) += v;
            } else {
                let key = (r.max(c), r.min(c));
                *sym.entry(key).or_insert(0.0) += 0.5 * v;
            }
        }
        let mut colptr = vec![0usize; self.num_vars + 1];
        let mut rowval = Vec::with_capacity(sym.len());
        let mut nzval = Vec::with_capacity(sym.len());
        for (&(c, r), &v) in &sym {
            colptr[c + 1] += 1;
            rowval.push(r);
            nzval.push(v);
        }
        for c in 0..self.num_vars {
            colptr[c + 1] += colptr[c];
        }
        CscMatrix::new(self.num_vars, self.num_vars, colptr, rowval, nzval)
    }
}

/// Termination grade of a successful solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatusKind {
    Optimal,
    NearOptimal,
}

impl fmt::Display for SolveStatusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveStatusKind::Optimal => write!(f, "optimal"),
            SolveStatusKind::NearOptimal => write!(f, "near-optimal"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Objective including the constant offset.
    pub objective: f64,
    pub status: SolveStatusKind,
    pub iterations: u32,
    pub solve_time: f64,
    pub max_ineq_residual: f64,
    pub max_eq_residual: f64,
}

/// Solver tolerances; overridable via the `TUBE_MPC_SOLVER_TOL` env var.
#[derive(Debug, Clone, Copy)]
pub struct SolverTolerances {
    pub feasibility: f64,
    pub gap: f64,
    pub max_iter: u32,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        let mut tol = Self { feasibility: 1e-9, gap: 1e-9, max_iter: 200 };
        if let Some(t) = tolerance_from_env() {
            tol.feasibility = t;
            tol.gap = t;
        }
        tol
    }
}

/// Reads `TUBE_MPC_SOLVER_TOL` if set and parseable.
pub fn tolerance_from_env() -> Option<f64> {
    std::env::var("TUBE_MPC_SOLVER_TOL")
        .ok()
        .and_then(|s| s.parse::<f64>().ok())
        .filter(|t| t.is_finite() && *t > 0.0)
}

/// Abstract convex-QP solver. A solver value is cheap to share; each call
/// builds an independent backend instance, so concurrent solves are safe.
pub trait QpSolver: Sync {
    /// Solves the program. `warm_start` is a hint (the shifted previous
    /// solution in receding-horizon use); backends may ignore it.
    fn solve(
        &self,
        problem: &QuadraticProgram,
        warm_start: Option<&[f64]>,
    ) -> Result<QpSolution, SolveError>;
}

/// Interior-point backend.
#[derive(Debug, Clone, Default)]
pub struct InteriorPointQp {
    pub tol: SolverTolerances,
}

impl InteriorPointQp {
    pub fn new(tol: SolverTolerances) -> Self {
        Self { tol }
    }
}

impl QpSolver for InteriorPointQp {
    fn solve(
        &self,
        problem: &QuadraticProgram,
        _warm_start: Option<&[f64]>,
    ) -> Result<QpSolution, SolveError> {
        let start = Instant::now();
        let p = problem.hessian_upper_csc();
        let q = problem.linear.clone();

        // Stack equalities (zero cone) above inequalities (nonnegative cone).
        let n_eq = problem.num_eq();
        let n_ineq = problem.num_ineq();
        let mut a = SparseTriplets::new(n_eq + n_ineq, problem.num_vars);
        for &(r, c, v) in problem.eq.entries() {
            a.push(r, c, v);
        }
        for &(r, c, v) in problem.ineq.entries() {
            a.push(n_eq + r, c, v);
        }
        let a = a.to_csc();
        let mut b = Vec::with_capacity(n_eq + n_ineq);
        b.extend_from_slice(&problem.eq_rhs);
        b.extend_from_slice(&problem.ineq_rhs);

        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        if n_eq > 0 {
            cones.push(ZeroConeT(n_eq));
        }
        if n_ineq > 0 {
            cones.push(NonnegativeConeT(n_ineq));
        }

        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_feas(self.tol.feasibility)
            .tol_gap_abs(self.tol.gap)
            .tol_gap_rel(self.tol.gap)
            .max_iter(self.tol.max_iter)
            .build()
            .map_err(|e| SolveError::SolverFailure(format!("settings: {e:?}")))?;

        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| SolveError::SolverFailure(format!("setup: {e:?}")))?;
        solver.solve();

        let status = match solver.solution.status {
            SolverStatus::Solved => SolveStatusKind::Optimal,
            SolverStatus::AlmostSolved => SolveStatusKind::NearOptimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                return Err(SolveError::Infeasible)
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                return Err(SolveError::Unbounded)
            }
            other => return Err(SolveError::SolverFailure(format!("{other:?}"))),
        };

        let x = solver.solution.x.clone();
        let objective = problem.objective_value(&x);
        let (max_ineq_residual, max_eq_residual) = problem.residuals(&x);
        Ok(QpSolution {
            x: DVector::from_vec(x),
            objective,
            status,
            iterations: solver.solution.iterations,
            solve_time: start.elapsed().as_secs_f64(),
            max_ineq_residual,
            max_eq_residual,
        })
    }
}
