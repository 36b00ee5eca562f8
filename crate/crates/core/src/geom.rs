//! H-polyhedra `{p : Hp ≤ h}` and the LP queries used on them.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::qp::{QpSolver, QuadraticProgram};

/// Convex polyhedron in halfspace form.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    normals: DMatrix<f64>,
    offsets: DVector<f64>,
}

impl Polyhedron {
    pub fn new(normals: DMatrix<f64>, offsets: DVector<f64>) -> Result<Self, ModelError> {
        if normals.nrows() != offsets.len() {
            return Err(ModelError::Dimension(format!(
                "{} halfspace rows vs {} offsets",
                normals.nrows(),
                offsets.len()
            )));
        }
        Ok(Self { normals, offsets })
    }

    /// Axis-aligned box `lb ≤ p ≤ ub` as 2·dim halfspaces.
    pub fn from_box(lb: &DVector<f64>, ub: &DVector<f64>) -> Self {
        let dim = lb.len();
        assert_eq!(dim, ub.len());
        let mut normals = DMatrix::zeros(2 * dim, dim);
        let mut offsets = DVector::zeros(2 * dim);
        for i in 0..dim {
            normals[(i, i)] = 1.0;
            offsets[i] = ub[i];
            normals[(dim + i, i)] = -1.0;
            offsets[dim + i] = -lb[i];
        }
        Self { normals, offsets }
    }

    pub fn dim(&self) -> usize {
        self.normals.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.normals.nrows()
    }

    pub fn normals(&self) -> &DMatrix<f64> {
        &self.normals
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.offsets
    }

    pub fn contains(&self, p: &DVector<f64>, tol: f64) -> bool {
        self.violation(p) <= tol
    }

    /// Largest constraint residual `max_i (H_i·p − h_i)`; ≤ 0 inside.
    pub fn violation(&self, p: &DVector<f64>) -> f64 {
        let r = &self.normals * p - &self.offsets;
        r.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Support value `max { dᵀp : p ∈ P }` by LP.
    pub fn support(&self, dir: &DVector<f64>, solver: &dyn QpSolver) -> Result<f64, ModelError> {
        let mut lp = QuadraticProgram::new(self.dim());
        for i in 0..self.dim() {
            lp.add_linear(i, -dir[i]);
        }
        self.add_rows_to(&mut lp, &(0..self.dim()).collect::<Vec<_>>());
        match solver.solve(&lp, None) {
            Ok(sol) => Ok(-sol.objective),
            Err(crate::error::SolveError::Unbounded) => Err(ModelError::UnboundedW { row: 0 }),
            Err(crate::error::SolveError::Infeasible) => Err(ModelError::EmptyW),
            Err(e) => Err(ModelError::Dimension(format!("support LP failed: {e}"))),
        }
    }

    pub fn is_empty(&self, solver: &dyn QpSolver) -> bool {
        let lp_vars: Vec<usize> = (0..self.dim()).collect();
        let mut lp = QuadraticProgram::new(self.dim());
        self.add_rows_to(&mut lp, &lp_vars);
        solver.solve(&lp, None).is_err()
    }

    /// Boundedness via the recession cone: any nonzero direction with
    /// `Hd ≤ 0` scaled to `‖d‖∞ = 1` makes one of the clipped LPs positive.
    pub fn is_bounded(&self, solver: &dyn QpSolver) -> bool {
        for i in 0..self.dim() {
            for sign in [1.0, -1.0] {
                let mut lp = QuadraticProgram::new(self.dim());
                lp.add_linear(i, -sign);
                for r in 0..self.num_rows() {
                    let entries: Vec<(usize, f64)> = (0..self.dim())
                        .map(|c| (c, self.normals[(r, c)]))
                        .collect();
                    lp.add_ineq_row(&entries, 0.0);
                }
                for c in 0..self.dim() {
                    lp.add_ineq_row(&[(c, 1.0)], 1.0);
                    lp.add_ineq_row(&[(c, -1.0)], 1.0);
                }
                match solver.solve(&lp, None) {
                    Ok(sol) if -sol.objective > 1e-7 => return false,
                    Ok(_) => {}
                    Err(_) => return false,
                }
            }
        }
        true
    }

    /// Center and radius of the largest inscribed ball.
    pub fn chebyshev_center(
        &self,
        solver: &dyn QpSolver,
    ) -> Result<(DVector<f64>, f64), ModelError> {
        let dim = self.dim();
        let mut lp = QuadraticProgram::new(dim + 1);
        lp.add_linear(dim, -1.0); // maximize r
        for r in 0..self.num_rows() {
            let norm = self.normals.row(r).norm();
            let mut entries: Vec<(usize, f64)> = (0..dim)
                .map(|c| (c, self.normals[(r, c)]))
                .collect();
            entries.push((dim, norm));
            lp.add_ineq_row(&entries, self.offsets[r]);
        }
        lp.add_ineq_row(&[(dim, -1.0)], 0.0);
        let sol = solver
            .solve(&lp, None)
            .map_err(|_| ModelError::EmptyW)?;
        let center = DVector::from_iterator(dim, (0..dim).map(|i| sol.x[i]));
        Ok((center, sol.x[dim]))
    }

    /// Exhaustive vertex enumeration over facet subsets; duplicates merged.
    /// Intended for small sets (disturbance polytopes, test oracles).
    pub fn vertices(&self, tol: f64) -> Vec<DVector<f64>> {
        let dim = self.dim();
        let mut found: Vec<DVector<f64>> = Vec::new();
        for subset in (0..self.num_rows()).combinations(dim) {
            let mut m = DMatrix::zeros(dim, dim);
            let mut rhs = DVector::zeros(dim);
            for (k, &r) in subset.iter().enumerate() {
                m.row_mut(k).copy_from(&self.normals.row(r));
                rhs[k] = self.offsets[r];
            }
            let svd = m.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if smax <= 0.0 || smin / smax < 1e-10 {
                continue;
            }
            let Some(x) = svd.solve(&rhs, 0.0).ok() else {
                continue;
            };
            if self.violation(&x) > tol {
                continue;
            }
            if !found.iter().any(|v| (v - &x).norm() <= tol.max(1e-9)) {
                found.push(x);
            }
        }
        found
    }

    fn add_rows_to(&self, lp: &mut QuadraticProgram, vars: &[usize]) {
        for r in 0..self.num_rows() {
            let entries: Vec<(usize, f64)> = (0..self.dim())
                .map(|c| (vars[c], self.normals[(r, c)]))
                .collect();
            lp.add_ineq_row(&entries, self.offsets[r]);
        }
    }
}
