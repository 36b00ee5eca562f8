//! Uncertain system model: a polytopic LDI `x⁺ ∈ {Ax + Bu + w}` with
//! `(A, B)` ranging over the convex hull of vertex models and `w` over a
//! compact disturbance set, plus the state/input constraint polyhedra and
//! the facet-wise disturbance support vector `d`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::ModelError;
use crate::geom::Polyhedron;
use crate::qp::QpSolver;

/// Compact convex disturbance set, with a closed-form fast path for boxes.
#[derive(Debug, Clone)]
pub enum DisturbanceSet {
    Box { lb: DVector<f64>, ub: DVector<f64> },
    Polytope { poly: Polyhedron, interior: DVector<f64> },
}

impl DisturbanceSet {
    pub fn zero(dim: usize) -> Self {
        DisturbanceSet::Box { lb: DVector::zeros(dim), ub: DVector::zeros(dim) }
    }

    pub fn from_box(lb: DVector<f64>, ub: DVector<f64>) -> Result<Self, ModelError> {
        if lb.len() != ub.len() {
            return Err(ModelError::Dimension("box bound lengths differ".into()));
        }
        if lb.iter().zip(ub.iter()).any(|(l, u)| l > u) {
            return Err(ModelError::EmptyW);
        }
        Ok(DisturbanceSet::Box { lb, ub })
    }

    /// General H-polytope; validated nonempty and bounded, and an interior
    /// point is cached for hit-and-run sampling.
    pub fn from_polyhedron(poly: Polyhedron, solver: &dyn QpSolver) -> Result<Self, ModelError> {
        if poly.is_empty(solver) {
            return Err(ModelError::EmptyW);
        }
        if !poly.is_bounded(solver) {
            return Err(ModelError::UnboundedW { row: 0 });
        }
        let (interior, _) = poly.chebyshev_center(solver)?;
        Ok(DisturbanceSet::Polytope { poly, interior })
    }

    pub fn dim(&self) -> usize {
        match self {
            DisturbanceSet::Box { lb, .. } => lb.len(),
            DisturbanceSet::Polytope { poly, .. } => poly.dim(),
        }
    }

    /// Support value `max { dirᵀw : w ∈ W }`.
    pub fn support(&self, dir: &DVector<f64>, solver: &dyn QpSolver) -> Result<f64, ModelError> {
        match self {
            DisturbanceSet::Box { lb, ub } => {
                let mut s = 0.0;
                for i in 0..lb.len() {
                    s += if dir[i] >= 0.0 { dir[i] * ub[i] } else { dir[i] * lb[i] };
                }
                Ok(s)
            }
            DisturbanceSet::Polytope { poly, .. } => poly.support(dir, solver),
        }
    }

    pub fn contains(&self, w: &DVector<f64>, tol: f64) -> bool {
        match self {
            DisturbanceSet::Box { lb, ub } => (0..lb.len())
                .all(|i| w[i] >= lb[i] - tol && w[i] <= ub[i] + tol),
            DisturbanceSet::Polytope { poly, .. } => poly.contains(w, tol),
        }
    }

    /// Extreme points. Box corners enumerate only the non-degenerate
    /// dimensions, so a point set `{0}` yields the single vertex `0`.
    pub fn vertices(&self) -> Vec<DVector<f64>> {
        match self {
            DisturbanceSet::Box { lb, ub } => {
                let free: Vec<usize> =
                    (0..lb.len()).filter(|&i| ub[i] - lb[i] > 0.0).collect();
                let mut out = Vec::with_capacity(1 << free.len());
                for mask in 0..(1usize << free.len()) {
                    let mut v = lb.clone();
                    for (k, &i) in free.iter().enumerate() {
                        if mask & (1 << k) != 0 {
                            v[i] = ub[i];
                        }
                    }
                    out.push(v);
                }
                out
            }
            DisturbanceSet::Polytope { poly, .. } => poly.vertices(1e-9),
        }
    }

    /// Uniform sample: direct for boxes, hit-and-run walk for polytopes.
    pub fn sample(&self, rng: &mut impl Rng) -> DVector<f64> {
        match self {
            DisturbanceSet::Box { lb, ub } => DVector::from_fn(lb.len(), |i, _| {
                if ub[i] > lb[i] {
                    rng.random_range(lb[i]..ub[i])
                } else {
                    lb[i]
                }
            }),
            DisturbanceSet::Polytope { poly, interior } => {
                let dim = poly.dim();
                let mut x = interior.clone();
                let steps = 10 * dim.max(2);
                for _ in 0..steps {
                    let dir = random_unit_direction(dim, rng);
                    // Clip the chord {x + t·dir} against every halfspace.
                    let hx = poly.normals() * &x;
                    let hd = poly.normals() * &dir;
                    let mut t_lo = f64::NEG_INFINITY;
                    let mut t_hi = f64::INFINITY;
                    for r in 0..poly.num_rows() {
                        let slack = poly.offsets()[r] - hx[r];
                        if hd[r] > 1e-14 {
                            t_hi = t_hi.min(slack / hd[r]);
                        } else if hd[r] < -1e-14 {
                            t_lo = t_lo.max(slack / hd[r]);
                        }
                    }
                    if t_hi > t_lo && t_hi.is_finite() && t_lo.is_finite() {
                        let t = rng.random_range(t_lo..t_hi);
                        x += dir * t;
                    }
                }
                x
            }
        }
    }
}

fn random_unit_direction(dim: usize, rng: &mut impl Rng) -> DVector<f64> {
    loop {
        // Box-Muller pairs give an isotropic Gaussian to normalize.
        let v = DVector::from_fn(dim, |_, _| {
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        });
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

/// How uncertainty realizations are drawn in simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Uniform simplex weights over the vertex models, uniform `w ∈ W`.
    Random,
    /// A uniformly chosen vertex model paired with a vertex of `W`.
    VertexAdversarial,
}

/// One realization of the uncertainty.
#[derive(Debug, Clone)]
pub struct UncertaintySample {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub w: DVector<f64>,
}

/// Facet-wise disturbance support `d_k = max { F_k·w : w ∈ W }`.
pub fn disturbance_support(
    facets: &DMatrix<f64>,
    disturbance: &DisturbanceSet,
    solver: &dyn QpSolver,
) -> Result<DVector<f64>, ModelError> {
    if facets.ncols() != disturbance.dim() {
        return Err(ModelError::Dimension(format!(
            "facets act on R^{}, disturbance lives in R^{}",
            facets.ncols(),
            disturbance.dim()
        )));
    }
    let mut d = DVector::zeros(facets.nrows());
    for k in 0..facets.nrows() {
        let dir = facets.row(k).transpose();
        d[k] = disturbance.support(&dir, solver).map_err(|e| match e {
            ModelError::UnboundedW { .. } => ModelError::UnboundedW { row: k },
            other => other,
        })?;
    }
    Ok(d)
}

/// Polytopic LDI with constraint sets and precomputed disturbance support.
#[derive(Debug, Clone)]
pub struct LdiModel {
    vertices: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    disturbance: DisturbanceSet,
    state_set: Polyhedron,
    input_set: Polyhedron,
    support: DVector<f64>,
}

impl LdiModel {
    /// Builds the model and computes `d` for the given facet normals.
    pub fn new(
        vertices: Vec<(DMatrix<f64>, DMatrix<f64>)>,
        disturbance: DisturbanceSet,
        state_set: Polyhedron,
        input_set: Polyhedron,
        facets: &DMatrix<f64>,
        solver: &dyn QpSolver,
    ) -> Result<Self, ModelError> {
        if vertices.is_empty() {
            return Err(ModelError::Dimension("at least one vertex model required".into()));
        }
        let n_x = vertices[0].0.nrows();
        let n_u = vertices[0].1.ncols();
        for (i, (a, b)) in vertices.iter().enumerate() {
            if a.nrows() != n_x || a.ncols() != n_x || b.nrows() != n_x || b.ncols() != n_u {
                return Err(ModelError::Dimension(format!(
                    "vertex model {i} has inconsistent dimensions"
                )));
            }
        }
        if disturbance.dim() != n_x {
            return Err(ModelError::Dimension(
                "disturbance set must live in the state space".into(),
            ));
        }
        if state_set.dim() != n_x || input_set.dim() != n_u {
            return Err(ModelError::Dimension(
                "constraint polyhedra dimensions do not match the model".into(),
            ));
        }
        let support = disturbance_support(facets, &disturbance, solver)?;
        Ok(Self { vertices, disturbance, state_set, input_set, support })
    }

    pub fn num_models(&self) -> usize {
        self.vertices.len()
    }

    pub fn state_dim(&self) -> usize {
        self.vertices[0].0.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.vertices[0].1.ncols()
    }

    pub fn vertex_model(&self, i: usize) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.vertices[i].0, &self.vertices[i].1)
    }

    pub fn disturbance(&self) -> &DisturbanceSet {
        &self.disturbance
    }

    pub fn state_set(&self) -> &Polyhedron {
        &self.state_set
    }

    pub fn input_set(&self) -> &Polyhedron {
        &self.input_set
    }

    /// Precomputed facet-wise disturbance support `d`.
    pub fn support(&self) -> &DVector<f64> {
        &self.support
    }

    /// Draws one uncertainty realization. Sampling happens strictly after
    /// the control is computed in closed loop, so the information pattern
    /// is non-anticipative.
    pub fn sample_uncertainty(
        &self,
        rng: &mut impl Rng,
        mode: SamplingMode,
    ) -> UncertaintySample {
        match mode {
            SamplingMode::Random => {
                let m = self.num_models();
                // Uniform simplex weights via normalized exponentials.
                let mut mu: Vec<f64> =
                    (0..m).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                let total: f64 = mu.iter().sum();
                for w in &mut mu {
                    *w /= total;
                }
                let mut a = DMatrix::zeros(self.state_dim(), self.state_dim());
                let mut b = DMatrix::zeros(self.state_dim(), self.input_dim());
                for (i, (ai, bi)) in self.vertices.iter().enumerate() {
                    a += ai * mu[i];
                    b += bi * mu[i];
                }
                let w = self.disturbance.sample(rng);
                UncertaintySample { a, b, w }
            }
            SamplingMode::VertexAdversarial => {
                let i = rng.random_range(0..self.num_models());
                let verts = self.disturbance.vertices();
                let w = verts[rng.random_range(0..verts.len())].clone();
                UncertaintySample {
                    a: self.vertices[i].0.clone(),
                    b: self.vertices[i].1.clone(),
                    w,
                }
            }
        }
    }
}
