//! Configuration triples `(F, E, V)`.
//!
//! A polytope family `X(y) = {x : Fx ≤ y}` keeps a fixed facet/vertex
//! combinatorics for all offsets `y` in the cone `{Ey ≤ 0}`, and on that
//! cone its vertices are linear in `y`: `X(y) = convh{V_j y}`. This module
//! derives `(E, V)` from a facet template by exact vertex enumeration of
//! the simple template polytope, which is cheap for the facet counts this
//! crate targets (f ≲ 20).

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::ops::Range;

use crate::error::GeometryError;
use crate::exec::{map_indexed, ExecMode};
use crate::geom::Polyhedron;
use crate::qp::{QpSolver, QuadraticProgram};

/// Relative tolerance for active-facet detection at template vertices.
const ACTIVE_TOL: f64 = 1e-9;
/// Singular-value ratio below which a facet subset is treated as singular.
const SINGULAR_RATIO: f64 = 1e-10;
/// Singular-value ratio below which a *feasible* vertex solve is rejected
/// as ill-conditioned.
const DEGENERATE_RATIO: f64 = 1e-8;
/// Componentwise tolerance for cone-row deduplication (unit-norm rows).
const DEDUP_TOL: f64 = 1e-8;

/// Facet normals `F` plus a reference offset `y0` whose polytope fixes the
/// combinatorics. `{x : Fx ≤ y0}` must be bounded and simple.
#[derive(Debug, Clone)]
pub struct FacetTemplate {
    normals: DMatrix<f64>,
    offset: DVector<f64>,
}

impl FacetTemplate {
    pub fn new(normals: DMatrix<f64>, offset: DVector<f64>) -> Result<Self, GeometryError> {
        if normals.nrows() != offset.len() {
            return Err(GeometryError::Dimension(format!(
                "{} facet rows vs {} offsets",
                normals.nrows(),
                offset.len()
            )));
        }
        if normals.nrows() < normals.ncols() + 1 {
            return Err(GeometryError::Unbounded);
        }
        Ok(Self { normals, offset })
    }

    /// Unit box in the plane: 4 axis-aligned facets, unit offsets.
    pub fn box2d() -> Self {
        let normals = DMatrix::from_row_slice(
            4,
            2,
            &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0],
        );
        Self { normals, offset: DVector::from_element(4, 1.0) }
    }

    /// Regular fan of `count` unit normals at angles `(i−1)·2π/count`,
    /// unit offsets.
    pub fn rotated2d(count: usize) -> Result<Self, GeometryError> {
        if count < 3 {
            return Err(GeometryError::Dimension(format!(
                "rotated2d needs at least 3 facets, got {count}"
            )));
        }
        let mut normals = DMatrix::zeros(count, 2);
        for i in 0..count {
            let theta = i as f64 * 2.0 * std::f64::consts::PI / count as f64;
            normals[(i, 0)] = theta.cos();
            normals[(i, 1)] = theta.sin();
        }
        Ok(Self { normals, offset: DVector::from_element(count, 1.0) })
    }

    /// Cartesian product of a regular hexagon in the two ball-position
    /// coordinates (state indices 0 and 4) and a regular 6-simplex over the
    /// remaining six coordinates, with offset `((√3/2)·1₆, 0₆, 1)`. Every
    /// vertex of the product has exactly 8 active facets.
    pub fn hexagon_simplex_product() -> Self {
        let n_x = 8;
        let hex_cols = [0usize, 4];
        let simplex_cols = [1usize, 2, 3, 5, 6, 7];
        let mut normals = DMatrix::zeros(13, n_x);
        let mut offset = DVector::zeros(13);
        for i in 0..6 {
            let theta = i as f64 * std::f64::consts::PI / 3.0;
            normals[(i, hex_cols[0])] = theta.cos();
            normals[(i, hex_cols[1])] = theta.sin();
            offset[i] = 3.0f64.sqrt() / 2.0;
        }
        let simplex = regular_simplex_normals(6);
        for i in 0..7 {
            for (c, &col) in simplex_cols.iter().enumerate() {
                normals[(6 + i, col)] = simplex[(i, c)];
            }
            offset[6 + i] = if i == 6 { 1.0 } else { 0.0 };
        }
        Self { normals, offset }
    }

    pub fn normals(&self) -> &DMatrix<f64> {
        &self.normals
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn num_facets(&self) -> usize {
        self.normals.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.normals.ncols()
    }
}

/// Unit outward normals of a regular `dim`-simplex (`dim + 1` rows) with
/// zero sum and pairwise dot products `−1/dim`.
fn regular_simplex_normals(dim: usize) -> DMatrix<f64> {
    let m = dim + 1;
    // Rows u_i = e_i − 1/m in R^m all lie in the hyperplane ⟂ 1.
    let mut u = DMatrix::from_element(m, m, -1.0 / m as f64);
    for i in 0..m {
        u[(i, i)] += 1.0;
    }
    // Orthonormal basis of that hyperplane by Gram-Schmidt on u_0..u_{dim-1}.
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut b = u.row(i).transpose();
        for prev in &basis {
            let proj = prev.dot(&b);
            b -= prev * proj;
        }
        basis.push(b.normalize());
    }
    let mut out = DMatrix::zeros(m, dim);
    for i in 0..m {
        let row = u.row(i).transpose();
        let mut coords = DVector::zeros(dim);
        for (c, b) in basis.iter().enumerate() {
            coords[c] = b.dot(&row);
        }
        let coords = coords.normalize();
        out.row_mut(i).copy_from(&coords.transpose());
    }
    out
}

/// Selector with matrix semantics for the `j`-th vertex input inside the
/// stacked input `u = (u_1, …, u_v)`; implemented as index arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexInputSelector {
    pub vertex: usize,
    pub input_dim: usize,
    pub num_vertices: usize,
}

impl VertexInputSelector {
    pub fn range(&self) -> Range<usize> {
        self.vertex * self.input_dim..(self.vertex + 1) * self.input_dim
    }

    pub fn extract(&self, stacked: &DVector<f64>) -> DVector<f64> {
        stacked.rows(self.vertex * self.input_dim, self.input_dim).into()
    }

    /// Dense `n_u × (v·n_u)` selection matrix, for cost assembly and tests.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.input_dim, self.num_vertices * self.input_dim);
        for r in 0..self.input_dim {
            m[(r, self.vertex * self.input_dim + r)] = 1.0;
        }
        m
    }
}

/// The triple `(F, E, V)` plus the active facet set of each vertex map.
#[derive(Debug, Clone)]
pub struct ConfigurationTriple {
    facets: DMatrix<f64>,
    cone: DMatrix<f64>,
    vertex_maps: Vec<DMatrix<f64>>,
    active_sets: Vec<Vec<usize>>,
}

impl ConfigurationTriple {
    /// Derives the triple from a template: enumerates the template
    /// polytope's vertices over facet subsets, builds the vertex maps
    /// `V_j = F_{J_j}^{-1}` (embedded on columns `J_j`), and assembles the
    /// cone `E` from the facet-containment rows `F_i V_j y ≤ y_i`,
    /// deduplicated and stripped of LP-redundant rows.
    pub fn build(
        template: &FacetTemplate,
        solver: &dyn QpSolver,
        exec: ExecMode,
    ) -> Result<Self, GeometryError> {
        let f = template.num_facets();
        let n_x = template.state_dim();
        let normals = &template.normals;
        let y0 = &template.offset;

        let recession = Polyhedron::new(normals.clone(), DVector::zeros(f))
            .map_err(|e| GeometryError::Dimension(e.to_string()))?;
        if !recession.is_bounded(solver) {
            return Err(GeometryError::Unbounded);
        }

        let subsets: Vec<Vec<usize>> = (0..f).combinations(n_x).collect();
        let candidates = map_indexed(exec, subsets.len(), |s| {
            enumerate_candidate(normals, y0, &subsets[s])
        });

        let mut vertices: Vec<(Vec<usize>, DMatrix<f64>)> = Vec::new();
        for cand in candidates {
            match cand? {
                Some(v) => vertices.push(v),
                None => {}
            }
        }
        if vertices.is_empty() {
            return Err(GeometryError::EmptyTemplate);
        }
        vertices.sort_by(|a, b| a.0.cmp(&b.0));

        let mut covered = vec![false; f];
        for (active, _) in &vertices {
            for &i in active {
                covered[i] = true;
            }
        }
        if let Some(facet) = covered.iter().position(|c| !c) {
            return Err(GeometryError::RedundantFacet { facet });
        }

        let mut vertex_maps = Vec::with_capacity(vertices.len());
        let mut active_sets = Vec::with_capacity(vertices.len());
        for (active, inverse) in vertices {
            let mut v_map = DMatrix::zeros(n_x, f);
            for (c, &facet) in active.iter().enumerate() {
                v_map.column_mut(facet).copy_from(&inverse.column(c));
            }
            vertex_maps.push(v_map);
            active_sets.push(active);
        }

        let cone = build_cone(normals, &vertex_maps, &active_sets, solver);

        Ok(Self { facets: normals.clone(), cone, vertex_maps, active_sets })
    }

    pub fn num_facets(&self) -> usize {
        self.facets.nrows()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_maps.len()
    }

    pub fn num_cone_rows(&self) -> usize {
        self.cone.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.facets.ncols()
    }

    pub fn facets(&self) -> &DMatrix<f64> {
        &self.facets
    }

    pub fn cone(&self) -> &DMatrix<f64> {
        &self.cone
    }

    pub fn vertex_map(&self, j: usize) -> &DMatrix<f64> {
        &self.vertex_maps[j]
    }

    pub fn vertex_maps(&self) -> &[DMatrix<f64>] {
        &self.vertex_maps
    }

    pub fn active_sets(&self) -> &[Vec<usize>] {
        &self.active_sets
    }

    pub fn input_selector(&self, vertex: usize, input_dim: usize) -> VertexInputSelector {
        VertexInputSelector { vertex, input_dim, num_vertices: self.num_vertices() }
    }

    /// Largest cone-row value `max_i E_i·y`; ≤ 0 inside the cone.
    pub fn cone_violation(&self, y: &DVector<f64>) -> f64 {
        if self.cone.nrows() == 0 {
            return 0.0;
        }
        (&self.cone * y).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn in_cone(&self, y: &DVector<f64>, tol: f64) -> bool {
        self.cone_violation(y) <= tol
    }

    /// The mapped vertices `{V_j y}`. Duplicates are permitted: vertex maps
    /// merge when cone rows are active at `y`.
    pub fn vertex_points(
        &self,
        y: &DVector<f64>,
        tol: f64,
    ) -> Result<Vec<DVector<f64>>, GeometryError> {
        if self.cone.nrows() > 0 {
            let vals = &self.cone * y;
            for (row, &val) in vals.iter().enumerate() {
                if val > tol {
                    return Err(GeometryError::OutsideCone { row, residual: val });
                }
            }
        }
        Ok(self.vertex_maps.iter().map(|v| v * y).collect())
    }

    /// Membership `Fx ≤ y + tol`.
    pub fn contains(&self, y: &DVector<f64>, x: &DVector<f64>, tol: f64) -> bool {
        let r = &self.facets * x - y;
        r.iter().all(|&v| v <= tol)
    }
}

fn enumerate_candidate(
    normals: &DMatrix<f64>,
    y0: &DVector<f64>,
    subset: &[usize],
) -> Result<Option<(Vec<usize>, DMatrix<f64>)>, GeometryError> {
    let n_x = normals.ncols();
    let mut m = DMatrix::zeros(n_x, n_x);
    let mut rhs = DVector::zeros(n_x);
    for (k, &r) in subset.iter().enumerate() {
        m.row_mut(k).copy_from(&normals.row(r));
        rhs[k] = y0[r];
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax <= 0.0 || smin / smax < SINGULAR_RATIO {
        return Ok(None);
    }
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| GeometryError::Dimension(e.to_string()))?;

    let residuals = normals * &x - y0;
    let mut active = Vec::new();
    for r in 0..normals.nrows() {
        let scale = 1.0 + y0[r].abs() + (residuals[r] + y0[r]).abs();
        if residuals[r] > ACTIVE_TOL * scale {
            return Ok(None); // infeasible
        }
        if residuals[r].abs() <= ACTIVE_TOL * scale {
            active.push(r);
        }
    }
    if active.len() > n_x {
        return Err(GeometryError::NotSimple { count: active.len(), expected: n_x });
    }
    debug_assert_eq!(active, subset);

    if smin / smax < DEGENERATE_RATIO {
        return Err(GeometryError::Degenerate {
            subset: subset.to_vec(),
            ratio: smin / smax,
        });
    }

    // Columns of F_J^{-1}, to be scattered onto the active columns of V_j.
    let mut inverse = DMatrix::zeros(n_x, n_x);
    for c in 0..n_x {
        let e = DVector::from_fn(n_x, |r, _| if r == c { 1.0 } else { 0.0 });
        let col = svd.solve(&e, 0.0).expect("nonsingular by ratio check");
        inverse.column_mut(c).copy_from(&col);
    }
    Ok(Some((subset.to_vec(), inverse)))
}

/// Collects the rows `F_i V_j y − y_i ≤ 0` over all vertices `j` and
/// non-active facets `i`, normalizes them, removes duplicates, and strips
/// rows implied by the rest (LP redundancy over the cone).
fn build_cone(
    normals: &DMatrix<f64>,
    vertex_maps: &[DMatrix<f64>],
    active_sets: &[Vec<usize>],
    solver: &dyn QpSolver,
) -> DMatrix<f64> {
    let f = normals.nrows();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for (j, v_map) in vertex_maps.iter().enumerate() {
        for i in 0..f {
            if active_sets[j].contains(&i) {
                continue;
            }
            let mut row = (normals.row(i) * v_map).transpose();
            row[i] -= 1.0;
            let norm = row.norm();
            if norm < 1e-12 {
                continue;
            }
            row /= norm;
            let dup = rows
                .iter()
                .any(|r| (r - &row).amax() <= DEDUP_TOL);
            if !dup {
                rows.push(row);
            }
        }
    }

    // Sequential redundancy elimination: row r is redundant iff no y with
    // E_others·y ≤ 0 achieves e_r·y > 0.
    let mut idx = 0;
    while idx < rows.len() {
        if rows.len() == 1 {
            break;
        }
        let mut lp = QuadraticProgram::new(f);
        for c in 0..f {
            lp.add_linear(c, -rows[idx][c]);
        }
        for (k, row) in rows.iter().enumerate() {
            if k == idx {
                continue;
            }
            let entries: Vec<(usize, f64)> = (0..f).map(|c| (c, row[c])).collect();
            lp.add_ineq_row(&entries, 0.0);
        }
        let cap: Vec<(usize, f64)> = (0..f).map(|c| (c, rows[idx][c])).collect();
        lp.add_ineq_row(&cap, 1.0);
        let redundant = match solver.solve(&lp, None) {
            Ok(sol) => -sol.objective < 0.5,
            Err(_) => false,
        };
        if redundant {
            rows.remove(idx);
        } else {
            idx += 1;
        }
    }

    let mut cone = DMatrix::zeros(rows.len(), f);
    for (r, row) in rows.iter().enumerate() {
        cone.row_mut(r).copy_from(&row.transpose());
    }
    cone
}

/// JSON form with dense row-major matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleJson {
    pub num_facets: usize,
    pub num_vertices: usize,
    pub num_cone_rows: usize,
    pub state_dim: usize,
    pub facets: Vec<Vec<f64>>,
    pub cone: Vec<Vec<f64>>,
    pub vertex_maps: Vec<Vec<Vec<f64>>>,
    pub active_sets: Vec<Vec<usize>>,
}

impl From<&ConfigurationTriple> for TripleJson {
    fn from(t: &ConfigurationTriple) -> Self {
        let to_rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|r| m.row(r).iter().cloned().collect())
                .collect()
        };
        TripleJson {
            num_facets: t.num_facets(),
            num_vertices: t.num_vertices(),
            num_cone_rows: t.num_cone_rows(),
            state_dim: t.state_dim(),
            facets: to_rows(&t.facets),
            cone: to_rows(&t.cone),
            vertex_maps: t.vertex_maps.iter().map(|v| to_rows(v)).collect(),
            active_sets: t.active_sets.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::InteriorPointQp;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn solver() -> InteriorPointQp {
        InteriorPointQp::default()
    }

    fn build(template: &FacetTemplate) -> Result<ConfigurationTriple, GeometryError> {
        ConfigurationTriple::build(template, &solver(), ExecMode::Parallel)
    }

    /// Independent vertex oracle: enumerates vertices of `{x : Fx ≤ y}`
    /// directly at the given offset, without vertex maps.
    fn brute_force_vertices(f_mat: &DMatrix<f64>, y: &DVector<f64>) -> Vec<DVector<f64>> {
        Polyhedron::new(f_mat.clone(), y.clone()).unwrap().vertices(1e-7)
    }

    #[test]
    fn box_triple_counts_and_cone() {
        let triple = build(&FacetTemplate::box2d()).unwrap();
        assert_eq!(triple.num_facets(), 4);
        assert_eq!(triple.num_vertices(), 4);
        // Cone reduces to y1 + y3 ≥ 0 and y2 + y4 ≥ 0.
        assert_eq!(triple.num_cone_rows(), 2);
        let s = 1.0 / 2.0f64.sqrt();
        let expected = [
            DVector::from_vec(vec![-s, 0.0, -s, 0.0]),
            DVector::from_vec(vec![0.0, -s, 0.0, -s]),
        ];
        for exp in &expected {
            let found = (0..2).any(|r| {
                let row = triple.cone().row(r).transpose();
                (row - exp).amax() <= 1e-9
            });
            assert!(found, "missing cone row {exp:?}");
        }
    }

    #[test]
    fn box_vertices_at_unit_offset() {
        let triple = build(&FacetTemplate::box2d()).unwrap();
        let y = DVector::from_element(4, 1.0);
        let pts = triple.vertex_points(&y, 1e-9).unwrap();
        assert_eq!(pts.len(), 4);
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                assert!(
                    pts.iter().any(|p| (p[0] - sx).abs() < 1e-12 && (p[1] - sy).abs() < 1e-12),
                    "missing corner ({sx}, {sy})"
                );
            }
        }
    }

    #[test]
    fn box_vertices_merge_on_cone_boundary() {
        let triple = build(&FacetTemplate::box2d()).unwrap();
        // y1 + y3 = 0 active: the box collapses to the segment x1 = 1.
        let y = DVector::from_vec(vec![1.0, 1.0, -1.0, 1.0]);
        let pts = triple.vertex_points(&y, 1e-9).unwrap();
        assert_eq!(pts.len(), 4);
        for p in &pts {
            assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        }
        let distinct = pts
            .iter()
            .map(|p| format!("{:.9}", p[1]))
            .collect::<std::collections::BTreeSet<_>>();
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn zero_offset_collapses_to_origin() {
        let triple = build(&FacetTemplate::box2d()).unwrap();
        let pts = triple.vertex_points(&DVector::zeros(4), 1e-9).unwrap();
        for p in pts {
            assert_abs_diff_eq!(p.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn outside_cone_rejected() {
        let triple = build(&FacetTemplate::box2d()).unwrap();
        let y = DVector::from_vec(vec![1.0, 1.0, -2.0, 1.0]);
        match triple.vertex_points(&y, 1e-9) {
            Err(GeometryError::OutsideCone { .. }) => {}
            other => panic!("expected OutsideCone, got {other:?}"),
        }
    }

    #[test]
    fn contains_examples() {
        let triple = build(&FacetTemplate::box2d()).unwrap();
        let y = DVector::from_element(4, 1.0);
        assert!(triple.contains(&y, &DVector::from_vec(vec![0.0, 0.0]), 1e-9));
        assert!(!triple.contains(&y, &DVector::from_vec(vec![1.001, 0.0]), 1e-9));
        assert!(triple.contains(&y, &DVector::from_vec(vec![1.0, 1.0]), 1e-9));
    }

    #[test]
    fn rotated_octagon_counts() {
        let triple = build(&FacetTemplate::rotated2d(8).unwrap()).unwrap();
        assert_eq!(triple.num_facets(), 8);
        assert_eq!(triple.num_vertices(), 8);
        assert_eq!(triple.num_cone_rows(), 8);
    }

    #[test]
    fn ball_plate_product_counts() {
        let triple = build(&FacetTemplate::hexagon_simplex_product()).unwrap();
        assert_eq!(triple.num_facets(), 13);
        assert_eq!(triple.num_vertices(), 42);
        assert_eq!(triple.num_cone_rows(), 7);
    }

    #[test]
    fn cone_strictly_satisfied_at_template_offset() {
        for template in [
            FacetTemplate::box2d(),
            FacetTemplate::rotated2d(8).unwrap(),
            FacetTemplate::hexagon_simplex_product(),
        ] {
            let triple = build(&template).unwrap();
            let v = triple.cone_violation(template.offset());
            assert!(v < -1e-6, "cone not strictly satisfied: {v}");
        }
    }

    #[test]
    fn unbounded_template_rejected() {
        let normals = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.1]);
        let t = FacetTemplate::new(normals, DVector::from_element(3, 1.0)).unwrap();
        match build(&t) {
            Err(GeometryError::Unbounded) => {}
            other => panic!("expected Unbounded, got {other:?}"),
        }
    }

    #[test]
    fn non_simple_template_rejected() {
        // Three facet lines through (1, 1): the vertex has 3 active facets.
        let s = 1.0 / 2.0f64.sqrt();
        let normals =
            DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, s, s, -1.0, -1.0]);
        let offset = DVector::from_vec(vec![1.0, 1.0, 2.0 * s, 1.0]);
        let t = FacetTemplate::new(normals, offset).unwrap();
        match build(&t) {
            Err(GeometryError::NotSimple { count: 3, expected: 2 }) => {}
            other => panic!("expected NotSimple, got {other:?}"),
        }
    }

    #[test]
    fn near_singular_vertex_rejected() {
        // Two facets at an angle of 2e-9 share a vertex; the subset is
        // solvable but ill-conditioned.
        let delta = 2e-9f64;
        let angles = [0.0, delta, 2.0 * std::f64::consts::PI / 3.0,
            4.0 * std::f64::consts::PI / 3.0];
        let mut normals = DMatrix::zeros(4, 2);
        for (i, a) in angles.iter().enumerate() {
            normals[(i, 0)] = a.cos();
            normals[(i, 1)] = a.sin();
        }
        let t = FacetTemplate::new(normals, DVector::from_element(4, 1.0)).unwrap();
        match build(&t) {
            Err(GeometryError::Degenerate { .. }) => {}
            other => panic!("expected Degenerate, got {other:?}"),
        }
    }

    #[test]
    fn vertex_maps_agree_with_brute_force_enumeration() {
        let mut rng = StdRng::seed_from_u64(7);
        for template in [FacetTemplate::box2d(), FacetTemplate::rotated2d(8).unwrap()] {
            let triple = build(&template).unwrap();
            for _ in 0..20 {
                // Random offset strictly inside the cone around y0.
                let mut y = template.offset().clone();
                loop {
                    let cand = DVector::from_fn(y.len(), |i, _| {
                        y[i] * (0.5 + rng.random::<f64>())
                    });
                    if triple.cone_violation(&cand) < -1e-6 {
                        y = cand;
                        break;
                    }
                }
                let mapped = triple.vertex_points(&y, 1e-9).unwrap();
                let brute = brute_force_vertices(template.normals(), &y);
                assert_eq!(brute.len(), triple.num_vertices());
                for b in &brute {
                    assert!(
                        mapped.iter().any(|m| (m - b).norm() <= 1e-7),
                        "brute-force vertex {b:?} not among mapped vertices"
                    );
                }
                for m in &mapped {
                    assert!(
                        brute.iter().any(|b| (m - b).norm() <= 1e-7),
                        "mapped vertex {m:?} not among brute-force vertices"
                    );
                }
            }
        }
    }

    #[test]
    fn mapped_vertices_stay_inside_polytope() {
        let mut rng = StdRng::seed_from_u64(11);
        let template = FacetTemplate::rotated2d(8).unwrap();
        let triple = build(&template).unwrap();
        let mut checked = 0;
        while checked < 200 {
            let y = DVector::from_fn(8, |_, _| rng.random_range(-0.2..1.5));
            if !triple.in_cone(&y, 0.0) {
                continue;
            }
            checked += 1;
            for v in triple.vertex_points(&y, 1e-9).unwrap() {
                let r = (triple.facets() * &v - &y).max();
                assert!(r <= 1e-8, "vertex map leaves polytope: residual {r}");
            }
        }
    }

    #[test]
    fn convex_combination_certificates_exist() {
        // Rejection-sample interior points and certify membership in
        // convh{V_j y} by LP.
        let s = solver();
        let template = FacetTemplate::box2d();
        let triple = build(&template).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        let y = DVector::from_vec(vec![1.0, 0.7, 0.3, 1.2]);
        assert!(triple.in_cone(&y, 0.0));
        let verts = triple.vertex_points(&y, 1e-9).unwrap();
        let mut accepted = 0;
        while accepted < 50 {
            let x = DVector::from_fn(2, |_, _| rng.random_range(-1.5..1.5));
            if !triple.contains(&y, &x, 0.0) {
                continue;
            }
            accepted += 1;
            let v = verts.len();
            let mut lp = QuadraticProgram::new(v);
            for r in 0..2 {
                let entries: Vec<(usize, f64)> =
                    (0..v).map(|j| (j, verts[j][r])).collect();
                lp.add_eq_row(&entries, x[r]);
            }
            lp.add_eq_row(&(0..v).map(|j| (j, 1.0)).collect::<Vec<_>>(), 1.0);
            for j in 0..v {
                lp.add_ineq_row(&[(j, -1.0)], 0.0);
            }
            assert!(s.solve(&lp, None).is_ok(), "no convex certificate for {x:?}");
        }
    }

    #[test]
    fn input_selector_partitions_stacked_vector() {
        let triple = build(&FacetTemplate::box2d()).unwrap();
        let n_u = 3;
        let stacked = DVector::from_fn(triple.num_vertices() * n_u, |i, _| i as f64);
        let mut seen = Vec::new();
        for j in 0..triple.num_vertices() {
            let sel = triple.input_selector(j, n_u);
            let u_j = sel.extract(&stacked);
            let via_matrix = sel.to_matrix() * &stacked;
            assert_eq!(u_j, via_matrix);
            seen.extend(u_j.iter().cloned());
        }
        assert_eq!(seen, stacked.iter().cloned().collect::<Vec<_>>());
    }

    #[test]
    fn regular_simplex_normals_sum_to_zero() {
        let n = regular_simplex_normals(6);
        let sum = n.row_sum();
        // row_sum sums over rows -> 1×6
        assert!(sum.amax() < 1e-12);
        for i in 0..7 {
            assert_abs_diff_eq!(n.row(i).norm(), 1.0, epsilon = 1e-12);
            for j in (i + 1)..7 {
                assert_abs_diff_eq!(n.row(i).dot(&n.row(j)), -1.0 / 6.0, epsilon = 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn random_polygon_triples_are_consistent(seed in 0u64..1000) {
            let mut rng = StdRng::seed_from_u64(seed);
            let k = rng.random_range(4usize..8);
            let mut angles: Vec<f64> = (0..k)
                .map(|i| i as f64 * 2.0 * std::f64::consts::PI / k as f64
                    + rng.random_range(-0.2..0.2))
                .collect();
            angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut normals = DMatrix::zeros(k, 2);
            for (i, a) in angles.iter().enumerate() {
                normals[(i, 0)] = a.cos();
                normals[(i, 1)] = a.sin();
            }
            let offset = DVector::from_fn(k, |_, _| rng.random_range(0.8..1.2));
            let template = FacetTemplate::new(normals, offset).unwrap();
            let triple = build(&template).unwrap();
            prop_assert_eq!(triple.num_vertices(), k);
            prop_assert!(triple.cone_violation(template.offset()) < 0.0);
            for v in triple.vertex_points(template.offset(), 1e-9).unwrap() {
                let r = (triple.facets() * &v - template.offset()).max();
                prop_assert!(r <= 1e-8);
            }
        }
    }
}
