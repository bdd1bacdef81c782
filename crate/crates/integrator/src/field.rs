//! Gradient fields on node grids, rendered from an analytic assembly.
//!
//! The source of truth is the boundary map plus the placement forest; the
//! node arrays are deterministic renders of it. Nodes no placement reaches
//! are never touched by a floating-point operation, so they stay
//! bit-identical to the boundary map across every pipeline operation.

use crate::assembly::Assembly;
use crate::target::TargetSpec;
use crate::tol::CONSTRAINT_RESIDUAL_MAX;
use crate::{IntError, Result};
use matcore::{LinearConstraint, Mat};
use oscillation::BoxDomain;
use rayon::prelude::*;
use std::fmt::Write as _;

/// Boundary data: the map the field agrees with near `partial Omega`.
/// Restricted to affine and globally smooth quadratic inputs; anything
/// rougher has no stable trace on a node grid.
#[derive(Debug, Clone)]
pub enum BoundaryField {
    /// `v(x) = value + G x`.
    Affine { value: Vec<f64>, gradient: Mat },
    /// `v_i(x) = value_i + (G x)_i + 0.5 x^T C_i x` with symmetric `C_i`.
    Quadratic { value: Vec<f64>, gradient: Mat, curvature: Vec<Mat> },
}

impl BoundaryField {
    pub fn affine(value: Vec<f64>, gradient: Mat) -> Self {
        BoundaryField::Affine { value, gradient }
    }

    pub fn quadratic(value: Vec<f64>, gradient: Mat, curvature: Vec<Mat>) -> Result<Self> {
        let (m, n) = (gradient.rows(), gradient.cols());
        if value.len() != m || curvature.len() != m {
            return Err(IntError::BadParam { name: "boundary_shape", value: value.len() as f64 });
        }
        for c in &curvature {
            if c.rows() != n || c.cols() != n {
                return Err(IntError::BadParam { name: "curvature_shape", value: c.rows() as f64 });
            }
        }
        Ok(BoundaryField::Quadratic { value, gradient, curvature })
    }

    pub fn rows(&self) -> usize {
        match self {
            BoundaryField::Affine { value, .. } => value.len(),
            BoundaryField::Quadratic { value, .. } => value.len(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            BoundaryField::Affine { gradient, .. } => gradient.cols(),
            BoundaryField::Quadratic { gradient, .. } => gradient.cols(),
        }
    }

    /// Value and gradient of the boundary map at `x`.
    pub fn eval(&self, x: &[f64]) -> (Vec<f64>, Mat) {
        match self {
            BoundaryField::Affine { value, gradient } => {
                let mut u = value.clone();
                for i in 0..u.len() {
                    for j in 0..x.len() {
                        u[i] += gradient.get(i, j) * x[j];
                    }
                }
                (u, gradient.clone())
            }
            BoundaryField::Quadratic { value, gradient, curvature } => {
                let m = value.len();
                let n = x.len();
                let mut u = value.clone();
                let mut g = gradient.clone();
                for i in 0..m {
                    let cx = curvature[i].matvec(x);
                    let mut quad = 0.0;
                    for j in 0..n {
                        quad += x[j] * cx[j];
                        g.set(i, j, g.get(i, j) + cx[j]);
                        u[i] += gradient.get(i, j) * x[j];
                    }
                    u[i] += 0.5 * quad;
                }
                (u, g)
            }
        }
    }
}

/// Result of the finite-difference consistency pass.
#[derive(Debug, Clone, Copy)]
pub struct FdCheck {
    /// Largest `|central difference - stored gradient|` over checked nodes.
    pub max_error: f64,
    /// Interior nodes whose full stencil is placement-free.
    pub checked: usize,
    /// Interior nodes exempted because a placement touches the stencil.
    pub exempt: usize,
}

/// A vector map sampled on a node grid together with its exact analytic
/// generator. `u` holds `m` values per node, `grad` holds the `m x n`
/// gradient, both in node-major order with the last axis fastest.
#[derive(Debug, Clone)]
pub struct GradientField {
    domain: BoxDomain,
    resolution: Vec<usize>,
    constraint: LinearConstraint,
    boundary: BoundaryField,
    pub(crate) assembly: Assembly,
    u: Vec<f64>,
    grad: Vec<f64>,
    node_stage: Vec<u16>,
    node_patch: Vec<u32>,
    max_residual: f64,
    stages_applied: u16,
}

impl GradientField {
    /// Creates the unmodified field `u = v` on the grid.
    ///
    /// # Errors
    /// [`IntError::BadParam`] for shape mismatches, degenerate resolutions,
    /// or a boundary map violating the constraint beyond the pipeline
    /// residual ceiling.
    pub fn from_boundary(
        constraint: &LinearConstraint,
        boundary: BoundaryField,
        domain: BoxDomain,
        resolution: &[usize],
    ) -> Result<Self> {
        if boundary.rows() != constraint.rows() || boundary.cols() != constraint.cols() {
            return Err(IntError::BadParam {
                name: "boundary_shape",
                value: boundary.rows() as f64,
            });
        }
        if domain.dim() != constraint.cols() {
            return Err(IntError::BadParam { name: "domain_dim", value: domain.dim() as f64 });
        }
        if resolution.len() != domain.dim() || resolution.iter().any(|&r| r < 2) {
            return Err(IntError::BadParam {
                name: "resolution",
                value: resolution.len() as f64,
            });
        }
        let count: usize = resolution.iter().product();
        let m = constraint.rows();
        let n = constraint.cols();
        let mut field = GradientField {
            domain,
            resolution: resolution.to_vec(),
            constraint: constraint.clone(),
            boundary,
            assembly: Assembly::new(),
            u: vec![0.0; count * m],
            grad: vec![0.0; count * m * n],
            node_stage: vec![0; count],
            node_patch: vec![0; count],
            max_residual: 0.0,
            stages_applied: 0,
        };
        field.render();
        if field.max_residual > CONSTRAINT_RESIDUAL_MAX {
            return Err(IntError::BadParam {
                name: "boundary_residual",
                value: field.max_residual,
            });
        }
        Ok(field)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn constraint(&self) -> &LinearConstraint {
        &self.constraint
    }

    pub fn boundary(&self) -> &BoundaryField {
        &self.boundary
    }

    pub fn rows(&self) -> usize {
        self.constraint.rows()
    }

    pub fn dim(&self) -> usize {
        self.constraint.cols()
    }

    pub fn node_count(&self) -> usize {
        self.node_stage.len()
    }

    /// Largest `|L(grad u) - t|` over all nodes, from the last render.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn stages_applied(&self) -> u16 {
        self.stages_applied
    }

    pub(crate) fn assembly_ref(&self) -> &Assembly {
        &self.assembly
    }

    /// Replaces the assembly and re-renders every node.
    pub(crate) fn install_assembly(&mut self, assembly: Assembly, stages: u16) {
        self.assembly = assembly;
        self.stages_applied = stages;
        self.render();
    }

    /// Physical coordinates of node `idx`.
    pub fn node_coord(&self, idx: usize) -> Vec<f64> {
        let n = self.dim();
        let mut coord = vec![0.0; n];
        let mut rem = idx;
        for l in (0..n).rev() {
            let r = self.resolution[l];
            let i = rem % r;
            rem /= r;
            coord[l] = self.domain.origin()[l]
                + self.domain.size()[l] * (i as f64 / (r - 1) as f64);
        }
        coord
    }

    pub fn u_at(&self, idx: usize) -> &[f64] {
        let m = self.rows();
        &self.u[idx * m..(idx + 1) * m]
    }

    pub fn grad_at(&self, idx: usize) -> Mat {
        let (m, n) = (self.rows(), self.dim());
        Mat::from_flat(m, n, self.grad[idx * m * n..(idx + 1) * m * n].to_vec())
    }

    /// Stage index of the deepest placement touching the node; 0 marks
    /// boundary data (the node renders the boundary map exactly).
    pub fn stage_at(&self, idx: usize) -> u16 {
        self.node_stage[idx]
    }

    /// Placement id at the node; 0 marks boundary data.
    pub fn patch_at(&self, idx: usize) -> u32 {
        self.node_patch[idx]
    }

    /// Exact value and gradient at an arbitrary point.
    pub fn eval_at(&self, x: &[f64]) -> (Vec<f64>, Mat) {
        let (mut u, mut g) = self.boundary.eval(x);
        self.assembly.accumulate(x, &mut u, &mut g);
        (u, g)
    }

    /// Gradient only; same analytic route as [`Self::eval_at`].
    pub fn grad_at_point(&self, x: &[f64]) -> Mat {
        self.eval_at(x).1
    }

    /// Re-renders every node from the boundary map and the assembly.
    pub(crate) fn render(&mut self) {
        self.assembly.build_index(&self.domain);
        let m = self.rows();
        let n = self.dim();
        let count = self.node_count();
        let mut residuals = vec![0.0; count];
        // Disjoint per-node output slices keep the parallel render
        // deterministic: each node's value is independent of the others.
        let assembly = &self.assembly;
        let constraint = &self.constraint;
        let boundary = &self.boundary;
        let domain = &self.domain;
        let resolution = &self.resolution;
        let coord_of = |idx: usize| -> Vec<f64> {
            let mut coord = vec![0.0; n];
            let mut rem = idx;
            for l in (0..n).rev() {
                let r = resolution[l];
                let i = rem % r;
                rem /= r;
                coord[l] =
                    domain.origin()[l] + domain.size()[l] * (i as f64 / (r - 1) as f64);
            }
            coord
        };
        self.u
            .par_chunks_mut(m)
            .zip(self.grad.par_chunks_mut(m * n))
            .zip(self.node_stage.par_iter_mut())
            .zip(self.node_patch.par_iter_mut())
            .zip(residuals.par_iter_mut())
            .enumerate()
            .for_each(|(idx, ((((uc, gc), stage), patch), res))| {
                let x = coord_of(idx);
                let (uv, mut gm) = boundary.eval(&x);
                uc.copy_from_slice(&uv);
                let touch = assembly.accumulate(&x, uc, &mut gm);
                for i in 0..m {
                    for j in 0..n {
                        gc[i * n + j] = gm.get(i, j);
                    }
                }
                match touch {
                    Some(c) => {
                        *stage = c.stage;
                        *patch = c.patch;
                    }
                    None => {
                        *stage = 0;
                        *patch = 0;
                    }
                }
                *res = constraint.residual(&gm);
            });
        self.max_residual = residuals.iter().fold(0.0_f64, |a, &b| a.max(b));
    }

    /// Fraction of nodes whose gradient the target accepts.
    pub fn fraction_in(&self, target: &TargetSpec) -> f64 {
        let count = self.node_count();
        let hits = (0..count)
            .into_par_iter()
            .filter(|&idx| target.contains(&self.grad_at(idx)))
            .count();
        hits as f64 / count as f64
    }

    /// Largest componentwise `|u - other.u|` over nodes. Panics when the
    /// grids disagree, which would make the comparison meaningless.
    pub fn sup_change_from(&self, other: &GradientField) -> f64 {
        assert_eq!(self.resolution, other.resolution, "same grid required");
        self.u
            .iter()
            .zip(other.u.iter())
            .fold(0.0_f64, |a, (&x, &y)| a.max((x - y).abs()))
    }

    /// True when every node on `partial Omega` holds the boundary map bit
    /// for bit.
    pub fn boundary_nodes_bit_identical(&self) -> bool {
        let n = self.dim();
        let count = self.node_count();
        'nodes: for idx in 0..count {
            let mut rem = idx;
            let mut on_boundary = false;
            for l in (0..n).rev() {
                let r = self.resolution[l];
                let i = rem % r;
                rem /= r;
                if i == 0 || i == r - 1 {
                    on_boundary = true;
                }
            }
            if !on_boundary {
                continue 'nodes;
            }
            let x = self.node_coord(idx);
            let (v, _) = self.boundary.eval(&x);
            for (a, b) in self.u_at(idx).iter().zip(v.iter()) {
                if a.to_bits() != b.to_bits() {
                    return false;
                }
            }
        }
        true
    }

    /// Central-difference consistency of `grad` against `u` on nodes whose
    /// full stencil is placement-free. Placement-touched stencils are
    /// exempt: patches oscillate below the grid scale by design.
    pub fn fd_consistency(&self) -> FdCheck {
        let n = self.dim();
        let m = self.rows();
        let mut strides = vec![1usize; n];
        for l in (0..n.saturating_sub(1)).rev() {
            strides[l] = strides[l + 1] * self.resolution[l + 1];
        }
        let h: Vec<f64> = (0..n)
            .map(|l| self.domain.size()[l] / (self.resolution[l] - 1) as f64)
            .collect();
        let mut max_error = 0.0_f64;
        let mut checked = 0;
        let mut exempt = 0;
        'nodes: for idx in 0..self.node_count() {
            let mut rem = idx;
            for l in (0..n).rev() {
                let r = self.resolution[l];
                let i = rem % r;
                rem /= r;
                if i == 0 || i == r - 1 {
                    continue 'nodes;
                }
            }
            let mut clean = self.node_patch[idx] == 0;
            if clean {
                for l in 0..n {
                    if self.node_patch[idx - strides[l]] != 0
                        || self.node_patch[idx + strides[l]] != 0
                    {
                        clean = false;
                        break;
                    }
                }
            }
            if !clean {
                exempt += 1;
                continue;
            }
            checked += 1;
            for l in 0..n {
                let up = self.u_at(idx + strides[l]);
                let dn = self.u_at(idx - strides[l]);
                for i in 0..m {
                    let fd = (up[i] - dn[i]) / (2.0 * h[l]);
                    let err = (fd - self.grad[idx * m * n + i * n + l]).abs();
                    max_error = max_error.max(err);
                }
            }
        }
        FdCheck { max_error, checked, exempt }
    }

    /// One line per node: coordinates, values, gradient entries, residual,
    /// stage, and target membership.
    pub fn to_csv(&self, target: Option<&TargetSpec>) -> String {
        let n = self.dim();
        let m = self.rows();
        let mut out = String::new();
        for j in 0..n {
            let _ = write!(out, "x{},", j + 1);
        }
        for i in 0..m {
            let _ = write!(out, "u{},", i + 1);
        }
        for i in 0..m {
            for j in 0..n {
                let _ = write!(out, "g{}{},", i + 1, j + 1);
            }
        }
        out.push_str("constraint_residual,stage,in_target\n");
        for idx in 0..self.node_count() {
            let x = self.node_coord(idx);
            for v in &x {
                let _ = write!(out, "{v},");
            }
            for v in self.u_at(idx) {
                let _ = write!(out, "{v},");
            }
            let g = self.grad_at(idx);
            for i in 0..m {
                for j in 0..n {
                    let _ = write!(out, "{},", g.get(i, j));
                }
            }
            let res = self.constraint.residual(&g);
            let hit = match target {
                Some(t) => usize::from(t.contains(&g)),
                None => 0,
            };
            let _ = writeln!(out, "{res},{},{hit}", self.node_stage[idx]);
        }
        out
    }
}
