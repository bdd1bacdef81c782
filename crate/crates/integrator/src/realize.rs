//! Realization of a laminate as a placement forest on a box.
//!
//! The split log of a laminate is replayed as a tree; every interior tree
//! node becomes one patch template whose two plateau families carry the
//! node's two children. Children tile the plateau slabs virtually, so the
//! assembly stores one template per tree node regardless of how many
//! physical copies the tiling implies. Level `k` of the tree gets noise
//! budget `eps / 2^(k+1)`, so the whole stack stays below `eps`.

use crate::assembly::{class_layout, inscribe_sizes, is_signed_permutation, Assembly, ChildClass};
use crate::field::{BoundaryField, GradientField};
use crate::tol::{
    ATOM_MATCH_TOL, BARYCENTER_TOL, CONSTRAINT_RESIDUAL_MAX, FALLBACK_INSET,
    SPLIT_CONSTRAINT_TOL, SUP_BUDGET_SLACK,
};
use crate::{IntError, Result};
use laminates::Laminate;
use matcore::{LinearConstraint, Mat, RankOnePair};
use oscillation::{canonicalize, make_patch_with, BoxDomain, PatchOptions};

/// One node of the replayed split tree. Leaves carry laminate atoms;
/// interior nodes carry the barycenter their split replaced.
pub(crate) struct TreeNode {
    pub value: Mat,
    pub split: Option<TreeSplit>,
}

/// A split: index of the heavy child (weight share `s`) and the light one.
pub(crate) struct TreeSplit {
    pub hi: usize,
    pub lo: usize,
    pub s: f64,
}

/// Replays the split log into a tree. Returns the nodes (root at 0) and,
/// for each current atom index of the laminate, its leaf node.
pub(crate) fn build_split_tree(nu: &Laminate) -> Result<(Vec<TreeNode>, Vec<usize>)> {
    let mut nodes = vec![TreeNode { value: nu.root().clone(), split: None }];
    let mut leaf_of = vec![0usize];
    for rec in nu.splits() {
        let parent = leaf_of[rec.atom_index];
        let drift = nodes[parent].value.dist(&rec.replaced);
        if drift > ATOM_MATCH_TOL {
            return Err(IntError::BadParam { name: "split_log_drift", value: drift });
        }
        let hi = nodes.len();
        nodes.push(TreeNode { value: rec.eta1.clone(), split: None });
        let lo = nodes.len();
        nodes.push(TreeNode { value: rec.eta2.clone(), split: None });
        nodes[parent].split = Some(TreeSplit { hi, lo, s: rec.s });
        leaf_of[rec.atom_index] = hi;
        leaf_of.push(lo);
    }
    Ok((nodes, leaf_of))
}

/// Builds the placement subtree for split-tree node `t_node` (which must be
/// interior) and returns its arena index. `container` is the axis-aligned
/// box, in the parent's canonical coordinates (physical for roots), the
/// template's physical image must fit; `parent_t` is the parent frame map,
/// `None` for a root. Tree levels past `depth_cap` are cut and flagged in
/// `exhausted`, as are plateaus too narrow to tile.
#[allow(clippy::too_many_arguments)]
pub(crate) fn realize_tree(
    asm: &mut Assembly,
    constraint: &LinearConstraint,
    tree: &[TreeNode],
    t_node: usize,
    stage: u16,
    eps: f64,
    level: u32,
    depth_cap: usize,
    container: &[f64],
    parent_t: Option<&Mat>,
    opts: &PatchOptions,
    exhausted: &mut bool,
) -> Result<usize> {
    let split = tree[t_node].split.as_ref().expect("realize_tree needs an interior node");
    let eta1 = tree[split.hi].value.clone();
    let eta2 = tree[split.lo].value.clone();
    let lres = (constraint.apply(&eta1) - constraint.apply(&eta2)).abs();
    if lres > SPLIT_CONSTRAINT_TOL * (1.0 + constraint.target.abs()) {
        return Err(IntError::BadParam { name: "split_constraint_residual", value: lres });
    }
    let pair = RankOnePair::new(eta1, eta2)?;
    let frame = canonicalize(constraint, &pair)?;

    // Orientation of this template's canonical axes inside the container.
    let q = match parent_t {
        None => frame.t.clone(),
        Some(tp) => tp.transpose().matmul(&frame.t),
    };
    let inset = if is_signed_permutation(&q) { 0.0 } else { FALLBACK_INSET };
    let sizes = inscribe_sizes(container, &q, inset);
    let origin: Vec<f64> = sizes.iter().map(|&s| -0.5 * s).collect();
    let tau = eps / 2.0_f64.powi(level as i32 + 1);
    let patch = make_patch_with(
        constraint,
        &pair,
        split.s,
        BoxDomain::new(origin, sizes)?,
        tau,
        opts,
    )?;

    let mut sides = [None, None];
    for (slot, (t_child, is_hi)) in [(split.hi, true), (split.lo, false)].into_iter().enumerate() {
        if tree[t_child].split.is_none() {
            continue;
        }
        if level as usize + 1 >= depth_cap {
            *exhausted = true;
            continue;
        }
        let Some(layout) = class_layout(&patch, is_hi) else {
            *exhausted = true;
            continue;
        };
        let child_container = vec![layout.tile; container.len()];
        let parent_frame_t = patch.frame().t.clone();
        let template = realize_tree(
            asm,
            constraint,
            tree,
            t_child,
            stage,
            eps,
            level + 1,
            depth_cap,
            &child_container,
            Some(&parent_frame_t),
            opts,
            exhausted,
        )?;
        sides[slot] = Some(ChildClass { template, tile: layout.tile, counts: layout.counts });
    }
    let [hi, lo] = sides;
    Ok(asm.new_node(stage, patch, hi, lo))
}

/// Where the realized gradient field spends its measure: per-atom shares
/// plus the exceptional remainder, both measured on the node grid and
/// derived in closed form from the placement geometry.
#[derive(Debug, Clone)]
pub struct RealizeStats {
    /// Fraction of grid nodes within `eps` of each laminate atom.
    pub atom_fractions: Vec<f64>,
    /// Fraction of grid nodes near no atom.
    pub exceptional_fraction: f64,
    /// Exact measure fraction carried by each atom's plateau regions.
    pub analytic_atom_fractions: Vec<f64>,
    /// Exact measure fraction outside all plateau regions.
    pub analytic_exceptional: f64,
    /// Largest sampled `|u - v|` over grid nodes and components.
    pub sup_value: f64,
    /// Certified bound on `sup |u - v|`; always at least `sup_value`.
    pub sup_value_bound: f64,
    /// Largest constraint residual over grid nodes.
    pub max_residual: f64,
    /// True when the depth cap or a degenerate plateau cut the tree short.
    pub depth_exhausted: bool,
}

///// Default nodes per grid axis: fine in the plane, coarser above it. Even
/// on purpose: the oscillation's second derivative crosses zero on the
/// support midline, and an odd grid would sample that measure-zero line
/// with a whole node column.
fn default_resolution(n: usize) -> usize {
    if n <= 2 {
        64
    } else {
        16
    }
}

/// Modifies the affine field `v(x) = xi x` on `cube` so that its gradient
/// realizes the laminate `nu`: each atom of `nu` is attained exactly on a
/// region of nearly its weight, while `|u - v| < eps` everywhere and
/// `L(grad u) = t` identically.
///
/// # Errors
/// Shape mismatches, a barycenter away from `xi`, split endpoints with
/// unequal constraint values, and patch-construction failures all abort
/// before the field is touched.
pub fn realize_laminate(
    xi: &Mat,
    nu: &Laminate,
    cube: &BoxDomain,
    constraint: &LinearConstraint,
    eps: f64,
    depth: usize,
) -> Result<(GradientField, RealizeStats)> {
    let n = constraint.cols();
    let res = vec![default_resolution(n); n];
    realize_laminate_with_resolution(xi, nu, cube, constraint, eps, depth, &res)
}

/// [`realize_laminate`] on an explicit node grid.
#[allow(clippy::too_many_arguments)]
pub fn realize_laminate_with_resolution(
    xi: &Mat,
    nu: &Laminate,
    cube: &BoxDomain,
    constraint: &LinearConstraint,
    eps: f64,
    depth: usize,
    resolution: &[usize],
) -> Result<(GradientField, RealizeStats)> {
    let (m, n) = (constraint.rows(), constraint.cols());
    if xi.rows() != m || xi.cols() != n {
        return Err(IntError::BadParam { name: "xi_shape", value: xi.rows() as f64 });
    }
    if nu.shape() != (m, n) {
        return Err(IntError::BadParam { name: "laminate_shape", value: nu.shape().0 as f64 });
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(IntError::BadParam { name: "eps", value: eps });
    }
    if depth == 0 {
        return Err(IntError::BadParam { name: "depth", value: 0.0 });
    }
    let bary_dist = nu.barycenter().dist(xi);
    if bary_dist > BARYCENTER_TOL * xi.norm().max(1.0) {
        return Err(IntError::BarycenterMismatch { dist: bary_dist });
    }

    let boundary = BoundaryField::affine(vec![0.0; m], xi.clone());
    let mut field =
        GradientField::from_boundary(constraint, boundary, cube.clone(), resolution)?;

    let mut exhausted = false;
    if !nu.splits().is_empty() {
        let (tree, _) = build_split_tree(nu)?;
        let opts = PatchOptions::default();
        let mut asm = Assembly::new();
        let root = realize_tree(
            &mut asm,
            constraint,
            &tree,
            0,
            1,
            eps,
            0,
            depth,
            cube.size(),
            None,
            &opts,
            &mut exhausted,
        )?;
        let shift: Vec<f64> = cube
            .origin()
            .iter()
            .zip(cube.size())
            .map(|(o, s)| o + 0.5 * s)
            .collect();
        asm.add_root(root, shift);
        field.install_assembly(asm, 1);
    }

    let stats = collect_stats(&field, nu, cube, eps, exhausted);
    assert!(
        stats.sup_value_bound < eps * (1.0 + SUP_BUDGET_SLACK),
        "certified sup bound {} exceeds the budget {eps}",
        stats.sup_value_bound
    );
    assert!(
        stats.sup_value <= stats.sup_value_bound * (1.0 + SUP_BUDGET_SLACK) + f64::MIN_POSITIVE,
        "sampled sup {} above its certificate {}",
        stats.sup_value,
        stats.sup_value_bound
    );
    assert!(
        stats.max_residual <= CONSTRAINT_RESIDUAL_MAX,
        "constraint residual {} above the pipeline ceiling",
        stats.max_residual
    );
    Ok((field, stats))
}

fn collect_stats(
    field: &GradientField,
    nu: &Laminate,
    cube: &BoxDomain,
    eps: f64,
    depth_exhausted: bool,
) -> RealizeStats {
    let atoms = nu.atoms();
    let count = field.node_count();
    let mut atom_fractions = vec![0.0; atoms.len()];
    let mut sup_value = 0.0_f64;
    let mut hit = 0usize;
    for idx in 0..count {
        let g = field.grad_at(idx);
        let mut best = f64::INFINITY;
        let mut best_k = 0usize;
        for (k, a) in atoms.iter().enumerate() {
            let d = g.dist(a);
            if d < best {
                best = d;
                best_k = k;
            }
        }
        if best <= eps {
            atom_fractions[best_k] += 1.0;
            hit += 1;
        }
        let x = field.node_coord(idx);
        let (v, _) = field.boundary().eval(&x);
        for (a, b) in field.u_at(idx).iter().zip(v.iter()) {
            sup_value = sup_value.max((a - b).abs());
        }
    }
    for f in &mut atom_fractions {
        *f /= count as f64;
    }
    let exceptional_fraction = (count - hit) as f64 / count as f64;

    let mut analytic = vec![0.0; atoms.len()];
    let mut analytic_exc = 0.0;
    if nu.splits().is_empty() {
        // A Dirac laminate is realized by the unmodified field.
        analytic = vec![1.0];
    } else {
        let (tree, _) = build_split_tree(nu).expect("log validated during realization");
        let asm = field.assembly_ref();
        for root in asm.roots() {
            let coverage = asm.node(root.node).patch.domain().volume() / cube.volume();
            analytic_exc += 1.0 - coverage;
            analytic_walk(asm, &tree, 0, root.node, coverage, nu, &mut analytic, &mut analytic_exc);
        }
    }

    RealizeStats {
        atom_fractions,
        exceptional_fraction,
        analytic_atom_fractions: analytic,
        analytic_exceptional: analytic_exc,
        sup_value,
        sup_value_bound: field.assembly_ref().sup_value_bound(),
        max_residual: field.max_residual(),
        depth_exhausted,
    }
}

/// Walks template tree and split tree together, splitting each box's
/// measure into plateau shares, covered child boxes, and residue.
#[allow(clippy::too_many_arguments)]
fn analytic_walk(
    asm: &Assembly,
    tree: &[TreeNode],
    t_node: usize,
    a_node: usize,
    coverage: f64,
    nu: &Laminate,
    fractions: &mut [f64],
    exceptional: &mut f64,
) {
    let node = asm.node(a_node);
    let vol = node.patch.domain().volume();
    let fa = node.patch.region_a_measure() / vol;
    let fb = node.patch.region_b_measure() / vol;
    let split = tree[t_node].split.as_ref().expect("arena nodes mirror interior tree nodes");
    let sides = [
        (split.hi, node.hi.as_ref(), true, fa),
        (split.lo, node.lo.as_ref(), false, fb),
    ];
    for (t_child, cc, is_hi, f_side) in sides {
        if tree[t_child].split.is_none() {
            match nu.find_atom(&tree[t_child].value, ATOM_MATCH_TOL) {
                Some(k) => fractions[k] += coverage * f_side,
                None => *exceptional += coverage * f_side,
            }
            continue;
        }
        match cc {
            None => *exceptional += coverage * f_side,
            Some(cc) => {
                let layout = class_layout(&node.patch, is_hi)
                    .expect("stored child class implies a valid layout");
                let n = node.patch.domain().dim();
                let child_vol = asm.node(cc.template).patch.domain().volume();
                let in_tile = child_vol / cc.tile.powi(n as i32);
                let in_side = layout.covered_fraction * in_tile;
                analytic_walk(
                    asm,
                    tree,
                    t_child,
                    cc.template,
                    coverage * f_side * in_side,
                    nu,
                    fractions,
                    exceptional,
                );
                *exceptional += coverage * f_side * (1.0 - in_side);
            }
        }
    }
    *exceptional += coverage * (1.0 - fa - fb);
}
