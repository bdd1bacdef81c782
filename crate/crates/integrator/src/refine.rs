//! Cube-by-cube refinement of a gradient field toward a target set.
//!
//! One refinement stage improves the field by two complementary moves, both
//! expressed as mutations of the placement forest:
//!
//! * **Leaf extension.** Every template whose plateau gradient is outside
//!   the target asks the target's oracle for a laminate around that
//!   gradient and realizes it inside the plateau slabs, as a virtual tiling
//!   shared by every copy of the template. This reaches arbitrarily deep
//!   into existing supports at `O(1)` storage per stage.
//! * **Free-space sweep.** The part of the domain no placement touches
//!   still carries the affine background gradient. A dyadic descent
//!   classifies boxes as free, covered, or straddling a support boundary;
//!   free boxes receive a realization of the oracle's laminate around the
//!   background gradient, straddling boxes split until a depth cap.
//!
//! Both moves only add compactly supported perturbations sized to the stage
//! budget, so boundary nodes stay bit-identical and the measured sup-change
//! per stage is asserted against the budget.

use crate::assembly::{class_layout, Assembly, ChildClass};
use crate::field::{BoundaryField, GradientField};
use crate::realize::{build_split_tree, realize_tree, TreeNode};
use crate::target::TargetSpec;
use crate::tol::{
    BARYCENTER_TOL, CONSTRAINT_RESIDUAL_MAX, MAX_REFINE_DEPTH, PIPELINE_CUTOFF_RAMP_CAP,
    PIPELINE_PROFILE_MARGIN_CAP, PIPELINE_PROFILE_RAMP_CAP, SUP_BUDGET_SLACK,
};
use crate::{IntError, Result};
use matcore::{LinearConstraint, Mat};
use oscillation::PatchOptions;
use std::collections::HashMap;

/// What one refinement stage did and what the field looks like afterwards.
#[derive(Debug, Clone)]
pub struct StageReport {
    /// 1-based stage index this refinement became.
    pub stage: u16,
    /// Sup-change budget the stage was given.
    pub budget: f64,
    /// Root placements added by the free-space sweep.
    pub roots_added: usize,
    /// Template plateau sides that received a child tiling.
    pub leaves_extended: usize,
    /// Boxes or plateau sides left untouched: oracle failures, plateaus too
    /// narrow to tile, and straddling boxes at the depth cap.
    pub flagged_boxes: usize,
    /// True when a split tree was cut short by the depth cap or a
    /// degenerate plateau.
    pub depth_exhausted: bool,
    /// Fraction of grid nodes whose gradient the target contains.
    pub fraction_in_target: f64,
    /// Measured `sup |u_after - u_before|` over grid nodes.
    pub sup_change: f64,
    /// Certified bound on the total `|u - v|` of the assembled field.
    pub sup_value_bound: f64,
    /// Largest constraint residual over grid nodes after the stage.
    pub max_residual: f64,
}

/// Patch shaping used by every pipeline-placed patch: margins stay wide
/// enough for later dyadic sweeps to convert them, while ramps — which no
/// later stage can convert — are capped hard.
pub(crate) fn pipeline_options() -> PatchOptions {
    PatchOptions {
        profile_margin_cap: PIPELINE_PROFILE_MARGIN_CAP,
        profile_ramp_cap: PIPELINE_PROFILE_RAMP_CAP,
        cutoff_ramp_cap: PIPELINE_CUTOFF_RAMP_CAP,
    }
}

#[derive(Debug, Default)]
struct RefineCounters {
    roots_added: usize,
    leaves_extended: usize,
    flagged: usize,
    exhausted: bool,
}

/// Runs one refinement stage with sup-change budget `eps` and returns the
/// refined field plus its stage report.
///
/// The boundary data must be affine: the sweep relies on the background
/// gradient being one constant matrix wherever no placement acts.
///
/// # Errors
/// [`IntError::BadParam`] for a bad budget or non-affine boundary data;
/// [`IntError::BarycenterMismatch`] when the target's oracle violates its
/// barycenter contract; patch construction failures are propagated.
///
/// # Panics
/// Asserts, rather than reports, the three stage invariants: measured
/// sup-change within budget, boundary nodes bit-identical, and constraint
/// residual below the pipeline ceiling.
pub fn refine_field(
    field: &GradientField,
    target: &TargetSpec,
    eps: f64,
) -> Result<(GradientField, StageReport)> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(IntError::BadParam { name: "eps", value: eps });
    }
    let BoundaryField::Affine { gradient, .. } = field.boundary() else {
        return Err(IntError::BadParam { name: "boundary_kind", value: 1.0 });
    };
    let xi = gradient.clone();
    let stage = field.stages_applied() + 1;
    let opts = pipeline_options();
    let mut asm = field.assembly_ref().clone();
    let mut counters = RefineCounters::default();

    extend_leaves(&mut asm, field, target, stage, eps, &opts, &mut counters)?;
    convert_free_space(&mut asm, field, target, &xi, stage, eps, &opts, &mut counters)?;

    let mut out = field.clone();
    out.install_assembly(asm, stage);

    let sup_change = out.sup_change_from(field);
    assert!(
        sup_change <= eps * (1.0 + SUP_BUDGET_SLACK),
        "stage {stage} sup-change {sup_change} exceeds its budget {eps}"
    );
    assert!(
        out.boundary_nodes_bit_identical(),
        "stage {stage} modified boundary nodes"
    );
    let max_residual = out.max_residual();
    assert!(
        max_residual <= CONSTRAINT_RESIDUAL_MAX,
        "stage {stage} constraint residual {max_residual} above the ceiling"
    );

    let report = StageReport {
        stage,
        budget: eps,
        roots_added: counters.roots_added,
        leaves_extended: counters.leaves_extended,
        flagged_boxes: counters.flagged,
        depth_exhausted: counters.exhausted,
        fraction_in_target: out.fraction_in(target),
        sup_change,
        sup_value_bound: out.assembly_ref().sup_value_bound(),
        max_residual,
    };
    Ok((out, report))
}

/// Gives every unextended plateau side whose gradient is outside the target
/// a child tiling realizing the oracle's laminate around that gradient.
fn extend_leaves(
    asm: &mut Assembly,
    field: &GradientField,
    target: &TargetSpec,
    stage: u16,
    eps: f64,
    opts: &PatchOptions,
    counters: &mut RefineCounters,
) -> Result<()> {
    let constraint = field.constraint();
    let n = field.dim();
    let snapshot = asm.node_count();
    for idx in 0..snapshot {
        for is_hi in [true, false] {
            let (atom, layout, parent_t) = {
                let node = asm.node(idx);
                let occupied =
                    if is_hi { node.hi.is_some() } else { node.lo.is_some() };
                if occupied {
                    continue;
                }
                let pair = node.patch.pair();
                let atom = if is_hi { pair.a_mat.clone() } else { pair.b_mat.clone() };
                (atom, class_layout(&node.patch, is_hi), node.patch.frame().t.clone())
            };
            if target.contains(&atom) {
                continue;
            }
            let Some(nu) = target.laminate(&atom) else {
                counters.flagged += 1;
                continue;
            };
            if nu.splits().is_empty() {
                counters.flagged += 1;
                continue;
            }
            let bary = nu.barycenter().dist(&atom);
            if bary > BARYCENTER_TOL * atom.norm().max(1.0) {
                return Err(IntError::BarycenterMismatch { dist: bary });
            }
            let Some(layout) = layout else {
                counters.flagged += 1;
                continue;
            };
            let (tree, _) = build_split_tree(&nu)?;
            let container = vec![layout.tile; n];
            let template = realize_tree(
                asm,
                constraint,
                &tree,
                0,
                stage,
                eps,
                0,
                MAX_REFINE_DEPTH,
                &container,
                Some(&parent_t),
                opts,
                &mut counters.exhausted,
            )?;
            let cc = ChildClass { template, tile: layout.tile, counts: layout.counts };
            let node = asm.node_mut(idx);
            if is_hi {
                node.hi = Some(cc);
            } else {
                node.lo = Some(cc);
            }
            counters.leaves_extended += 1;
        }
    }
    Ok(())
}

/// How a dyadic box relates to one root placement's support region.
enum RootClass {
    /// The box cannot meet the support.
    Clear,
    /// The box lies inside the support region; the sweep must not enter.
    Core,
    /// The box may cross the support boundary.
    Straddle,
}

/// Geometry of one root support, cached for interval classification.
struct RootGeom {
    shift: Vec<f64>,
    t: Mat,
    origin: Vec<f64>,
    size: Vec<f64>,
    support_lo: Vec<f64>,
    support_hi: Vec<f64>,
}

fn root_geom(asm: &Assembly, ri: usize) -> RootGeom {
    let root = &asm.roots()[ri];
    let patch = &asm.node(root.node).patch;
    let n = patch.domain().dim();
    let mp = patch.profile().margin();
    let mc = patch.cutoff().margin();
    let mut support_lo = vec![mc; n];
    let mut support_hi = vec![1.0 - mc; n];
    support_lo[0] = mp;
    support_hi[0] = 1.0 - mp;
    RootGeom {
        shift: root.shift.clone(),
        t: patch.frame().t.clone(),
        origin: patch.domain().origin().to_vec(),
        size: patch.domain().size().to_vec(),
        support_lo,
        support_hi,
    }
}

/// Conservative interval classification of the physical box `[lo, hi]`
/// against one support region. The canonical image of the box is bounded
/// axis by axis; the bound is exact when the frame is a signed permutation
/// and an over-approximation otherwise, so `Clear` and `Core` answers are
/// always sound and uncertainty only widens `Straddle`.
fn classify_against_root(lo: &[f64], hi: &[f64], geom: &RootGeom) -> RootClass {
    let n = lo.len();
    let mut inside_all = true;
    for l in 0..n {
        let mut ylo = 0.0;
        let mut yhi = 0.0;
        for i in 0..n {
            let c = geom.t.get(i, l);
            let a = c * (lo[i] - geom.shift[i]);
            let b = c * (hi[i] - geom.shift[i]);
            ylo += a.min(b);
            yhi += a.max(b);
        }
        let zlo = (ylo - geom.origin[l]) / geom.size[l];
        let zhi = (yhi - geom.origin[l]) / geom.size[l];
        if zhi <= geom.support_lo[l] || zlo >= geom.support_hi[l] {
            return RootClass::Clear;
        }
        if zlo < geom.support_lo[l] || zhi > geom.support_hi[l] {
            inside_all = false;
        }
    }
    if inside_all {
        RootClass::Core
    } else {
        RootClass::Straddle
    }
}

/// Deepest dyadic subdivision by dimension: straddle boxes multiply like a
/// surface, so higher dimensions must stop sooner.
fn max_sweep_depth(n: usize) -> usize {
    match n {
        0..=2 => MAX_REFINE_DEPTH,
        3 => 6,
        _ => 4,
    }
}

struct SweepCtx<'a> {
    constraint: &'a LinearConstraint,
    tree: &'a [TreeNode],
    stage: u16,
    eps: f64,
    opts: &'a PatchOptions,
    depth_cap: usize,
    /// Realized templates keyed by the box size bit patterns; dyadic boxes
    /// of one depth share sizes exactly, so the sweep builds one template
    /// per depth in use.
    cache: HashMap<Vec<u64>, usize>,
}

/// Realizes the oracle's laminate around the background gradient on every
/// maximal dyadic box free of existing supports.
#[allow(clippy::too_many_arguments)]
fn convert_free_space(
    asm: &mut Assembly,
    field: &GradientField,
    target: &TargetSpec,
    xi: &Mat,
    stage: u16,
    eps: f64,
    opts: &PatchOptions,
    counters: &mut RefineCounters,
) -> Result<()> {
    if target.contains(xi) {
        return Ok(());
    }
    let Some(nu) = target.laminate(xi) else {
        counters.flagged += 1;
        return Ok(());
    };
    if nu.splits().is_empty() {
        counters.flagged += 1;
        return Ok(());
    }
    let bary = nu.barycenter().dist(xi);
    if bary > BARYCENTER_TOL * xi.norm().max(1.0) {
        return Err(IntError::BarycenterMismatch { dist: bary });
    }
    let (tree, _) = build_split_tree(&nu)?;
    let geoms: Vec<RootGeom> = (0..asm.root_count()).map(|ri| root_geom(asm, ri)).collect();
    let live: Vec<usize> = (0..geoms.len()).collect();
    let domain = field.domain();
    let lo = domain.origin().to_vec();
    let hi: Vec<f64> = lo.iter().zip(domain.size()).map(|(o, s)| o + s).collect();
    let mut ctx = SweepCtx {
        constraint: field.constraint(),
        tree: &tree,
        stage,
        eps,
        opts,
        depth_cap: max_sweep_depth(field.dim()),
        cache: HashMap::new(),
    };
    sweep_box(asm, &mut ctx, &geoms, &live, &lo, &hi, 0, counters)
}

/// Classifies one box against the live supports, then realizes, descends,
/// or flags. Classification only consults roots: children of a template
/// stay inside their parent's support region by construction, so a box
/// clear of every root support carries the unmodified background gradient.
#[allow(clippy::too_many_arguments)]
fn sweep_box(
    asm: &mut Assembly,
    ctx: &mut SweepCtx,
    geoms: &[RootGeom],
    live: &[usize],
    lo: &[f64],
    hi: &[f64],
    depth: usize,
    counters: &mut RefineCounters,
) -> Result<()> {
    let mut straddlers = Vec::new();
    for &ri in live {
        match classify_against_root(lo, hi, &geoms[ri]) {
            RootClass::Clear => {}
            RootClass::Core => return Ok(()),
            RootClass::Straddle => straddlers.push(ri),
        }
    }
    if straddlers.is_empty() {
        return realize_free_box(asm, ctx, lo, hi, counters);
    }
    if depth >= ctx.depth_cap {
        counters.flagged += 1;
        return Ok(());
    }
    let n = lo.len();
    let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut clo = vec![0.0; n];
    let mut chi = vec![0.0; n];
    for mask in 0..(1usize << n) {
        for l in 0..n {
            if mask & (1 << l) != 0 {
                clo[l] = mid[l];
                chi[l] = hi[l];
            } else {
                clo[l] = lo[l];
                chi[l] = mid[l];
            }
        }
        sweep_box(asm, ctx, geoms, &straddlers, &clo, &chi, depth + 1, counters)?;
    }
    Ok(())
}

fn realize_free_box(
    asm: &mut Assembly,
    ctx: &mut SweepCtx,
    lo: &[f64],
    hi: &[f64],
    counters: &mut RefineCounters,
) -> Result<()> {
    let size: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
    let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let key: Vec<u64> = size.iter().map(|s| s.to_bits()).collect();
    let template = match ctx.cache.get(&key) {
        Some(&t) => t,
        None => {
            let t = realize_tree(
                asm,
                ctx.constraint,
                ctx.tree,
                0,
                ctx.stage,
                ctx.eps,
                0,
                MAX_REFINE_DEPTH,
                &size,
                None,
                ctx.opts,
                &mut counters.exhausted,
            )?;
            ctx.cache.insert(key, t);
            t
        }
    };
    asm.add_root(template, center);
    counters.roots_added += 1;
    Ok(())
}
