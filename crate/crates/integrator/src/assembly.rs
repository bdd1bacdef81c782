//! Placement trees: analytic superposition of oscillation patches.
//!
//! A field modification is stored as a forest of placements. Each node
//! holds one patch template whose box is centered at the canonical origin;
//! an instance is the template plus a physical shift. Children replicate a
//! single template across every plateau slab of the parent by translation,
//! so a laminate of depth `d` costs `O(d)` patches to store and `O(d)`
//! patch evaluations per point, no matter how many virtual copies tile the
//! slabs.

use crate::tol::{PERMUTATION_TOL, ROOT_INDEX_BUCKETS};
use matcore::Mat;
use oscillation::{BoxDomain, OscillationPatch};

/// Deepest placement affecting a point, for per-cell metadata.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Contribution {
    pub stage: u16,
    pub patch: u32,
}

/// Virtual tiling of one plateau side by translated copies of a template.
#[derive(Debug, Clone)]
pub(crate) struct ChildClass {
    /// Arena index of the template node.
    pub template: usize,
    /// Tile side, equal to the slab thickness (canonical length).
    pub tile: f64,
    /// Tiles per transverse axis, laid from the plateau's low corner.
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct PlacementNode {
    pub id: u32,
    pub stage: u16,
    pub patch: OscillationPatch,
    pub hi: Option<ChildClass>,
    pub lo: Option<ChildClass>,
}

#[derive(Debug, Clone)]
pub(crate) struct RootPlacement {
    pub node: usize,
    pub shift: Vec<f64>,
    /// Physical half extents of the box image, for cheap rejection.
    pub bbox_half: Vec<f64>,
}

/// Per-axis uniform buckets over the domain, mapping a point to the root
/// placements whose bounding box can reach it. Bucket lists keep root
/// order, so accumulation order per point never depends on the index.
#[derive(Debug, Clone)]
struct RootIndex {
    origin: Vec<f64>,
    inv_cell: Vec<f64>,
    per_axis: usize,
    buckets: Vec<Vec<u32>>,
}

impl RootIndex {
    fn build(roots: &[RootPlacement], domain: &BoxDomain) -> Self {
        let n = domain.dim();
        let per_axis = ROOT_INDEX_BUCKETS;
        let origin = domain.origin().to_vec();
        let inv_cell: Vec<f64> = domain
            .size()
            .iter()
            .map(|&s| per_axis as f64 / s)
            .collect();
        let mut buckets = vec![Vec::new(); per_axis.pow(n as u32)];
        let clampi =
            |v: f64| -> usize { (v.floor().max(0.0) as usize).min(per_axis - 1) };
        for (ri, root) in roots.iter().enumerate() {
            let mut lo = vec![0usize; n];
            let mut hi = vec![0usize; n];
            for l in 0..n {
                lo[l] = clampi((root.shift[l] - root.bbox_half[l] - origin[l]) * inv_cell[l]);
                hi[l] = clampi((root.shift[l] + root.bbox_half[l] - origin[l]) * inv_cell[l]);
            }
            let mut idx = lo.clone();
            loop {
                let mut flat = 0usize;
                for l in 0..n {
                    flat = flat * per_axis + idx[l];
                }
                buckets[flat].push(ri as u32);
                let mut l = n;
                loop {
                    if l == 0 {
                        break;
                    }
                    l -= 1;
                    if idx[l] < hi[l] {
                        idx[l] += 1;
                        break;
                    }
                    idx[l] = lo[l];
                    if l == 0 {
                        l = usize::MAX;
                        break;
                    }
                }
                if l == usize::MAX {
                    break;
                }
            }
        }
        RootIndex { origin, inv_cell, per_axis, buckets }
    }

    fn query(&self, x: &[f64]) -> &[u32] {
        let mut flat = 0usize;
        for l in 0..x.len() {
            let v = (x[l] - self.origin[l]) * self.inv_cell[l];
            let b = (v.floor().max(0.0) as usize).min(self.per_axis - 1);
            flat = flat * self.per_axis + b;
        }
        &self.buckets[flat]
    }
}

/// Forest of placements with shared templates.
#[derive(Debug, Clone, Default)]
pub(crate) struct Assembly {
    nodes: Vec<PlacementNode>,
    roots: Vec<RootPlacement>,
    index: Option<RootIndex>,
}

impl Assembly {
    pub fn new() -> Self {
        Assembly::default()
    }

    pub fn root_count(&self) -> usize {
        self.roots.len()
    }

    pub fn roots(&self) -> &[RootPlacement] {
        &self.roots
    }

    pub fn node(&self, idx: usize) -> &PlacementNode {
        &self.nodes[idx]
    }

    pub fn node_mut(&mut self, idx: usize) -> &mut PlacementNode {
        &mut self.nodes[idx]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn new_node(
        &mut self,
        stage: u16,
        patch: OscillationPatch,
        hi: Option<ChildClass>,
        lo: Option<ChildClass>,
    ) -> usize {
        let id = self.nodes.len() as u32 + 1;
        self.nodes.push(PlacementNode { id, stage, patch, hi, lo });
        self.nodes.len() - 1
    }

    pub fn add_root(&mut self, node: usize, shift: Vec<f64>) {
        let bbox_half = physical_half_extents(&self.nodes[node].patch);
        self.roots.push(RootPlacement { node, shift, bbox_half });
        self.index = None;
    }

    /// Prepares the bucket index; call after mutation, before bulk renders.
    pub fn build_index(&mut self, domain: &BoxDomain) {
        if self.roots.len() > 8 {
            self.index = Some(RootIndex::build(&self.roots, domain));
        }
    }

    /// Adds every placement's contribution at `x` to `u` and `g`, returning
    /// the deepest placement touching the point. Untouched points receive
    /// no floating-point operation at all, which keeps them bit-identical
    /// to the base field.
    pub fn accumulate(&self, x: &[f64], u: &mut [f64], g: &mut Mat) -> Option<Contribution> {
        let mut deepest = None;
        match &self.index {
            Some(ix) => {
                for &ri in ix.query(x) {
                    self.try_root(&self.roots[ri as usize], x, u, g, &mut deepest);
                }
            }
            None => {
                for root in &self.roots {
                    self.try_root(root, x, u, g, &mut deepest);
                }
            }
        }
        deepest
    }

    fn try_root(
        &self,
        root: &RootPlacement,
        x: &[f64],
        u: &mut [f64],
        g: &mut Mat,
        deepest: &mut Option<Contribution>,
    ) {
        for l in 0..x.len() {
            if (x[l] - root.shift[l]).abs() > root.bbox_half[l] {
                return;
            }
        }
        self.descend(root.node, &root.shift, x, u, g, deepest);
    }

    fn descend(
        &self,
        node: usize,
        shift: &[f64],
        x: &[f64],
        u: &mut [f64],
        g: &mut Mat,
        deepest: &mut Option<Contribution>,
    ) {
        let nd = &self.nodes[node];
        let n = x.len();
        let mut rel = vec![0.0; n];
        for l in 0..n {
            rel[l] = x[l] - shift[l];
        }
        let y = nd.patch.frame().point_to_canonical(&rel);
        if !nd.patch.domain().contains(&y, 0.0) {
            return;
        }
        let (val_c, gphi_c) = nd
            .patch
            .evaluate_canonical(&y)
            .expect("point checked against the patch box");
        // The zero test runs on canonical output: the frame maps are
        // invertible, so canonical zero and physical zero coincide, and
        // skipping the composition keeps untouched points operation-free.
        let touched = val_c.iter().any(|&a| a != 0.0) || gphi_c.max_abs() != 0.0;
        if touched {
            let frame = nd.patch.frame();
            let val = frame.value_to_physical(&val_c);
            let gphi = frame.grad_to_physical(&gphi_c);
            for (ui, vi) in u.iter_mut().zip(val.iter()) {
                *ui += vi;
            }
            for i in 0..g.rows() {
                for j in 0..n {
                    g.set(i, j, g.get(i, j) + gphi.get(i, j));
                }
            }
            *deepest = Some(Contribution { stage: nd.stage, patch: nd.id });
        }
        if nd.hi.is_none() && nd.lo.is_none() {
            return;
        }
        let local = nd.patch.domain().to_local(&y);
        if let Some(cc) = &nd.hi {
            if nd.patch.region_a_contains(&y) {
                if let Some(center) = tile_center(&nd.patch, true, cc, &local) {
                    let child_shift = compose_shift(shift, &nd.patch, &center);
                    self.descend(cc.template, &child_shift, x, u, g, deepest);
                }
            }
        }
        if let Some(cc) = &nd.lo {
            if nd.patch.region_b_contains(&y) {
                if let Some(center) = tile_center(&nd.patch, false, cc, &local) {
                    let child_shift = compose_shift(shift, &nd.patch, &center);
                    self.descend(cc.template, &child_shift, x, u, g, deepest);
                }
            }
        }
    }

    /// Largest possible total `|u - v|` over any point: the worst chain of
    /// per-level value bounds over all root-to-leaf template paths.
    pub fn sup_value_bound(&self) -> f64 {
        fn path(asm: &Assembly, node: usize) -> f64 {
            let nd = &asm.nodes[node];
            let hi = nd.hi.as_ref().map_or(0.0, |c| path(asm, c.template));
            let lo = nd.lo.as_ref().map_or(0.0, |c| path(asm, c.template));
            nd.patch.value_bound() + hi.max(lo)
        }
        let mut best: f64 = 0.0;
        for root in &self.roots {
            best = best.max(path(self, root.node));
        }
        best
    }
}

/// Physical half extents of the canonical box image under the input frame.
pub(crate) fn physical_half_extents(patch: &OscillationPatch) -> Vec<f64> {
    let t = &patch.frame().t;
    let size = patch.domain().size();
    let n = size.len();
    let mut half = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for l in 0..n {
            acc += t.get(i, l).abs() * 0.5 * size[l];
        }
        half[i] = acc;
    }
    half
}

/// Claims `x = T y + shift` for the child: its shift is the physical image
/// of the tile center in the parent's placement.
fn compose_shift(shift: &[f64], parent: &OscillationPatch, center: &[f64]) -> Vec<f64> {
    let mapped = parent.frame().t.matvec(center);
    mapped.iter().zip(shift.iter()).map(|(a, b)| a + b).collect()
}

/// Slab interval along the oscillation axis in box-relative coordinates.
/// Slab `s` is interval `s % 2` of profile cell `s / 2`.
pub(crate) fn slab_bounds(patch: &OscillationPatch, hi: bool, slab: usize) -> (f64, f64) {
    let prof = patch.profile();
    let iv = if hi { prof.i1_local()[slab % 2] } else { prof.i2_local()[slab % 2] };
    let base = prof.margin() + (slab / 2) as f64 * prof.cell_len();
    (base + iv.0, base + iv.1)
}

/// Locates the slab holding box-relative coordinate `z1`, or `None` right
/// at an interval edge where roundoff makes membership ambiguous.
fn locate_slab(patch: &OscillationPatch, hi: bool, z1: f64) -> Option<usize> {
    let prof = patch.profile();
    let pos = z1 - prof.margin();
    if pos <= 0.0 {
        return None;
    }
    let cell = prof.cell_len();
    let k = ((pos / cell) as usize).min(prof.n_cells() - 1);
    let local = pos - k as f64 * cell;
    let ivs = if hi { prof.i1_local() } else { prof.i2_local() };
    if local >= ivs[0].0 && local <= ivs[0].1 {
        Some(2 * k)
    } else if local >= ivs[1].0 && local <= ivs[1].1 {
        Some(2 * k + 1)
    } else {
        None
    }
}

/// Canonical center of the tile containing a point of the plateau, given
/// by its box-relative coordinates. `None` in the untiled leftover strip.
fn tile_center(
    patch: &OscillationPatch,
    hi: bool,
    cc: &ChildClass,
    local: &[f64],
) -> Option<Vec<f64>> {
    let slab = locate_slab(patch, hi, local[0])?;
    let (lo, hi_b) = slab_bounds(patch, hi, slab);
    let origin = patch.domain().origin();
    let size = patch.domain().size();
    let (p_lo, _) = patch.cutoff().plateau();
    let n = size.len();
    let mut center = vec![0.0; n];
    center[0] = origin[0] + 0.5 * (lo + hi_b) * size[0];
    for l in 1..n {
        let z = (local[l] - p_lo) * size[l];
        if z < 0.0 {
            return None;
        }
        let idx = (z / cc.tile) as usize;
        if idx >= cc.counts[l - 1] {
            return None;
        }
        center[l] = origin[l] + p_lo * size[l] + (idx as f64 + 0.5) * cc.tile;
    }
    Some(center)
}

/// Tiling geometry for one plateau side of a patch.
pub(crate) struct ClassLayout {
    pub tile: f64,
    pub counts: Vec<usize>,
    /// Fraction of the plateau the tiles cover (transverse leftover only;
    /// slabs are covered exactly along the oscillation axis).
    pub covered_fraction: f64,
}

/// Computes the tile layout, or `None` when the plateau is too narrow to
/// hold a single slab-thick tile on some transverse axis.
pub(crate) fn class_layout(patch: &OscillationPatch, hi: bool) -> Option<ClassLayout> {
    let prof = patch.profile();
    let iv = if hi { prof.i1_local()[0] } else { prof.i2_local()[0] };
    let size = patch.domain().size();
    let tile = (iv.1 - iv.0) * size[0];
    if !(tile > 0.0) {
        return None;
    }
    let (p_lo, p_hi) = patch.cutoff().plateau();
    let mut counts = Vec::with_capacity(size.len() - 1);
    let mut covered = 1.0;
    for &dl in &size[1..] {
        let w = (p_hi - p_lo) * dl;
        let c = (w / tile) as usize;
        if c == 0 {
            return None;
        }
        counts.push(c);
        covered *= c as f64 * tile / w;
    }
    Some(ClassLayout { tile, counts, covered_fraction: covered })
}

/// True when every row of `q` has a single `+-1` entry up to tolerance.
pub(crate) fn is_signed_permutation(q: &Mat) -> bool {
    let n = q.rows();
    for i in 0..n {
        let mut big = 0;
        for j in 0..n {
            let a = q.get(i, j).abs();
            if (a - 1.0).abs() <= PERMUTATION_TOL {
                big += 1;
            } else if a > PERMUTATION_TOL {
                return false;
            }
        }
        if big != 1 {
            return false;
        }
    }
    true
}

/// Canonical box sizes whose physical image under `q` fits a box of
/// physical sizes `phys`. Signed permutations map axis to axis and keep
/// the full extent; anything else falls back to a uniform inscribed cube.
pub(crate) fn inscribe_sizes(phys: &[f64], q: &Mat, inset: f64) -> Vec<f64> {
    let n = phys.len();
    if is_signed_permutation(q) {
        let mut out = vec![0.0; n];
        for l in 0..n {
            for i in 0..n {
                if q.get(i, l).abs() > 0.5 {
                    out[l] = phys[i] * (1.0 - inset);
                }
            }
        }
        return out;
    }
    let mut rowmax: f64 = 0.0;
    for i in 0..n {
        let mut acc = 0.0;
        for l in 0..n {
            acc += q.get(i, l).abs();
        }
        rowmax = rowmax.max(acc);
    }
    let side = phys.iter().fold(f64::INFINITY, |a, &b| a.min(b)) * (1.0 - inset) / rowmax;
    vec![side; n]
}
