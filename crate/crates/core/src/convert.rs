//! Bottom-up conversion of an AABB tree into a DOBB tree.
//!
//! Every interior node may select one rotation from the set, shared by all of
//! its children; the children's boxes are then stored in that rotated frame.
//! Nodes are processed level by level starting from those whose children are
//! all leaves. Each node carries a proxy of its subtree geometry (a 26-DOP in
//! heuristic mode, the exact projections onto every basis vector of the set in
//! brute-force mode) and a candidate rotation that is handed up to its parent.
//!
//! The annotation leaves the AABB tree untouched, so the baseline stays
//! available for comparison.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::{same_position, shared_vertices, Leaf, NodeRef, WideBvh, MAX_WIDTH};
use crate::error::{Error, Result};
use crate::geom::{extents_surface_area, Aabb, DMat3, DVec3, Mat3, Triangle, Vec3};
use crate::kdop::{f32_down, f32_up, ApexMap, BasisAxes, BasisDop, Dop26, Extent};
use crate::rotation::{ObbIndex, RotationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConversionMode {
    /// One candidate per node, taken from the largest child; 26-DOP proxies
    /// with apex-map extents.
    Heuristic,
    /// Every rotation of the set is tried; exact projections.
    #[serde(rename = "brute")]
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionConfig {
    /// An OBB is stored when `C_R < alpha · C_I`.
    pub alpha: f64,
    /// Only nodes at most this many levels above the leaves are annotated.
    /// `None` means no limit.
    pub max_levels_from_leaf: Option<u32>,
    pub mode: ConversionMode,
}

impl Default for ConversionConfig {
    fn default() -> Self {
        ConversionConfig {
            alpha: 1.0,
            max_levels_from_leaf: None,
            mode: ConversionMode::Heuristic,
        }
    }
}

impl ConversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::invalid(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Rotation and rotated child boxes of one annotated node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeObb {
    pub index: ObbIndex,
    /// Child boxes in the local frame of the rotation (`Rᵀ·p` coordinates).
    pub boxes: [Aabb; MAX_WIDTH],
}

/// Outcome of the conversion step for one interior node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    /// Levels above the leaves (1 for nodes with only leaf children).
    pub height: u32,
    /// False for nodes above the level limit.
    pub evaluated: bool,
    pub candidate: Option<u16>,
    pub cost_rotated: f64,
    pub cost_identity: f64,
    pub accepted: bool,
}

/// Per-node OBB data produced by [`convert`].
#[derive(Debug, Clone)]
pub struct DobbAnnotation {
    rotations: Arc<RotationSet>,
    config: ConversionConfig,
    nodes: Vec<Option<NodeObb>>,
    records: Vec<NodeRecord>,
}

impl DobbAnnotation {
    /// An annotation with no OBB nodes.
    pub fn empty(tree: &WideBvh, rotations: Arc<RotationSet>, config: ConversionConfig) -> Self {
        let heights = tree.heights();
        DobbAnnotation {
            rotations,
            config,
            nodes: vec![None; tree.nodes.len()],
            records: heights
                .into_iter()
                .map(|height| NodeRecord {
                    height,
                    evaluated: false,
                    candidate: None,
                    cost_rotated: 0.0,
                    cost_identity: 0.0,
                    accepted: false,
                })
                .collect(),
        }
    }

    pub fn rotations(&self) -> &RotationSet {
        &self.rotations
    }

    pub fn rotations_arc(&self) -> &Arc<RotationSet> {
        &self.rotations
    }

    pub fn config(&self) -> &ConversionConfig {
        &self.config
    }

    pub fn node(&self, index: u32) -> Option<&NodeObb> {
        self.nodes.get(index as usize).and_then(Option::as_ref)
    }

    pub fn nodes(&self) -> &[Option<NodeObb>] {
        &self.nodes
    }

    pub fn records(&self) -> &[NodeRecord] {
        &self.records
    }

    pub fn annotated_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_some()).count()
    }

    /// Checks that the annotation matches the tree's shape.
    pub fn check_tree(&self, tree: &WideBvh) -> Result<()> {
        if self.nodes.len() != tree.nodes.len() {
            return Err(Error::MalformedTree(format!(
                "annotation covers {} nodes, tree has {}",
                self.nodes.len(),
                tree.nodes.len()
            )));
        }
        if let Some(bad) = self
            .nodes
            .iter()
            .flatten()
            .find(|n| n.index.get() >= self.rotations.len())
        {
            return Err(Error::MalformedTree(format!("rotation index {} out of range", bad.index.0)));
        }
        Ok(())
    }

    /// Debug dump: per node rotation index, costs and acceptance.
    pub fn dump(&self) -> AnnotationDump {
        AnnotationDump {
            format_version: ANNOTATION_DUMP_VERSION,
            rotation_count: self.rotations.len(),
            config: self.config,
            nodes: self
                .records
                .iter()
                .zip(&self.nodes)
                .enumerate()
                .map(|(i, (r, n))| NodeDump {
                    node: i as u32,
                    obb_index: n.map(|o| o.index.0),
                    record: *r,
                })
                .collect(),
        }
    }
}

pub const ANNOTATION_DUMP_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationDump {
    pub format_version: u32,
    pub rotation_count: usize,
    pub config: ConversionConfig,
    pub nodes: Vec<NodeDump>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeDump {
    pub node: u32,
    pub obb_index: Option<u16>,
    #[serde(flatten)]
    pub record: NodeRecord,
}

/// Orientation hint of a leaf.
///
/// For a triangle, `a0` is the second-longest edge and `a1` the shortest edge
/// made orthogonal to `a0`; equal lengths keep edge order (`v0v1`, `v1v2`,
/// `v2v0`). For a quad the two edges of the first triangle that are not the
/// shared diagonal are used, the longer one as `a0`. A pair without a shared
/// edge uses its first triangle. Degenerate input gives the identity.
pub fn leaf_frame(leaf: &Leaf, tris: &[Triangle]) -> DMat3 {
    let first = &tris[leaf.tris[0] as usize];
    let p = first.v.map(Vec3::to_f64);
    let edges = [p[1] - p[0], p[2] - p[1], p[0] - p[2]];

    let (a0, a1) = if leaf.count == 2 && shared_vertices(first, &tris[leaf.tris[1] as usize]) == 2 {
        let other = &tris[leaf.tris[1] as usize];
        let shared = |v: &Vec3| other.v.iter().any(|q| same_position(*q, *v));
        let diag = (0..3)
            .find(|&k| shared(&first.v[k]) && shared(&first.v[(k + 1) % 3]))
            .unwrap_or(0);
        let mut outer: Vec<DVec3> = (0..3).filter(|&k| k != diag).map(|k| edges[k]).collect();
        // Stable: the earlier edge wins ties.
        if outer[1].length_squared() > outer[0].length_squared() {
            outer.swap(0, 1);
        }
        (outer[0], outer[1])
    } else {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| edges[j].length_squared().total_cmp(&edges[i].length_squared()));
        (edges[order[1]], edges[order[2]])
    };
    orthonormal_frame(a0, a1).unwrap_or(DMat3::IDENTITY)
}

fn orthonormal_frame(a0: DVec3, a1: DVec3) -> Option<DMat3> {
    let l0 = a0.length();
    if !(l0 > 0.0) {
        return None;
    }
    let x = a0 * (1.0 / l0);
    let y = a1 - x * x.dot(a1);
    let ly = y.length();
    if !(ly > 1e-12 * a1.length().max(l0)) {
        return None;
    }
    let y = y * (1.0 / ly);
    Some(DMat3::from_cols(x, y, x.cross(y)))
}

/// Geometry proxy used by one conversion mode.
trait Pathway: Sync {
    type Proxy: Clone + Send + Sync;

    fn leaf_proxy(&self, leaf: &Leaf, tris: &[Triangle]) -> Self::Proxy;
    fn merge(&self, into: &mut Self::Proxy, other: &Self::Proxy);
    fn extents(&self, proxy: &Self::Proxy, index: usize) -> Result<[Extent; 3]>;
    fn identity(&self, proxy: &Self::Proxy) -> [Extent; 3];
}

struct HeuristicPathway<'a> {
    set: &'a RotationSet,
    map: ApexMap,
}

impl Pathway for HeuristicPathway<'_> {
    type Proxy = Dop26;

    fn leaf_proxy(&self, leaf: &Leaf, tris: &[Triangle]) -> Dop26 {
        let pts: Vec<Vec3> = leaf.points(tris).collect();
        Dop26::from_points(&pts)
    }

    fn merge(&self, into: &mut Dop26, other: &Dop26) {
        *into = into.merge(other);
    }

    fn extents(&self, proxy: &Dop26, index: usize) -> Result<[Extent; 3]> {
        self.map.obb_extents(proxy, &self.set.rotations()[index])
    }

    fn identity(&self, proxy: &Dop26) -> [Extent; 3] {
        [proxy.interval(0), proxy.interval(1), proxy.interval(2)]
    }
}

struct BrutePathway {
    basis: BasisAxes,
    identity: Mat3,
}

impl Pathway for BrutePathway {
    type Proxy = BasisDop;

    fn leaf_proxy(&self, leaf: &Leaf, tris: &[Triangle]) -> BasisDop {
        let pts: Vec<Vec3> = leaf.points(tris).collect();
        self.basis.dop_from_points(&pts)
    }

    fn merge(&self, into: &mut BasisDop, other: &BasisDop) {
        into.merge_in(other);
    }

    fn extents(&self, proxy: &BasisDop, index: usize) -> Result<[Extent; 3]> {
        Ok(self.basis.extents_by_index(proxy, index))
    }

    fn identity(&self, proxy: &BasisDop) -> [Extent; 3] {
        self.basis
            .exact_extents(proxy, &self.identity)
            .expect("euclidean axes are basis vectors of every supported set")
    }
}

/// Child boxes in the frame of rotation `index` and their summed surface area.
fn evaluate_rotation<P: Pathway>(
    path: &P,
    children: &[P::Proxy],
    index: usize,
) -> Result<(Vec<[Extent; 3]>, f64)> {
    let mut cost = 0.0;
    let mut boxes = Vec::with_capacity(children.len());
    for c in children {
        let e = path.extents(c, index)?;
        cost += extents_surface_area(&e);
        boxes.push(e);
    }
    Ok((boxes, cost))
}

/// Slot of the child with the largest stored AABB surface area, lowest slot
/// on ties.
pub fn select_candidate(child_boxes: &[Aabb]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (s, b) in child_boxes.iter().enumerate() {
        let sa = b.surface_area();
        if sa > best.1 {
            best = (s, sa);
        }
    }
    best.0
}

/// Stored rotated box: extents padded by a small relative margin and rounded
/// outward to `f32`.
fn stored_box(ext: &[Extent; 3]) -> Aabb {
    if ext.iter().any(|e| e.is_empty()) {
        return Aabb::EMPTY;
    }
    let pad = |e: &Extent| 1e-6 * e.width() + 1e-7 * e.lo.abs().max(e.hi.abs());
    let lo = ext.map(|e| f32_down(e.lo - pad(&e)));
    let hi = ext.map(|e| f32_up(e.hi + pad(&e)));
    Aabb::new(Vec3::from_array(lo), Vec3::from_array(hi))
}

struct NodeResult<P> {
    proxy: P,
    candidate: ObbIndex,
    record: NodeRecord,
    obb: Option<NodeObb>,
}

/// Converts `tree` into a DOBB tree with rotations from `set`.
pub fn convert(tree: &WideBvh, set: Arc<RotationSet>, cfg: &ConversionConfig) -> Result<DobbAnnotation> {
    cfg.validate()?;
    tree.validate()?;
    if set.is_empty() {
        return Err(Error::invalid("rotation set is empty"));
    }
    match cfg.mode {
        ConversionMode::Heuristic => {
            let path = HeuristicPathway {
                set: &set,
                map: ApexMap::new(),
            };
            run(tree, &set, cfg, &path)
        }
        ConversionMode::BruteForce => {
            let basis = BasisAxes::new(&set);
            let path = BrutePathway {
                basis,
                identity: Mat3::IDENTITY,
            };
            // Fail early if the identity axes are not available.
            path.basis.exact_extents(&path.basis.empty_dop(), &Mat3::IDENTITY)?;
            run(tree, &set, cfg, &path)
        }
    }
    .map(|(nodes, records)| DobbAnnotation {
        rotations: set.clone(),
        config: *cfg,
        nodes,
        records,
    })
}

type Converted = (Vec<Option<NodeObb>>, Vec<NodeRecord>);

fn run<P: Pathway>(tree: &WideBvh, set: &RotationSet, cfg: &ConversionConfig, path: &P) -> Result<Converted> {
    let heights = tree.heights();
    let limit = cfg.max_levels_from_leaf.unwrap_or(u32::MAX);
    let top = heights.iter().copied().max().unwrap_or(0).min(limit);

    let mut levels: Vec<Vec<u32>> = vec![Vec::new(); top as usize + 1];
    for (n, &h) in heights.iter().enumerate() {
        if h <= top {
            levels[h as usize].push(n as u32);
        }
    }

    let mut proxies: Vec<Option<P::Proxy>> = vec![None; tree.nodes.len()];
    let mut candidates: Vec<ObbIndex> = vec![ObbIndex(0); tree.nodes.len()];
    let mut nodes: Vec<Option<NodeObb>> = vec![None; tree.nodes.len()];
    let mut records: Vec<NodeRecord> = heights
        .iter()
        .map(|&height| NodeRecord {
            height,
            evaluated: false,
            candidate: None,
            cost_rotated: 0.0,
            cost_identity: 0.0,
            accepted: false,
        })
        .collect();

    for level in levels.iter().skip(1) {
        let results: Vec<NodeResult<P::Proxy>> = level
            .par_iter()
            .map(|&n| process_node(tree, set, cfg, path, n, heights[n as usize], &proxies, &candidates))
            .collect::<Result<_>>()?;
        for (&n, r) in level.iter().zip(results) {
            proxies[n as usize] = Some(r.proxy);
            candidates[n as usize] = r.candidate;
            records[n as usize] = r.record;
            nodes[n as usize] = r.obb;
        }
    }
    Ok((nodes, records))
}

#[allow(clippy::too_many_arguments)]
fn process_node<P: Pathway>(
    tree: &WideBvh,
    set: &RotationSet,
    cfg: &ConversionConfig,
    path: &P,
    n: u32,
    height: u32,
    proxies: &[Option<P::Proxy>],
    candidates: &[ObbIndex],
) -> Result<NodeResult<P::Proxy>> {
    let node = &tree.nodes[n as usize];
    let children: Vec<P::Proxy> = node
        .child_refs()
        .iter()
        .map(|c| match *c {
            NodeRef::Leaf(l) => Ok(path.leaf_proxy(tree.leaf(l), &tree.triangles)),
            NodeRef::Interior(j) => proxies[j as usize]
                .clone()
                .ok_or_else(|| Error::MalformedTree(format!("child {j} of {n} not processed"))),
        })
        .collect::<Result<_>>()?;

    let (candidate, (boxes, cost_rotated)) = match cfg.mode {
        ConversionMode::Heuristic => {
            let slot = select_candidate(node.child_bounds());
            let candidate = match node.children[slot] {
                NodeRef::Leaf(l) => set.nearest_rotation(&leaf_frame(tree.leaf(l), &tree.triangles)),
                NodeRef::Interior(j) => candidates[j as usize],
            };
            (candidate, evaluate_rotation(path, &children, candidate.get())?)
        }
        ConversionMode::BruteForce => {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..set.len() {
                let cost: f64 = children
                    .iter()
                    .map(|c| path.extents(c, i).map(|e| extents_surface_area(&e)))
                    .sum::<Result<f64>>()?;
                if best.map_or(true, |(_, b)| cost < b) {
                    best = Some((i, cost));
                }
            }
            let (i, _) = best.expect("rotation set is non-empty");
            (ObbIndex(i as u16), evaluate_rotation(path, &children, i)?)
        }
    };

    let cost_identity: f64 = children.iter().map(|c| extents_surface_area(&path.identity(c))).sum();
    let accepted = cost_rotated < cfg.alpha * cost_identity;
    let obb = accepted.then(|| {
        let mut stored = [Aabb::EMPTY; MAX_WIDTH];
        for (s, e) in boxes.iter().enumerate() {
            stored[s] = stored_box(e);
        }
        NodeObb {
            index: candidate,
            boxes: stored,
        }
    });

    let mut proxy = children[0].clone();
    for c in &children[1..] {
        path.merge(&mut proxy, c);
    }
    Ok(NodeResult {
        proxy,
        candidate,
        record: NodeRecord {
            height,
            evaluated: true,
            candidate: Some(candidate.0),
            cost_rotated,
            cost_identity,
            accepted,
        },
        obb,
    })
}

/// Compact node record: a header word and the child boxes as plain floats.
///
/// Header bits `0..index_bits` hold the rotation index or the all-ones
/// sentinel for "no OBB"; bits `16..20` hold the child count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PackedNode {
    pub header: u32,
    /// `[min.x, min.y, min.z, max.x, max.y, max.z]` per child.
    pub boxes: [[f32; 6]; MAX_WIDTH],
}

const COUNT_SHIFT: u32 = 16;

/// Packs an optional rotation index into the header field.
pub fn encode_index(set: &RotationSet, index: Option<ObbIndex>) -> Result<u32> {
    match index {
        None => Ok(set.sentinel()),
        Some(i) if i.get() < set.len() => Ok(i.0 as u32),
        Some(i) => Err(Error::invalid(format!("rotation index {} out of range 0..{}", i.0, set.len()))),
    }
}

/// Inverse of [`encode_index`].
pub fn decode_index(set: &RotationSet, field: u32) -> Result<Option<ObbIndex>> {
    let field = field & set.sentinel();
    if field == set.sentinel() {
        Ok(None)
    } else if (field as usize) < set.len() {
        Ok(Some(ObbIndex(field as u16)))
    } else {
        Err(Error::invalid(format!("encoded rotation index {field} out of range")))
    }
}

/// Packs interior node `n` of `tree` with its annotation.
pub fn encode_node(tree: &WideBvh, annotation: &DobbAnnotation, n: u32) -> Result<PackedNode> {
    let node = tree
        .nodes
        .get(n as usize)
        .ok_or_else(|| Error::invalid(format!("node {n} out of range")))?;
    let obb = annotation.node(n);
    let field = encode_index(annotation.rotations(), obb.map(|o| o.index))?;
    let src = obb.map_or(&node.bounds, |o| &o.boxes);
    let mut boxes = [[0.0f32; 6]; MAX_WIDTH];
    for (dst, b) in boxes.iter_mut().zip(&src[..node.count as usize]) {
        *dst = [b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z];
    }
    Ok(PackedNode {
        header: field | (node.count as u32) << COUNT_SHIFT,
        boxes,
    })
}

/// Decoded form of a [`PackedNode`]: rotation (if any), its matrix rebuilt
/// from the encoding tables, and the child boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedNode {
    pub index: Option<ObbIndex>,
    pub rotation: Option<Mat3>,
    pub boxes: Vec<Aabb>,
}

pub fn decode_node(set: &RotationSet, packed: &PackedNode) -> Result<DecodedNode> {
    let index = decode_index(set, packed.header & ((1 << COUNT_SHIFT) - 1))?;
    let count = (packed.header >> COUNT_SHIFT) as usize;
    if count > MAX_WIDTH {
        return Err(Error::invalid(format!("child count {count} exceeds {MAX_WIDTH}")));
    }
    Ok(DecodedNode {
        index,
        rotation: index.map(|i| set.decode(i)),
        boxes: packed.boxes[..count]
            .iter()
            .map(|b| Aabb::new(Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5])))
            .collect(),
    })
}
