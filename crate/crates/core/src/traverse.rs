//! Stack-based closest-hit traversal with iteration accounting.
//!
//! An annotated node moves the ray into its rotated frame before testing the
//! children. The local ray is always derived from the original world ray,
//! never from another local ray, so rounding does not accumulate with depth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::{NodeRef, WideBvh, MAX_WIDTH};
use crate::convert::DobbAnnotation;
use crate::error::{Error, Result};
use crate::geom::{intersect_triangle, HitRecord, LocalRay, Ray, SlabRay, Triangle, TriangleHit};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraversalStats {
    /// Stack pops that led to a node visit (stale entries are not counted).
    pub iterations: u32,
    /// Ray/box tests, including the root box.
    pub node_tests: u32,
    /// Ray/triangle tests.
    pub tri_tests: u32,
}

/// Keeps `cand` if it is closer than the current hit. With no hit yet, any
/// hit in range is kept; among equal distances the first one found wins.
#[inline]
fn accept(best: &mut Option<(u32, TriangleHit)>, best_t: &mut f64, prim: u32, cand: TriangleHit) {
    if cand.t < *best_t || (best.is_none() && cand.t <= *best_t) {
        *best = Some((prim, cand));
        *best_t = cand.t;
    }
}

fn record(best: Option<(u32, TriangleHit)>, ray: &Ray) -> HitRecord {
    match best {
        Some((prim, h)) => HitRecord {
            prim: Some(prim),
            t: h.t as f32,
            u: h.u as f32,
            v: h.v as f32,
        },
        None => HitRecord::miss(ray.t_max),
    }
}

/// Closest hit of `ray` in `tree`, using the OBBs of `annotation` if given.
///
/// The root box is tested first; a ray that misses it makes no visits.
/// Children that the ray enters are pushed so that the nearest one is popped
/// next; popped entries that start beyond the current closest hit are
/// skipped without counting an iteration.
pub fn traverse_closest(
    tree: &WideBvh,
    annotation: Option<&DobbAnnotation>,
    ray: &Ray,
) -> Result<(HitRecord, TraversalStats)> {
    ray.validate()?;
    if let Some(a) = annotation {
        if a.nodes().len() != tree.nodes.len() {
            return Err(Error::MalformedTree("annotation does not match the tree".into()));
        }
    }
    let mut stats = TraversalStats::default();
    let world = LocalRay::from(ray);
    let world_slab = SlabRay::new(&world);
    let mut best_t = ray.t_max as f64;
    let mut best: Option<(u32, TriangleHit)> = None;

    stats.node_tests += 1;
    let Some(root_span) = (!tree.root_bounds.is_empty())
        .then(|| world_slab.hit(&tree.root_bounds, best_t))
        .flatten()
    else {
        return Ok((record(None, ray), stats));
    };

    let mut stack: Vec<(NodeRef, f64)> = Vec::with_capacity(64);
    stack.push((tree.root, root_span.enter));
    while let Some((r, t_enter)) = stack.pop() {
        if t_enter > best_t {
            continue;
        }
        stats.iterations += 1;
        match r {
            NodeRef::Leaf(l) => {
                let leaf = tree
                    .leaves
                    .get(l as usize)
                    .ok_or_else(|| Error::MalformedTree(format!("leaf {l} out of range")))?;
                for &t in leaf.triangles() {
                    let tri: &Triangle = tree
                        .triangles
                        .get(t as usize)
                        .ok_or_else(|| Error::MalformedTree(format!("triangle {t} out of range")))?;
                    stats.tri_tests += 1;
                    if let Some(h) = intersect_triangle(ray, tri, world.t_min, best_t) {
                        accept(&mut best, &mut best_t, t, h);
                    }
                }
            }
            NodeRef::Interior(n) => {
                let node = tree
                    .nodes
                    .get(n as usize)
                    .ok_or_else(|| Error::MalformedTree(format!("node {n} out of range")))?;
                let obb = annotation.and_then(|a| a.node(n).map(|o| (a, o)));
                let (boxes, slab) = match obb {
                    Some((a, o)) => {
                        if o.index.get() >= a.rotations().len() {
                            return Err(Error::MalformedTree(format!("node {n} has a bad rotation index")));
                        }
                        let rot = a.rotations().rotation(o.index).to_f64();
                        (&o.boxes, SlabRay::new(&world.to_local(&rot)))
                    }
                    None => (&node.bounds, world_slab),
                };
                let mut hits: [(f64, usize); MAX_WIDTH] = [(0.0, 0); MAX_WIDTH];
                let mut count = 0;
                for (s, b) in boxes[..node.count as usize].iter().enumerate() {
                    stats.node_tests += 1;
                    if b.is_empty() {
                        continue;
                    }
                    if let Some(span) = slab.hit(b, best_t) {
                        hits[count] = (span.enter, s);
                        count += 1;
                    }
                }
                // Farthest first so that the nearest (lowest slot on ties) pops next.
                let hits = &mut hits[..count];
                hits.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
                stack.extend(hits.iter().map(|&(t, s)| (node.children[s], t)));
            }
        }
    }
    Ok((record(best, ray), stats))
}

/// Reference closest hit: every triangle in index order, same acceptance rule
/// as [`traverse_closest`].
pub fn closest_hit_exhaustive(triangles: &[Triangle], ray: &Ray) -> HitRecord {
    let mut best_t = ray.t_max as f64;
    let mut best = None;
    for (i, tri) in triangles.iter().enumerate() {
        if let Some(h) = intersect_triangle(ray, tri, ray.t_min as f64, best_t) {
            accept(&mut best, &mut best_t, i as u32, h);
        }
    }
    record(best, ray)
}

/// Summary over a batch of rays.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchAggregate {
    pub rays: usize,
    pub hits: usize,
    pub max_iterations: u32,
    pub total_iterations: u64,
    /// `total_iterations / rays`, 0 for an empty batch.
    pub mean_iterations: f64,
}

impl BatchAggregate {
    pub fn from_stats<'a>(stats: impl IntoIterator<Item = (&'a HitRecord, &'a TraversalStats)>) -> Self {
        let mut agg = BatchAggregate::default();
        for (h, s) in stats {
            agg.rays += 1;
            agg.hits += h.is_hit() as usize;
            agg.max_iterations = agg.max_iterations.max(s.iterations);
            agg.total_iterations += s.iterations as u64;
        }
        if agg.rays > 0 {
            agg.mean_iterations = agg.total_iterations as f64 / agg.rays as f64;
        }
        agg
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchResult {
    pub hits: Vec<HitRecord>,
    pub stats: Vec<TraversalStats>,
    pub aggregate: BatchAggregate,
}

/// Traces `rays` in parallel. Results are in ray order and independent of the
/// thread count.
pub fn batch_trace(tree: &WideBvh, annotation: Option<&DobbAnnotation>, rays: &[Ray]) -> Result<BatchResult> {
    if let Some(a) = annotation {
        a.check_tree(tree)?;
    }
    let per_ray: Vec<(HitRecord, TraversalStats)> = rays
        .par_iter()
        .map(|r| traverse_closest(tree, annotation, r))
        .collect::<Result<_>>()?;
    let (hits, stats): (Vec<_>, Vec<_>) = per_ray.into_iter().unzip();
    let aggregate = BatchAggregate::from_stats(hits.iter().zip(&stats));
    Ok(BatchResult { hits, stats, aggregate })
}
