//! AABB hierarchy construction.
//!
//! Triangles are paired into quad leaves, clustered bottom-up into a binary
//! tree (PLOC over Morton-ordered leaves) and widened top-down into an N-wide
//! tree.

mod ploc;
mod quad;
mod sah;
mod wide;

pub use ploc::{build_bvh2, morton_code};
pub use quad::quadify;
pub(crate) use quad::{same_position, shared_vertices};
pub use sah::{sah_cost, sah_cost_with, SahCosts};
pub use wide::widen;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Triangle, Vec3};
use crate::scene::Scene;

/// Widest supported node.
pub const MAX_WIDTH: usize = 8;

/// A leaf holding one triangle or a quad (two triangles).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub tris: [u32; 2],
    pub count: u8,
}

impl Leaf {
    pub fn single(t: u32) -> Self {
        Leaf { tris: [t, t], count: 1 }
    }

    pub fn pair(a: u32, b: u32) -> Self {
        Leaf { tris: [a, b], count: 2 }
    }

    pub fn triangles(&self) -> &[u32] {
        &self.tris[..self.count as usize]
    }

    pub fn bounds(&self, tris: &[Triangle]) -> Aabb {
        self.triangles()
            .iter()
            .fold(Aabb::EMPTY, |b, &t| b.union(tris[t as usize].bounds()))
    }

    /// The leaf's vertices (3 or 6, shared vertices repeated).
    pub fn points<'a>(&'a self, tris: &'a [Triangle]) -> impl Iterator<Item = Vec3> + 'a {
        self.triangles().iter().flat_map(move |&t| tris[t as usize].v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildConfig {
    /// Maximum children per interior node, 2..=8.
    pub width: usize,
    /// PLOC neighbour search radius.
    pub search_radius: usize,
    /// Pair triangles into quad leaves before clustering.
    pub quadify: bool,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            width: 8,
            search_radius: 16,
            quadify: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bvh2Node {
    Leaf { bounds: Aabb, leaf: u32 },
    Inner { bounds: Aabb, left: u32, right: u32 },
}

impl Bvh2Node {
    pub fn bounds(&self) -> &Aabb {
        match self {
            Bvh2Node::Leaf { bounds, .. } | Bvh2Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Binary hierarchy over [`Leaf`] primitives.
#[derive(Debug, Clone)]
pub struct Bvh2 {
    pub triangles: Vec<Triangle>,
    pub leaves: Vec<Leaf>,
    pub nodes: Vec<Bvh2Node>,
    pub root: u32,
}

impl Bvh2 {
    /// Checks exact refit, binary arity and that every leaf appears once.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.leaves.len()];
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            let node = self
                .nodes
                .get(n as usize)
                .ok_or_else(|| Error::MalformedTree(format!("node {n} out of range")))?;
            match *node {
                Bvh2Node::Leaf { bounds, leaf } => {
                    let l = self
                        .leaves
                        .get(leaf as usize)
                        .ok_or_else(|| Error::MalformedTree(format!("leaf {leaf} out of range")))?;
                    if std::mem::replace(&mut seen[leaf as usize], true) {
                        return Err(Error::MalformedTree(format!("leaf {leaf} referenced twice")));
                    }
                    if bounds != l.bounds(&self.triangles) {
                        return Err(Error::MalformedTree(format!("leaf {leaf} bounds not refit")));
                    }
                }
                Bvh2Node::Inner { bounds, left, right } => {
                    let (l, r) = (self.node(left)?, self.node(right)?);
                    if bounds != l.bounds().union(*r.bounds()) {
                        return Err(Error::MalformedTree(format!("node {n} bounds not refit")));
                    }
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::MalformedTree("unreferenced leaf".into()));
        }
        Ok(())
    }

    fn node(&self, n: u32) -> Result<&Bvh2Node> {
        self.nodes
            .get(n as usize)
            .ok_or_else(|| Error::MalformedTree(format!("node {n} out of range")))
    }
}

/// Child reference inside a wide node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeRef {
    Interior(u32),
    Leaf(u32),
}

/// Interior node with up to [`MAX_WIDTH`] children and their boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WideNode {
    pub count: u8,
    pub children: [NodeRef; MAX_WIDTH],
    pub bounds: [Aabb; MAX_WIDTH],
}

impl WideNode {
    pub fn child_refs(&self) -> &[NodeRef] {
        &self.children[..self.count as usize]
    }

    pub fn child_bounds(&self) -> &[Aabb] {
        &self.bounds[..self.count as usize]
    }

    /// Union of the child boxes.
    pub fn bounds(&self) -> Aabb {
        self.child_bounds().iter().fold(Aabb::EMPTY, |a, b| a.union(*b))
    }
}

/// N-wide AABB hierarchy. Interior nodes are stored in pre-order, so every
/// child index is larger than its parent's.
#[derive(Debug, Clone)]
pub struct WideBvh {
    pub width: usize,
    pub triangles: Vec<Triangle>,
    pub leaves: Vec<Leaf>,
    pub nodes: Vec<WideNode>,
    pub root: NodeRef,
    pub root_bounds: Aabb,
}

impl WideBvh {
    /// Quadify, cluster and widen.
    pub fn build(scene: &Scene, cfg: &BuildConfig) -> Result<WideBvh> {
        let bvh2 = build_bvh2(&scene.triangle_list(), cfg)?;
        widen(&bvh2, cfg.width)
    }

    pub fn leaf(&self, i: u32) -> &Leaf {
        &self.leaves[i as usize]
    }

    pub fn primitive_count(&self) -> usize {
        self.leaves.iter().map(|l| l.count as usize).sum()
    }

    /// Height of every interior node above the leaves (a node whose children
    /// are all leaves has height 1).
    pub fn heights(&self) -> Vec<u32> {
        let mut h = vec![0u32; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            h[i] = 1 + self.nodes[i]
                .child_refs()
                .iter()
                .map(|c| match *c {
                    NodeRef::Interior(j) => h[j as usize],
                    NodeRef::Leaf(_) => 0,
                })
                .max()
                .unwrap_or(0);
        }
        h
    }

    /// Structural validation: refs in range, pre-order layout, exact refit of
    /// every child box, each triangle referenced exactly once, and at least
    /// two children per interior node.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedTree(m));
        if self.width < 2 || self.width > MAX_WIDTH {
            return bad(format!("unsupported width {}", self.width));
        }
        let mut tri_seen = vec![false; self.triangles.len()];
        let mut leaf_seen = vec![false; self.leaves.len()];
        let mut node_seen = vec![false; self.nodes.len()];
        let mut stack = vec![(self.root, self.root_bounds)];
        while let Some((r, expect)) = stack.pop() {
            match r {
                NodeRef::Leaf(l) => {
                    let Some(leaf) = self.leaves.get(l as usize) else {
                        return bad(format!("leaf {l} out of range"));
                    };
                    if std::mem::replace(&mut leaf_seen[l as usize], true) {
                        return bad(format!("leaf {l} referenced twice"));
                    }
                    for &t in leaf.triangles() {
                        let Some(seen) = tri_seen.get_mut(t as usize) else {
                            return bad(format!("triangle {t} out of range"));
                        };
                        if std::mem::replace(seen, true) {
                            return bad(format!("triangle {t} referenced twice"));
                        }
                    }
                    if leaf.bounds(&self.triangles) != expect {
                        return bad(format!("leaf {l} box is not an exact refit"));
                    }
                }
                NodeRef::Interior(n) => {
                    let Some(node) = self.nodes.get(n as usize) else {
                        return bad(format!("node {n} out of range"));
                    };
                    if std::mem::replace(&mut node_seen[n as usize], true) {
                        return bad(format!("node {n} referenced twice"));
                    }
                    let c = node.count as usize;
                    if c > self.width || (c < 2 && r != self.root) || c == 0 {
                        return bad(format!("node {n} has {c} children"));
                    }
                    if node.bounds() != expect {
                        return bad(format!("node {n} box is not an exact refit"));
                    }
                    for (child, b) in node.child_refs().iter().zip(node.child_bounds()) {
                        if let NodeRef::Interior(j) = *child {
                            if j <= n {
                                return bad(format!("node {j} precedes its parent {n}"));
                            }
                        }
                        stack.push((*child, *b));
                    }
                }
            }
        }
        if tri_seen.iter().any(|s| !s) || leaf_seen.iter().any(|s| !s) || node_seen.iter().any(|s| !s) {
            return bad("unreferenced triangle, leaf or node".into());
        }
        Ok(())
    }
}
