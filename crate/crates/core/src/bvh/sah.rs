use super::{NodeRef, WideBvh};
use crate::convert::DobbAnnotation;

/// Cost constants of the surface area heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SahCosts {
    /// Cost of visiting an interior node.
    pub traversal: f64,
    /// Cost of one triangle test.
    pub intersection: f64,
}

impl Default for SahCosts {
    fn default() -> Self {
        SahCosts {
            traversal: 1.0,
            intersection: 1.0,
        }
    }
}

/// [`sah_cost_with`] using unit costs.
pub fn sah_cost(tree: &WideBvh, annotation: Option<&DobbAnnotation>) -> f64 {
    sah_cost_with(tree, annotation, SahCosts::default())
}

/// Surface area heuristic of `tree`.
///
/// Every node is weighted by the area of the box its parent stores for it:
/// the rotated box when the parent carries an OBB, the AABB otherwise. The
/// root uses its AABB. The sum is normalized by the root's area.
pub fn sah_cost_with(tree: &WideBvh, annotation: Option<&DobbAnnotation>, costs: SahCosts) -> f64 {
    let root_sa = tree.root_bounds.surface_area();
    if let NodeRef::Leaf(l) = tree.root {
        return costs.intersection * tree.leaf(l).count as f64;
    }
    // A flat scene has no area to normalize by; weigh every box as 1.
    let area = |sa: f64| if root_sa > 0.0 { sa } else { 1.0 };
    let mut total = costs.traversal * area(root_sa);
    for (n, node) in tree.nodes.iter().enumerate() {
        let boxes = annotation
            .and_then(|a| a.node(n as u32))
            .map_or(&node.bounds, |o| &o.boxes);
        for (child, b) in node.child_refs().iter().zip(boxes) {
            let sa = area(b.surface_area());
            total += match *child {
                NodeRef::Interior(_) => costs.traversal * sa,
                NodeRef::Leaf(l) => costs.intersection * sa * tree.leaf(l).count as f64,
            };
        }
    }
    total / area(root_sa)
}
