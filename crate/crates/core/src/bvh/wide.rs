use super::{Bvh2, Bvh2Node, NodeRef, WideBvh, WideNode, MAX_WIDTH};
use crate::error::{Error, Result};
use crate::geom::Aabb;

/// Collapses a binary hierarchy into a `width`-wide one.
///
/// Starting from the two children of a binary node, the interior child with
/// the largest surface area (lowest slot on ties) is repeatedly replaced by
/// its two children, the right one inserted just after it, until the node is
/// full or only leaves remain. Interior nodes are emitted in pre-order.
pub fn widen(bvh: &Bvh2, width: usize) -> Result<WideBvh> {
    if !(2..=MAX_WIDTH).contains(&width) {
        return Err(Error::invalid(format!("node width must be in 2..={MAX_WIDTH}, got {width}")));
    }
    let root_node = bvh
        .nodes
        .get(bvh.root as usize)
        .ok_or_else(|| Error::MalformedTree("root out of range".into()))?;
    let root_bounds = *root_node.bounds();
    let mut out = WideBvh {
        width,
        triangles: bvh.triangles.clone(),
        leaves: bvh.leaves.clone(),
        nodes: Vec::new(),
        root: NodeRef::Leaf(0),
        root_bounds,
    };
    if let Bvh2Node::Leaf { leaf, .. } = *root_node {
        out.root = NodeRef::Leaf(leaf);
        return Ok(out);
    }
    out.root = NodeRef::Interior(0);

    // (binary node, parent wide node, slot in parent)
    let mut stack: Vec<(u32, Option<(usize, usize)>)> = vec![(bvh.root, None)];
    while let Some((n, parent)) = stack.pop() {
        let idx = out.nodes.len();
        if let Some((p, slot)) = parent {
            out.nodes[p].children[slot] = NodeRef::Interior(idx as u32);
        }
        let Bvh2Node::Inner { left, right, .. } = bvh.nodes[n as usize] else {
            unreachable!("only interior nodes are pushed");
        };
        let mut kids = vec![left, right];
        while kids.len() < width {
            let mut pick: Option<(usize, f64)> = None;
            for (s, &k) in kids.iter().enumerate() {
                if let Bvh2Node::Inner { bounds, .. } = bvh.nodes[k as usize] {
                    let sa = bounds.surface_area();
                    if pick.map_or(true, |(_, best)| sa > best) {
                        pick = Some((s, sa));
                    }
                }
            }
            let Some((s, _)) = pick else { break };
            let Bvh2Node::Inner { left, right, .. } = bvh.nodes[kids[s] as usize] else {
                unreachable!();
            };
            kids[s] = left;
            kids.insert(s + 1, right);
        }

        let mut node = WideNode {
            count: kids.len() as u8,
            children: [NodeRef::Leaf(0); MAX_WIDTH],
            bounds: [Aabb::EMPTY; MAX_WIDTH],
        };
        for (s, &k) in kids.iter().enumerate() {
            let child = &bvh.nodes[k as usize];
            node.bounds[s] = *child.bounds();
            if let Bvh2Node::Leaf { leaf, .. } = *child {
                node.children[s] = NodeRef::Leaf(leaf);
            }
        }
        out.nodes.push(node);
        for (s, &k) in kids.iter().enumerate().rev() {
            if matches!(bvh.nodes[k as usize], Bvh2Node::Inner { .. }) {
                stack.push((k, Some((idx, s))));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvh::{build_bvh2, BuildConfig};
    use crate::geom::{Triangle, Vec3};

    fn row(n: usize) -> Vec<Triangle> {
        (0..n)
            .map(|i| {
                let x = i as f32 * 3.0;
                Triangle::new(Vec3::new(x, 0., 0.), Vec3::new(x + 1., 0., 0.), Vec3::new(x, 1., 0.))
            })
            .collect()
    }

    #[test]
    fn widen_fills_nodes() {
        let b2 = build_bvh2(&row(8), &BuildConfig::default()).unwrap();
        let w = widen(&b2, 8).unwrap();
        w.validate().unwrap();
        assert_eq!(w.nodes.len(), 1);
        assert_eq!(w.nodes[0].count, 8);
    }

    #[test]
    fn widen_many() {
        for width in [2, 4, 6, 8] {
            let b2 = build_bvh2(&row(100), &BuildConfig::default()).unwrap();
            let w = widen(&b2, width).unwrap();
            w.validate().unwrap();
            assert_eq!(w.primitive_count(), 100);
            assert!(w.nodes.iter().all(|n| n.count as usize <= width));
        }
    }

    #[test]
    fn leaf_root() {
        let b2 = build_bvh2(&row(1), &BuildConfig::default()).unwrap();
        let w = widen(&b2, 8).unwrap();
        assert_eq!(w.root, NodeRef::Leaf(0));
        assert!(w.nodes.is_empty());
        w.validate().unwrap();
    }

    #[test]
    fn bad_width() {
        let b2 = build_bvh2(&row(3), &BuildConfig::default()).unwrap();
        assert!(widen(&b2, 9).is_err());
        assert!(widen(&b2, 1).is_err());
    }
}
