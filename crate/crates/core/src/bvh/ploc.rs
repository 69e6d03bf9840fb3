use rayon::prelude::*;

use super::{quadify, BuildConfig, Bvh2, Bvh2Node, Leaf};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Triangle};

/// Spreads the low 10 bits of `v` to every third bit.
fn expand_bits(v: u32) -> u32 {
    let mut x = v & 0x3ff;
    x = (x | (x << 16)) & 0x030000ff;
    x = (x | (x << 8)) & 0x0300f00f;
    x = (x | (x << 4)) & 0x030c30c3;
    x = (x | (x << 2)) & 0x09249249;
    x
}

/// 30-bit Morton code of a point given in `[0, 1]³`.
pub fn morton_code(x: f64, y: f64, z: f64) -> u32 {
    let q = |v: f64| (v.clamp(0.0, 1.0) * 1023.0) as u32;
    (expand_bits(q(x)) << 2) | (expand_bits(q(y)) << 1) | expand_bits(q(z))
}

/// Builds a binary hierarchy by locally-ordered agglomerative clustering.
///
/// Leaves (quads when `cfg.quadify`) are sorted by the Morton code of their
/// box centroid. Each round, every cluster finds the cluster within
/// `cfg.search_radius` positions whose merged box has the smallest surface
/// area (ties: smaller index distance, then lower position); mutual nearest
/// neighbours merge. Output depends only on the input order.
pub fn build_bvh2(tris: &[Triangle], cfg: &BuildConfig) -> Result<Bvh2> {
    if tris.is_empty() {
        return Err(Error::EmptyScene);
    }
    if cfg.search_radius == 0 {
        return Err(Error::invalid("search radius must be positive"));
    }
    let leaves = if cfg.quadify {
        quadify(tris)
    } else {
        (0..tris.len() as u32).map(Leaf::single).collect()
    };

    let boxes: Vec<Aabb> = leaves.iter().map(|l| l.bounds(tris)).collect();
    let centroid_bounds = boxes
        .iter()
        .fold(Aabb::EMPTY, |b, x| b.grow(x.centroid()));
    let lo = centroid_bounds.min.to_f64();
    let ext = centroid_bounds.extent();
    let norm = |v: f64, o: f64, e: f64| if e > 0.0 { (v - o) / e } else { 0.0 };
    let mut order: Vec<(u32, u32)> = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let c = b.centroid().to_f64();
            let code = morton_code(
                norm(c.x, lo.x, ext.x),
                norm(c.y, lo.y, ext.y),
                norm(c.z, lo.z, ext.z),
            );
            (code, i as u32)
        })
        .collect();
    order.sort_unstable();

    let mut nodes: Vec<Bvh2Node> = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| Bvh2Node::Leaf {
            bounds: *b,
            leaf: i as u32,
        })
        .collect();
    let mut clusters: Vec<(u32, Aabb)> = order.iter().map(|&(_, i)| (i, boxes[i as usize])).collect();
    let r = cfg.search_radius;

    while clusters.len() > 1 {
        let n = clusters.len();
        let nearest: Vec<usize> = (0..n)
            .into_par_iter()
            .map(|i| {
                let lo = i.saturating_sub(r);
                let hi = (i + r).min(n - 1);
                let bi = clusters[i].1;
                let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let key = (bi.union(clusters[j].1).surface_area(), i.abs_diff(j), j);
                    if key.0 < best.0
                        || (key.0 == best.0 && (key.1, key.2) < (best.1, best.2))
                    {
                        best = key;
                    }
                }
                best.2
            })
            .collect();

        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let j = nearest[i];
            if nearest[j] == i {
                if i < j {
                    let (a, ba) = clusters[i];
                    let (b, bb) = clusters[j];
                    let bounds = ba.union(bb);
                    nodes.push(Bvh2Node::Inner {
                        bounds,
                        left: a,
                        right: b,
                    });
                    next.push(((nodes.len() - 1) as u32, bounds));
                }
            } else {
                next.push(clusters[i]);
            }
        }
        clusters = next;
    }

    Ok(Bvh2 {
        triangles: tris.to_vec(),
        leaves,
        root: clusters[0].0,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;

    fn tri_at(x: f32) -> Triangle {
        Triangle::new(Vec3::new(x, 0., 0.), Vec3::new(x + 1., 0., 0.), Vec3::new(x, 1., 0.))
    }

    #[test]
    fn morton_interleaves() {
        assert_eq!(morton_code(0.0, 0.0, 0.0), 0);
        assert_eq!(morton_code(1.0, 1.0, 1.0), (1 << 30) - 1);
        assert_eq!(morton_code(1.0, 0.0, 0.0), 0x24924924);
    }

    #[test]
    fn single_triangle_is_leaf_root() {
        let b = build_bvh2(&[tri_at(0.0)], &BuildConfig::default()).unwrap();
        assert!(matches!(b.nodes[b.root as usize], Bvh2Node::Leaf { .. }));
        b.validate().unwrap();
    }

    #[test]
    fn two_disjoint_triangles() {
        let tris = [tri_at(0.0), tri_at(10.0)];
        let b = build_bvh2(&tris, &BuildConfig::default()).unwrap();
        match b.nodes[b.root as usize] {
            Bvh2Node::Inner { bounds, left, right } => {
                assert_eq!(bounds, tris[0].bounds().union(tris[1].bounds()));
                assert!(matches!(b.nodes[left as usize], Bvh2Node::Leaf { .. }));
                assert!(matches!(b.nodes[right as usize], Bvh2Node::Leaf { .. }));
            }
            _ => panic!("expected an interior root"),
        }
        b.validate().unwrap();
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(build_bvh2(&[], &BuildConfig::default()), Err(Error::EmptyScene)));
    }
}
