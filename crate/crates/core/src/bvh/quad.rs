use std::collections::HashMap;

use super::Leaf;
use crate::geom::{Triangle, Vec3};

type VertexKey = [u32; 3];

fn key(v: Vec3) -> VertexKey {
    // +0.0 so that -0.0 and 0.0 weld.
    [(v.x + 0.0).to_bits(), (v.y + 0.0).to_bits(), (v.z + 0.0).to_bits()]
}

/// Pairs triangles that share an edge into quad leaves.
///
/// Candidate pairs are all triangle pairs sharing an edge (vertices welded by
/// exact position). They are accepted greedily in order of increasing surface
/// area of the pair's bounding box, ties by triangle indices. Unpaired
/// triangles become single-triangle leaves. Leaves are ordered by their first
/// triangle index.
pub fn quadify(tris: &[Triangle]) -> Vec<Leaf> {
    let mut edges: HashMap<(VertexKey, VertexKey), Vec<u32>> = HashMap::new();
    for (i, t) in tris.iter().enumerate() {
        if t.area() == 0.0 {
            continue;
        }
        for k in 0..3 {
            let (a, b) = (key(t.v[k]), key(t.v[(k + 1) % 3]));
            edges.entry((a.min(b), a.max(b))).or_default().push(i as u32);
        }
    }

    let mut candidates: Vec<(f64, u32, u32)> = edges
        .values()
        .filter(|owners| owners.len() > 1)
        .flat_map(|owners| {
            owners.iter().enumerate().flat_map(move |(i, &a)| {
                owners[i + 1..].iter().map(move |&b| (a.min(b), a.max(b)))
            })
        })
        .filter(|(a, b)| a != b)
        .map(|(a, b)| {
            let sa = tris[a as usize].bounds().union(tris[b as usize].bounds()).surface_area();
            (sa, a, b)
        })
        .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    candidates.dedup_by(|x, y| x.1 == y.1 && x.2 == y.2);

    let mut partner: Vec<Option<u32>> = vec![None; tris.len()];
    for (_, a, b) in candidates {
        if partner[a as usize].is_none() && partner[b as usize].is_none() {
            partner[a as usize] = Some(b);
            partner[b as usize] = Some(a);
        }
    }

    let mut leaves = Vec::with_capacity(tris.len());
    for (i, p) in partner.iter().enumerate() {
        let i = i as u32;
        match *p {
            None => leaves.push(Leaf::single(i)),
            Some(j) if j > i => leaves.push(Leaf::pair(i, j)),
            Some(_) => {}
        }
    }
    leaves
}

/// Bitwise position equality, with `-0.0 == 0.0`.
pub(crate) fn same_position(a: Vec3, b: Vec3) -> bool {
    key(a) == key(b)
}

/// Number of vertex positions shared by two triangles.
pub(crate) fn shared_vertices(a: &Triangle, b: &Triangle) -> usize {
    a.v.iter()
        .filter(|p| b.v.iter().any(|q| key(**p) == key(*q)))
        .count()
}
