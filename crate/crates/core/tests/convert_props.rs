mod common;

use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use common::{random_rays, random_soup, rng, rotate_scene, soup_scene, standard};
use dobb::convert::{decode_node, encode_node, select_candidate};
use dobb::geom::DVec3;
use dobb::{
    batch_trace, convert, gen_axis_aligned_grid, gen_hairball, leaf_frame, ApexMap, BasisAxes, BuildConfig,
    ConversionConfig, ConversionMode, DobbAnnotation, Dop26, Extent, HairballParams, Mat3, NodeRef, RotationSet, Scene,
    Vec3, WideBvh,
};
use proptest::prelude::*;

fn build(scene: &Scene, width: usize) -> WideBvh {
    WideBvh::build(
        scene,
        &BuildConfig {
            width,
            ..BuildConfig::default()
        },
    )
    .unwrap()
}

fn run(tree: &WideBvh, mode: ConversionMode, alpha: f64, max_levels: Option<u32>) -> DobbAnnotation {
    convert(
        tree,
        Arc::new(standard().clone()),
        &ConversionConfig {
            alpha,
            max_levels_from_leaf: max_levels,
            mode,
        },
    )
    .unwrap()
}

fn small_hairball() -> Scene {
    gen_hairball(&HairballParams {
        strands: 150,
        ..HairballParams::default()
    })
    .unwrap()
}

fn subtree_points(tree: &WideBvh, r: NodeRef, out: &mut Vec<Vec3>) {
    match r {
        NodeRef::Leaf(l) => out.extend(tree.leaf(l).points(&tree.triangles)),
        NodeRef::Interior(n) => {
            for c in tree.nodes[n as usize].child_refs() {
                subtree_points(tree, *c, out);
            }
        }
    }
}

fn subtree_leaves(tree: &WideBvh, r: NodeRef, out: &mut Vec<u32>) {
    match r {
        NodeRef::Leaf(l) => out.push(l),
        NodeRef::Interior(n) => {
            for c in tree.nodes[n as usize].child_refs() {
                subtree_leaves(tree, *c, out);
            }
        }
    }
}

fn surface(e: &[Extent; 3]) -> f64 {
    let d = e.map(|x| x.width());
    2.0 * (d[0] * d[1] + d[1] * d[2] + d[2] * d[0])
}

/// Every vertex under every child, moved into the node frame, lies in the
/// stored child box.
fn assert_conservative(tree: &WideBvh, ann: &DobbAnnotation) {
    for (n, node) in tree.nodes.iter().enumerate() {
        let Some(obb) = ann.node(n as u32) else { continue };
        let r = ann.rotations().rotation(obb.index).to_f64();
        for (s, c) in node.child_refs().iter().enumerate() {
            let b = obb.boxes[s];
            let slack = 1e-5 * b.diagonal();
            let mut pts = Vec::new();
            subtree_points(tree, *c, &mut pts);
            for p in pts {
                let l = r.transpose_mul_vec(p.to_f64()).to_array();
                let (lo, hi) = (b.min.to_f64().to_array(), b.max.to_f64().to_array());
                for k in 0..3 {
                    assert!(
                        l[k] >= lo[k] - slack && l[k] <= hi[k] + slack,
                        "node {n} slot {s} axis {k}: {} outside [{}, {}]",
                        l[k],
                        lo[k],
                        hi[k]
                    );
                }
            }
        }
    }
}

fn assert_sound(tree: &WideBvh, ann: &DobbAnnotation) {
    let alpha = ann.config().alpha;
    for (n, rec) in ann.records().iter().enumerate() {
        let obb = ann.node(n as u32);
        if !rec.evaluated {
            assert!(obb.is_none());
            continue;
        }
        assert_eq!(rec.accepted, rec.cost_rotated < alpha * rec.cost_identity, "node {n}");
        assert_eq!(obb.is_some(), rec.accepted);
        assert!((rec.candidate.unwrap() as usize) < ann.rotations().len());
        if let Some(o) = obb {
            assert_eq!(Some(o.index.0), rec.candidate);
            let count = tree.nodes[n].count as usize;
            assert!(o.boxes[..count].iter().all(|b| !b.is_empty()));
        }
    }
}

#[test]
fn zero_alpha_and_zero_levels_are_no_ops() {
    let scene = small_hairball();
    let tree = build(&scene, 8);
    let rays = random_rays(&mut rng(41), &scene.bounds, 3000);
    let base = batch_trace(&tree, None, &rays).unwrap();
    for mode in [ConversionMode::Heuristic, ConversionMode::BruteForce] {
        for (alpha, levels) in [(0.0, None), (1.0, Some(0))] {
            let ann = run(&tree, mode, alpha, levels);
            assert_eq!(ann.annotated_count(), 0);
            let got = batch_trace(&tree, Some(&ann), &rays).unwrap();
            assert_eq!(got.stats, base.stats);
            assert_eq!(got.hits, base.hits);
        }
    }
}

#[test]
fn stored_boxes_are_conservative_and_decisions_sound() {
    let hair = small_hairball();
    let soup = soup_scene(&random_soup(&mut rng(42), 800, 8.0, 1.5));
    let tilted = rotate_scene(&soup, DVec3::new(1.0, 2.0, 0.5), 0.7);
    for scene in [hair, soup, tilted] {
        for width in [4, 8] {
            let tree = build(&scene, width);
            for mode in [ConversionMode::Heuristic, ConversionMode::BruteForce] {
                for alpha in [0.9, 1.0, 1.5] {
                    let ann = run(&tree, mode, alpha, None);
                    assert_sound(&tree, &ann);
                    assert_conservative(&tree, &ann);
                }
            }
        }
    }
}

#[test]
fn level_limit_only_evaluates_low_nodes() {
    let tree = build(&small_hairball(), 8);
    let heights = tree.heights();
    let ann = run(&tree, ConversionMode::Heuristic, 1.0, Some(2));
    for (n, rec) in ann.records().iter().enumerate() {
        assert_eq!(rec.height, heights[n]);
        assert_eq!(rec.evaluated, heights[n] <= 2);
    }
    assert!(ann.annotated_count() > 0);
}

#[test]
fn leaf_parent_candidate_comes_from_largest_leaf_frame() {
    let tree = build(&small_hairball(), 8);
    let ann = run(&tree, ConversionMode::Heuristic, 1.0, None);
    let set = standard();
    let mut checked = 0;
    for (n, node) in tree.nodes.iter().enumerate() {
        let slot = select_candidate(node.child_bounds());
        if let NodeRef::Leaf(l) = node.children[slot] {
            let want = set.nearest_rotation(&leaf_frame(tree.leaf(l), &tree.triangles));
            assert_eq!(ann.records()[n].candidate, Some(want.0));
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn brute_cost_never_exceeds_heuristic_cost_per_rotation() {
    let set = standard();
    let basis = BasisAxes::new(set);
    let map = ApexMap::new();
    let mut r = rng(43);
    for _ in 0..100 {
        let pts: Vec<Vec3> = random_soup(&mut r, 10, 3.0, 1.0).iter().flat_map(|t| t.v).collect();
        let dop = Dop26::from_points(&pts);
        let bdop = basis.dop_from_points(&pts);
        for i in 0..set.len() {
            let exact = surface(&basis.extents_by_index(&bdop, i));
            let conservative = surface(&map.obb_extents(&dop, &set.rotations()[i]).unwrap());
            assert!(exact <= conservative, "rot {i}: {exact} > {conservative}");
        }
    }
}

#[test]
fn axis_aligned_cubes_prefer_identity_over_45_degrees() {
    let set = standard();
    let basis = BasisAxes::new(set);
    let cubes: Vec<Vec<Vec3>> = (0..4)
        .map(|k| {
            let o = Vec3::new(2.0 * k as f32, (k % 2) as f32, 0.0);
            (0..8)
                .map(|c| o + Vec3::new((c & 1) as f32, (c >> 1 & 1) as f32, (c >> 2 & 1) as f32))
                .collect()
        })
        .collect();
    let cost = |rot: &Mat3| -> f64 {
        cubes
            .iter()
            .map(|c| surface(&basis.exact_extents(&basis.dop_from_points(c), rot).unwrap()))
            .sum()
    };
    let identity = cost(&Mat3::IDENTITY);
    let mut diagonal = 0;
    for (i, rot) in set.rotations().iter().enumerate() {
        let (_, gi) = set.axis_angle_of(dobb::ObbIndex(i as u16));
        if (set.angles()[gi].abs() - FRAC_PI_4).abs() < 1e-12 {
            assert!(identity <= cost(rot), "rotation {i}");
            diagonal += 1;
        }
    }
    assert_eq!(diagonal, 26);
}

/// Thin boxes along x, one tag per strand, then turned 45° about z.
fn diagonal_strands() -> Scene {
    let mut r = rng(44);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut tags = Vec::new();
    const FACES: [[usize; 4]; 6] = [
        [0, 1, 3, 2],
        [4, 6, 7, 5],
        [0, 4, 5, 1],
        [2, 3, 7, 6],
        [0, 2, 6, 4],
        [1, 5, 7, 3],
    ];
    for strand in 0..40u32 {
        let origin = common::random_point(&mut r, 6.0);
        for seg in 0..8 {
            let base = vertices.len() as u32;
            for c in 0..8 {
                let p = origin
                    + DVec3::new(
                        0.5 * (seg + (c & 1)) as f64,
                        0.04 * (c >> 1 & 1) as f64,
                        0.04 * (c >> 2 & 1) as f64,
                    );
                vertices.push(p.to_f32());
            }
            for f in FACES {
                let v = f.map(|i| base + i as u32);
                triangles.push([v[0], v[1], v[2]]);
                triangles.push([v[0], v[2], v[3]]);
                tags.extend([strand, strand]);
            }
        }
    }
    let scene = Scene::new(vertices, triangles).unwrap().with_tags(tags).unwrap();
    let tags = scene.tags.clone().unwrap();
    rotate_scene(&scene, DVec3::new(0.0, 0.0, 1.0), FRAC_PI_4).with_tags(tags).unwrap()
}

#[test]
fn diagonal_strands_are_annotated_in_brute_mode() {
    let scene = diagonal_strands();
    let tags = scene.tags.clone().unwrap();
    let tree = build(&scene, 8);
    let ann = run(&tree, ConversionMode::BruteForce, 1.0, None);
    let mut strand_nodes = 0;
    let (mut rotated, mut identity) = (0.0, 0.0);
    for (n, _) in tree.nodes.iter().enumerate() {
        let mut leaves = Vec::new();
        subtree_leaves(&tree, NodeRef::Interior(n as u32), &mut leaves);
        let strand = |l: &u32| tags[tree.leaf(*l).tris[0] as usize];
        let single = leaves.iter().all(|l| strand(l) == strand(&leaves[0]))
            && leaves
                .iter()
                .all(|l| tree.leaf(*l).triangles().iter().all(|&t| tags[t as usize] == strand(&leaves[0])));
        if single {
            strand_nodes += 1;
            assert!(ann.node(n as u32).is_some(), "strand node {n} kept its AABB");
        }
        let rec = &ann.records()[n];
        if rec.accepted {
            rotated += rec.cost_rotated;
            identity += rec.cost_identity;
        }
    }
    assert!(strand_nodes > 40);
    assert!(ann.annotated_count() >= strand_nodes);
    assert!(rotated < identity);
}

#[test]
fn brute_total_cost_dominates_heuristic() {
    for scene in [small_hairball(), diagonal_strands(), gen_axis_aligned_grid(7, 300).unwrap()] {
        let tree = build(&scene, 8);
        let h = run(&tree, ConversionMode::Heuristic, 1.0, None);
        let b = run(&tree, ConversionMode::BruteForce, 1.0, None);
        let total = |a: &DobbAnnotation| -> f64 {
            a.records()
                .iter()
                .filter(|r| r.evaluated)
                .map(|r| r.cost_rotated.min(r.cost_identity))
                .sum()
        };
        for (rh, rb) in h.records().iter().zip(b.records()) {
            let (ch, cb) = (rh.cost_rotated.min(rh.cost_identity), rb.cost_rotated.min(rb.cost_identity));
            assert!(cb <= ch * (1.0 + 1e-12), "{cb} > {ch}");
        }
        assert!(total(&b) <= total(&h));
    }
}

#[test]
fn more_angles_never_raise_brute_node_cost() {
    let tree = build(&small_hairball(), 8);
    let coarse = convert(
        &tree,
        Arc::new(RotationSet::new(13, 2).unwrap()),
        &ConversionConfig {
            mode: ConversionMode::BruteForce,
            ..ConversionConfig::default()
        },
    )
    .unwrap();
    let fine = run(&tree, ConversionMode::BruteForce, 1.0, None);
    for (c, f) in coarse.records().iter().zip(fine.records()) {
        let (cc, cf) = (c.cost_rotated.min(c.cost_identity), f.cost_rotated.min(f.cost_identity));
        assert!(cf <= cc * (1.0 + 1e-12), "{cf} > {cc}");
    }
}

#[test]
fn packed_nodes_round_trip() {
    let tree = build(&small_hairball(), 8);
    let ann = run(&tree, ConversionMode::Heuristic, 1.0, None);
    let set = standard();
    for (n, node) in tree.nodes.iter().enumerate() {
        let packed = encode_node(&tree, &ann, n as u32).unwrap();
        let d = decode_node(set, &packed).unwrap();
        assert_eq!(d.boxes.len(), node.count as usize);
        match ann.node(n as u32) {
            Some(o) => {
                assert_eq!(d.index, Some(o.index));
                assert!(d.rotation.unwrap().bit_eq(set.rotation(o.index)));
                assert_eq!(&d.boxes[..], &o.boxes[..node.count as usize]);
            }
            None => {
                assert_eq!(d.index, None);
                assert!(d.rotation.is_none());
                assert_eq!(&d.boxes[..], node.child_bounds());
            }
        }
    }
}

#[test]
fn conversion_is_idempotent() {
    let tree = build(&small_hairball(), 8);
    for mode in [ConversionMode::Heuristic, ConversionMode::BruteForce] {
        let a = serde_json::to_string(&run(&tree, mode, 1.0, None).dump()).unwrap();
        let b = serde_json::to_string(&run(&tree, mode, 1.0, None).dump()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn equilateral_leaf_frame_uses_edge_order() {
    let tris = vec![dobb::Triangle::new(
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    )];
    let leaf = dobb::Leaf::single(0);
    let f = leaf_frame(&leaf, &tris);
    assert_eq!(f, leaf_frame(&leaf, &tris));
    // Equal edges keep order v0v1, v1v2, v2v0: a0 = v1v2, a1 ⟂ part of v2v0.
    let a0 = DVec3::new(0.0, -1.0, 1.0).normalized();
    assert!((f.cols[0] - a0).length() < 1e-12);
    let a1 = DVec3::new(1.0, 0.0, -1.0);
    let a1 = (a1 - a0 * a0.dot(a1)).normalized();
    assert!((f.cols[1] - a1).length() < 1e-12);
    let set = standard();
    assert_eq!(set.nearest_rotation(&f), set.nearest_rotation(&leaf_frame(&leaf, &tris)));
}

#[test]
fn invalid_configs_are_rejected() {
    let tree = build(&small_hairball(), 4);
    for alpha in [-0.1, f64::NAN, f64::INFINITY] {
        let r = convert(
            &tree,
            Arc::new(standard().clone()),
            &ConversionConfig {
                alpha,
                ..ConversionConfig::default()
            },
        );
        assert!(r.is_err(), "alpha {alpha} accepted");
    }
    let ann = run(&tree, ConversionMode::Heuristic, 1.0, None);
    let other = build(&soup_scene(&random_soup(&mut rng(45), 50, 2.0, 0.5)), 4);
    assert!(ann.check_tree(&other).is_err());
    assert!(batch_trace(&other, Some(&ann), &[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_scenes_stay_conservative(seed in any::<u64>(), n in 2usize..400, angle in 0.0f64..3.0, brute in any::<bool>()) {
        let mut r = rng(seed);
        let scene = rotate_scene(&soup_scene(&random_soup(&mut r, n, 4.0, 1.0)), DVec3::new(0.3, -1.0, 0.8), angle);
        let tree = build(&scene, 8);
        let mode = if brute { ConversionMode::BruteForce } else { ConversionMode::Heuristic };
        let ann = run(&tree, mode, 1.0, None);
        assert_sound(&tree, &ann);
        assert_conservative(&tree, &ann);
    }
}
