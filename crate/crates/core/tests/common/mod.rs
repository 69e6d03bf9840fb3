#![allow(dead_code)]

use std::sync::OnceLock;

use dobb::geom::DVec3;
use dobb::{Aabb, Ray, RotationSet, Scene, Triangle, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn standard() -> &'static RotationSet {
    static SET: OnceLock<RotationSet> = OnceLock::new();
    SET.get_or_init(RotationSet::standard)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(rng: &mut ChaCha8Rng, half: f64) -> DVec3 {
    DVec3::new(
        rng.gen_range(-half..half),
        rng.gen_range(-half..half),
        rng.gen_range(-half..half),
    )
}

/// `n` independent triangles of edge scale `size` inside a cube of half-size
/// `spread`.
pub fn random_soup(rng: &mut ChaCha8Rng, n: usize, spread: f64, size: f64) -> Vec<Triangle> {
    (0..n)
        .map(|_| {
            let c = random_point(rng, spread);
            let p = [0, 1, 2].map(|_| (c + random_point(rng, size)).to_f32());
            Triangle::new(p[0], p[1], p[2])
        })
        .collect()
}

/// Indexed scene from a triangle soup (vertices not shared).
pub fn soup_scene(tris: &[Triangle]) -> Scene {
    let vertices = tris.iter().flat_map(|t| t.v).collect();
    let triangles = (0..tris.len() as u32).map(|i| [3 * i, 3 * i + 1, 3 * i + 2]).collect();
    Scene::new(vertices, triangles).unwrap()
}

/// Scene rigidly rotated about `axis` by `angle`.
pub fn rotate_scene(scene: &Scene, axis: DVec3, angle: f64) -> Scene {
    let r = dobb::geom::DMat3::from_axis_angle(axis.normalized(), angle);
    let vertices = scene.vertices.iter().map(|v| r.mul_vec(v.to_f64()).to_f32()).collect();
    Scene::new(vertices, scene.triangles.clone()).unwrap()
}

/// Rays from outside `bounds` aimed at random points inside it.
pub fn random_rays(rng: &mut ChaCha8Rng, bounds: &Aabb, n: usize) -> Vec<Ray> {
    let c = bounds.centroid().to_f64();
    let r = 0.5 * bounds.diagonal().max(1e-3);
    (0..n)
        .map(|_| {
            let dir = loop {
                let d = random_point(rng, 1.0);
                if d.length() > 0.1 && d.length() <= 1.0 {
                    break d.normalized();
                }
            };
            let origin = c + dir * (2.0 * r);
            let target = c + random_point(rng, r * 0.8);
            Ray::new(origin.to_f32(), (target - origin).normalized().to_f32())
        })
        .collect()
}

pub fn vec3(x: f32, y: f32, z: f32) -> Vec3 {
    Vec3::new(x, y, z)
}
