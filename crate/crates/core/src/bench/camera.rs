use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, DVec3, HitRecord, Ray, Triangle, Vec3};

/// Pinhole camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub eye: [f32; 3],
    pub look_at: [f32; 3],
    pub up: [f32; 3],
    /// Vertical field of view in degrees.
    pub vfov: f32,
    pub width: u32,
    pub height: u32,
}

impl CameraConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("camera resolution must be positive".into()));
        }
        if !(self.vfov > 0.0 && self.vfov < 180.0) {
            return Err(Error::Config(format!("camera vfov {} must be in (0, 180)", self.vfov)));
        }
        let fwd = Vec3::from_array(self.look_at).to_f64() - Vec3::from_array(self.eye).to_f64();
        let up = Vec3::from_array(self.up).to_f64();
        if !(fwd.is_finite() && up.is_finite()) || fwd.cross(up).length_squared() <= 1e-12 * fwd.length_squared() * up.length_squared()
        {
            return Err(Error::Config("camera eye, look_at and up are degenerate".into()));
        }
        Ok(())
    }

    /// Orthonormal `(right, up, forward)` basis.
    fn basis(&self) -> (DVec3, DVec3, DVec3) {
        let f = (Vec3::from_array(self.look_at).to_f64() - Vec3::from_array(self.eye).to_f64()).normalized();
        let r = f.cross(Vec3::from_array(self.up).to_f64()).normalized();
        let u = r.cross(f);
        (r, u, f)
    }
}

/// One ray per pixel through the pixel center, row-major from the top-left.
pub fn gen_primary_rays(cam: &CameraConfig) -> Result<Vec<Ray>> {
    cam.validate()?;
    let (right, up, fwd) = cam.basis();
    let half_h = (0.5 * (cam.vfov as f64).to_radians()).tan();
    let half_w = half_h * cam.width as f64 / cam.height as f64;
    let eye = Vec3::from_array(cam.eye);
    let mut rays = Vec::with_capacity((cam.width * cam.height) as usize);
    for i in 0..cam.height {
        let y = (1.0 - 2.0 * (i as f64 + 0.5) / cam.height as f64) * half_h;
        for j in 0..cam.width {
            let x = (2.0 * (j as f64 + 0.5) / cam.width as f64 - 1.0) * half_w;
            let d = (fwd + right * x + up * y).normalized();
            rays.push(Ray::new(eye, d.to_f32()));
        }
    }
    Ok(rays)
}

/// Three fixed viewpoints around `bounds`, each framing the whole scene.
pub fn canonical_cameras(bounds: &Aabb, width: u32, height: u32, vfov: f32) -> Vec<CameraConfig> {
    let c = bounds.centroid().to_f64();
    let r = 0.5 * bounds.diagonal().max(1e-6);
    let dist = 1.05 * r / (0.5 * (vfov as f64).to_radians()).sin();
    [
        DVec3::new(0.0, 0.0, 1.0),
        DVec3::new(1.0, 0.6, 0.8),
        DVec3::new(-0.7, -0.5, -0.9),
    ]
    .into_iter()
    .map(|dir| {
        let eye = c + dir.normalized() * dist;
        CameraConfig {
            eye: eye.to_f32().to_array(),
            look_at: c.to_f32().to_array(),
            up: [0.0, 1.0, 0.0],
            vfov,
            width,
            height,
        }
    })
    .collect()
}

/// One diffuse bounce per primary hit.
///
/// The origin is the hit point pushed off the surface by `1e-4 ·` the scene
/// diagonal along the geometric normal facing the incoming ray; the
/// direction is cosine-distributed about that normal. Rays without a hit
/// spawn nothing. The sequence depends only on `seed` and the input order.
pub fn gen_gi_rays(
    triangles: &[Triangle],
    bounds: &Aabb,
    primary: &[Ray],
    hits: &[HitRecord],
    seed: u64,
) -> Vec<Ray> {
    let eps = 1e-4 * bounds.diagonal();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (ray, hit) in primary.iter().zip(hits) {
        let Some(prim) = hit.prim else { continue };
        let mut n = triangles[prim as usize].normal().normalized();
        let d_in = ray.direction.to_f64();
        if n.dot(d_in) > 0.0 {
            n = -n;
        }
        let p = ray.at(hit.t as f64) + n * eps;
        let (t1, t2) = tangent_frame(n);
        let dir = loop {
            let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
            let phi = std::f64::consts::TAU * r1;
            let s = r2.sqrt();
            let local = t1 * (s * phi.cos()) + t2 * (s * phi.sin()) + n * (1.0 - r2).sqrt();
            let d = local.to_f32();
            if d.to_f64().dot(n) > 0.0 {
                break d;
            }
        };
        out.push(Ray::new(p.to_f32(), dir));
    }
    out
}

fn tangent_frame(n: DVec3) -> (DVec3, DVec3) {
    let a = if n.x.abs() < 0.9 { DVec3::X } else { DVec3::Y };
    let t1 = a.cross(n).normalized();
    (t1, n.cross(t1))
}
