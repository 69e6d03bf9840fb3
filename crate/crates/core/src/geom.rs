//! Vectors, rotation matrices, boxes, rays and the intersection routines the
//! rest of the crate builds on.
//!
//! Stored data uses `f32` ([`Vec3`], [`Mat3`], [`Aabb`], [`Ray`]). Anything that
//! decides a hit or a bound is evaluated in `f64` ([`DVec3`], [`DMat3`]) from
//! the exact `f32` inputs.
//!
//! Rotations are stored world-from-local: the columns of a rotation are the
//! local basis vectors expressed in world space. Rays are moved into a local
//! frame with the transpose, so a local coordinate is a projection onto one
//! basis vector.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! vector3 {
    ($name:ident, $t:ty) => {
        #[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
        pub struct $name {
            pub x: $t,
            pub y: $t,
            pub z: $t,
        }

        impl $name {
            pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);
            pub const X: Self = Self::new(1.0, 0.0, 0.0);
            pub const Y: Self = Self::new(0.0, 1.0, 0.0);
            pub const Z: Self = Self::new(0.0, 0.0, 1.0);

            #[inline]
            pub const fn new(x: $t, y: $t, z: $t) -> Self {
                Self { x, y, z }
            }

            #[inline]
            pub fn splat(v: $t) -> Self {
                Self::new(v, v, v)
            }

            #[inline]
            pub fn dot(self, o: Self) -> $t {
                self.x * o.x + self.y * o.y + self.z * o.z
            }

            #[inline]
            pub fn cross(self, o: Self) -> Self {
                Self::new(
                    self.y * o.z - self.z * o.y,
                    self.z * o.x - self.x * o.z,
                    self.x * o.y - self.y * o.x,
                )
            }

            #[inline]
            pub fn length_squared(self) -> $t {
                self.dot(self)
            }

            #[inline]
            pub fn length(self) -> $t {
                self.length_squared().sqrt()
            }

            /// Unit vector in the same direction; zero vectors stay zero.
            #[inline]
            pub fn normalized(self) -> Self {
                let len = self.length();
                if len > 0.0 {
                    self * (1.0 / len)
                } else {
                    self
                }
            }

            #[inline]
            pub fn min(self, o: Self) -> Self {
                Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
            }

            #[inline]
            pub fn max(self, o: Self) -> Self {
                Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
            }

            #[inline]
            pub fn abs(self) -> Self {
                Self::new(self.x.abs(), self.y.abs(), self.z.abs())
            }

            #[inline]
            pub fn max_element(self) -> $t {
                self.x.max(self.y).max(self.z)
            }

            #[inline]
            pub fn is_finite(self) -> bool {
                self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
            }

            #[inline]
            pub fn to_array(self) -> [$t; 3] {
                [self.x, self.y, self.z]
            }

            #[inline]
            pub fn from_array(a: [$t; 3]) -> Self {
                Self::new(a[0], a[1], a[2])
            }
        }

        impl Add for $name {
            type Output = Self;
            #[inline]
            fn add(self, o: Self) -> Self {
                Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
            }
        }

        impl AddAssign for $name {
            #[inline]
            fn add_assign(&mut self, o: Self) {
                *self = *self + o;
            }
        }

        impl Sub for $name {
            type Output = Self;
            #[inline]
            fn sub(self, o: Self) -> Self {
                Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
            }
        }

        impl Mul<$t> for $name {
            type Output = Self;
            #[inline]
            fn mul(self, s: $t) -> Self {
                Self::new(self.x * s, self.y * s, self.z * s)
            }
        }

        impl Neg for $name {
            type Output = Self;
            #[inline]
            fn neg(self) -> Self {
                Self::new(-self.x, -self.y, -self.z)
            }
        }

        impl Index<usize> for $name {
            type Output = $t;
            #[inline]
            fn index(&self, i: usize) -> &$t {
                match i {
                    0 => &self.x,
                    1 => &self.y,
                    2 => &self.z,
                    _ => panic!("vector index {i} out of range"),
                }
            }
        }
    };
}

vector3!(Vec3, f32);
vector3!(DVec3, f64);

impl Vec3 {
    #[inline]
    pub fn to_f64(self) -> DVec3 {
        DVec3::new(self.x as f64, self.y as f64, self.z as f64)
    }
}

impl DVec3 {
    /// Nearest `f32` vector.
    #[inline]
    pub fn to_f32(self) -> Vec3 {
        Vec3::new(self.x as f32, self.y as f32, self.z as f32)
    }
}

impl From<Vec3> for DVec3 {
    fn from(v: Vec3) -> Self {
        v.to_f64()
    }
}

/// Stored 3x3 matrix, column-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3 {
    pub cols: [Vec3; 3],
}

/// Double precision 3x3 matrix, column-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DMat3 {
    pub cols: [DVec3; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        cols: [Vec3::X, Vec3::Y, Vec3::Z],
    };

    pub fn from_cols(a0: Vec3, a1: Vec3, a2: Vec3) -> Self {
        Mat3 { cols: [a0, a1, a2] }
    }

    /// Entry at `row`, `col`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.cols[col][row]
    }

    /// Builds a matrix from row-major entries.
    pub fn from_rows(m: [[f32; 3]; 3]) -> Self {
        Mat3::from_cols(
            Vec3::new(m[0][0], m[1][0], m[2][0]),
            Vec3::new(m[0][1], m[1][1], m[2][1]),
            Vec3::new(m[0][2], m[1][2], m[2][2]),
        )
    }

    pub fn to_rows(&self) -> [[f32; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.get(r, c);
            }
        }
        out
    }

    #[inline]
    pub fn to_f64(&self) -> DMat3 {
        DMat3 {
            cols: [
                self.cols[0].to_f64(),
                self.cols[1].to_f64(),
                self.cols[2].to_f64(),
            ],
        }
    }

    /// Bit-level equality, distinguishing `0.0` from `-0.0`.
    pub fn bit_eq(&self, other: &Mat3) -> bool {
        self.cols
            .iter()
            .zip(other.cols.iter())
            .all(|(a, b)| {
                a.x.to_bits() == b.x.to_bits()
                    && a.y.to_bits() == b.y.to_bits()
                    && a.z.to_bits() == b.z.to_bits()
            })
    }
}

impl DMat3 {
    pub const IDENTITY: DMat3 = DMat3 {
        cols: [DVec3::X, DVec3::Y, DVec3::Z],
    };

    pub fn from_cols(a0: DVec3, a1: DVec3, a2: DVec3) -> Self {
        DMat3 { cols: [a0, a1, a2] }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cols[col][row]
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> f64) -> Self {
        let col = |c| DVec3::new(f(0, c), f(1, c), f(2, c));
        DMat3::from_cols(col(0), col(1), col(2))
    }

    pub fn transpose(&self) -> DMat3 {
        DMat3::from_fn(|r, c| self.get(c, r))
    }

    /// `self * v`
    #[inline]
    pub fn mul_vec(&self, v: DVec3) -> DVec3 {
        self.cols[0] * v.x + self.cols[1] * v.y + self.cols[2] * v.z
    }

    /// `selfᵀ * v`, i.e. the projections of `v` onto the columns.
    #[inline]
    pub fn transpose_mul_vec(&self, v: DVec3) -> DVec3 {
        DVec3::new(self.cols[0].dot(v), self.cols[1].dot(v), self.cols[2].dot(v))
    }

    pub fn mul(&self, o: &DMat3) -> DMat3 {
        DMat3::from_cols(
            self.mul_vec(o.cols[0]),
            self.mul_vec(o.cols[1]),
            self.mul_vec(o.cols[2]),
        )
    }

    pub fn determinant(&self) -> f64 {
        self.cols[0].dot(self.cols[1].cross(self.cols[2]))
    }

    pub fn trace(&self) -> f64 {
        self.get(0, 0) + self.get(1, 1) + self.get(2, 2)
    }

    /// `‖R Rᵀ − I‖∞` (largest absolute entry).
    pub fn orthonormality_error(&self) -> f64 {
        let p = self.mul(&self.transpose());
        let mut err: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                let id = if r == c { 1.0 } else { 0.0 };
                err = err.max((p.get(r, c) - id).abs());
            }
        }
        err
    }

    /// Rotation by `angle` radians about the unit `axis` (Rodrigues).
    pub fn from_axis_angle(axis: DVec3, angle: f64) -> DMat3 {
        let k = axis.normalized();
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        DMat3::from_fn(|r, col| {
            let kr = k[r];
            let kc = k[col];
            let id = if r == col { 1.0 } else { 0.0 };
            // K[r][col] for the cross-product matrix of k.
            let cross = match (r, col) {
                (0, 1) => -k.z,
                (0, 2) => k.y,
                (1, 0) => k.z,
                (1, 2) => -k.x,
                (2, 0) => -k.y,
                (2, 1) => k.x,
                _ => 0.0,
            };
            // K² = k kᵀ − I
            id + s * cross + t * (kr * kc - id)
        })
    }

    pub fn rotation_x(a: f64) -> DMat3 {
        DMat3::from_axis_angle(DVec3::X, a)
    }

    pub fn rotation_y(a: f64) -> DMat3 {
        DMat3::from_axis_angle(DVec3::Y, a)
    }

    pub fn rotation_z(a: f64) -> DMat3 {
        DMat3::from_axis_angle(DVec3::Z, a)
    }

    /// Geodesic angle of the rotation `selfᵀ * other`.
    pub fn angle_to(&self, other: &DMat3) -> f64 {
        let tr = self.transpose().mul(other).trace();
        ((tr - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
    }

    /// Rounds to `f32`, flushing entries below `1e-12` in magnitude to `+0.0`.
    pub fn to_f32_clean(&self) -> Mat3 {
        let clean = |v: f64| if v.abs() < 1e-12 { 0.0f32 } else { v as f32 };
        let col = |c: DVec3| Vec3::new(clean(c.x), clean(c.y), clean(c.z));
        Mat3::from_cols(col(self.cols[0]), col(self.cols[1]), col(self.cols[2]))
    }
}

/// Axis-aligned box. The empty box has `min = +∞`, `max = −∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Default for Aabb {
    fn default() -> Self {
        Aabb::EMPTY
    }
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::new(f32::INFINITY, f32::INFINITY, f32::INFINITY),
        max: Vec3::new(f32::NEG_INFINITY, f32::NEG_INFINITY, f32::NEG_INFINITY),
    };

    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        points.into_iter().fold(Aabb::EMPTY, |b, p| b.grow(*p))
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    #[must_use]
    pub fn grow(self, p: Vec3) -> Self {
        Aabb::new(self.min.min(p), self.max.max(p))
    }

    #[must_use]
    pub fn union(self, o: Aabb) -> Self {
        Aabb::new(self.min.min(o.min), self.max.max(o.max))
    }

    pub fn extent(&self) -> DVec3 {
        self.max.to_f64() - self.min.to_f64()
    }

    pub fn centroid(&self) -> Vec3 {
        ((self.min.to_f64() + self.max.to_f64()) * 0.5).to_f32()
    }

    /// Length of the diagonal, `0` for empty boxes.
    pub fn diagonal(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.extent().length()
        }
    }

    /// `2(dx·dy + dy·dz + dz·dx)`; empty boxes have area `0`.
    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let d = self.extent();
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    pub fn contains_point(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.y >= self.min.y
            && p.z >= self.min.z
            && p.x <= self.max.x
            && p.y <= self.max.y
            && p.z <= self.max.z
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        o.is_empty() || (self.contains_point(o.min) && self.contains_point(o.max))
    }
}

/// A ray segment `origin + t·direction`, `t ∈ [t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_min: f32,
    pub t_max: f32,
}

impl Ray {
    /// Unbounded ray starting at `t = 0`.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Ray {
            origin,
            direction,
            t_min: 0.0,
            t_max: f32::INFINITY,
        }
    }

    pub fn with_range(origin: Vec3, direction: Vec3, t_min: f32, t_max: f32) -> Result<Self> {
        let ray = Ray {
            origin,
            direction,
            t_min,
            t_max,
        };
        ray.validate()?;
        Ok(ray)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.origin.is_finite() || !self.direction.is_finite() {
            return Err(Error::invalid("ray has non-finite components"));
        }
        if self.direction == Vec3::ZERO {
            return Err(Error::invalid("ray direction is zero"));
        }
        if !(self.t_min >= 0.0 && self.t_min <= self.t_max) {
            return Err(Error::invalid(format!(
                "ray range [{}, {}] is invalid",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> DVec3 {
        self.origin.to_f64() + self.direction.to_f64() * t
    }
}

/// A ray expressed in a rotated frame, kept in double precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalRay {
    pub origin: DVec3,
    pub direction: DVec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl From<&Ray> for LocalRay {
    fn from(r: &Ray) -> Self {
        LocalRay {
            origin: r.origin.to_f64(),
            direction: r.direction.to_f64(),
            t_min: r.t_min as f64,
            t_max: r.t_max as f64,
        }
    }
}

impl LocalRay {
    /// Moves the ray into the local frame of `rot`: `Rᵀ·origin`, `Rᵀ·direction`.
    pub fn to_local(&self, rot: &DMat3) -> LocalRay {
        LocalRay {
            origin: rot.transpose_mul_vec(self.origin),
            direction: rot.transpose_mul_vec(self.direction),
            ..*self
        }
    }

    /// Inverse of [`LocalRay::to_local`] for an orthonormal `rot`.
    pub fn to_world(&self, rot: &DMat3) -> LocalRay {
        LocalRay {
            origin: rot.mul_vec(self.origin),
            direction: rot.mul_vec(self.direction),
            ..*self
        }
    }
}

/// Transforms `ray` into the frame of the world-from-local rotation `rot`.
///
/// A slab test against a box in the returned frame is an OBB test in world
/// space. The parametric range is unchanged.
pub fn transform_ray(ray: &Ray, rot: &Mat3) -> LocalRay {
    LocalRay::from(ray).to_local(&rot.to_f64())
}

/// Closest-hit result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    /// Scene triangle index, `None` on a miss.
    pub prim: Option<u32>,
    pub t: f32,
    pub u: f32,
    pub v: f32,
}

impl HitRecord {
    pub fn miss(t_max: f32) -> Self {
        HitRecord {
            prim: None,
            t: t_max,
            u: 0.0,
            v: 0.0,
        }
    }

    pub fn is_hit(&self) -> bool {
        self.prim.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub v: [Vec3; 3],
}

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Triangle { v: [a, b, c] }
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.v)
    }

    /// Unnormalized geometric normal `(v1 − v0) × (v2 − v0)` in double precision.
    pub fn normal(&self) -> DVec3 {
        let a = self.v[0].to_f64();
        (self.v[1].to_f64() - a).cross(self.v[2].to_f64() - a)
    }

    pub fn area(&self) -> f64 {
        0.5 * self.normal().length()
    }
}

/// Hit on a single triangle. Barycentrics weight `v1` by `u` and `v2` by `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleHit {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// Parametric interval of a ray inside a box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub enter: f64,
    pub exit: f64,
}

// Relative slack applied to the exit distance so that touching contacts are
// never lost to rounding (a few ulps of f64).
const SLAB_SLACK: f64 = 4.0 * f64::EPSILON;

/// Precomputed slab-test state for one ray in one frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SlabRay {
    origin: [f64; 3],
    dir: [f64; 3],
    inv: [f64; 3],
    t_min: f64,
}

impl SlabRay {
    pub(crate) fn new(ray: &LocalRay) -> Self {
        let d = ray.direction;
        SlabRay {
            origin: ray.origin.to_array(),
            dir: d.to_array(),
            inv: [1.0 / d.x, 1.0 / d.y, 1.0 / d.z],
            t_min: ray.t_min,
        }
    }

    #[inline]
    pub(crate) fn hit(&self, b: &Aabb, t_max: f64) -> Option<Span> {
        let lo = [b.min.x as f64, b.min.y as f64, b.min.z as f64];
        let hi = [b.max.x as f64, b.max.y as f64, b.max.z as f64];
        let mut enter = self.t_min;
        let mut exit = t_max;
        for k in 0..3 {
            if self.dir[k] == 0.0 {
                if self.origin[k] < lo[k] || self.origin[k] > hi[k] {
                    return None;
                }
                continue;
            }
            let t0 = (lo[k] - self.origin[k]) * self.inv[k];
            let t1 = (hi[k] - self.origin[k]) * self.inv[k];
            let (near, far) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            enter = enter.max(near);
            exit = exit.min(far);
        }
        if enter <= exit + exit.abs() * SLAB_SLACK {
            Some(Span {
                enter,
                exit: exit.max(enter),
            })
        } else {
            None
        }
    }
}

/// Slab test. Returns the overlap of the ray's `[t_min, t_max]` with the box.
///
/// Zero direction components follow IEEE semantics: the ray overlaps that slab
/// iff its origin lies inside it.
pub fn ray_aabb_intersect(ray: &Ray, b: &Aabb) -> Option<Span> {
    if b.is_empty() {
        return None;
    }
    SlabRay::new(&LocalRay::from(ray)).hit(b, ray.t_max as f64)
}

/// Slab test of a local-frame ray against a box in that frame.
pub fn local_ray_aabb_intersect(ray: &LocalRay, b: &Aabb) -> Option<Span> {
    if b.is_empty() {
        return None;
    }
    SlabRay::new(ray).hit(b, ray.t_max)
}

/// Edge ownership for hits exactly on an edge: the edge is owned when its
/// facing-oriented direction is lexicographically positive. A shared edge is
/// seen with opposite orientation by its two consistently wound neighbours,
/// so exactly one of them reports the hit.
#[inline]
fn owns_edge(edge: DVec3, facing: f64) -> bool {
    let e = edge * facing;
    if e.x != 0.0 {
        e.x > 0.0
    } else if e.y != 0.0 {
        e.y > 0.0
    } else {
        e.z > 0.0
    }
}

/// Double-sided ray/triangle test within `[t_min, t_max]`.
///
/// The ray passes inside when the three signed volumes
/// `d·((vᵢ − o) × (vⱼ − o))` share a sign. A zero volume means the ray meets
/// the edge exactly; the hit is kept only if this triangle owns that edge
/// (see the lexicographic rule above), which makes shared edges watertight.
/// Zero-area triangles and rays parallel to the plane always miss.
pub fn intersect_triangle(ray: &Ray, tri: &Triangle, t_min: f64, t_max: f64) -> Option<TriangleHit> {
    let o = ray.origin.to_f64();
    let d = ray.direction.to_f64();
    let p = [tri.v[0].to_f64(), tri.v[1].to_f64(), tri.v[2].to_f64()];

    let n = (p[1] - p[0]).cross(p[2] - p[0]);
    if n == DVec3::ZERO {
        return None;
    }
    let det = d.dot(n);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let facing = det.signum();

    let a = p[0] - o;
    let b = p[1] - o;
    let c = p[2] - o;
    let e = [d.dot(a.cross(b)), d.dot(b.cross(c)), d.dot(c.cross(a))];
    for (k, &ek) in e.iter().enumerate() {
        let s = ek * facing;
        if s < 0.0 {
            return None;
        }
        if s == 0.0 && !owns_edge(p[(k + 1) % 3] - p[k], facing) {
            return None;
        }
    }

    let t = a.dot(n) / det;
    if !(t >= t_min && t <= t_max) {
        return None;
    }
    let sum = e[0] + e[1] + e[2];
    // e[0] is the volume opposite v2, e[1] opposite v0, e[2] opposite v1.
    let (u, v) = if sum != 0.0 {
        (e[2] / sum, e[0] / sum)
    } else {
        (0.0, 0.0)
    };
    Some(TriangleHit { t, u, v })
}

/// [`intersect_triangle`] over the ray's own range.
pub fn ray_triangle_intersect(ray: &Ray, tri: &Triangle) -> Option<TriangleHit> {
    intersect_triangle(ray, tri, ray.t_min as f64, ray.t_max as f64)
}

/// Surface area of a box given by three `[lo, hi]` extents.
pub(crate) fn extents_surface_area(ext: &[crate::kdop::Extent; 3]) -> f64 {
    if ext.iter().any(|e| e.is_empty()) {
        return 0.0;
    }
    let d = [ext[0].width(), ext[1].width(), ext[2].width()];
    2.0 * (d[0] * d[1] + d[1] * d[2] + d[2] * d[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube() -> Aabb {
        Aabb::new(Vec3::ZERO, Vec3::splat(1.0))
    }

    #[test]
    fn surface_area_examples() {
        assert_eq!(unit_cube().surface_area(), 6.0);
        let p = Vec3::new(0.3, 0.2, 0.1);
        assert_eq!(Aabb::new(p, p).surface_area(), 0.0);
        assert_eq!(
            Aabb::new(Vec3::ZERO, Vec3::new(2.0, 1.0, 1.0)).surface_area(),
            10.0
        );
        assert_eq!(Aabb::EMPTY.surface_area(), 0.0);
    }

    #[test]
    fn slab_examples() {
        let ray = Ray::new(Vec3::new(-1.0, 0.5, 0.5), Vec3::X);
        let s = ray_aabb_intersect(&ray, &unit_cube()).unwrap();
        assert_eq!(s.enter, 1.0);
        assert_eq!(s.exit, 2.0);

        let clipped = Ray::with_range(ray.origin, ray.direction, 0.0, 0.5).unwrap();
        assert!(ray_aabb_intersect(&clipped, &unit_cube()).is_none());

        let inside = Ray::with_range(Vec3::splat(0.5), Vec3::new(0.0, 1.0, 0.0), 0.25, 10.0).unwrap();
        let s = ray_aabb_intersect(&inside, &unit_cube()).unwrap();
        assert_eq!(s.enter, 0.25);
        assert_eq!(s.exit, 0.5);
    }

    #[test]
    fn slab_zero_direction_components() {
        // Runs along the plane y = 0 on the box face.
        let ray = Ray::new(Vec3::new(-1.0, 0.0, 0.5), Vec3::X);
        assert!(ray_aabb_intersect(&ray, &unit_cube()).is_some());
        let ray = Ray::new(Vec3::new(-1.0, -0.01, 0.5), Vec3::X);
        assert!(ray_aabb_intersect(&ray, &unit_cube()).is_none());
        assert!(ray_aabb_intersect(&Ray::new(Vec3::ZERO, Vec3::X), &Aabb::EMPTY).is_none());
    }

    #[test]
    fn triangle_examples() {
        let tri = Triangle::new(
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        );
        let ray = Ray::new(Vec3::new(0.0, 0.0, -1.0), Vec3::Z);
        let hit = ray_triangle_intersect(&ray, &tri).unwrap();
        assert_eq!(hit.t, 1.0);
        assert!((0.0..=1.0).contains(&hit.u) && (0.0..=1.0).contains(&hit.v));

        let parallel = Ray::new(Vec3::new(-5.0, 0.0, 0.0), Vec3::X);
        assert!(ray_triangle_intersect(&parallel, &tri).is_none());

        let degenerate = Triangle::new(Vec3::ZERO, Vec3::X, Vec3::new(2.0, 0.0, 0.0));
        let ray = Ray::new(Vec3::new(0.5, 0.0, -1.0), Vec3::Z);
        assert!(ray_triangle_intersect(&ray, &degenerate).is_none());
    }

    #[test]
    fn shared_edge_is_hit_exactly_once() {
        // Quad split along the diagonal (0,0)-(1,1), both halves wound the same way.
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(1.0, 1.0, 0.0);
        let d = Vec3::new(0.0, 1.0, 0.0);
        let t0 = Triangle::new(a, b, c);
        let t1 = Triangle::new(a, c, d);
        for dir in [Vec3::Z, -Vec3::Z] {
            let ray = Ray::new(Vec3::new(0.5, 0.5, -dir.z), dir);
            let hits = [t0, t1]
                .iter()
                .filter(|t| ray_triangle_intersect(&ray, t).is_some())
                .count();
            assert_eq!(hits, 1);
        }
    }

    #[test]
    fn quarter_turn_transform() {
        let rot = DMat3::rotation_z(std::f64::consts::FRAC_PI_2).to_f32_clean();
        let ray = Ray::new(Vec3::new(1.0, 2.0, 3.0), Vec3::X);
        let local = transform_ray(&ray, &rot);
        assert_eq!(local.direction, DVec3::new(0.0, -1.0, 0.0));
        assert_eq!(local.origin, DVec3::new(2.0, -1.0, 3.0));

        let id = transform_ray(&ray, &Mat3::IDENTITY);
        assert_eq!(id, LocalRay::from(&ray));
    }

    #[test]
    fn invalid_rays_rejected() {
        assert!(Ray::with_range(Vec3::ZERO, Vec3::ZERO, 0.0, 1.0).is_err());
        assert!(Ray::with_range(Vec3::ZERO, Vec3::X, 2.0, 1.0).is_err());
        assert!(Ray::with_range(Vec3::ZERO, Vec3::X, -1.0, 1.0).is_err());
    }

    #[test]
    fn rodrigues_is_proper_rotation() {
        let r = DMat3::from_axis_angle(DVec3::new(1.0, 2.0, -0.5), 0.7);
        assert!(r.orthonormality_error() < 1e-14);
        assert!((r.determinant() - 1.0).abs() < 1e-14);
    }
}
