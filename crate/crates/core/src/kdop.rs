//! k-DOP proxies and conservative OBB extents.
//!
//! [`Dop26`] keeps min/max projections along the 13 canonical axes. The
//! [`ApexMap`] turns such a proxy into a conservative extent along any
//! direction: the direction falls into one triangular facet of a quad-sphere
//! whose 26 vertices are the signed DOP axes, the three supporting planes of
//! those vertices meet in an apex point, and the extent is the projection of
//! that apex onto the direction.
//!
//! [`BasisDop`] is the exact counterpart: it projects onto every distinct basis
//! vector of a rotation set (225 of them for the 104-rotation set), so extents
//! in any member frame are plain lookups.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{DVec3, Mat3, Vec3};
use crate::rotation::{build_axes, RotationSet, AXIS_DIRECTIONS};

pub const DOP_AXES: usize = 13;

/// Closed interval `[lo, hi]`; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub lo: f64,
    pub hi: f64,
}

impl Extent {
    pub const EMPTY: Extent = Extent {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Extent { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn width(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn contains(&self, o: &Extent) -> bool {
        o.is_empty() || (self.lo <= o.lo && o.hi <= self.hi)
    }
}

/// Rounds toward −∞ when narrowing to `f32`.
#[inline]
pub(crate) fn f32_down(x: f64) -> f32 {
    let f = x as f32;
    if (f as f64) > x {
        f.next_down()
    } else {
        f
    }
}

/// Rounds toward +∞ when narrowing to `f32`.
#[inline]
pub(crate) fn f32_up(x: f64) -> f32 {
    let f = x as f32;
    if (f as f64) < x {
        f.next_up()
    } else {
        f
    }
}

/// The 13 canonical DOP axes (same order as `build_axes(13)`).
pub fn dop_axes() -> &'static [Vec3] {
    static AXES: OnceLock<Vec<Vec3>> = OnceLock::new();
    AXES.get_or_init(|| build_axes(DOP_AXES).expect("13 axes are supported"))
}

/// Min/max projections along the 13 canonical axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dop26 {
    pub min: [f32; DOP_AXES],
    pub max: [f32; DOP_AXES],
}

impl Default for Dop26 {
    fn default() -> Self {
        Dop26::EMPTY
    }
}

impl Dop26 {
    pub const EMPTY: Dop26 = Dop26 {
        min: [f32::INFINITY; DOP_AXES],
        max: [f32::NEG_INFINITY; DOP_AXES],
    };

    /// Projections are evaluated in `f64` and rounded outward.
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let axes = dop_axes();
        let mut lo = [f64::INFINITY; DOP_AXES];
        let mut hi = [f64::NEG_INFINITY; DOP_AXES];
        for p in points {
            let p = p.to_f64();
            for k in 0..DOP_AXES {
                let d = p.dot(axes[k].to_f64());
                lo[k] = lo[k].min(d);
                hi[k] = hi[k].max(d);
            }
        }
        let mut dop = Dop26::EMPTY;
        for k in 0..DOP_AXES {
            dop.min[k] = f32_down(lo[k]);
            dop.max[k] = f32_up(hi[k]);
        }
        dop
    }

    pub fn is_empty(&self) -> bool {
        self.min[0] > self.max[0]
    }

    #[must_use]
    pub fn merge(&self, o: &Dop26) -> Dop26 {
        let mut out = *self;
        for k in 0..DOP_AXES {
            out.min[k] = out.min[k].min(o.min[k]);
            out.max[k] = out.max[k].max(o.max[k]);
        }
        out
    }

    pub fn interval(&self, axis: usize) -> Extent {
        Extent::new(self.min[axis] as f64, self.max[axis] as f64)
    }

    /// Supporting-plane offset of signed vertex `v` (`v < 13` is `+axis v`,
    /// otherwise `−axis (v − 13)`).
    #[inline]
    fn support(&self, v: usize) -> f64 {
        if v < DOP_AXES {
            self.max[v] as f64
        } else {
            -(self.min[v - DOP_AXES] as f64)
        }
    }
}

/// Merge of two proxies.
pub fn dop_merge(a: &Dop26, b: &Dop26) -> Dop26 {
    a.merge(b)
}

/// Triangulated quad-sphere over the 26 signed DOP axes.
///
/// Each cube face is split into 2x2 quads around its center and every quad
/// into two triangles (center, edge midpoint, corner): 48 facets.
#[derive(Debug, Clone)]
pub struct ApexMap {
    vertices: [Vec3; 2 * DOP_AXES],
    cube: [[i32; 3]; 2 * DOP_AXES],
    facets: Vec<[usize; 3]>,
    // Integer inward normals of each facet's three bounding great circles.
    edge_normals: Vec<[[i32; 3]; 3]>,
}

/// Planes closer to parallel than this fall back to the box bound.
const DEGENERACY_THRESHOLD: f64 = 1e-8;

fn icross(a: [i32; 3], b: [i32; 3]) -> [i32; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn idot(a: [i32; 3], b: [i32; 3]) -> i32 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl Default for ApexMap {
    fn default() -> Self {
        ApexMap::new()
    }
}

impl ApexMap {
    pub fn new() -> Self {
        let axes = dop_axes();
        let mut vertices = [Vec3::ZERO; 2 * DOP_AXES];
        let mut cube = [[0i32; 3]; 2 * DOP_AXES];
        for k in 0..DOP_AXES {
            let d = AXIS_DIRECTIONS[k].map(i32::from);
            vertices[k] = axes[k];
            vertices[k + DOP_AXES] = -axes[k];
            cube[k] = d;
            cube[k + DOP_AXES] = d.map(|c| -c);
        }
        let vertex_of = |p: [i32; 3]| -> usize {
            cube.iter()
                .position(|c| *c == p)
                .expect("quad-sphere points are DOP axes")
        };

        let mut facets = Vec::with_capacity(48);
        for face_axis in 0..3 {
            for face_sign in [1i32, -1] {
                let p = (face_axis + 1) % 3;
                let q = (face_axis + 2) % 3;
                let mut center = [0i32; 3];
                center[face_axis] = face_sign;
                for sp in [1i32, -1] {
                    for sq in [1i32, -1] {
                        let mut corner = center;
                        corner[p] = sp;
                        corner[q] = sq;
                        let mut mid_p = center;
                        mid_p[p] = sp;
                        let mut mid_q = center;
                        mid_q[q] = sq;
                        for mid in [mid_p, mid_q] {
                            let mut tri = [center, mid, corner];
                            if idot(icross(tri[0], tri[1]), tri[2]) < 0 {
                                tri.swap(1, 2);
                            }
                            facets.push(tri.map(vertex_of));
                        }
                    }
                }
            }
        }
        let edge_normals = facets
            .iter()
            .map(|f| {
                let c = f.map(|v| cube[v]);
                [icross(c[0], c[1]), icross(c[1], c[2]), icross(c[2], c[0])]
            })
            .collect();
        ApexMap {
            vertices,
            cube,
            facets,
            edge_normals,
        }
    }

    /// Unit vertex directions: `+axis k` at `k`, `−axis k` at `k + 13`.
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Facets as counter-clockwise vertex index triples (seen from outside).
    pub fn facets(&self) -> &[[usize; 3]] {
        &self.facets
    }

    /// Integer cube point of each vertex.
    pub fn cube_points(&self) -> &[[i32; 3]] {
        &self.cube
    }

    fn containment(&self, facet: usize, dir: DVec3) -> f64 {
        self.edge_normals[facet]
            .iter()
            .map(|n| dir.x * n[0] as f64 + dir.y * n[1] as f64 + dir.z * n[2] as f64)
            .fold(f64::INFINITY, f64::min)
    }

    /// First facet (lowest index) whose spherical triangle contains `dir`.
    pub fn facet_for(&self, dir: DVec3) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for f in 0..self.facets.len() {
            let c = self.containment(f, dir);
            if c >= 0.0 {
                return f;
            }
            if c > best.1 {
                best = (f, c);
            }
        }
        // Only reachable through rounding on a facet boundary.
        best.0
    }

    /// Conservative upper extent `max over the proxied geometry of dir·p`.
    ///
    /// When `dir` is exactly a DOP vertex direction the stored projection is
    /// returned as is.
    pub fn apex_extent(&self, dop: &Dop26, dir: Vec3) -> Result<f64> {
        let d = dir.to_f64();
        if !d.is_finite() || d.length_squared() < 1e-12 {
            return Err(Error::invalid("apex query direction is degenerate"));
        }
        if dop.is_empty() {
            return Ok(f64::NEG_INFINITY);
        }
        if let Some(v) = self.vertices.iter().position(|v| *v == dir) {
            return Ok(dop.support(v));
        }
        let facet = self.facets[self.facet_for(d)];
        let n = facet.map(|v| self.vertices[v].to_f64());
        let h = facet.map(|v| dop.support(v));

        // Line where the first two supporting planes meet.
        let u = n[0].cross(n[1]);
        let uu = u.length_squared();
        let denom = n[2].dot(u);
        if uu < DEGENERACY_THRESHOLD || denom.abs() < DEGENERACY_THRESHOLD * uu.sqrt() {
            return Ok(self.box_bound(dop, d));
        }
        let on_line = (n[1].cross(u) * h[0] + u.cross(n[0]) * h[1]) * (1.0 / uu);
        // Apex: where that line crosses the third plane.
        let s = (h[2] - n[2].dot(on_line)) / denom;
        let apex = on_line + u * s;
        let extent = apex.dot(d);
        // Rounding slack of the plane solve.
        let slack = 64.0 * f64::EPSILON * (apex.length() * d.length() + h.iter().map(|x| x.abs()).sum::<f64>());
        Ok(extent + slack)
    }

    /// Support of the proxy's axis-aligned box; always conservative.
    fn box_bound(&self, dop: &Dop26, d: DVec3) -> f64 {
        (0..3)
            .map(|k| {
                if d[k] >= 0.0 {
                    d[k] * dop.max[k] as f64
                } else {
                    d[k] * dop.min[k] as f64
                }
            })
            .sum()
    }

    /// Conservative `[lo, hi]` of the proxied geometry along each basis
    /// vector (column) of `rot`.
    pub fn obb_extents(&self, dop: &Dop26, rot: &Mat3) -> Result<[Extent; 3]> {
        if dop.is_empty() {
            return Ok([Extent::EMPTY; 3]);
        }
        let mut out = [Extent::EMPTY; 3];
        for (i, e) in out.iter_mut().enumerate() {
            let a = rot.cols[i];
            *e = Extent::new(-self.apex_extent(dop, -a)?, self.apex_extent(dop, a)?);
        }
        Ok(out)
    }
}

/// Free-function form of [`ApexMap::apex_extent`].
pub fn apex_extent(dop: &Dop26, map: &ApexMap, dir: Vec3) -> Result<f64> {
    map.apex_extent(dop, dir)
}

/// Free-function form of [`ApexMap::obb_extents`].
pub fn obb_extents(dop: &Dop26, map: &ApexMap, rot: &Mat3) -> Result<[Extent; 3]> {
    map.obb_extents(dop, rot)
}

/// Reference to one of the deduplicated basis axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisRef {
    pub axis: u16,
    pub negated: bool,
}

/// All distinct basis vectors of a rotation set, up to sign.
#[derive(Debug, Clone)]
pub struct BasisAxes {
    axes: Vec<Vec3>,
    lookup: HashMap<[u32; 3], u16>,
    per_rotation: Vec<[AxisRef; 3]>,
}

/// Sign-normalized copy (first non-zero component positive, no `-0.0`) and
/// whether it was negated.
fn canonical(v: Vec3) -> (Vec3, bool) {
    let first = [v.x, v.y, v.z].into_iter().find(|c| *c != 0.0).unwrap_or(0.0);
    let negated = first < 0.0;
    let c = if negated { -v } else { v };
    (Vec3::new(c.x + 0.0, c.y + 0.0, c.z + 0.0), negated)
}

fn bits(v: Vec3) -> [u32; 3] {
    [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()]
}

impl BasisAxes {
    /// Collects the columns of every rotation, deduplicated exactly by bit
    /// pattern after sign normalization.
    pub fn new(set: &RotationSet) -> Self {
        let mut axes = Vec::new();
        let mut lookup = HashMap::new();
        let per_rotation = set
            .rotations()
            .iter()
            .map(|r| {
                r.cols.map(|c| {
                    let (canon, negated) = canonical(c);
                    let axis = *lookup.entry(bits(canon)).or_insert_with(|| {
                        axes.push(canon);
                        (axes.len() - 1) as u16
                    });
                    AxisRef { axis, negated }
                })
            })
            .collect();
        BasisAxes {
            axes,
            lookup,
            per_rotation,
        }
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn axes(&self) -> &[Vec3] {
        &self.axes
    }

    pub fn rotation_refs(&self, index: usize) -> &[AxisRef; 3] {
        &self.per_rotation[index]
    }

    pub fn dop_from_points<'a>(&self, points: impl IntoIterator<Item = &'a Vec3>) -> BasisDop {
        let n = self.axes.len();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in points {
            let p = p.to_f64();
            for (k, a) in self.axes.iter().enumerate() {
                let d = p.dot(a.to_f64());
                lo[k] = lo[k].min(d);
                hi[k] = hi[k].max(d);
            }
        }
        BasisDop { min: lo, max: hi }
    }

    pub fn empty_dop(&self) -> BasisDop {
        BasisDop {
            min: vec![f64::INFINITY; self.axes.len()],
            max: vec![f64::NEG_INFINITY; self.axes.len()],
        }
    }

    fn extent(dop: &BasisDop, r: AxisRef) -> Extent {
        let (lo, hi) = (dop.min[r.axis as usize], dop.max[r.axis as usize]);
        if lo > hi {
            Extent::EMPTY
        } else if r.negated {
            Extent::new(-hi, -lo)
        } else {
            Extent::new(lo, hi)
        }
    }

    /// Exact extents in the frame of rotation `index` of the set.
    pub fn extents_by_index(&self, dop: &BasisDop, index: usize) -> [Extent; 3] {
        self.per_rotation[index].map(|r| Self::extent(dop, r))
    }

    /// Exact extents in the frame of `rot`, whose columns must all be basis
    /// vectors of the set.
    pub fn exact_extents(&self, dop: &BasisDop, rot: &Mat3) -> Result<[Extent; 3]> {
        let mut out = [Extent::EMPTY; 3];
        for (i, e) in out.iter_mut().enumerate() {
            let (canon, negated) = canonical(rot.cols[i]);
            let axis = *self.lookup.get(&bits(canon)).ok_or_else(|| {
                Error::invalid("rotation is not a member of the rotation set")
            })?;
            *e = Self::extent(dop, AxisRef { axis, negated });
        }
        Ok(out)
    }
}

/// Min/max projections along every [`BasisAxes`] direction, kept in f64:
/// this is a conversion-time proxy, never stored in the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisDop {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BasisDop {
    pub fn merge_in(&mut self, o: &BasisDop) {
        for (a, b) in self.min.iter_mut().zip(&o.min) {
            *a = a.min(*b);
        }
        for (a, b) in self.max.iter_mut().zip(&o.max) {
            *a = a.max(*b);
        }
    }

    #[must_use]
    pub fn merge(&self, o: &BasisDop) -> BasisDop {
        let mut out = self.clone();
        out.merge_in(o);
        out
    }

    pub fn is_empty(&self) -> bool {
        self.min.first().zip(self.max.first()).map_or(true, |(lo, hi)| lo > hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::DMat3;

    fn cube_corners() -> Vec<Vec3> {
        (0..8)
            .map(|i| Vec3::new((i & 1) as f32, (i >> 1 & 1) as f32, (i >> 2 & 1) as f32))
            .collect()
    }

    #[test]
    fn cube_projections() {
        let dop = Dop26::from_points(&cube_corners());
        assert_eq!(dop.interval(0), Extent::new(0.0, 1.0));
        let diag = dop.interval(9);
        assert_eq!(diag.lo, 0.0);
        assert!((diag.hi - 3f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn single_point_dop() {
        let p = Vec3::new(0.25, -2.0, 3.5);
        let dop = Dop26::from_points(&[p]);
        for k in 0..DOP_AXES {
            let exact = p.to_f64().dot(dop_axes()[k].to_f64());
            assert!(dop.min[k] as f64 <= exact && exact <= dop.max[k] as f64);
            assert!(dop.max[k] - dop.min[k] <= 2.0 * f32::EPSILON * 4.0);
        }
        assert!(Dop26::from_points(&[]).is_empty());
    }

    #[test]
    fn merge_identities() {
        let dop = Dop26::from_points(&cube_corners());
        assert_eq!(dop.merge(&Dop26::EMPTY), dop);
        assert_eq!(dop.merge(&dop), dop);
    }

    #[test]
    fn quad_sphere_topology() {
        let map = ApexMap::new();
        assert_eq!(map.facets().len(), 48);
        // Every vertex is used, and every undirected edge has two facets.
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        let mut used = [false; 26];
        for f in map.facets() {
            for k in 0..3 {
                used[f[k]] = true;
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        assert!(used.iter().all(|u| *u));
        assert!(edges.values().all(|&n| n == 2));
        // Euler characteristic of the sphere.
        assert_eq!(26 - edges.len() as i64 + 48, 2);
    }

    #[test]
    fn apex_on_axes_is_exact() {
        let map = ApexMap::new();
        let pts: Vec<Vec3> = [[0.1, 0.2, 0.3], [-1.0, 0.5, 2.0], [0.7, -0.3, -0.4]]
            .iter()
            .map(|p| Vec3::from_array(*p))
            .collect();
        let dop = Dop26::from_points(&pts);
        for k in 0..DOP_AXES {
            let a = dop_axes()[k];
            assert_eq!(map.apex_extent(&dop, a).unwrap(), dop.max[k] as f64);
            assert_eq!(map.apex_extent(&dop, -a).unwrap(), -(dop.min[k] as f64));
        }
        let id = map.obb_extents(&dop, &Mat3::IDENTITY).unwrap();
        for k in 0..3 {
            assert_eq!(id[k], dop.interval(k));
        }
        let quarter = DMat3::rotation_z(std::f64::consts::FRAC_PI_2).to_f32_clean();
        let e = map.obb_extents(&dop, &quarter).unwrap();
        // Columns are (0,1,0), (-1,0,0), (0,0,1).
        assert_eq!(e[0], dop.interval(1));
        assert_eq!(e[1], Extent::new(-(dop.max[0] as f64), -(dop.min[0] as f64)));
        assert_eq!(e[2], dop.interval(2));
        assert!(map.apex_extent(&dop, Vec3::ZERO).is_err());
    }

    #[test]
    fn facet_contains_direction() {
        let map = ApexMap::new();
        let dirs = [
            DVec3::new(0.3, 0.9, -0.2),
            DVec3::new(-1.0, -1.0, -1.0),
            DVec3::new(0.0, 0.0, 1.0),
            DVec3::new(1.0, 1.0, 0.0),
        ];
        for d in dirs {
            let f = map.facet_for(d);
            assert!(map.containment(f, d) >= 0.0);
            // No earlier facet contains it.
            for g in 0..f {
                assert!(map.containment(g, d) < 0.0);
            }
        }
    }

    #[test]
    fn standard_set_has_225_basis_axes() {
        let basis = BasisAxes::new(&RotationSet::standard());
        assert_eq!(basis.len(), 225);
    }

    #[test]
    fn exact_extents_rejects_foreign_rotation() {
        let set = RotationSet::standard();
        let basis = BasisAxes::new(&set);
        let dop = basis.dop_from_points(&cube_corners());
        let foreign = DMat3::from_axis_angle(DVec3::new(0.2, 0.5, 0.1), 0.33).to_f32_clean();
        assert!(basis.exact_extents(&dop, &foreign).is_err());
        assert!(basis.exact_extents(&dop, &set.rotations()[17]).is_ok());
    }
}
