//! Discrete rotation sets.
//!
//! A set is the product of a fixed axis list and a quantized angle list:
//! rotation `k·|A| + a` turns `axes[k]` by `angles[a]`. Matrices are stored in
//! two tables, a pool of distinct `f32` values and twelve pool references per
//! matrix, and decode back bit-exactly. Orientation frames are mapped to the
//! closest member through a constant-size lookup grid.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{DMat3, DVec3, Mat3, Vec3};

/// Azimuth cells of the nearest-rotation grid.
pub const LUT_AZIMUTH: usize = 32;
/// Elevation cells of the nearest-rotation grid.
pub const LUT_ELEVATION: usize = 16;
/// Roll cells of the nearest-rotation grid.
pub const LUT_ROLL: usize = 32;

const AZIMUTH_STEP: f64 = 2.0 * PI / LUT_AZIMUTH as f64;
const ELEVATION_STEP: f64 = PI / LUT_ELEVATION as f64;
const ROLL_STEP: f64 = 2.0 * PI / LUT_ROLL as f64;

/// Upper bound on the rotation angle between any frame and the center of its
/// grid cell (half a cell along each parameter).
pub const LUT_HALF_CELL_BOUND: f64 = 0.5 * (AZIMUTH_STEP + ELEVATION_STEP + ROLL_STEP);

/// Integer directions of the supported axes: Euclidean, then face diagonals,
/// then space diagonals, one per antipodal pair.
pub(crate) const AXIS_DIRECTIONS: [[i8; 3]; 13] = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, -1, 0],
    [1, 0, 1],
    [1, 0, -1],
    [0, 1, 1],
    [0, 1, -1],
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
];

/// Index of one rotation inside a [`RotationSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObbIndex(pub u16);

impl ObbIndex {
    #[inline]
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

/// Quantized angles `±Δ, ±2Δ, …, ±mΔ` with `Δ = π / 2m`, ordered
/// `+Δ, −Δ, +2Δ, −2Δ, …`.
pub fn build_angles(m: u32) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::invalid("angle subdivision m must be at least 1"));
    }
    let step = FRAC_PI_2 / m as f64;
    Ok((1..=m)
        .flat_map(|k| {
            let a = k as f64 * step;
            [a, -a]
        })
        .collect())
}

/// The first `count` unit axes (`3 ≤ count ≤ 13`).
pub fn build_axes(count: usize) -> Result<Vec<Vec3>> {
    if !(3..=AXIS_DIRECTIONS.len()).contains(&count) {
        return Err(Error::invalid(format!(
            "axis count {count} is outside the supported range 3..=13"
        )));
    }
    Ok(AXIS_DIRECTIONS[..count]
        .iter()
        .map(|d| axis_direction_f64(d).to_f32())
        .collect())
}

fn axis_direction_f64(d: &[i8; 3]) -> DVec3 {
    DVec3::new(d[0] as f64, d[1] as f64, d[2] as f64).normalized()
}

/// Signed permutation matrices with determinant +1: the rotations that map a
/// box onto itself.
#[derive(Debug, Clone, Copy)]
struct BoxSymmetry {
    perm: [usize; 3],
    sign: [f64; 3],
}

fn box_symmetries() -> Vec<BoxSymmetry> {
    const PERMS: [([usize; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([0, 2, 1], -1.0),
        ([1, 0, 2], -1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([2, 1, 0], -1.0),
    ];
    let mut out = Vec::with_capacity(24);
    for (perm, parity) in PERMS {
        for bits in 0..8u32 {
            let sign = [0, 1, 2].map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 });
            if parity * sign[0] * sign[1] * sign[2] > 0.0 {
                out.push(BoxSymmetry { perm, sign });
            }
        }
    }
    out
}

/// Symmetry `g` with the largest `trace(m g)`, lowest on ties, and that trace.
fn best_symmetry(m: &DMat3, syms: &[BoxSymmetry]) -> (BoxSymmetry, f64) {
    let mut best = (syms[0], f64::NEG_INFINITY);
    for g in syms {
        let tr = (0..3).map(|i| g.sign[i] * m.get(i, g.perm[i])).sum::<f64>();
        if tr > best.1 {
            best = (*g, tr);
        }
    }
    best
}

/// Rotation angle of `m g`, from `‖m g − I‖_F = 2√2 sin(θ/2)`. Unlike the
/// trace formula this stays accurate near zero for float-rounded inputs.
fn symmetric_angle(m: &DMat3, g: &BoxSymmetry) -> f64 {
    let mut dev = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            let v = m.get(r, g.perm[c]) * g.sign[c] - if r == c { 1.0 } else { 0.0 };
            dev += v * v;
        }
    }
    2.0 * (dev.sqrt() / (2.0 * SQRT_2)).min(1.0).asin()
}

/// Geodesic distance between two orientations of a box: the smallest rotation
/// angle between `p` and any of the 24 symmetric variants of `q`.
pub fn box_distance(p: &DMat3, q: &DMat3) -> f64 {
    let m = p.transpose().mul(q);
    let (g, _) = best_symmetry(&m, &box_symmetries());
    symmetric_angle(&m, &g)
}

/// Azimuth/elevation/roll parameters with `F = Rz(azimuth)·Ry(−elevation)·Rx(roll)`.
/// The first column of `F` points at (azimuth, elevation).
fn frame_to_angles(f: &DMat3) -> (f64, f64, f64) {
    let a0 = f.cols[0];
    let azimuth = a0.y.atan2(a0.x);
    let elevation = a0.z.clamp(-1.0, 1.0).asin();
    let m = DMat3::rotation_y(elevation)
        .mul(&DMat3::rotation_z(-azimuth))
        .mul(f);
    let roll = m.get(2, 1).atan2(m.get(1, 1));
    (azimuth, elevation, roll)
}

fn angles_to_frame(azimuth: f64, elevation: f64, roll: f64) -> DMat3 {
    DMat3::rotation_z(azimuth)
        .mul(&DMat3::rotation_y(-elevation))
        .mul(&DMat3::rotation_x(roll))
}

fn lut_cell(azimuth: f64, elevation: f64, roll: f64) -> (usize, usize, usize) {
    let wrap = |v: f64, step: f64, n: usize| ((v / step).round() as i64).rem_euclid(n as i64) as usize;
    let ia = wrap(azimuth, AZIMUTH_STEP, LUT_AZIMUTH);
    let ie = (((elevation + FRAC_PI_2) / ELEVATION_STEP).floor() as i64)
        .clamp(0, LUT_ELEVATION as i64 - 1) as usize;
    let ir = wrap(roll, ROLL_STEP, LUT_ROLL);
    (ia, ie, ir)
}

fn lut_cell_center(ia: usize, ie: usize, ir: usize) -> DMat3 {
    angles_to_frame(
        ia as f64 * AZIMUTH_STEP,
        -FRAC_PI_2 + (ie as f64 + 0.5) * ELEVATION_STEP,
        ir as f64 * ROLL_STEP,
    )
}

#[inline]
fn lut_offset(ia: usize, ie: usize, ir: usize) -> usize {
    (ia * LUT_ELEVATION + ie) * LUT_ROLL + ir
}

/// Makes a frame right-handed by flipping its third column if needed. A box
/// does not change under that reflection.
fn proper_frame(f: &DMat3) -> DMat3 {
    if f.determinant() < 0.0 {
        DMat3::from_cols(f.cols[0], f.cols[1], -f.cols[2])
    } else {
        *f
    }
}

/// A discrete rotation set with its encoding tables and nearest-rotation grid.
#[derive(Debug, Clone)]
pub struct RotationSet {
    axes: Vec<Vec3>,
    angles: Vec<f64>,
    rotations: Vec<Mat3>,
    pool: Vec<f32>,
    refs: Vec<[u16; 12]>,
    lut: Vec<u16>,
}

impl RotationSet {
    /// Builds the `axis_count · 2m` rotations, the encoding tables and the
    /// lookup grid (exhaustive nearest search per cell center).
    pub fn new(axis_count: usize, m: u32) -> Result<Self> {
        let axes = build_axes(axis_count)?;
        let angles = build_angles(m)?;
        let rotations: Vec<Mat3> = AXIS_DIRECTIONS[..axis_count]
            .iter()
            .flat_map(|d| {
                let axis = axis_direction_f64(d);
                angles
                    .iter()
                    .map(move |&a| DMat3::from_axis_angle(axis, a).to_f32_clean())
            })
            .collect();
        if rotations.len() > u16::MAX as usize {
            return Err(Error::invalid("rotation set too large"));
        }
        let (pool, refs) = encode_tables(&rotations);
        let mut set = RotationSet {
            axes,
            angles,
            rotations,
            pool,
            refs,
            lut: Vec::new(),
        };
        set.lut = set.build_lut();
        Ok(set)
    }

    /// The 104-rotation set: 13 axes, 8 angles.
    pub fn standard() -> Self {
        RotationSet::new(13, 4).expect("13 axes with m = 4 is a supported configuration")
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn axes(&self) -> &[Vec3] {
        &self.axes
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn rotations(&self) -> &[Mat3] {
        &self.rotations
    }

    pub fn rotation(&self, index: ObbIndex) -> &Mat3 {
        &self.rotations[index.get()]
    }

    /// `(axis index, angle index)` of a rotation.
    pub fn axis_angle_of(&self, index: ObbIndex) -> (usize, usize) {
        (index.get() / self.angles.len(), index.get() % self.angles.len())
    }

    /// Shared float pool. Entry 0 is `+0.0`.
    pub fn float_pool(&self) -> &[f32] {
        &self.pool
    }

    /// Per-rotation references into [`RotationSet::float_pool`], laid out as a
    /// row-major 3x4 matrix: `refs[4r + c]` is entry `(r, c)` for `c < 3`, and
    /// `refs[4r + 3]` is a zero translation column (pool entry 0).
    pub fn matrix_refs(&self) -> &[[u16; 12]] {
        &self.refs
    }

    /// Reconstructs a rotation from the two tables.
    pub fn decode(&self, index: ObbIndex) -> Mat3 {
        let refs = &self.refs[index.get()];
        let mut rows = [[0.0f32; 3]; 3];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.pool[refs[4 * r + c] as usize];
            }
        }
        Mat3::from_rows(rows)
    }

    /// Width of an encoded index field: `⌈log₂(D + 1)⌉`, leaving the all-ones
    /// pattern free as the "no OBB" sentinel.
    pub fn index_bits(&self) -> u32 {
        let values = self.rotations.len() as u32 + 1;
        32 - (values - 1).leading_zeros()
    }

    /// Sentinel value of the encoded index field.
    pub fn sentinel(&self) -> u32 {
        (1u32 << self.index_bits()) - 1
    }

    /// Exhaustive nearest member under [`box_distance`], lowest index on ties.
    pub fn nearest_exhaustive(&self, frame: &DMat3) -> (ObbIndex, f64) {
        let f = proper_frame(frame);
        let syms = box_symmetries();
        let ft = f.transpose();
        let mut best = (ObbIndex(0), f64::NEG_INFINITY, DMat3::IDENTITY, syms[0]);
        for (i, r) in self.rotations.iter().enumerate() {
            let m = ft.mul(&r.to_f64());
            let (g, tr) = best_symmetry(&m, &syms);
            if tr > best.1 {
                best = (ObbIndex(i as u16), tr, m, g);
            }
        }
        (best.0, symmetric_angle(&best.2, &best.3))
    }

    /// Maps an orthonormal frame to a member of the set through the lookup grid.
    ///
    /// The answer is within `2 ·` [`LUT_HALF_CELL_BOUND`] of the exhaustive
    /// optimum.
    pub fn nearest_rotation(&self, frame: &DMat3) -> ObbIndex {
        let (a, e, r) = frame_to_angles(&proper_frame(frame));
        let (ia, ie, ir) = lut_cell(a, e, r);
        ObbIndex(self.lut[lut_offset(ia, ie, ir)])
    }

    /// Exhaustive answer per cell center; then each member claims the cell
    /// it falls in (first member wins) so members map to themselves. A member
    /// lies within half a cell of its center, so the error bound still holds.
    fn build_lut(&self) -> Vec<u16> {
        use rayon::prelude::*;
        let mut lut: Vec<u16> = (0..LUT_AZIMUTH * LUT_ELEVATION * LUT_ROLL)
            .into_par_iter()
            .map(|cell| {
                let ir = cell % LUT_ROLL;
                let ie = (cell / LUT_ROLL) % LUT_ELEVATION;
                let ia = cell / (LUT_ROLL * LUT_ELEVATION);
                self.nearest_exhaustive(&lut_cell_center(ia, ie, ir)).0 .0
            })
            .collect();
        let mut claimed = vec![false; lut.len()];
        for (i, r) in self.rotations.iter().enumerate() {
            let r = r.to_f64();
            let (a, e, roll) = frame_to_angles(&proper_frame(&r));
            let (ia, ie, ir) = lut_cell(a, e, roll);
            let cell = lut_offset(ia, ie, ir);
            if !claimed[cell] {
                lut[cell] = i as u16;
                claimed[cell] = true;
            }
        }
        lut
    }

    /// Size of the lookup grid in entries.
    pub fn lut_len(&self) -> usize {
        self.lut.len()
    }

    /// Serializable snapshot of the set and its tables.
    pub fn dump(&self) -> RotationSetDump {
        RotationSetDump {
            format_version: ROTATION_DUMP_VERSION,
            axes: self.axes.iter().map(|a| a.to_array()).collect(),
            angles: self.angles.clone(),
            rotations: self.rotations.iter().map(|r| r.to_rows()).collect(),
            float_pool: self.pool.clone(),
            matrix_refs: self.refs.iter().map(|r| r.to_vec()).collect(),
            lut_shape: [LUT_AZIMUTH, LUT_ELEVATION, LUT_ROLL],
            lut: self.lut.clone(),
        }
    }
}

/// Version of [`RotationSetDump`].
pub const ROTATION_DUMP_VERSION: u32 = 1;

/// JSON layout written by `dobb rotations`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotationSetDump {
    pub format_version: u32,
    pub axes: Vec<[f32; 3]>,
    pub angles: Vec<f64>,
    /// Row-major matrices in index order.
    pub rotations: Vec<[[f32; 3]; 3]>,
    pub float_pool: Vec<f32>,
    /// Twelve pool references per rotation, row-major 3x4.
    pub matrix_refs: Vec<Vec<u16>>,
    /// `[azimuth, elevation, roll]` cell counts; `lut` is indexed
    /// `(azimuth · elevation_cells + elevation) · roll_cells + roll`.
    pub lut_shape: [usize; 3],
    pub lut: Vec<u16>,
}

/// Builds the shared float pool (distinct bit patterns, `+0.0` first) and the
/// per-matrix reference table.
fn encode_tables(rotations: &[Mat3]) -> (Vec<f32>, Vec<[u16; 12]>) {
    let mut pool = vec![0.0f32];
    let mut slot: HashMap<u32, u16> = HashMap::from([(0.0f32.to_bits(), 0)]);
    let refs = rotations
        .iter()
        .map(|m| {
            let mut r = [0u16; 12];
            for row in 0..3 {
                for col in 0..3 {
                    let v = m.get(row, col);
                    let idx = *slot.entry(v.to_bits()).or_insert_with(|| {
                        pool.push(v);
                        (pool.len() - 1) as u16
                    });
                    r[4 * row + col] = idx;
                }
            }
            r
        })
        .collect();
    (pool, refs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_examples() {
        let a = build_angles(1).unwrap();
        assert_eq!(a, vec![FRAC_PI_2, -FRAC_PI_2]);
        let a = build_angles(4).unwrap();
        assert_eq!(a.len(), 8);
        let expect = [PI / 8.0, PI / 4.0, 3.0 * PI / 8.0, PI / 2.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((a[2 * k] - e).abs() < 1e-15);
            assert!((a[2 * k + 1] + e).abs() < 1e-15);
        }
        assert!(a.iter().all(|v| v.abs() > 0.0 && v.abs() <= FRAC_PI_2));
        assert!(build_angles(0).is_err());
    }

    #[test]
    fn axes_examples() {
        assert_eq!(build_axes(3).unwrap(), vec![Vec3::X, Vec3::Y, Vec3::Z]);
        let axes = build_axes(13).unwrap();
        assert_eq!(axes.len(), 13);
        for a in &axes {
            assert!((a.to_f64().length() - 1.0).abs() <= 1e-7);
        }
        for (i, a) in axes.iter().enumerate() {
            for b in &axes[i + 1..] {
                assert!((a.to_f64() + b.to_f64()).length() > 1e-3, "antipodal pair");
                assert!((a.to_f64() - b.to_f64()).length() > 1e-3, "duplicate");
            }
        }
        assert!(build_axes(2).is_err());
        assert!(build_axes(14).is_err());
    }

    #[test]
    fn quarter_turn_set() {
        let set = RotationSet::new(3, 1).unwrap();
        assert_eq!(set.len(), 6);
        for r in set.rotations() {
            for row in r.to_rows() {
                for v in row {
                    assert!(v == 0.0 || v == 1.0 || v == -1.0);
                }
            }
            assert!((r.to_f64().determinant() - 1.0).abs() < 1e-6);
        }
        // {0, 1, -1}
        assert_eq!(set.float_pool().len(), 3);
    }

    #[test]
    fn index_bits() {
        assert_eq!(RotationSet::standard().index_bits(), 7);
        assert_eq!(RotationSet::new(3, 1).unwrap().index_bits(), 3);
        // 128 rotations would need an 8th bit for the sentinel.
        assert_eq!(RotationSet::new(8, 8).unwrap().index_bits(), 8);
    }

    #[test]
    fn angle_round_trip() {
        for &(a, e, r) in &[(0.3, 0.2, -1.0), (-2.0, -1.2, 2.5), (1.0, 0.0, 0.0)] {
            let (a2, e2, r2) = frame_to_angles(&angles_to_frame(a, e, r));
            assert!((a - a2).abs() < 1e-12 && (e - e2).abs() < 1e-12 && (r - r2).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetries_are_rotations() {
        let syms = box_symmetries();
        assert_eq!(syms.len(), 24);
        // Identity maps to distance 0 from every quarter turn.
        let q = DMat3::rotation_x(FRAC_PI_2);
        assert!(box_distance(&DMat3::IDENTITY, &q) < 1e-7);
        let d = box_distance(&DMat3::IDENTITY, &DMat3::rotation_z(0.3));
        assert!((d - 0.3).abs() < 1e-9);
    }
}
