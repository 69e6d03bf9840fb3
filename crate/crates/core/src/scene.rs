//! Indexed triangle meshes: OBJ loading and synthetic test scenes.

use std::io::BufRead;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, DVec3, Triangle, Vec3};

/// Indexed triangle mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    /// Optional object id per triangle.
    pub tags: Option<Vec<u32>>,
    pub bounds: Aabb,
}

impl Scene {
    /// Builds and validates a scene.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let bounds = Aabb::from_points(&vertices);
        let scene = Scene {
            vertices,
            triangles,
            tags: None,
            bounds,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn with_tags(mut self, tags: Vec<u32>) -> Result<Self> {
        if tags.len() != self.triangles.len() {
            return Err(Error::InvalidMesh(format!(
                "{} tags for {} triangles",
                tags.len(),
                self.triangles.len()
            )));
        }
        self.tags = Some(tags);
        Ok(self)
    }

    /// Rejects non-finite vertices and out-of-range indices.
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        let n = self.vertices.len() as u32;
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&i) = tri.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references vertex {i}, only {n} vertices"
                )));
            }
        }
        if u32::try_from(self.triangles.len()).is_err() {
            return Err(Error::InvalidMesh("too many triangles".into()));
        }
        Ok(())
    }

    pub fn triangle(&self, i: usize) -> Triangle {
        let [a, b, c] = self.triangles[i];
        Triangle::new(
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        )
    }

    /// The triangles with their vertices resolved.
    pub fn triangle_list(&self) -> Vec<Triangle> {
        (0..self.triangles.len()).map(|i| self.triangle(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Concatenates two scenes. Tags, when either side has them, become the
    /// source object ids with the second scene's ids offset past the first's.
    pub fn merge(&self, other: &Scene) -> Scene {
        let offset = self.vertices.len() as u32;
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + offset)));
        let tags = (self.tags.is_some() || other.tags.is_some()).then(|| {
            let a = self.tags.clone().unwrap_or_else(|| vec![0; self.triangles.len()]);
            let shift = a.iter().max().map_or(0, |m| m + 1);
            let b = other.tags.clone().unwrap_or_else(|| vec![0; other.triangles.len()]);
            a.into_iter().chain(b.into_iter().map(|t| t + shift)).collect()
        });
        Scene {
            vertices,
            triangles,
            tags,
            bounds: self.bounds.union(other.bounds),
        }
    }
}

/// Loads a Wavefront OBJ file (positions and faces only).
pub fn load_obj(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_obj(std::io::BufReader::new(file), &path.display().to_string())
}

/// Parses OBJ text. Faces with more than three corners are fan-triangulated;
/// `v/vt/vn` corners and negative (relative) indices are accepted; other
/// statements are ignored. `o` and `g` statements start new object tags.
pub fn parse_obj(reader: impl BufRead, source_name: &str) -> Result<Scene> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::new();
    let mut tags = Vec::new();
    let mut object = 0u32;
    let mut saw_object = false;
    let mut faces_in_object = false;

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.split('#').next().unwrap_or("");
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [0.0f32; 3];
                for slot in &mut c {
                    let tok = it
                        .next()
                        .ok_or_else(|| err(line_no, "vertex needs three coordinates".into()))?;
                    *slot = tok
                        .parse()
                        .map_err(|_| err(line_no, format!("bad coordinate `{tok}`")))?;
                }
                if !c.iter().all(|x| x.is_finite()) {
                    return Err(err(line_no, "vertex is not finite".into()));
                }
                vertices.push(Vec3::from_array(c));
            }
            Some("f") => {
                let corners = it
                    .map(|tok| {
                        let head = tok.split('/').next().unwrap_or("");
                        let idx: i64 = head
                            .parse()
                            .map_err(|_| err(line_no, format!("bad face index `{tok}`")))?;
                        let n = vertices.len() as i64;
                        let abs = if idx > 0 { idx - 1 } else { n + idx };
                        if idx == 0 || abs < 0 || abs >= n {
                            return Err(err(line_no, format!("face index {idx} out of range")));
                        }
                        Ok(abs as u32)
                    })
                    .collect::<Result<Vec<u32>>>()?;
                if corners.len() < 3 {
                    return Err(err(line_no, "face needs at least three corners".into()));
                }
                for k in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[k], corners[k + 1]]);
                    tags.push(object);
                }
                faces_in_object = true;
            }
            Some("o") | Some("g") => {
                if faces_in_object {
                    object += 1;
                    faces_in_object = false;
                }
                saw_object = true;
            }
            _ => {}
        }
    }
    let scene = Scene::new(vertices, triangles)?;
    if saw_object {
        scene.with_tags(tags)
    } else {
        Ok(scene)
    }
}

/// Parameters of [`gen_hairball`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HairballParams {
    pub seed: u64,
    pub strands: u32,
    pub segments_per_strand: u32,
    /// Radius of the bounding sphere.
    pub radius: f32,
    /// Prism circumradius. Clamped below to `MIN_THICKNESS · radius`.
    pub thickness: f32,
    pub segment_length: f32,
    /// Bend per segment in radians.
    pub curvature: f32,
}

impl Default for HairballParams {
    fn default() -> Self {
        HairballParams {
            seed: 42,
            strands: 1000,
            segments_per_strand: 8,
            radius: 1.0,
            thickness: 0.004,
            segment_length: 0.25,
            curvature: 0.2,
        }
    }
}

/// Smallest prism thickness relative to the sphere radius.
pub const MIN_THICKNESS: f32 = 1e-4;

fn unit_vector(rng: &mut ChaCha8Rng) -> DVec3 {
    loop {
        let v = DVec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let l = v.length_squared();
        if l > 1e-6 && l <= 1.0 {
            return v * (1.0 / l.sqrt());
        }
    }
}

fn perpendicular(d: DVec3, hint: DVec3) -> DVec3 {
    let p = hint - d * d.dot(hint);
    if p.length_squared() > 1e-12 {
        return p.normalized();
    }
    let axis = if d.x.abs() < 0.9 { DVec3::X } else { DVec3::Y };
    (axis - d * d.dot(axis)).normalized()
}

/// Random strands of thin triangular prisms inside a sphere.
///
/// Each strand starts at a random point in the sphere with a random heading
/// and turns by `curvature` per segment about a fixed random axis
/// perpendicular to the heading; a segment that would leave the sphere has
/// its heading reflected. Every segment is a closed prism of 8 triangles.
pub fn gen_hairball(params: &HairballParams) -> Result<Scene> {
    if params.strands == 0 || params.segments_per_strand == 0 {
        return Err(Error::invalid("hairball needs at least one strand and one segment"));
    }
    if !(params.radius > 0.0 && params.radius.is_finite()) {
        return Err(Error::invalid("hairball radius must be positive"));
    }
    if !(params.segment_length > 0.0 && params.thickness >= 0.0) {
        return Err(Error::invalid("hairball segment length must be positive"));
    }
    let radius = params.radius as f64;
    let thickness = (params.thickness as f64).max(MIN_THICKNESS as f64 * radius);
    let seg_len = params.segment_length as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let segments = (params.strands * params.segments_per_strand) as usize;
    let mut vertices = Vec::with_capacity(segments * 6);
    let mut triangles = Vec::with_capacity(segments * 8);
    let mut tags = Vec::with_capacity(segments * 8);

    for strand in 0..params.strands {
        let mut p = unit_vector(&mut rng) * (radius * rng.gen_range(0.0f64..1.0).cbrt());
        let mut d = unit_vector(&mut rng);
        let bend_axis = perpendicular(d, unit_vector(&mut rng));
        let turn = params.curvature as f64;

        for _ in 0..params.segments_per_strand {
            let mut q = p + d * seg_len;
            if q.length() > radius {
                let n = p.normalized();
                if d.dot(n) > 0.0 {
                    d = d - n * (2.0 * d.dot(n));
                }
                q = p + d * seg_len;
                if q.length() > radius {
                    q = q * (radius / q.length());
                }
            }
            push_prism(&mut vertices, &mut triangles, p, q, thickness, &mut rng);
            tags.extend(std::iter::repeat(strand).take(8));
            p = q;
            d = rotate(d, bend_axis, turn);
        }
    }
    Scene::new(vertices, triangles)?.with_tags(tags)
}

fn rotate(v: DVec3, axis: DVec3, angle: f64) -> DVec3 {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

fn push_prism(
    vertices: &mut Vec<Vec3>,
    triangles: &mut Vec<[u32; 3]>,
    p: DVec3,
    q: DVec3,
    thickness: f64,
    rng: &mut ChaCha8Rng,
) {
    let d = (q - p).normalized();
    let u = perpendicular(d, unit_vector(rng));
    let w = d.cross(u);
    let base = vertices.len() as u32;
    for end in [p, q] {
        for k in 0..3 {
            let a = k as f64 * std::f64::consts::TAU / 3.0;
            let off = u * (thickness * a.cos()) + w * (thickness * a.sin());
            vertices.push((end + off).to_f32());
        }
    }
    // Bottom cap faces -d, top cap +d, sides outward.
    triangles.push([base, base + 2, base + 1]);
    triangles.push([base + 3, base + 4, base + 5]);
    for k in 0..3 {
        let (a, b) = (base + k, base + (k + 1) % 3);
        triangles.push([a, b, b + 3]);
        triangles.push([a, b + 3, a + 3]);
    }
}

/// Axis-aligned unit cubes on a jittered grid, 12 triangles each.
pub fn gen_axis_aligned_grid(seed: u64, count: u32) -> Result<Scene> {
    if count == 0 {
        return Err(Error::invalid("grid needs at least one cube"));
    }
    let side = (count as f64).cbrt().ceil() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = Vec::with_capacity(count as usize * 8);
    let mut triangles = Vec::with_capacity(count as usize * 12);
    let mut tags = Vec::with_capacity(count as usize * 12);
    for c in 0..count {
        let cell = [c % side, (c / side) % side, c / (side * side)];
        let origin: [f32; 3] = std::array::from_fn(|k| 2.0 * cell[k] as f32 + rng.gen_range(-0.4f32..0.4));
        let base = vertices.len() as u32;
        for i in 0..8u32 {
            vertices.push(Vec3::new(
                origin[0] + (i & 1) as f32,
                origin[1] + (i >> 1 & 1) as f32,
                origin[2] + (i >> 2 & 1) as f32,
            ));
        }
        // Outward-wound faces: -x, +x, -y, +y, -z, +z.
        const FACES: [[u32; 4]; 6] = [
            [0, 4, 6, 2],
            [1, 3, 7, 5],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 2, 3, 1],
            [4, 5, 7, 6],
        ];
        for f in FACES {
            triangles.push([base + f[0], base + f[1], base + f[2]]);
            triangles.push([base + f[0], base + f[2], base + f[3]]);
            tags.extend([c, c]);
        }
    }
    Scene::new(vertices, triangles)?.with_tags(tags)
}
