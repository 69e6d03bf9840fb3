//! C ABI for the `dobb` library.
//!
//! Objects are opaque handles created and destroyed through this API. Every
//! fallible function returns a [`DobbStatus`]; on failure a description is
//! available from [`dobb_last_error`] on the same thread. Panics never cross
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use dobb::{
    batch_trace, convert, gen_axis_aligned_grid, gen_hairball, load_obj, sah_cost, BuildConfig, ConversionConfig,
    ConversionMode, DobbAnnotation, Error, HairballParams, Ray, RotationSet, Scene, Vec3, WideBvh,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DobbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EmptyScene = 3,
    InvalidMesh = 4,
    MalformedTree = 5,
    Parse = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for DobbStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => DobbStatus::InvalidArgument,
            Error::EmptyScene => DobbStatus::EmptyScene,
            Error::InvalidMesh(_) => DobbStatus::InvalidMesh,
            Error::MalformedTree(_) => DobbStatus::MalformedTree,
            Error::Parse { .. } => DobbStatus::Parse,
            Error::Config(_) => DobbStatus::Config,
            Error::Io(_) => DobbStatus::Io,
        }
    }
}

/// Conversion mode.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DobbMode {
    Heuristic = 0,
    Brute = 1,
}

/// Conversion parameters. `max_levels < 0` means no level limit.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DobbConvertOptions {
    pub alpha: f64,
    pub max_levels: i32,
    pub mode: DobbMode,
    /// Rotation set axes (3..=13) and angle subdivision (>= 1).
    pub axes: u32,
    pub m: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DobbRay {
    pub origin: [f32; 3],
    pub direction: [f32; 3],
    pub t_min: f32,
    pub t_max: f32,
}

/// Closest hit. `hit` is 0 on a miss, in which case `prim` is `UINT32_MAX`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DobbHit {
    pub prim: u32,
    pub t: f32,
    pub u: f32,
    pub v: f32,
    pub hit: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DobbStats {
    pub iterations: u32,
    pub node_tests: u32,
    pub tri_tests: u32,
}

/// Opaque triangle mesh.
pub struct DobbScene {
    scene: Scene,
}

/// Opaque hierarchy with an optional OBB annotation.
pub struct DobbBvh {
    tree: WideBvh,
    annotation: Option<DobbAnnotation>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul bytes were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: DobbStatus, msg: impl Into<String>) -> DobbStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), DobbStatus>) -> DobbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DobbStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(DobbStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

fn lift<T>(r: dobb::Result<T>) -> Result<T, DobbStatus> {
    r.map_err(|e| fail(DobbStatus::from(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), DobbStatus> {
    if p.is_null() {
        Err(fail(DobbStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dobb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dobb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn store<T>(out: *mut *mut T, value: T) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Creates a scene from `vertex_count` xyz triples and `triangle_count`
/// index triples.
///
/// # Safety
/// `vertices` must point to `3 * vertex_count` floats, `indices` to
/// `3 * triangle_count` integers, `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn dobb_scene_from_mesh(
    vertices: *const f32,
    vertex_count: usize,
    indices: *const u32,
    triangle_count: usize,
    out: *mut *mut DobbScene,
) -> DobbStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(vertices, "vertices")?;
        non_null(indices, "indices")?;
        let v = std::slice::from_raw_parts(vertices, vertex_count * 3);
        let t = std::slice::from_raw_parts(indices, triangle_count * 3);
        let scene = lift(Scene::new(
            v.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect(),
            t.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        ))?;
        store(out, DobbScene { scene });
        Ok(())
    })
}

/// Loads an OBJ file.
///
/// # Safety
/// `path` must be a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dobb_scene_load_obj(path: *const c_char, out: *mut *mut DobbScene) -> DobbStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(path, "path")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(DobbStatus::InvalidArgument, "path is not valid UTF-8"))?;
        let scene = lift(load_obj(path))?;
        store(out, DobbScene { scene });
        Ok(())
    })
}

/// Generates the synthetic hairball scene.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dobb_scene_hairball(
    seed: u64,
    strands: u32,
    segments: u32,
    out: *mut *mut DobbScene,
) -> DobbStatus {
    guard(|| {
        non_null(out, "out")?;
        let scene = lift(gen_hairball(&HairballParams {
            seed,
            strands,
            segments_per_strand: segments,
            ..HairballParams::default()
        }))?;
        store(out, DobbScene { scene });
        Ok(())
    })
}

/// Generates `count` jittered axis-aligned cubes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dobb_scene_grid(seed: u64, count: u32, out: *mut *mut DobbScene) -> DobbStatus {
    guard(|| {
        non_null(out, "out")?;
        let scene = lift(gen_axis_aligned_grid(seed, count))?;
        store(out, DobbScene { scene });
        Ok(())
    })
}

/// Number of triangles, 0 for a null handle.
///
/// # Safety
/// `scene` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dobb_scene_triangle_count(scene: *const DobbScene) -> usize {
    scene.as_ref().map_or(0, |s| s.scene.len())
}

/// Destroys a scene. Null is ignored.
///
/// # Safety
/// `scene` must be null or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dobb_scene_free(scene: *mut DobbScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Builds an AABB hierarchy with up to `width` (2..=8) children per node.
///
/// # Safety
/// `scene` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dobb_bvh_build(scene: *const DobbScene, width: u32, out: *mut *mut DobbBvh) -> DobbStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(scene, "scene")?;
        let tree = lift(WideBvh::build(
            &(*scene).scene,
            &BuildConfig {
                width: width as usize,
                ..BuildConfig::default()
            },
        ))?;
        store(out, DobbBvh { tree, annotation: None });
        Ok(())
    })
}

/// Default conversion options: alpha 1, no level limit, heuristic mode, the
/// 104-rotation set.
#[no_mangle]
pub extern "C" fn dobb_convert_options_default() -> DobbConvertOptions {
    DobbConvertOptions {
        alpha: 1.0,
        max_levels: -1,
        mode: DobbMode::Heuristic,
        axes: 13,
        m: 4,
    }
}

/// Replaces the hierarchy's annotation with a fresh conversion.
///
/// # Safety
/// `bvh` must be a live handle, `options` null or valid.
#[no_mangle]
pub unsafe extern "C" fn dobb_bvh_convert(bvh: *mut DobbBvh, options: *const DobbConvertOptions) -> DobbStatus {
    guard(|| {
        non_null(bvh, "bvh")?;
        let o = options.as_ref().copied().unwrap_or_else(|| dobb_convert_options_default());
        let set = Arc::new(lift(RotationSet::new(o.axes as usize, o.m))?);
        let cfg = ConversionConfig {
            alpha: o.alpha,
            max_levels_from_leaf: u32::try_from(o.max_levels).ok(),
            mode: match o.mode {
                DobbMode::Heuristic => ConversionMode::Heuristic,
                DobbMode::Brute => ConversionMode::BruteForce,
            },
        };
        let b = &mut *bvh;
        b.annotation = Some(lift(convert(&b.tree, set, &cfg))?);
        Ok(())
    })
}

/// Drops the annotation, returning to the plain AABB hierarchy.
///
/// # Safety
/// `bvh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dobb_bvh_clear_annotation(bvh: *mut DobbBvh) {
    if let Some(b) = bvh.as_mut() {
        b.annotation = None;
    }
}

/// Number of interior nodes, 0 for a null handle.
///
/// # Safety
/// `bvh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dobb_bvh_node_count(bvh: *const DobbBvh) -> usize {
    bvh.as_ref().map_or(0, |b| b.tree.nodes.len())
}

/// Number of interior nodes carrying an OBB.
///
/// # Safety
/// `bvh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dobb_bvh_annotated_count(bvh: *const DobbBvh) -> usize {
    bvh.as_ref()
        .and_then(|b| b.annotation.as_ref())
        .map_or(0, |a| a.annotated_count())
}

/// Surface area heuristic of the hierarchy (with its annotation, if any).
///
/// # Safety
/// `bvh` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dobb_bvh_sah(bvh: *const DobbBvh, out: *mut f64) -> DobbStatus {
    guard(|| {
        non_null(bvh, "bvh")?;
        non_null(out, "out")?;
        let b = &*bvh;
        *out = sah_cost(&b.tree, b.annotation.as_ref());
        Ok(())
    })
}

/// Traces `count` rays. `stats` may be null.
///
/// # Safety
/// `rays` and `hits` (and `stats` if non-null) must hold `count` elements.
#[no_mangle]
pub unsafe extern "C" fn dobb_bvh_trace(
    bvh: *const DobbBvh,
    rays: *const DobbRay,
    count: usize,
    hits: *mut DobbHit,
    stats: *mut DobbStats,
) -> DobbStatus {
    guard(|| {
        non_null(bvh, "bvh")?;
        if count == 0 {
            return Ok(());
        }
        non_null(rays, "rays")?;
        non_null(hits, "hits")?;
        let b = &*bvh;
        let rays: Vec<Ray> = std::slice::from_raw_parts(rays, count)
            .iter()
            .map(|r| Ray {
                origin: Vec3::from_array(r.origin),
                direction: Vec3::from_array(r.direction),
                t_min: r.t_min,
                t_max: r.t_max,
            })
            .collect();
        let result = lift(batch_trace(&b.tree, b.annotation.as_ref(), &rays))?;
        let out = std::slice::from_raw_parts_mut(hits, count);
        for (o, h) in out.iter_mut().zip(&result.hits) {
            *o = DobbHit {
                prim: h.prim.unwrap_or(u32::MAX),
                t: h.t,
                u: h.u,
                v: h.v,
                hit: h.is_hit() as i32,
            };
        }
        if !stats.is_null() {
            let out = std::slice::from_raw_parts_mut(stats, count);
            for (o, s) in out.iter_mut().zip(&result.stats) {
                *o = DobbStats {
                    iterations: s.iterations,
                    node_tests: s.node_tests,
                    tri_tests: s.tri_tests,
                };
            }
        }
        Ok(())
    })
}

/// Destroys a hierarchy. Null is ignored.
///
/// # Safety
/// `bvh` must be null or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dobb_bvh_free(bvh: *mut DobbBvh) {
    if !bvh.is_null() {
        drop(Box::from_raw(bvh));
    }
}
