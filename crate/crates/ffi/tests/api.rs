use std::ffi::{CStr, CString};
use std::ptr;

use dobb_ffi::*;

fn last_error() -> String {
    let p = dobb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn quad_scene() -> *mut DobbScene {
    let v: [f32; 12] = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
    let i: [u32; 6] = [0, 1, 2, 0, 2, 3];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { dobb_scene_from_mesh(v.as_ptr(), 4, i.as_ptr(), 2, &mut s) }, DobbStatus::Ok);
    s
}

#[test]
fn mesh_build_trace() {
    unsafe {
        let s = quad_scene();
        assert_eq!(dobb_scene_triangle_count(s), 2);
        let mut b = ptr::null_mut();
        assert_eq!(dobb_bvh_build(s, 4, &mut b), DobbStatus::Ok);
        let rays = [
            DobbRay {
                origin: [0.25, 0.75, 1.0],
                direction: [0.0, 0.0, -1.0],
                t_min: 0.0,
                t_max: f32::INFINITY,
            },
            DobbRay {
                origin: [5.0, 5.0, 1.0],
                direction: [0.0, 0.0, -1.0],
                t_min: 0.0,
                t_max: f32::INFINITY,
            },
        ];
        let mut hits = [DobbHit::default(); 2];
        let mut stats = [DobbStats::default(); 2];
        assert_eq!(
            dobb_bvh_trace(b, rays.as_ptr(), 2, hits.as_mut_ptr(), stats.as_mut_ptr()),
            DobbStatus::Ok
        );
        assert_eq!(hits[0].hit, 1);
        assert_eq!(hits[0].prim, 1);
        assert_eq!(hits[0].t, 1.0);
        assert_eq!(hits[1].hit, 0);
        assert_eq!(hits[1].prim, u32::MAX);
        assert_eq!(stats[1].iterations, 0);
        dobb_bvh_free(b);
        dobb_scene_free(s);
    }
}

#[test]
fn convert_lowers_sah_on_hairball() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(dobb_scene_hairball(7, 200, 8, &mut s), DobbStatus::Ok);
        assert_eq!(dobb_scene_triangle_count(s), 200 * 8 * 8);
        let mut b = ptr::null_mut();
        assert_eq!(dobb_bvh_build(s, 8, &mut b), DobbStatus::Ok);
        let mut base = 0.0;
        assert_eq!(dobb_bvh_sah(b, &mut base), DobbStatus::Ok);

        let mut opts = dobb_convert_options_default();
        opts.mode = DobbMode::Brute;
        assert_eq!(dobb_bvh_convert(b, &opts), DobbStatus::Ok);
        assert!(dobb_bvh_annotated_count(b) > 0);
        assert!(dobb_bvh_annotated_count(b) <= dobb_bvh_node_count(b));
        let mut rotated = 0.0;
        assert_eq!(dobb_bvh_sah(b, &mut rotated), DobbStatus::Ok);
        assert!(rotated < base, "{rotated} >= {base}");

        dobb_bvh_clear_annotation(b);
        assert_eq!(dobb_bvh_annotated_count(b), 0);
        let mut again = 0.0;
        dobb_bvh_sah(b, &mut again);
        assert_eq!(again, base);

        assert_eq!(dobb_bvh_convert(b, ptr::null()), DobbStatus::Ok);
        dobb_bvh_free(b);
        dobb_scene_free(s);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(
            dobb_scene_from_mesh(ptr::null(), 0, ptr::null(), 0, &mut s),
            DobbStatus::NullPointer
        );
        assert!(last_error().contains("vertices"));

        let v = [0.0f32; 3];
        let i = [0u32, 0, 5];
        assert_eq!(dobb_scene_from_mesh(v.as_ptr(), 1, i.as_ptr(), 1, &mut s), DobbStatus::InvalidMesh);
        assert!(s.is_null());

        assert_eq!(dobb_scene_grid(1, 0, &mut s), DobbStatus::InvalidArgument);
        let mut empty = ptr::null_mut();
        assert_eq!(dobb_scene_from_mesh(v.as_ptr(), 1, i.as_ptr(), 0, &mut empty), DobbStatus::Ok);
        let mut b = ptr::null_mut();
        assert_eq!(dobb_bvh_build(empty, 4, &mut b), DobbStatus::EmptyScene);
        dobb_scene_free(empty);

        let q = quad_scene();
        let mut b = ptr::null_mut();
        assert_eq!(dobb_bvh_build(q, 9, &mut b), DobbStatus::InvalidArgument);
        assert!(b.is_null());
        assert_eq!(dobb_bvh_build(q, 4, &mut b), DobbStatus::Ok);
        let mut opts = dobb_convert_options_default();
        opts.alpha = f64::NAN;
        assert_ne!(dobb_bvh_convert(b, &opts), DobbStatus::Ok);
        opts = dobb_convert_options_default();
        opts.axes = 99;
        assert_ne!(dobb_bvh_convert(b, &opts), DobbStatus::Ok);
        assert!(!last_error().is_empty());

        let path = CString::new("/nonexistent/scene.obj").unwrap();
        assert_eq!(dobb_scene_load_obj(path.as_ptr(), &mut s), DobbStatus::Io);

        dobb_bvh_free(b);
        dobb_scene_free(q);
        dobb_scene_free(ptr::null_mut());
        dobb_bvh_free(ptr::null_mut());
        assert_eq!(dobb_scene_triangle_count(ptr::null()), 0);
    }
}

#[test]
fn load_obj_through_path() {
    let dir = std::env::temp_dir().join(format!("dobb_ffi_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("tri.obj");
    std::fs::write(&file, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
    let path = CString::new(file.to_str().unwrap()).unwrap();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(dobb_scene_load_obj(path.as_ptr(), &mut s), DobbStatus::Ok);
        assert_eq!(dobb_scene_triangle_count(s), 1);
        dobb_scene_free(s);
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(dobb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
