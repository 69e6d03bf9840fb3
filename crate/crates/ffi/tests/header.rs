use std::path::Path;
use std::process::Command;

const HEADER: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/include/dobb.h");

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(HEADER).unwrap();
    for name in [
        "typedef struct DobbScene DobbScene;",
        "typedef struct DobbBvh DobbBvh;",
        "DOBB_STATUS_OK = 0",
        "DOBB_STATUS_PANIC = 9",
        "dobb_last_error(void)",
        "dobb_scene_from_mesh(",
        "dobb_bvh_build(",
        "dobb_bvh_convert(",
        "dobb_bvh_trace(",
        "dobb_bvh_free(",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

/// Compiles the header as C when a C compiler is on the path.
#[test]
fn header_compiles_as_c() {
    let Ok(out) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler, skipping");
        return;
    };
    assert!(out.status.success());
    let dir = std::env::temp_dir().join(format!("dobb_hdr_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        "#include \"dobb.h\"\nint main(void) { DobbConvertOptions o; o.mode = DOBB_MODE_BRUTE; return o.mode == DOBB_MODE_BRUTE ? 0 : 1; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(Path::new(HEADER).parent().unwrap())
        .arg(&src)
        .status()
        .unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert!(status.success());
}
