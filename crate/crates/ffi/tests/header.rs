use std::path::{Path, PathBuf};
use std::process::Command;

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/freespiral.h")
}

fn has_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_declares_every_entry_point() {
    let text = std::fs::read_to_string(header()).unwrap();
    assert!(text.contains("#ifndef FREESPIRAL_H"));
    for name in [
        "fs_version",
        "fs_last_error",
        "fs_model_new",
        "fs_model_quantized",
        "fs_model_physical",
        "fs_model_free",
        "fs_spiral_params",
        "fs_integrate_spiral",
        "fs_trajectory_len",
        "fs_trajectory_sample",
        "fs_trajectory_write_csv",
        "fs_trajectory_free",
        "fs_run_scenario",
        "typedef struct FsModel FsModel",
        "typedef struct FsTrajectory FsTrajectory",
        "FS_STATUS_CHECKS_FAILED = 9",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    if !has_cc() {
        eprintln!("no C compiler; skipped");
        return;
    }
    let o = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"]).arg(header()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn c_program_links_against_the_static_library() {
    // test binaries live in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().and_then(Path::parent).unwrap().join("libfreespiral_ffi.a");
    if !has_cc() || !lib.exists() {
        eprintln!("no C compiler or static library; skipped");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let o = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
