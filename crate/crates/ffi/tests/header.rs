//! The generated header compiles as C and links against the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
}

/// Directory holding the library artifacts for the current profile.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(crate_dir().join("include/shuffle_spectra.h")).unwrap();
    for name in [
        "ss_last_error",
        "ss_version",
        "ss_solve_zeta",
        "ss_statistic_new_branch",
        "ss_statistic_new_slowest_exact",
        "ss_statistic_free",
        "ss_statistic_eigenfunction",
        "ss_statistic_evaluate",
        "ss_statistic_tv_lower_bound",
        "ss_exact_tv_curve",
        "ss_uniform_time",
        "typedef struct SsStatistic SsStatistic",
        "SS_STATUS_OK = 0",
        "SS_RULE_CYCLIC = 0",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_is_valid_c() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let status = Command::new(cc)
        .args(["-std=c11", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(crate_dir().join("include/shuffle_spectra.h"))
        .status()
        .unwrap();
    assert!(status.success());
}

fn link_and_run(cc: &str, lib: &Path, out_dir: &Path) {
    let exe = out_dir.join("smoke");
    let status = Command::new(cc)
        .arg("-std=c11")
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg(lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C smoke program failed to build");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

#[test]
fn c_program_links_static_library() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = profile_dir().join("libshuffle_spectra_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    link_and_run(cc, &lib, dir.path());
}
