use std::path::{Path, PathBuf};
use std::process::Command;

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// Directory holding the library artifacts for the current profile.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(manifest().join("include/curveflow.h")).unwrap();
    for name in [
        "cf_problem_new",
        "cf_problem_free",
        "cf_problem_barriers",
        "cf_solve",
        "cf_result_free",
        "cf_result_converged",
        "cf_result_stats",
        "cf_result_profile_len",
        "cf_result_profile_copy",
        "cf_result_to_json",
        "cf_string_free",
        "cf_last_error_message",
        "cf_curvature_eval",
        "cf_admissible_constant",
        "typedef struct CfProblem CfProblem",
        "typedef struct CfResult CfResult",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_and_solves() {
    let lib = artifact_dir().join("libcurveflow_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let out = tempfile_path("cf_smoke");
    let status = Command::new("cc")
        .arg(manifest().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("run cc");
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(
        run.status.success(),
        "{}{}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{stem}_{}", std::process::id()))
}
