use std::path::PathBuf;
use std::process::Command;

/// Runs python/smoke_test.py against the library built alongside this test.
#[test]
fn python_smoke_test() {
    let Ok(probe) = Command::new("python3").arg("--version").output() else {
        eprintln!("python3 not found; skipping");
        return;
    };
    assert!(probe.status.success());
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().parent().unwrap().join("liblls.so");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../python/smoke_test.py");
    let o = Command::new("python3").arg(script).env("LLS_LIB", &lib).output().unwrap();
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{}\n{}", out, String::from_utf8_lossy(&o.stderr));
    assert!(out.contains("python smoke test: ok"));
}
