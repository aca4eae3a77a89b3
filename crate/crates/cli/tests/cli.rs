use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn example() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/g22_example.json")
}

fn lls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lls")).args(args).env_remove("LLS_JOBS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn inspect_reports_the_swap() {
    let o = lls(&["inspect", "--table", example().to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("N = 22, r = 6, d = 25, rho = 1"));
    assert_eq!(text.lines().last(), Some("1 swap: column 9, rows (2,3), minimal; class Single"));
    let o = lls(&["inspect", "--table", example().to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["class"]["class"], "Single");
    assert_eq!(v["delta"][9], 3);
}

#[test]
fn default_multidegree_line() {
    let o = lls(&["default-md", "--table", example().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("c = 3,5,7,9,12,14,17,19,21,23,25,27,29,31,33,36,38,41,43,45,47"));
}

#[test]
fn drop_summary_and_exit_code() {
    let o = lls(&["drop", "--table", example().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "29 sections, 15 steps, blocks {5-6, 17-18, 7-16}: all dropped");
    // degree-3 components packed at the right end
    let c: Vec<String> = (2..=22i64).map(|i| (2 * (i - 1) + (i - 17).max(0)).to_string()).collect();
    let o = lls(&["drop", "--table", example().to_str().unwrap(), "--c", &c.join(",")]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("stuck"));
}

#[test]
fn verify_single_table() {
    let o = lls(&["verify", "--table", example().to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["candidate"], 0);
}

#[test]
fn family_stream_is_deterministic_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str, name: &str| {
        let out = dir.path().join(name);
        let rep = dir.path().join(format!("{}.report", name));
        let o = lls(&[
            "verify",
            "--g",
            "21",
            "--r",
            "6",
            "--d",
            "24",
            "--mode",
            "sampled",
            "--samples",
            "300",
            "--seed",
            "7",
            "--unit-size",
            "16",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
            "--report",
            rep.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(rep).unwrap()).unwrap();
        (std::fs::read(out).unwrap(), report)
    };
    let (a, ra) = run("1", "one");
    let (b, rb) = run("3", "three");
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    assert_eq!(a.iter().filter(|&&c| c == b'\n').count(), 300);
    assert_eq!(ra["processed"], 300);
    assert_eq!(ra["failures_total"], 0);
}

#[test]
fn resumed_family_matches_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.jsonl");
    let ckpt = dir.path().join("v.ckpt");
    let args = |out: &PathBuf, ckpt: Option<&PathBuf>| {
        let mut a: Vec<String> = ["verify", "--g", "9", "--r", "2", "--d", "8", "--unit-size", "3", "--jobs", "2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        a.extend(["--out".into(), out.to_str().unwrap().into()]);
        if let Some(c) = ckpt {
            a.extend(["--checkpoint".into(), c.to_str().unwrap().into()]);
        }
        a
    };
    let full = dir.path().join("full.jsonl");
    let run = |a: Vec<String>| lls(&a.iter().map(|s| s.as_str()).collect::<Vec<_>>()).status.code();
    let code = run(args(&full, None));
    assert_eq!(run(args(&out, Some(&ckpt))), code);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&full).unwrap());
    // a torn tail after the last checkpoint is cut off on resume
    let mut f = std::fs::OpenOptions::new().append(true).open(&out).unwrap();
    f.write_all(b"{\"torn\":").unwrap();
    drop(f);
    assert_eq!(run(args(&out, Some(&ckpt))), code);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&full).unwrap());
}

#[test]
fn latex_render_matches_fixture_values() {
    let o = lls(&["render", "--table", example().to_str().unwrap(), "--tensor", "--format", "latex"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let golden: Vec<serde_json::Value> =
        serde_json::from_str(include_str!("../../core/tests/fixtures/g22_tensor_golden.json")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3 + golden.len() + 1);
    assert!(lines[1].contains("$47$ & $3$"));
    for (k, g) in golden.iter().enumerate() {
        let cells: Vec<&str> = lines[3 + k].trim_end_matches("\\\\").split(" & ").collect();
        assert_eq!(cells.len(), 45);
        let a0 = g["a"][0].as_i64().unwrap();
        assert!(cells[1].contains(&format!("${}$", a0)));
        let lit = g["highlight"][0].as_bool().unwrap();
        assert_eq!(cells[1].contains("cellcolor"), lit);
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lls(&["verify", "--g", "21", "--r", "6", "--d", "24", "--jobs", "0"]).status.code(), Some(2));
    assert_eq!(lls(&["enumerate", "--g", "5", "--r", "1", "--d", "2"]).status.code(), Some(2));
    assert_eq!(lls(&["inspect", "--table", "/nonexistent.json"]).status.code(), Some(2));
    let mut child = Command::new(env!("CARGO_BIN_EXE_lls"))
        .args(["inspect", "--table", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"{\"bad\":1}").unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn enumerate_counts_and_stream() {
    let o = lls(&["enumerate", "--g", "6", "--r", "1", "--d", "4", "--count"]);
    assert_eq!(stdout(&o).trim(), "{\"total\":5,\"by_swaps\":{\"0\":5}}");
    let o = lls(&["enumerate", "--g", "6", "--r", "1", "--d", "4"]);
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = lls(&["oracle", "--g", "6", "--r", "1", "--d", "4"]);
    assert_eq!(stdout(&o).trim(), "5");
}
