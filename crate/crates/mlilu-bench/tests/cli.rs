use std::process::Command;

fn mlilu() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mlilu"))
}

#[test]
fn solve_preset_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = mlilu()
        .args([
            "solve",
            "--preset",
            "stokes2d-16",
            "--threads",
            "2",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("report.csv").exists());
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"problem": {"dim": 5}}"#).unwrap();
    let out = mlilu()
        .args(["solve", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem.dim"));
    assert_eq!(
        mlilu()
            .args(["solve", "--preset", "nope"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        mlilu()
            .args(["solve", "--frobnicate"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        mlilu().args(["solve"]).output().unwrap().status.code(),
        Some(1)
    );
}

#[test]
fn non_convergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"name": "short", "problem": {"dim": 2, "n": 16}, "precond": {"size": 4}, "gmres": {"max_iter": 3}}"#).unwrap();
    let out = mlilu()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn export_matrix_writes_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    let out = mlilu()
        .args(["export-matrix", "--preset", "exact2d-16", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("exact2d-16_A.mtx")).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
}
