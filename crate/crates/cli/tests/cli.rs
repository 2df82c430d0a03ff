use std::path::PathBuf;
use std::process::Command;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dgblow-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn dgblow() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dgblow"))
}

#[test]
fn ode_sweep_writes_tables() {
    let dir = scratch("ode");
    let out = dgblow()
        .args(["blowup-ode", "--scheme", "implicit", "--tol", "1e-3", "--levels", "3", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let runs = std::fs::read_to_string(dir.join("ode_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 4);
}

#[test]
fn linear_run_from_config() {
    let dir = scratch("linear");
    let cfg = dir.join("run.json");
    let json = format!(
        r#"{{"problem": "boundary-layer", "eps": 1.0, "ttol": 1e-2, "stol_plus": 1e-1, "n_initial": 4, "stride": 2, "output_dir": {:?}}}"#,
        dir.join("out")
    );
    std::fs::write(&cfg, json).unwrap();
    let out = dgblow().arg("linear").arg("--config").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["slabs.csv", "summary.json", "mesh_2.vtk", "sol_2.vtk"] {
        assert!(dir.join("out").join(f).exists(), "{f} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap();
    assert!(summary["totals"]["eta"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_input_exits_with_one() {
    let out = dgblow().args(["linear", "--problem", "gaussian-blowup"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let dir = scratch("bad");
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, r#"{"ttol": -1.0}"#).unwrap();
    let out = dgblow().arg("linear").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
