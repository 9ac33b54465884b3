use std::process::{Command, Output};

fn kolmo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kolmo")).args(args).output().expect("spawn kolmo")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn sharpness_table() {
    let o = kolmo(&["sharpness", "--t-grid", "0.5,1,2,5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let cols: Vec<f64> = r.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cols[1] - cols[0] * cols[0]).abs() <= 1e-8 * cols[1]);
        assert!(cols[4] <= 1e-8);
    }
}

#[test]
fn verify_flat_exact_clean() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = kolmo(&[
        "verify",
        "flat-exact",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["seed"], 5);
    assert!(v["reports"].as_array().unwrap().len() >= 100);
    let header = std::fs::read_to_string(&csv).unwrap();
    assert!(header.starts_with("inequality,field,point"));
}

#[test]
fn verify_toml_config_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "scenario = \"flat-exact\"\nseed = 3\nfields = [\"gauss-bump(0, 1)\"]\ntimes = [1.0]\n",
    )
    .unwrap();
    let o = kolmo(&["verify", "flat-exact", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["scenario"], "flat-exact");
    assert!(v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["field"] == "gauss-bump(0, 1)" && r["t"] == 1.0));
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"scenario": "flat-mc"}"#).unwrap();
    assert_eq!(code(&kolmo(&["verify", "flat-exact", "--config", cfg.to_str().unwrap()])), 3);

    std::fs::write(&cfg, r#"{"scenario": "flat-exact", "z": -1}"#).unwrap();
    assert_eq!(code(&kolmo(&["verify", "flat-exact", "--config", cfg.to_str().unwrap()])), 3);

    std::fs::write(&cfg, r#"{"scenario": "flat-exact", "unknown_key": 1}"#).unwrap();
    assert_eq!(code(&kolmo(&["verify", "flat-exact", "--config", cfg.to_str().unwrap()])), 3);

    assert_eq!(code(&kolmo(&["verify", "no-such-scenario"])), 3);
    assert_eq!(code(&kolmo(&["verify"])), 3);
    assert_eq!(code(&kolmo(&["couple", "heisenberg"])), 3);
}

#[test]
fn general_cd_refuses_positive_rho() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"scenario": "general-cd", "generator": {"rho": 0.5}}"#).unwrap();
    let o = kolmo(&["verify", "general-cd", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn simulate_csv() {
    let o = kolmo(&["simulate", "sphere-2", "--t", "0.1", "--dt", "0.01", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("step,t,"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    for r in &rows {
        // sphere-2 base (3 ambient coordinates) then one fiber of the same size
        assert_eq!(r.len(), 2 + 6);
        let n: f64 = r[2..5].iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-10);
    }
    let again = kolmo(&["simulate", "sphere-2", "--t", "0.1", "--dt", "0.01", "--seed", "1"]);
    assert_eq!(text.as_bytes(), &again.stdout[..]);
}

#[test]
fn simulate_base_only_with_start() {
    let o = kolmo(&["simulate", "euclidean-2", "--levels", "0", "--t", "0.05", "--dt", "0.01", "--start", "-1,2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let first = text.lines().nth(1).unwrap();
    assert_eq!(first, "0,0,-1,2");
}

#[test]
fn couple_euclidean_control() {
    let o = kolmo(&["couple", "euclidean-1", "--n-paths", "50", "--dt", "0.01"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["epsilon_dt"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["verdict"], "verified");
}

#[test]
fn couple_k_overrides_curvature() {
    let o = kolmo(&["couple", "sphere-2", "--k", "0", "--n-paths", "200", "--dt", "0.01"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // K = 0: the base bound curve is identically 1
    for b in v["base_bound"].as_array().unwrap() {
        assert_eq!(b.as_f64().unwrap(), 1.0);
    }
}
