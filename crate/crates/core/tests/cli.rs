use std::path::Path;
use std::process::{Command, Output};

fn mcom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn entangle_reports_all_pairs() {
    let out = mcom(&["entangle", "--set", "lambda_opa=0.2", "--set", "drive=16"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    for key in ["E_cB1", "E_cB2", "E_B1B2", "max Re(lambda)"] {
        assert!(stdout.contains(key), "{stdout}");
    }
}

#[test]
fn entangle_unstable_point_exits_two() {
    let out = mcom(&["entangle", "--set", "lambda_opa=0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("system unstable (max Re λ = "));
}

#[test]
fn invalid_values_exit_one_naming_the_field() {
    let out = mcom(&["stability", "--set", "m_split=101"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("m_split exceeds n_total"));
    let out = mcom(&["steady-state", "--set", "kappa_a=0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("kappa_a must be positive"));
    let out = mcom(&["steady-state", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
    let out = mcom(&["steady-state", "--mode", "fancy"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn steady_state_and_stability_write_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ss.json");
    let out = mcom(&["steady-state", "--mode", "exact", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["mode"], "exact");
    assert!(v["g_cap_2"].as_f64().unwrap() > 0.0);
    let path = dir.path().join("st.json");
    let out = mcom(&["stability", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["stable"], true);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 8);
}

#[test]
fn reproduce_collective_split() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig5.csv");
    let out = mcom(&["reproduce", "fig5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# params: {"));
    assert!(lines[0].contains("\"drive_a\":50.0"));
    assert_eq!(lines[1], "# mode: paper");
    assert_eq!(lines[2], "m_split,stable,max_real_part,E_cB2,E_B1B2");
    assert_eq!(lines.len(), 3 + 101);
}

fn params_line(csv: &Path) -> String {
    let text = std::fs::read_to_string(csv).unwrap();
    text.lines().next().unwrap().trim_start_matches("# params: ").to_owned()
}

#[test]
fn echoed_parameters_reproduce_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{"drive": 12.0, "temperature": 100.0,
            "axis1": {"field": "theta", "min": 0.0, "max": 3.0, "count": 7},
            "observables": ["E_cB2", "E_B1B2"]}"#,
    )
    .unwrap();
    let first = dir.path().join("a.csv");
    let out = mcom(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "j_1=0.8",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));

    let mut echoed: serde_json::Value = serde_json::from_str(&params_line(&first)).unwrap();
    assert_eq!(echoed["j_1"], 0.8);
    assert_eq!(echoed["drive_c"], 12.0);
    echoed["axis1"] = serde_json::json!({"field": "theta", "min": 0.0, "max": 3.0, "count": 7});
    echoed["observables"] = serde_json::json!(["E_cB2", "E_B1B2"]);
    let cfg2 = dir.path().join("echo.json");
    std::fs::write(&cfg2, echoed.to_string()).unwrap();
    let second = dir.path().join("b.csv");
    let out = mcom(&["sweep", "--config", cfg2.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn sweep_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    std::fs::write(
        &cfg,
        r#"{"axis1.field": "drive", "axis1.min": 10, "axis1.max": 20, "axis1.count": 2,
            "axis2.field": "lambda_opa", "axis2.min": 0, "axis2.max": 0.2, "axis2.count": 2,
            "observables": ["E_B1B2"]}"#,
    )
    .unwrap();
    let out = mcom(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let data: Vec<&str> = stdout.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 5);
    assert_eq!(data[0], "drive,lambda_opa,stable,max_real_part,E_B1B2");
}
