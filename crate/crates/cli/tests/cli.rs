use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nostcap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_prints_post_capacity_and_writes_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("result.json");
    let channel = fixture("noisy_post_a0.5_e0.json");
    let o = run(&["solve", "--channel", path_str(&channel), "--setting", "fb", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0.321928");

    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["setting"], "FB");
    for key in ["value_bits", "policy", "pi", "gap", "stationarity_residual", "iterations"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert!(json.get("support_sizes").is_none());
}

#[test]
fn csi_result_carries_support_information() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("result.json");
    let channel = fixture("noisy_post_a0.5_e0.5.json");
    let o = run(&["solve", "--channel", path_str(&channel), "--setting", "fb-csi", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["setting"], "FB_CSI");
    assert_eq!(json["cardinality_bound_L"], 3);
    assert_eq!(json["support_sizes"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes_follow_the_scheme() {
    let o = run(&["solve", "--channel", path_str(&fixture("not_connected.json")), "--setting", "fb"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["solve", "--channel", path_str(&fixture("bad_rows.json"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("row sums to"), "{}", stderr(&o));

    let o = run(&["solve", "--channel", "/nonexistent/channel.json"]);
    assert_eq!(o.status.code(), Some(3));

    let o = run(&["solve", "--channel", path_str(&fixture("noisy_post_a0.5_e0.json")), "--setting", "maybe"]);
    assert_eq!(o.status.code(), Some(64));

    let o = run(&["solve", "--channel", path_str(&fixture("noisy_post_a0.5_e0.json")), "--tol", "-1"]);
    assert_eq!(o.status.code(), Some(64));

    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(64));
}

#[test]
fn normalize_flag_rescues_unnormalized_rows() {
    let channel = fixture("bad_rows.json");
    let o = run(&["validate", "--channel", path_str(&channel)]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["validate", "--channel", path_str(&channel), "--normalize"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("valid"));
}

#[test]
fn sweep_reproduces_endpoints_and_equality() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_nostcap"))
        .args([
            "sweep-noisy-post",
            "--alpha",
            "0.5",
            "--eta-start",
            "0",
            "--eta-end",
            "1",
            "--eta-step",
            "0.25",
            "--out",
            path_str(&out),
        ])
        .env("NOSTCAP_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("eta,c_fb,c_fb_csi,a_opt,b_opt"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    let etas: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(etas, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    for r in &rows {
        assert!((r[1] - r[2]).abs() <= 1e-5);
    }
    assert!((rows[0][1] - 0.321928).abs() <= 1e-5);
    assert!((rows[4][1] - 0.321928).abs() <= 1e-5);
    assert!(rows[1..4].iter().all(|r| r[1] < 0.321928));
}

#[test]
fn sweep_rejects_bad_grid() {
    let o = run(&["sweep-noisy-post", "--eta-start", "0.8", "--eta-end", "0.2"]);
    assert_eq!(o.status.code(), Some(64));
    let o = run(&["sweep-noisy-post", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cert.json");
    let o = run(&["certify-csi", "--channel", path_str(&fixture("noisy_post_a0.5_e0.5.json")), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["status"], "NoGainCertified");
    assert!(json["p2_policy"].is_array());

    let o = run(&["certify-csi", "--channel", path_str(&fixture("gap_channel.json"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["certify-csi", "--channel", path_str(&fixture("xor_iid_state.json"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["certify-csi", "--channel", path_str(&fixture("single_state.json"))]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn simulate_is_reproducible_and_accurate() {
    let dir = tempfile::tempdir().unwrap();
    let channel = fixture("noisy_post_a0.5_e0.json");
    let result = dir.path().join("result.json");
    assert_eq!(
        run(&["solve", "--channel", path_str(&channel), "--out", path_str(&result)]).status.code(),
        Some(0)
    );
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        let o = run(&[
            "simulate", "--channel", path_str(&channel), "--policy", path_str(&result),
            "--steps", "1000000", "--seed", "17", "--out", path_str(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let rate: f64 = stdout(&o).trim().parse().unwrap();
        assert!((rate - 0.321928).abs() <= 0.01);
        reports.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn simulate_accepts_strategy_policies_and_bare_arrays() {
    let dir = tempfile::tempdir().unwrap();
    let channel = fixture("noisy_post_a0.5_e0.5.json");
    let result = dir.path().join("csi.json");
    run(&["solve", "--channel", path_str(&channel), "--setting", "fb-csi", "--out", path_str(&result)]);
    let o = run(&["simulate", "--channel", path_str(&channel), "--policy", path_str(&result), "--steps", "200000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rate: f64 = stdout(&o).trim().parse().unwrap();
    assert!((rate - 0.286122).abs() <= 0.01);

    let bare = dir.path().join("bare.json");
    std::fs::write(&bare, "[[0.6, 0.4], [0.4, 0.6]]").unwrap();
    let o = run(&["simulate", "--channel", path_str(&channel), "--policy", path_str(&bare), "--steps", "1000"]);
    assert_eq!(o.status.code(), Some(0));

    std::fs::write(&bare, "[[0.2, 0.3, 0.5], [0.4, 0.3, 0.3]]").unwrap();
    let o = run(&["simulate", "--channel", path_str(&channel), "--policy", path_str(&bare), "--steps", "1000"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulate_with_zero_steps_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bare = dir.path().join("p.json");
    std::fs::write(&bare, "[[0.5, 0.5], [0.5, 0.5]]").unwrap();
    let channel = fixture("noisy_post_a0.5_e0.json");
    let o = run(&["simulate", "--channel", path_str(&channel), "--policy", path_str(&bare), "--steps", "0"]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn oracle_matches_solver_on_post() {
    let o = run(&["oracle", "--channel", path_str(&fixture("noisy_post_a0.5_e0.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.321928).abs() <= 1e-3);
}
