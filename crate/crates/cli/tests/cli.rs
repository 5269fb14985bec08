use std::path::Path;
use std::process::{Command, Output};

fn mmrd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmrd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn run_blowup_exits_two_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = mmrd(&[
        "run",
        "--preset",
        "Pp_dirichlet",
        "--set",
        "n=51",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let csv = read(&out.join("trajectory.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# mmrd 0.1.0 scenario=Pp_dirichlet"));
    assert_eq!(lines[1], "t,dt,supnorm_k1,y,z,status");
    let last = lines.last().unwrap();
    assert!(last.starts_with("# status=blowup T_b="), "{last}");
    let summary: serde_json::Value =
        serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
    assert_eq!(summary["outcome"]["status"], "blowup");
    let sc = mmrd_cli::parse_scenario(&read(&out.join("scenario.json"))).unwrap();
    assert_eq!(sc.domain.counts, vec![51]);
}

#[test]
fn completed_run_exits_zero() {
    let o = mmrd(&[
        "run",
        "--preset",
        "Pp_dirichlet",
        "--set",
        "n=21",
        "--set",
        "c=1",
        "--set",
        "t_end=0.05",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("completed"));
}

#[test]
fn nuclear_run_has_y_equal_to_kaplan_functional() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nr");
    let o = mmrd(&[
        "run",
        "--preset",
        "NR_dirichlet",
        "--set",
        "n=41",
        "--set",
        "t_end=0.01",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = read(&out.join("trajectory.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[1], "t,dt,supnorm_k1,supnorm_k2,y,z,status");
    let first: Vec<f64> = lines[2]
        .split(',')
        .take(6)
        .map(|v| v.parse().unwrap())
        .collect();
    // y(0) = ∫ c φ₁² on the trapezoid grid; close to 18 π²/8.
    let expected = 18.0 * std::f64::consts::PI.powi(2) / 8.0;
    assert!(
        (first[4] - expected).abs() < 1e-2 * expected,
        "{}",
        first[4]
    );
    for row in &lines[2..lines.len() - 1] {
        let cols: Vec<&str> = row.split(',').collect();
        assert!(!cols[4].is_empty() && !cols[5].is_empty());
    }
}

#[test]
fn malformed_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{
            "domain": {"dim": 1, "lengths": [1.0], "counts": [21]},
            "components": [{
                "diffusion": 1.0,
                "interior_graph": {"kind": "zero"},
                "boundary_graph": {"kind": "power", "alpha": 1.0, "q": 1.0},
                "initial": {"kind": "constant", "value": 1.0}
            }],
            "reaction": {"kind": "power", "p": 3.0},
            "time": {"t_end": 0.1}
        }"#,
    )
    .unwrap();
    let o = mmrd(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("components[0].boundary_graph.q"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mmrd(&["run"]).status.code(), Some(1));
    assert_eq!(mmrd(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        mmrd(&["run", "--preset", "Pp_gamma", "--set", "zz=1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(mmrd(&["--help"]).status.code(), Some(0));
}

#[test]
fn bound_reports_kaplan_values() {
    let o = mmrd(&["bound", "--preset", "Pp_dirichlet"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("integral(u0 phi1) = 14.80"), "{text}");
    assert!(text.contains("threshold 9.869"), "{text}");
    let o = mmrd(&["bound", "--preset", "NR_dirichlet"]);
    assert!(stdout(&o).contains("initial conditions: satisfied"));
}

#[test]
fn eigen_writes_phi() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eig");
    let o = mmrd(&["eigen", "--n", "401", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&read(&out.join("eigen.json"))).unwrap();
    assert!(report["relative_difference"].as_f64().unwrap() < 1e-3);
    let csv = read(&out.join("phi1.csv"));
    assert_eq!(csv.lines().nth(1), Some("x,value"));
    assert_eq!(csv.lines().count(), 2 + 401);
}

#[test]
fn compare_with_pair_block_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let expand = mmrd(&["expand", "Pp_dirichlet", "--set", "n=51"]);
    let mut doc: serde_json::Value = serde_json::from_slice(&expand.stdout).unwrap();
    doc["pair"] = serde_json::json!({
        "second": {"kind": "preset", "name": "Pp_gamma", "set": {"n": 51}}
    });
    let path = dir.path().join("pair.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = dir.path().join("cmp");
    let o = mmrd(&[
        "compare",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let report: serde_json::Value =
        serde_json::from_str(&read(&out.join("comparison.json"))).unwrap();
    assert_eq!(report["assumptions"]["passes"], true);
    assert_eq!(report["ordering_holds"], true);
    assert_eq!(report["blowup_order_holds"], true);
    assert!(out.join("comparison.csv").exists() && out.join("second.csv").exists());

    // Reversed pair: the boundary check fails.
    let o = mmrd(&[
        "compare",
        "--preset",
        "Pp_gamma",
        "--set",
        "n=51",
        "--pair-preset",
        "Pp_dirichlet",
        "--pair-set",
        "n=51",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
    // Overriding the boundary check exposes the ordering violation instead.
    let o = mmrd(&[
        "compare",
        "--preset",
        "Pp_gamma",
        "--set",
        "n=51",
        "--pair-preset",
        "Pp_dirichlet",
        "--pair-set",
        "n=51",
        "--override-a3",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}
