use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn testdata(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("testdata")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auctionlab"))
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

#[test]
fn exact_demand_on_additive() {
    let inst = testdata("additive.json");
    let o = run(&[
        "demand",
        "--instance",
        inst.to_str().unwrap(),
        "--oracle",
        "exact",
        "--prices",
        "3,4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "{0}, utility 2\n");
}

#[test]
fn simple_greedy_needs_twice_the_price() {
    // Item 0 has marginal 5 < 2 * 3, so the greedy keeps nothing; the
    // benchmark max_T v(T) - 2 p(T) is 0, so the guarantee still holds.
    let inst = testdata("additive.json");
    let o = run(&[
        "demand",
        "--instance",
        inst.to_str().unwrap(),
        "--oracle",
        "simple_greedy",
        "--verify",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("{}, utility 0\n"), "{out}");
    assert!(out.contains("verified"), "{out}");
}

#[test]
fn null_oracle_has_nothing_to_verify() {
    let inst = testdata("families.json");
    let o = run(&[
        "demand",
        "--instance",
        inst.to_str().unwrap(),
        "--oracle",
        "null",
        "--bidder",
        "4",
        "--verify",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("no (c, d) guarantee"));
}

#[test]
fn malformed_instances_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"m": 2, "bidders": [{"family": "additive", "values": [1, 2]"#,
    )
    .unwrap();
    let o = run(&[
        "demand",
        "--instance",
        bad.to_str().unwrap(),
        "--prices",
        "1,1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));

    std::fs::write(
        &bad,
        r#"{"m": 2, "bidders": [{"family": "unit_demand", "values": [1, -2]}]}"#,
    )
    .unwrap();
    let o = run(&[
        "demand",
        "--instance",
        bad.to_str().unwrap(),
        "--prices",
        "1,1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bidders[0]"), "{}", stderr(&o));
}

#[test]
fn auction_reports_outcome_and_ratio() {
    let inst = testdata("families.json");
    for policy in ["empty", "random", "adversarial-worst"] {
        let o = run(&[
            "auction",
            "--instance",
            inst.to_str().unwrap(),
            "--tentative",
            policy,
            "--seed",
            "5",
            "--verify",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        let ratio = v["ratio"].as_f64().unwrap();
        assert!((0.0..=1.0 + 1e-9).contains(&ratio));
        assert_eq!(v["outcome"]["purchases"].as_array().unwrap().len(), 5);
    }
}

#[test]
fn mechanism_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = testdata("generalized.json");
    let paths: Vec<PathBuf> = (0..2)
        .map(|i| dir.path().join(format!("r{i}.json")))
        .collect();
    for p in &paths {
        let o = run(&[
            "mechanism",
            "--config",
            config.to_str().unwrap(),
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).starts_with("100 trials"), "{}", stdout(&o));
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["records"].as_array().unwrap().len(), 100);
    assert_eq!(report["aggregates"]["violation_count"], 0);

    let o = run(&[
        "mechanism",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "2025",
        "--trials",
        "10",
    ]);
    let other: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(other["config"]["seed"], 2025);
    assert_eq!(other["records"].as_array().unwrap().len(), 10);
}

#[test]
fn fixed_price_config_with_file_instance() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trials.csv");
    let config = testdata("fixed_price.json");
    let o = run(&[
        "mechanism",
        "--config",
        config.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("trial,welfare,opt,ratio,source,degenerate,violations\n"));
    assert_eq!(rows.lines().count(), 51);
}

#[test]
fn zero_trials_is_an_empty_report() {
    let config = testdata("generalized.json");
    let o = run(&[
        "mechanism",
        "--config",
        config.to_str().unwrap(),
        "--trials",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report["records"].as_array().unwrap().is_empty());
    assert!(report["aggregates"]["mean_ratio"].is_null());
}

#[test]
fn invalid_tree_parameters_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(
        &config,
        r#"{"mechanism": "generalized", "oracle": "exact", "trials": 5, "seed": 1,
            "params": {"alpha": 2, "beta": 3, "gamma": 12},
            "instance": {"generator": {"class": "xos", "n": 2, "m": 3}}}"#,
    )
    .unwrap();
    let o = run(&["mechanism", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gamma >= 10 beta"), "{}", stderr(&o));
}

#[test]
fn quick_verify_suites_pass() {
    for suite in ["demand_welfare_equiv", "counterexamples", "tree"] {
        let o = run(&["verify", suite, "--seed", "3", "--trials", "200"]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{suite}: {}{}",
            stdout(&o),
            stderr(&o)
        );
        let out = stdout(&o);
        assert!(
            !out.is_empty() && out.lines().all(|l| l.starts_with("PASS ")),
            "{out}"
        );
    }
}

#[test]
fn verify_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("psi.json");
    let o = run(&[
        "verify",
        "psi_range",
        "--trials",
        "50",
        "--execution",
        "sequential",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["suite"], "psi_range");
}

#[test]
fn unknown_suite_exits_2() {
    let o = run(&["verify", "everything"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("everything"));
}
