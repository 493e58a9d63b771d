use std::fs;
use std::process::{Command, Output};

fn wasslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wasslab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn constants_csv_and_json() {
    let o = wasslab(&[
        "constants",
        "--p",
        "2",
        "--q",
        "6",
        "--d",
        "1",
        "--beta",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert!(header.contains(&"c_pd") && header.contains(&"i_abd"));
    let o = wasslab(&["constants", "--format", "json", "--p", "2", "--q", "6"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["c_pd"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn rate_columns_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rate.csv");
    let o = wasslab(&[
        "rate",
        "--n-grid",
        "16,32,64",
        "--reps",
        "10",
        "--m-plugin",
        "128",
        "--beta",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "experiment,measure,d,p,q,sigma,beta,N,reps,m_plugin,seed,estimate,stderr,bound_carlson,bound_dyadic,bound_fg15_shape"
    );
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "n_grid = [16, 32]\nreps = 10\nm_plugin = 64\nseed = 5\nformat = \"json\"\n",
    )
    .unwrap();
    let o = wasslab(&["rate", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["seed"] == 9 && r["reps"] == 10));
}

#[test]
fn identical_output_across_thread_counts() {
    let args = [
        "rate",
        "--n-grid",
        "16,32",
        "--reps",
        "12",
        "--m-plugin",
        "256",
    ];
    let one = wasslab(&[&args[..], &["--threads", "1"]].concat());
    let eight = wasslab(&[&args[..], &["--threads", "8"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, eight.stdout);
}

#[test]
fn configuration_errors_exit_2() {
    let cases: [&[&str]; 6] = [
        &["rate", "--n-grid", "64,32"],
        &["rate", "--reps", "3"],
        &["rate", "--sigma", "-1"],
        &["constants", "--format", "xml"],
        &["verify", "no_such_suite"],
        &["rate", "--config", "/nonexistent/run.toml"],
    ];
    for args in cases {
        assert_eq!(wasslab(args).status.code(), Some(2), "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "sigmaa = 1.0\n").unwrap();
    assert_eq!(
        wasslab(&["rate", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(wasslab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_reports_cases() {
    let o = wasslab(&["verify", "carlson", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["suite"], "carlson");
    assert_eq!(v[0]["failed"], 0);
    let o = wasslab(&["verify", "transport_metric"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("suite,case,lhs,rhs,slack,pass,informational"));
}

#[test]
fn lowerbound_and_gmu_tables() {
    let o = wasslab(&[
        "lowerbound",
        "--n-grid",
        "4096",
        "--reps",
        "200",
        "--format",
        "json",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["reports"][0]["quantities"]["n"], 4096);
    let o = wasslab(&[
        "gmu",
        "--p",
        "1",
        "--measure",
        "zygmund:p=1,alpha=1",
        "--t-max",
        "1000",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).lines().count() > 10);
}
