use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn semiflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiflow"))
        .args(args)
        .env("SEMIFLOW_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SEMICIRCLE: &str = r#"{
  "schema_version": 1,
  "resolution": {"n_grid": 1024},
  "measures": {"sc": {"type": "semicircle", "center": 0, "variance": 1}},
  "checks": [
    {"check": "check_lsi", "measures": ["sc"]},
    {"check": "check_fisher_identity", "measures": ["sc"]},
    {"check": "check_hilbert_pairing", "measures": ["sc"]},
    {"check": "check_sigma_nonnegative", "measures": ["sc"]},
    {"check": "check_scaling", "measures": ["sc"], "alphas": [0.5, 2]}
  ]
}"#;

#[test]
fn list_checks_names_every_check() {
    let out = semiflow(&["list-checks"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), semiflow::verify::CheckKind::ALL.len());
    let lsi = text.lines().find(|l| l.starts_with("check_lsi\t")).unwrap();
    assert!(lsi.contains("log-Sobolev") && lsi.contains("tolerance=1e-6"));
    let tal = text.lines().find(|l| l.starts_with("check_talagrand\t")).unwrap();
    assert!(tal.ends_with("reported-only"));
}

#[test]
fn semicircle_identities_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SEMICIRCLE);
    let out = semiflow(&["run", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.ends_with(",pass")), "{report}");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["workers"], 2);
    assert_eq!(manifest["config"]["measures"]["sc"]["type"], "semicircle");
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reported_probe_does_not_fail_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
          "schema_version": 1,
          "output_dir": "results",
          "measures": {"sc2": {"type": "dilate", "alpha": 2, "of": {"type": "semicircle", "center": 0, "variance": 1}}},
          "checks": [{"check": "check_talagrand", "measures": ["sc2"]}]
        }"#,
    );
    let out = semiflow(&["run", &cfg]);
    assert!(out.status.success());
    let report = fs::read_to_string(dir.path().join("results/report.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(report.as_bytes());
    let margins: Vec<f64> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            assert_eq!(&r[8], "reported");
            r[6].parse().unwrap()
        })
        .collect();
    assert!((margins[0] + 0.193).abs() < 2e-3, "{margins:?}");
    assert!((margins[1] - 0.614).abs() < 2e-3, "{margins:?}");
}

#[test]
fn malformed_measure_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "measures": {"bad": {"type": "dilate", "alpha": 2, "of": {"type": "semicircle", "center": 0, "variance": -1}}}}"#,
    );
    let out = semiflow(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("measures.bad.of.variance"), "{err}");

    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "measures": {"sc": {"type": "semicircle", "center": 0, "variance": 1}},
            "checks": [{"check": "check_lsi", "measures": ["sc"], "tolerence": 1}]}"#,
    );
    let out = semiflow(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("checks[0]") && err.contains("tolerence"), "{err}");
}

#[test]
fn failed_check_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "resolution": {"n_grid": 256},
            "measures": {"u": {"type": "uniform", "lo": 0, "hi": 1}},
            "checks": [{"check": "check_phi_forms", "measures": ["u"], "tolerance": 1e-12}]}"#,
    );
    let out = semiflow(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL check_phi_forms"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "seed": 9, "resolution": {"n_grid": 512},
            "measures": {"sc": {"type": "semicircle", "center": 0, "variance": 1},
                         "b": {"type": "atoms", "atoms": [[-1, 0.5], [1, 0.5]]}},
            "checks": [{"check": "check_wasserstein_oracle", "pairs": 10},
                       {"check": "check_lsi", "measures": ["sc"]}],
            "flow": [{"measure": "b", "times": [0.3]}]}"#,
    );
    let read = |name: &str| fs::read(dir.path().join("out").join(name)).unwrap();
    assert!(semiflow(&["run", &cfg]).status.success());
    let first = (read("report.csv"), read("functionals.csv"), read("flow_b.csv"));
    assert!(semiflow(&["run", &cfg]).status.success());
    assert_eq!(first, (read("report.csv"), read("functionals.csv"), read("flow_b.csv")));
}

#[test]
fn dump_flow_and_oracle_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "resolution": {"n_grid": 256},
            "measures": {"d": {"type": "atoms", "atoms": [[0, 1]]}},
            "checks": [{"check": "check_lsi", "measures": ["d"]}],
            "flow": [{"measure": "d", "times": [0.5, 1.0]}],
            "oracle": {"measure": "d", "r": 1, "n_dim": 40, "n_trials": 2, "seed": 3}}"#,
    );
    assert!(semiflow(&["dump-flow", &cfg]).status.success());
    let out = dir.path().join("out");
    assert!(out.join("flow_d.csv").exists());
    assert!(!out.join("report.csv").exists());
    let o = semiflow(&["oracle", &cfg]);
    assert!(o.status.code().is_some());
    assert_eq!(fs::read_to_string(out.join("eigenvalues.csv")).unwrap().lines().count(), 81);
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report.contains("check_spectrum_ks") && !report.contains("check_lsi"));
}
