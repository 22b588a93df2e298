use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_phimoment"));
    c.env_remove("PHIMOMENT_WORKERS");
    c
}

fn run_with(config: &str, out: &Path, extra: &[&str]) -> Output {
    let path = out.with_extension("json");
    std::fs::write(&path, config).unwrap();
    bin().arg("run").arg("--config").arg(&path).arg("--out").arg(out).args(extra).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"{
  "defaults": {"mc": {"trials": 2000}, "seed": 3},
  "scenarios": [
    {"id": "pos", "mode": "classical", "statistic": "sum",
     "parts": [{"kind": "scaled_indicator", "a": 1.0, "u": 0.1, "repeat": 10}],
     "phi": {"kind": "power", "p": 2.0}},
    {"id": "max", "mode": "classical", "statistic": "max",
     "parts": [{"kind": "atoms", "atoms": [[2.0, 0.3]], "repeat": 3}],
     "phi": {"kind": "power", "p": 1.5}},
    {"id": "free", "mode": "free", "statistic": "sum",
     "parts": [{"kind": "scaled_indicator", "a": 1.0, "u": 0.25, "repeat": 4}],
     "phi": {"kind": "power", "p": 2.0}, "matrix": {"n_dim": 64, "trials": 2}}
  ]
}"#;

const SWEEP: &str = r#"{"scenarios": [
  {"id": "sw", "mode": "classical", "statistic": "sharpness", "phi": {"kind": "power", "p": 2.0},
   "sweep": {"a_values": [1.0, 2.0], "n_values": [16, 32]}, "mc": {"trials": 5000}}
]}"#;

#[test]
fn empty_scenario_list_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run_with(r#"{"scenarios": []}"#, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().collect::<Vec<_>>(), vec![phimoment::cli::SUMMARY_HEADER]);
}

#[test]
fn malformed_phi_is_a_parse_error_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"scenarios": [
  {"id": "x", "mode": "classical", "statistic": "sum",
   "parts": [], "phi": {"kind": "cubic"}}
]}"#;
    let o = run_with(cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("column"), "{err}");
}

#[test]
fn invalid_scenario_exits_three_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"scenarios": [
  {"id": "overfull", "mode": "classical", "statistic": "sum",
   "parts": [{"kind": "atoms", "atoms": [[1.0, 0.7], [2.0, 0.6]]}], "phi": {"kind": "power", "p": 2.0}}
]}"#;
    let o = run_with(cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("overfull"), "{}", stderr(&o));
}

#[test]
fn overflowing_phi_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"scenarios": [
  {"id": "boom", "mode": "classical", "statistic": "sum",
   "parts": [{"kind": "atoms", "atoms": [[10.0, 0.5]]}],
   "phi": {"kind": "exp_minus_one", "scale": 0.001}, "mc": {"trials": 100}}
]}"#;
    let o = run_with(cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("boom"));
}

#[test]
fn outputs_cover_every_scenario_and_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let oa = run_with(SMALL, &a, &[]);
    let ob = run_with(SMALL, &b, &["--workers", "2"]);
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert_eq!(ob.status.code(), Some(0), "{}", stderr(&ob));
    let summary = std::fs::read_to_string(a.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    for id in ["pos", "max", "free"] {
        let ra = std::fs::read(a.join("reports").join(format!("{id}.json"))).unwrap();
        let rb = std::fs::read(b.join("reports").join(format!("{id}.json"))).unwrap();
        assert_eq!(ra, rb, "{id}");
        let v: serde_json::Value = serde_json::from_slice(&ra).unwrap();
        assert_eq!(v["id"], id);
    }
    assert_eq!(std::fs::read(a.join("summary.csv")).unwrap(), std::fs::read(b.join("summary.csv")).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.is_object());
}

#[test]
fn seed_override_changes_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_with(SMALL, &a, &["--seed", "1"]);
    run_with(SMALL, &b, &["--seed", "2"]);
    let read = |d: &Path| -> serde_json::Value {
        serde_json::from_slice(&std::fs::read(d.join("reports/pos.json")).unwrap()).unwrap()
    };
    let (ra, rb) = (read(&a), read(&b));
    assert_ne!(ra["seed"], rb["seed"]);
    assert_ne!(ra["lhs"], rb["lhs"]);
    assert_eq!(ra["rhs_total"], rb["rhs_total"]);
}

#[test]
fn csv_format_and_filter() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run_with(SMALL, &out, &["--format", "csv", "--filter", "p*"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("reports/pos.csv").exists());
    assert!(!out.join("reports/pos.json").exists());
    assert!(!out.join("reports/max.csv").exists());
    assert_eq!(std::fs::read_to_string(out.join("summary.csv")).unwrap().lines().count(), 2);
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, SMALL).unwrap();
    let run = |workers: &str, out: &str| {
        let o = bin()
            .env("PHIMOMENT_WORKERS", workers)
            .args(["run", "--config"])
            .arg(&path)
            .arg("--out")
            .arg(dir.path().join(out))
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(dir.path().join(out).join("summary.csv")).unwrap()
    };
    assert_eq!(run("1", "one"), run("3", "three"));
}

#[test]
fn sweeps_write_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run_with(SWEEP, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let plot = std::fs::read_to_string(out.join("plotdata/sw.csv")).unwrap();
    let lines: Vec<&str> = plot.lines().collect();
    assert_eq!(lines[0], "a,n,ratio,ratio_se");
    assert_eq!(lines.len(), 5);
}

#[test]
fn failing_band_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let baselines = phimoment::verifier::bundled_baselines();
    let mut v = serde_json::to_value(&baselines).unwrap();
    v["families"]["classical_positive_sum"]["band"] = serde_json::json!([50.0, 60.0]);
    let path = dir.path().join("tight.json");
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let o = run_with(SMALL, &dir.path().join("out"), &["--baselines", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn selftest_passes_and_catches_a_coarse_merge() {
    let o = bin().arg("selftest").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = bin().args(["selftest", "--merge-tol", "0.2"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("rearrangement_equimeasurable"), "{}", stderr(&o));
}

#[test]
fn exported_suites_parse() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["export-suites", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut n = 0;
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        if path.file_name().unwrap() == "baselines.json" {
            serde_json::from_str::<phimoment::verifier::Baselines>(&text).unwrap();
        } else {
            let c: phimoment::verifier::Config = serde_json::from_str(&text).unwrap();
            c.resolve_all(None).unwrap();
            n += 1;
        }
    }
    assert_eq!(n, phimoment::verifier::BUNDLED_SUITES.len());
}

#[test]
fn usage_errors_exit_two() {
    let o = bin().arg("run").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["run", "--suite", "nonexistent"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}
