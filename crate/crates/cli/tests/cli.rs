use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noisy-spins"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out-dir").arg(out).output().expect("binary runs")
}

fn schema() -> Value {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/csv_schemas.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn schema_columns(file: &str) -> Vec<String> {
    schema()["files"][file]["columns"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap().to_string()).collect()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn meta(path: &Path) -> Value {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta.json");
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn col(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn fig1_cluster_and_spectrum_properties() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fig1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("fig1_spectrum.csv");
    let (header, rows) = read_csv(&path);
    assert_eq!(header, schema_columns("fig1_spectrum"));
    assert_eq!(rows.len(), 729);
    let re = col(&rows, 0);
    let im = col(&rows, 1);
    assert!(re.iter().all(|&x| x <= 1e-10));
    // every eigenvalue has its conjugate in the list
    let scale = re.iter().chain(&im).fold(0.0f64, |a, b| a.max(b.abs()));
    for (a, b) in re.iter().zip(&im) {
        let d = re.iter().zip(&im).map(|(c, e)| (a - c).hypot(b + e)).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-9 * scale, "conjugate of {a}+{b}i missing");
    }
    let m = meta(&path);
    assert_eq!(m["extras"]["cluster_count"], 15);
    assert_eq!(m["command"], "fig1");
    assert!(m["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(chrono::DateTime::parse_from_rfc3339(m["timestamp"].as_str().unwrap()).is_ok());
    assert_eq!(m["config"]["params"]["omega"].as_array().unwrap().len(), 6);
    let (mh, mrows) = read_csv(&dir.path().join("fig1_multiplet.csv"));
    assert_eq!(mh, schema_columns("fig1_multiplet"));
    assert_eq!(mrows.len(), 15);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(run(&["fig4", "--seed", "11"], d.path()).status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("fig4_flow.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(meta(&a.path().join("fig4_flow.csv"))["extras"]["crossings"], meta(&b.path().join("fig4_flow.csv"))["extras"]["crossings"]);
}

#[test]
fn fig2_roots_and_poles() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["fig2"], dir.path()).status.success());
    let path = dir.path().join("fig2_roots.csv");
    let (header, rows) = read_csv(&path);
    assert_eq!(header, schema_columns("fig2_roots"));
    let roots: Vec<&Vec<String>> = rows.iter().filter(|r| r[3] == "root").collect();
    let poles = rows.iter().filter(|r| r[3] == "pole").count();
    assert_eq!(poles, 20);
    let m = meta(&path);
    let grid = m["extras"]["g_path"].as_array().unwrap();
    assert_eq!(roots.len(), 20 * grid.len());
    assert!(m["extras"]["max_residual"].as_f64().unwrap() < 1e-10);
    // larger g₊ pushes the roots further out along the negative real axis
    let mean_re = |g: f64| {
        let v: Vec<f64> = roots.iter().filter(|r| r[2].parse::<f64>().unwrap() == g).map(|r| r[0].parse().unwrap()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let gs: Vec<f64> = grid.iter().map(|g| g.as_f64().unwrap()).collect();
    assert!(gs.windows(2).all(|w| mean_re(w[0]) < mean_re(w[1])));
}

#[test]
fn fig3_exact_routes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fig3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("fig3_rates.csv"));
    assert_eq!(header, schema_columns("fig3_rates"));
    assert_eq!(rows.len(), 20);
    for r in &rows {
        let v: Vec<f64> = r[..5].iter().map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - v[2]).abs() < 1e-6 * v[1].abs(), "ED {} vs Bethe {}", v[1], v[2]);
        assert!((v[3] - v[4]).abs() < (v[2] - v[4]).abs());
        assert!(r[5].is_empty());
    }
}

#[test]
fn fig4_has_constant_trajectory_count_and_crossings() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["fig4"], dir.path()).status.success());
    let path = dir.path().join("fig4_flow.csv");
    let (header, rows) = read_csv(&path);
    assert_eq!(header, schema_columns("fig4_flow"));
    let m = meta(&path);
    let count = m["extras"]["trajectories"].as_u64().unwrap() as usize;
    let mut per_point = std::collections::BTreeMap::<String, usize>::new();
    for r in &rows {
        *per_point.entry(r[0].clone()).or_default() += 1;
    }
    assert!(per_point.values().all(|&c| c == count));
    assert!(!m["extras"]["crossings"].as_array().unwrap().is_empty());
}

#[test]
fn every_table_matches_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [&["ed", "--n", "3"], &["bethe-solve", "--n", "4", "--g-grid", "50,20"], &["sweep", "--n", "3", "--draws", "10"]];
    for args in runs {
        let out = run(args, dir.path());
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["ed_spectrum", "bethe_roots", "bethe_eigenvalues", "sweep_rates"] {
        let (header, rows) = read_csv(&dir.path().join(format!("{name}.csv")));
        assert_eq!(header, schema_columns(name), "{name}");
        assert!(!rows.is_empty());
    }
}

#[test]
fn json_format_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["ed", "--n", "2", "--sector", "0", "--format", "json"], dir.path()).status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("ed_spectrum.json")).unwrap()).unwrap();
    let recs = v.as_array().unwrap();
    assert_eq!(recs.len(), 3);
    assert!(recs.iter().all(|r| r["sector"] == 0 && r["re"].is_f64()));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nn = 3\nsector = -1   # one sector\nseed = 5\n").unwrap();
    let cfg_s = cfg.to_str().unwrap();
    assert!(run(&["ed", "--config", cfg_s], dir.path()).status.success());
    let (_, rows) = read_csv(&dir.path().join("ed_spectrum.csv"));
    assert_eq!(rows.len(), 6);
    assert!(run(&["ed", "--config", cfg_s, "--n", "2"], dir.path()).status.success());
    let (_, rows) = read_csv(&dir.path().join("ed_spectrum.csv"));
    assert_eq!(rows.len(), 2);
    let m = meta(&dir.path().join("ed_spectrum.csv"));
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["extra"]["sector"], "-1");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["fig1", "--no-such-flag"], dir.path()).status.code(), Some(2));
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "n = 3\nmystery = 1\n").unwrap();
    assert_eq!(run(&["ed", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
    std::fs::write(&cfg, "n = three\n").unwrap();
    assert_eq!(run(&["ed", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["ed", "--g-plus", "-1"], dir.path()).status.code(), Some(2));
}

#[test]
fn injected_fault_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["validate", "--inject-fault", "flip-interaction", "--a4-trajectories", "2000"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("validation_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    let criteria = report["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 10);
    let a5 = criteria.iter().find(|c| c["id"] == "A5").unwrap();
    assert_eq!(a5["passed"], false);
    assert!(criteria.iter().all(|c| c["runtime_s"].is_f64()));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with('A')).count(), 10);
}
