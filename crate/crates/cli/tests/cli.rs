use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn wva(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wva"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of a CSV with `#` comments, split into cells.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn bundled() -> String {
    fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/examples/quartz_plate.json"
    ))
    .unwrap()
}

fn write_config(dir: &tempfile::TempDir, text: &str) -> String {
    let path = dir.path().join("exp.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn shifts_of_default_config() {
    let out = wva(&["shifts", "--format", "json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let get = |k: &str| v[k].as_f64().unwrap();
    assert!((get("shift_h_um") - 67.92).abs() < 0.01);
    assert!((get("shift_v_um") - 67.28).abs() < 0.01);
    assert!((get("g_lambda_plus_um") - 67.60).abs() < 0.01);
    assert!((get("g_lambda_minus_um") - 0.32).abs() < 0.005);
}

#[test]
fn shifts_without_birefringence() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(&dir, &bundled().replace("\"n_e\": 1.55165", "\"n_e\": 1.54261"));
    let out = wva(&["shifts", "--config", &path]);
    assert!(out.status.success());
    let text = stdout(&out);
    let m = rows(&text).into_iter().find(|r| r[0] == "g_lambda_minus_um").unwrap();
    assert_eq!(m[1], "0");
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(&dir, &bundled().replace("\"n_o\": 1.54261,", ""));
    let out = wva(&["shifts", "--config", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_o"));

    let out = wva(&["shifts", "--config", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = wva(&["power", "--c", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = wva(&["power-curve", "--c-min", "2", "--c-max", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn table1_default_rows() {
    let out = wva(&["table1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("beta_rad,C,weak_value_ratio_sq\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 3);
    assert_eq!(r[0][1], "1");
    assert_eq!(r[0][2], "0");
    let c_b: f64 = r[1][1].parse().unwrap();
    let ratio_b: f64 = r[1][2].parse().unwrap();
    assert!((c_b + 0.999).abs() < 5e-4 && (ratio_b - 2065.0).abs() < 1.0);
    assert_eq!(r[2][1], "-1");
    assert_eq!(r[2][2], "indeterminate");
}

#[test]
fn table1_overrides() {
    let r = rows(&stdout(&wva(&["table1", "--alpha", "0"])));
    assert!(r.iter().all(|row| row[1] == "0"));
    let r = rows(&stdout(&wva(&["table1", "--beta", "0.1,135deg,-pi/8"])));
    assert_eq!(r.len(), 3);
    let c: f64 = r[1][1].parse().unwrap();
    assert!((c + 1.0).abs() < 1e-15);
}

fn curve(args: &[&str]) -> Vec<(f64, Option<f64>, f64)> {
    let out = wva(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    rows(&stdout(&out))
        .into_iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().ok(), r[2].parse().unwrap()))
        .collect()
}

#[test]
fn power_curve_case_c_separates() {
    let rows = curve(&[
        "power-curve",
        "--case",
        "c",
        "--c-min",
        "0.1",
        "--c-max",
        "3",
        "--points",
        "59",
    ]);
    assert_eq!(rows.len(), 59);
    assert!(rows.iter().all(|(_, ps, nps)| ps.unwrap() > *nps));
}

#[test]
fn power_curve_case_b_nearly_overlaps() {
    let rows = curve(&["power-curve", "--case", "b", "--c-min", "0.5", "--c-max", "2"]);
    assert!(rows.iter().all(|(_, ps, nps)| (ps.unwrap() - nps).abs() <= 0.02));
}

#[test]
fn power_curve_without_splitting() {
    let rows = curve(&["power-curve", "--case", "b", "--g-lambda-minus", "0"]);
    assert!(rows.iter().all(|(_, ps, nps)| (ps.unwrap() - nps).abs() <= 1e-10));
    // crossed analyzer: no postselected photons at all
    let out = wva(&["power-curve", "--case", "c", "--g-lambda-minus", "0", "--points", "3"]);
    assert!(out.status.success());
    for r in rows_of(&out) {
        assert_eq!(r[1], "");
        assert!(r[3].contains("degenerate"));
    }
}

fn rows_of(out: &Output) -> Vec<Vec<String>> {
    rows(&stdout(out))
}

#[test]
fn header_comments_carry_parameters() {
    let text = stdout(&wva(&["power-curve", "--case", "c", "--points", "3"]));
    assert!(text.starts_with("# case=c "));
    assert!(text.contains("# c_min=0.1 c_max=3 points=3\n"));
    assert!(!text.contains('\r'));
}

#[test]
fn pdf_output() {
    let out = wva(&["pdf", "--case", "b", "--kind", "nps", "--points", "11"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("y_um,density_per_um\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 11);
    assert!(r.iter().all(|row| row[1].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn calibrate_size() {
    let v: Value = serde_json::from_str(&stdout(&wva(&["calibrate", "--size", "0.05", "--format", "json"]))).unwrap();
    assert!((v["c"].as_f64().unwrap() - 1.959963984540054).abs() < 1e-9);
    assert_eq!(wva(&["calibrate", "--size", "1.5"]).status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--case", "b", "--n", "200000", "--seed", "11"];
    let a = wva(&args);
    let b = wva(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["outcome"], "detected");
    assert!(v["n_detected"].as_u64().unwrap() > 0);
    assert!(v["z_score"].as_f64().unwrap().abs() < 5.0);
}

#[test]
fn simulate_without_birefringence_reports_no_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(&dir, &bundled().replace("\"n_e\": 1.55165", "\"n_e\": 1.54261"));
    let batch = dir.path().join("batch.csv");
    let out = wva(&[
        "simulate",
        "--config",
        &path,
        "--case",
        "c",
        "--n",
        "1000",
        "--batch-csv",
        batch.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["outcome"], "no data detected");
    assert_eq!(v["n_detected"], 0);
    let csv = fs::read_to_string(batch).unwrap();
    assert_eq!(csv.lines().count(), 1001);
    assert_eq!(csv.lines().nth(1), Some("0,0,,"));
}

#[test]
fn batch_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.csv");
    let out = wva(&[
        "simulate",
        "--case",
        "b",
        "--mode",
        "nps",
        "--n",
        "100",
        "--batch-csv",
        batch.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(batch).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("photon_index,detected,y_adjusted_um,decision"));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 100);
    assert!(body.iter().all(|l| l.split(',').nth(1) == Some("1")));
}

#[test]
fn out_flag_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let out = wva(&["table1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    assert_eq!(fs::read(&path).unwrap(), wva(&["table1"]).stdout);
}

fn verify(extra: &[&str]) -> (Option<i32>, Value) {
    let mut args = vec!["verify", "--seeds", "1"];
    args.extend_from_slice(extra);
    let out = wva(&args);
    (out.status.code(), serde_json::from_str(&stdout(&out)).unwrap())
}

fn criterion(report: &Value, id: u64) -> &Value {
    report["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == id)
        .unwrap()
}

#[test]
fn verify_exit_code_follows_report() {
    let (code, report) = verify(&[]);
    let passed = report["passed"].as_bool().unwrap();
    assert_eq!(code, Some(if passed { 0 } else { 1 }));
    for c in report["criteria"].as_array().unwrap() {
        for check in c["checks"].as_array().unwrap() {
            for key in ["name", "expected", "actual", "tolerance", "passed"] {
                assert!(!check[key].is_null(), "{key} missing");
            }
        }
    }
    assert_eq!(criterion(&report, 7)["passed"], true);
}

#[test]
fn verify_catches_perturbed_erf() {
    let (code, report) = verify(&["--perturb-erf", "1e-6"]);
    assert_eq!(code, Some(1));
    assert_eq!(report["passed"], false);
    assert_eq!(criterion(&report, 7)["passed"], false);
    assert_eq!(criterion(&report, 1)["passed"], true);
}
