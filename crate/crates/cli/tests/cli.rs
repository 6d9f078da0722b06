//! End-to-end checks of the CLI surface: file formats, exit codes, and the
//! documented output shapes.

use std::path::Path;
use std::process::{Command, Output};

fn orgutil(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orgutil"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) {
    std::fs::write(dir.join(name), contents).unwrap();
}

const UNANIMITY: &str = r#"{"kind":"and","children":[
  {"kind":"leaf","id":"A","utility":{"kind":"affine","alpha":5.0,"beta":[1.0]}},
  {"kind":"leaf","id":"B","utility":{"kind":"affine","alpha":-5.0,"beta":[3.0]}}
]}"#;

const POLYARCHY: &str = r#"{"kind":"or","children":[
  {"kind":"leaf","id":"A","utility":{"kind":"affine","alpha":5.0,"beta":[1.0]}},
  {"kind":"leaf","id":"B","utility":{"kind":"affine","alpha":-5.0,"beta":[3.0]}}
]}"#;

const OPPOSING: &str = r#"{"kind":"and","children":[
  {"kind":"leaf","id":"pro","utility":{"kind":"affine","alpha":1.0,"beta":[1.0]}},
  {"kind":"leaf","id":"anti","utility":{"kind":"affine","alpha":-1.0,"beta":[-0.5]}}
]}"#;

const BET: &str = r#"{"branches":[{"outcome":10.0,"prob":0.5},{"outcome":-10.0,"prob":0.5}]}"#;

fn csv_rows(stdout: &[u8]) -> Vec<Vec<String>> {
    String::from_utf8_lossy(stdout)
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn derive_emits_documented_columns_and_values() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "unan.json", UNANIMITY);
    let out = orgutil(&["derive", "--input", "unan.json", "--grid", "-10:10:2001"], dir.path());
    assert!(out.status.success());
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows[0], vec!["x", "u_org", "s_org", "u_A", "s_A", "u_B", "s_B", "note"]);
    assert_eq!(rows.len(), 2002);
    let at4 = rows.iter().find(|r| r[0] == "4").expect("x=4 on the grid");
    let u_org: f64 = at4[1].parse().unwrap();
    assert!((u_org - 6.87).abs() < 0.01, "u_org(4) = {u_org}");
    // member columns are the raw member utilities
    assert_eq!(at4[3], "9");
    assert_eq!(at4[5], "7");
}

#[test]
fn derive_single_leaf_equals_member() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "solo.json",
        r#"{"kind":"leaf","id":"only","utility":{"kind":"affine","alpha":1.0,"beta":[2.0]}}"#,
    );
    let out = orgutil(&["derive", "--input", "solo.json", "--grid", "-5:5:11"], dir.path());
    assert!(out.status.success());
    for row in csv_rows(&out.stdout).iter().skip(1).filter(|r| r.len() > 1) {
        let u_org: f64 = row[1].parse().unwrap();
        let u_member: f64 = row[3].parse().unwrap();
        assert!((u_org - u_member).abs() < 1e-9);
    }
}

#[test]
fn derive_malformed_json_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "broken.json", "{\"kind\":\"and\",");
    let out = orgutil(&["derive", "--input", "broken.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn derive_rejects_multivariate_structures() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "multi.json",
        r#"{"kind":"leaf","id":"m","utility":{"kind":"affine","alpha":0.0,"beta":[1.0,2.0]}}"#,
    );
    let out = orgutil(&["derive", "--input", "multi.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn risk_reports_published_quantities() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "unan.json", UNANIMITY);
    write(dir.path(), "poly.json", POLYARCHY);
    write(dir.path(), "bet.json", BET);

    let out = orgutil(&["risk", "--input", "unan.json", "--lottery", "bet.json"], dir.path());
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["expected_utility"].as_f64().unwrap() - -12.5).abs() < 0.05);
    assert!((doc["certainty_equivalent"].as_f64().unwrap() - -2.5).abs() < 0.05);
    assert!((doc["min_winning_probability"].as_f64().unwrap() - 0.73).abs() < 0.01);

    let out = orgutil(&["risk", "--input", "poly.json", "--lottery", "bet.json"], dir.path());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["expected_utility"].as_f64().unwrap() - 17.5).abs() < 0.05);
    assert!((doc["certainty_equivalent"].as_f64().unwrap() - 4.4).abs() < 0.05);
    assert!((doc["min_winning_probability"].as_f64().unwrap() - 0.11).abs() < 0.01);
}

#[test]
fn risk_surfaces_non_monotone_reason_instead_of_failing() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "opposing.json", OPPOSING);
    write(dir.path(), "bet.json", BET);
    let out = orgutil(&["risk", "--input", "opposing.json", "--lottery", "bet.json"], dir.path());
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["certainty_equivalent"].is_null());
    assert_eq!(doc["certainty_equivalent_reason"], "non-monotone");
    assert!(doc["expected_utility"].is_number());
}

#[test]
fn risk_numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // utilities beyond the floating-point horizon saturate the screening
    write(
        dir.path(),
        "saturated.json",
        r#"{"kind":"and","children":[
          {"kind":"leaf","id":"a","utility":{"kind":"constant","value":800.0}},
          {"kind":"leaf","id":"b","utility":{"kind":"constant","value":800.0}}
        ]}"#,
    );
    write(dir.path(), "bet.json", BET);
    let out = orgutil(&["risk", "--input", "saturated.json", "--lottery", "bet.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn games_deterministic_market_hits_textbook_point() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "certain.json", r#"{"game":"cournot","a_mean":10.0,"a_sd":0.0,"b":0.5,"c":1.0}"#);
    let out = orgutil(&["games", "--input", "certain.json"], dir.path());
    assert!(out.status.success());
    let rows = csv_rows(&out.stdout);
    let nn = rows.iter().find(|r| r[0] == "NN").unwrap();
    let q_i: f64 = nn[1].parse().unwrap();
    let q_j: f64 = nn[2].parse().unwrap();
    assert!((q_i - 6.0).abs() < 1e-5 && (q_j - 6.0).abs() < 1e-5);
    assert_eq!(nn[9], "true");
}

#[test]
fn games_contract_orders_principals() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "contract.json",
        r#"{"game":"contract","sigma":3.0,"gamma":0.5,"reservation_utility":-5.0}"#,
    );
    let out = orgutil(&["games", "--input", "contract.json", "--seed", "42"], dir.path());
    assert!(out.status.success());
    let rows = csv_rows(&out.stdout);
    let w_v = |label: &str| -> f64 {
        rows.iter().find(|r| r[0] == label).unwrap()[2].parse().unwrap()
    };
    assert!(w_v("U") > w_v("N") && w_v("N") > w_v("P"));
}

#[test]
fn games_unknown_game_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "weird.json", r#"{"game":"chess"}"#);
    let out = orgutil(&["games", "--input", "weird.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn games_infeasible_contract_recorded_per_row() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "impossible.json",
        r#"{"game":"contract","sigma":3.0,"gamma":0.5,"reservation_utility":100.0}"#,
    );
    let out = orgutil(&["games", "--input", "impossible.json"], dir.path());
    assert!(out.status.success(), "run continues with per-row errors");
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 1 + 3); // header + one row per principal
    for row in &rows[1..4] {
        assert!(row.last().unwrap().contains("participation"), "row: {row:?}");
    }
}

#[test]
fn figures_unknown_id_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = orgutil(&["figures", "--figure", "nonexistent"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn figures_vary_n_emits_ten_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = orgutil(
        &["figures", "--figure", "vary_n", "--output", "vn.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("vn.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 11); // x + 5 AND curves + 5 OR curves
    assert!(header.contains(&"u_and_n5") && header.contains(&"u_or_n5"));
}

#[test]
fn figures_custom_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "spec.json",
        r#"{"figure_id":"opposing_views","grid":{"x_min":-4.0,"x_max":4.0,"points":9},"output_path":"ov.csv"}"#,
    );
    let out = orgutil(&["figures", "--input", "spec.json"], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("ov.csv")).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.starts_with("x,u_a,u_b,u_unan,u_poly,s_unan,s_poly"));
}

#[test]
fn seed_env_var_matches_flag() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "contract.json",
        r#"{"game":"contract","sigma":3.0,"gamma":0.5,"reservation_utility":-5.0}"#,
    );
    let flagged = orgutil(
        &["games", "--input", "contract.json", "--seed", "7", "--output", "a.csv"],
        dir.path(),
    );
    assert!(flagged.status.success());
    let via_env = Command::new(env!("CARGO_BIN_EXE_orgutil"))
        .args(["games", "--input", "contract.json", "--output", "b.csv"])
        .env("ORGUTIL_SEED", "7")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(via_env.status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn report_goes_to_stderr_as_json() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "unan.json", UNANIMITY);
    let out = orgutil(&["derive", "--input", "unan.json", "--grid", "-1:1:3"], dir.path());
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr is a JSON report");
    assert_eq!(report["command"], "derive");
    assert!(report["wall_ms"].is_number());
    assert_eq!(report["outputs"][0], "<stdout>");
}

#[test]
fn json_format_produces_columns_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "unan.json", UNANIMITY);
    let out = orgutil(
        &["derive", "--input", "unan.json", "--grid", "-1:1:3", "--format", "json"],
        dir.path(),
    );
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["columns"][0], "x");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
}
