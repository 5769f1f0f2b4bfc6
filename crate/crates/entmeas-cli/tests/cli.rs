//! End-to-end tests driving the compiled binary: exit codes, report
//! contents, scan schemas, and rerun determinism.

use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut command = Command::new(env!("CARGO_BIN_EXE_entmeas"));
    for var in [
        "ENTMEAS_EPS",
        "ENTMEAS_MODE",
        "ENTMEAS_SEED",
        "ENTMEAS_THREADS",
        "ENTMEAS_MAX_DIM",
    ] {
        command.env_remove(var);
    }
    command
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let output = run(args);
    assert!(
        output.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).expect("stdout is UTF-8")
}

fn run_json(args: &[&str]) -> Value {
    serde_json::from_str(&run_ok(args)).expect("stdout is JSON")
}

fn subset_value(report: &Value, set: &[u64], kind: &str) -> Option<f64> {
    report["subsets"]
        .as_array()
        .unwrap()
        .iter()
        .find_map(|entry| {
            let indices: Vec<u64> = entry["set"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_u64().unwrap())
                .collect();
            (indices == set && entry["kind"] == kind).then(|| entry["value"].as_f64().unwrap())
        })
}

#[test]
fn state_summary_reports_ghz_purity_and_marginals() {
    let stdout = run_ok(&["state", "ghz(n=3)"]);
    assert!(stdout.contains("shape: 2x2x2"), "{stdout}");
    assert!(stdout.contains("pure: yes"), "{stdout}");
    assert!(stdout.contains("purity: 1.000000000000"), "{stdout}");
    for factor in 1..=3 {
        assert!(
            stdout.contains(&format!("S({factor}): 1.000000000000")),
            "{stdout}"
        );
    }
}

#[test]
fn state_accepts_a_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.spec");
    std::fs::write(&path, "ghz(n=4)\n").unwrap();
    let stdout = run_ok(&["state", path.to_str().unwrap()]);
    assert!(stdout.contains("shape: 2x2x2x2"), "{stdout}");
}

#[test]
fn state_rejects_points_outside_the_positivity_region() {
    let output = run(&["state", "line2(alpha=2,beta=0)"]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("positive"), "{stderr}");
}

#[test]
fn measure_sep_reports_the_bell_block() {
    let report = run_json(&["measure", "sep", "ghz_phi_mix(p=0,alpha=0.3)"]);
    let pair = subset_value(&report, &[1, 2], "exact").unwrap();
    assert!((pair - 2.0).abs() < 1e-9, "E(12) = {pair}");
    assert!((report["total"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(report["partition"], serde_json::json!([[1, 2], [3]]));
}

#[test]
fn measure_sep_requires_a_pure_state() {
    let output = run(&["measure", "sep", "smolin(n=4,c=0.5,0.5,0.5)"]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("pure"), "{stderr}");
}

#[test]
fn measure_phys_both_mode_brackets_the_w_pairs() {
    let report = run_json(&["measure", "phys", "w(n=3)", "--mode", "both"]);
    let expected = 2.0 * (9.0f64 / 7.0).log2();
    let lower = subset_value(&report, &[1, 2], "lower-bound").unwrap();
    let upper = subset_value(&report, &[1, 2], "upper-bound").unwrap();
    assert!((lower - expected).abs() < 1e-9, "lower {lower}");
    assert!(upper >= lower - 1e-9, "upper {upper} under lower {lower}");
    assert!((upper - expected).abs() < 1e-4, "upper {upper}");
}

#[test]
fn mode_environment_variable_mirrors_the_flag() {
    let output = bin()
        .env("ENTMEAS_MODE", "both")
        .args(["measure", "phys", "ghz(n=3)"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("lower-bound") && stdout.contains("upper-bound"),
        "{stdout}"
    );
}

#[test]
fn measure_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    run_ok(&["measure", "sep", "ghz(n=3)", "-o", path.to_str().unwrap()]);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((report["total"].as_f64().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn scan_reproduces_the_mixture_endpoints() {
    let stdout = run_ok(&["scan", "ghz_epr_mix", "alpha=0..pi/2", "step=pi/4", "phys"]);
    let rows: Vec<&str> = stdout.lines().collect();
    assert_eq!(rows[0], "alpha,phys_pairs,phys_top,phys_total,status");
    assert_eq!(rows.len(), 4);
    let first: Vec<&str> = rows[1].split(',').collect();
    let last: Vec<&str> = rows[3].split(',').collect();
    assert!((first[1].parse::<f64>().unwrap()).abs() < 1e-6, "{stdout}");
    assert!(
        (first[2].parse::<f64>().unwrap() - 4.0).abs() < 1e-6,
        "{stdout}"
    );
    assert!(
        (last[1].parse::<f64>().unwrap() - 4.0).abs() < 1e-6,
        "{stdout}"
    );
    assert!((last[2].parse::<f64>().unwrap()).abs() < 1e-6, "{stdout}");
}

#[test]
fn scan_schema_depends_only_on_the_requested_quantities() {
    let scrambled = run_ok(&[
        "scan",
        "line2",
        "ppt",
        "bound",
        "alpha=0..0.5:0.25",
        "beta=0",
    ]);
    assert_eq!(
        scrambled.lines().next().unwrap(),
        "alpha,bound,ppt_min_eig,ppt_npt,status"
    );
}

#[test]
fn scan_marks_nonpositive_points_invalid_and_continues() {
    let stdout = run_ok(&["scan", "line2", "alpha=-0.5..1:0.25", "beta=0", "bound"]);
    let rows: Vec<&str> = stdout.lines().collect();
    assert_eq!(rows.len(), 8, "{stdout}");
    assert!(
        rows[1].ends_with(",invalid") && rows[1].contains(",,"),
        "{stdout}"
    );
    assert!(rows[2].ends_with(",invalid"), "{stdout}");
    for row in &rows[3..] {
        assert!(row.ends_with(",ok"), "{stdout}");
    }
}

#[test]
fn scan_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str| {
        let path = dir.path().join(name);
        run_ok(&[
            "scan",
            "line2",
            "alpha=-0.125..1:0.125",
            "beta=0",
            "bound",
            "ppt",
            "-o",
            path.to_str().unwrap(),
        ]);
        std::fs::read(&path).unwrap()
    };
    assert_eq!(write("first.csv"), write("second.csv"));
}

#[test]
fn scan_rejects_tokens_without_a_sweep() {
    let output = run(&["scan", "line2", "alpha=0.5", "bound"]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("swept parameter"), "{stderr}");
}

#[test]
fn smolin_reports_the_sign_test_and_bound_side_by_side() {
    let report = run_json(&["smolin", "4", "1,1,1"]);
    assert_eq!(report["entangled"], Value::Bool(false));
    assert!((report["bound_value"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let output = run(&["smolin", "3", "1,0,0"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn ppt_flags_the_bell_state_and_clears_a_product() {
    let bell = run_json(&["ppt", "bell()"]);
    assert_eq!(bell["is_npt"], Value::Bool(true));
    assert!((bell["min_eigenvalue"].as_f64().unwrap() + 0.5).abs() < 1e-9);

    let product = run_json(&["ppt", "ghz_phi_mix(p=0,alpha=0)"]);
    assert_eq!(product["is_npt"], Value::Bool(false));
}

#[test]
fn spec_parse_errors_name_the_offending_column() {
    let output = run(&["state", "ghz(m=3)"]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("column") && stderr.contains("unknown parameter"),
        "{stderr}"
    );
}
