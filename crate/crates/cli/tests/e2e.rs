//! End-to-end runs of the `blc` binary: exit-code contract, output shapes,
//! and the emit/parse round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn blc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blc")).args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn emit_example(dir: &Path, name: &str, file: &str) -> PathBuf {
    let path = dir.join(file);
    let out = blc(&["example", name, "--emit", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "emitting {name} failed: {}", stdout(&out));
    path
}

/// Extracts the number after `=` on the first line starting with `prefix`.
fn parse_value(text: &str, prefix: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(prefix))
        .unwrap_or_else(|| panic!("no `{prefix}` line in:\n{text}"));
    line.split('=').nth(1).expect("has =").trim().parse().expect("parses")
}

#[test]
fn example_emit_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["four-linear:0.1", "young:0.3333333333333333,0.9,0.7666666666666666"] {
        let path = emit_example(dir.path(), name, "datum.json");
        let text = std::fs::read_to_string(&path).unwrap();
        let datum: blc_core::Datum = blc_core::parse_datum_json(&text).unwrap();
        assert_eq!(blc_core::datum_to_json(&datum), text, "{name} drifted through a round trip");
    }
}

#[test]
fn example_prints_json_to_stdout() {
    let out = blc(&["example", "loomis-whitney:3"]);
    assert_eq!(exit_code(&out), 0);
    let datum: blc_core::Datum = blc_core::parse_datum_json(&stdout(&out)).unwrap();
    assert_eq!(datum.n, 3);
    assert_eq!(datum.maps.len(), 3);
}

#[test]
fn unknown_example_name_is_a_usage_error() {
    let out = blc(&["example", "sobolev"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn validate_exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let good = emit_example(dir.path(), "holder", "good.json");
    let out = blc(&["validate", good.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 2, "maps": [{"p": 1.5, "matrix": [[1.0, 0.0]]}]}"#).unwrap();
    let out = blc(&["validate", bad.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    assert!(stdout(&out).contains("exponent"), "violation not printed: {}", stdout(&out));

    let truncated = dir.path().join("trunc.json");
    std::fs::write(&truncated, "{\"n\": 2").unwrap();
    let out = blc(&["validate", truncated.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn check_distinguishes_finite_infinite_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let finite = emit_example(dir.path(), "four-linear:1", "fl.json");
    let out = blc(&["check", finite.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout(&out).starts_with("finite"));

    let unbalanced = dir.path().join("unbalanced.json");
    std::fs::write(
        &unbalanced,
        r#"{"n": 2, "maps": [{"p": 0.9, "matrix": [[1.0, 0.0], [0.0, 1.0]]},
                             {"p": 0.9, "matrix": [[1.0, 0.0], [0.0, 1.0]]}]}"#,
    )
    .unwrap();
    let out = blc(&["check", unbalanced.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3);
    assert!(stdout(&out).contains("scaling defect"));

    // a clean general-rank datum: nothing to refute, family not exhaustive
    let rank2 = dir.path().join("rank2.json");
    std::fs::write(
        &rank2,
        r#"{"n": 2, "maps": [{"p": 1.0, "matrix": [[1.0, 0.0], [0.0, 1.0]]}]}"#,
    )
    .unwrap();
    let out = blc(&["check", rank2.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 4);
    assert!(stdout(&out).starts_with("unknown"));
}

#[test]
fn compute_prints_both_scales_of_the_constant() {
    let dir = tempfile::tempdir().unwrap();
    let young = emit_example(dir.path(), "young", "young.json");
    let out = blc(&["compute", young.to_str().unwrap(), "--method", "barthe"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    let bl = parse_value(&text, "BL ");
    let bl2 = parse_value(&text, "BL^2");
    assert!((bl - 0.75f64.sqrt()).abs() < 1e-4, "young constant off: {bl}");
    assert!((bl2 - bl * bl).abs() < 1e-12);
}

#[test]
fn compute_both_reports_discrepancy() {
    let dir = tempfile::tempdir().unwrap();
    let fl = emit_example(dir.path(), "four-linear:1", "fl.json");
    let out = blc(&["compute", fl.to_str().unwrap(), "--both"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("method: lieb"));
    assert!(text.contains("method: barthe"));
    let disc =
        text.lines().find(|l| l.starts_with("discrepancy")).expect("discrepancy line printed");
    let abs: f64 =
        disc.split_whitespace().nth(1).expect("value").parse().expect("absolute term parses");
    assert!(abs < 1e-3, "methods disagree: {disc}");
}

#[test]
fn compute_on_an_infinite_datum_prints_the_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let parallel = dir.path().join("parallel.json");
    let third = 2.0 / 3.0;
    std::fs::write(
        &parallel,
        format!(
            r#"{{"n": 2, "maps": [{{"p": {third}, "matrix": [[1.0, 0.0]]}},
                                  {{"p": {third}, "matrix": [[1.0, 0.0]]}},
                                  {{"p": {third}, "matrix": [[1.0, 0.0]]}}]}}"#
        ),
    )
    .unwrap();
    for method in ["barthe", "lieb"] {
        let out = blc(&["compute", parallel.to_str().unwrap(), "--method", method]);
        assert_eq!(exit_code(&out), 3, "{method} should refuse");
        let text = stdout(&out);
        assert!(text.contains("+inf"), "{method} output: {text}");
        assert!(text.contains("certificate"), "{method} output: {text}");
    }
}

#[test]
fn probe_writes_the_sample_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = emit_example(dir.path(), "four-linear:0", "a.json");
    let b = emit_example(dir.path(), "four-linear:1", "b.json");
    let csv_path = dir.path().join("path.csv");
    let out = blc(&[
        "probe",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--grid",
        "5",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,value,infinite,method,converged,iterations,seconds");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0,") && lines[5].starts_with("1,"));
}

#[test]
fn probe_slopes_surface_the_kink() {
    let dir = tempfile::tempdir().unwrap();
    let a = emit_example(dir.path(), "four-linear:0", "a.json");
    let b = emit_example(dir.path(), "four-linear:1", "b.json");
    let csv = dir.path().join("path.csv");
    let out = blc(&[
        "probe",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--slopes",
        "0.0",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    let line = text.lines().find(|l| l.starts_with("slopes")).expect("slopes line");
    let mut numbers = line.split("= ").skip(2).map(|chunk| {
        chunk.split(',').next().unwrap().trim().parse::<f64>().expect("slope parses")
    });
    let left = numbers.next().unwrap();
    let right = numbers.next().unwrap();
    assert!(left.abs() <= 0.05, "left slope {left}");
    assert!((right + 0.5).abs() <= 0.05, "right slope {right}");
}

#[test]
fn probe_rejects_mismatched_signatures() {
    let dir = tempfile::tempdir().unwrap();
    let a = emit_example(dir.path(), "four-linear:1", "a.json");
    let b = emit_example(dir.path(), "young", "b.json");
    let out = blc(&["probe", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn probe_on_identical_files_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let a = emit_example(dir.path(), "young", "a.json");
    let out = blc(&["probe", a.to_str().unwrap(), a.to_str().unwrap(), "--grid", "4"]);
    assert_eq!(exit_code(&out), 0);
    let values: Vec<f64> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 4);
    for v in &values {
        assert!((v - values[0]).abs() <= 1e-9, "constant path wobbled: {values:?}");
    }
}

#[test]
fn dump_weights_emits_the_subset_table() {
    let dir = tempfile::tempdir().unwrap();
    let fl = emit_example(dir.path(), "four-linear:1", "fl.json");
    let out = blc(&["dump-weights", fl.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "subset,d_I,q_I");
    assert_eq!(lines.len(), 7); // C(4,2) subsets
    assert!(lines.contains(&"1-2,1,0.25"));
    assert!(lines.contains(&"3-4,4,0.25"));
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let fl = emit_example(dir.path(), "four-linear:-0.5", "fl.json");
    let args = ["compute", fl.to_str().unwrap(), "--method", "lieb", "--seed", "7"];
    let first = blc(&args);
    let second = blc(&args);
    assert_eq!(stdout(&first), stdout(&second));
}
