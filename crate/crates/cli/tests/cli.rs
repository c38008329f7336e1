use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn nfc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nfc")).args(args).output().expect("run nfc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(o: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn col<'a>(header: &[String], row: &'a [String], name: &str) -> &'a str {
    &row[header.iter().position(|h| h == name).unwrap()]
}

fn config_file(name: &str, body: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("nfc-cli-test-{}-{name}.json", std::process::id()));
    std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
    path
}

#[test]
fn validate_default_passes() {
    let o = nfc(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = csv_rows(&o);
    assert!(rows.iter().all(|r| col(&h, r, "passed") == "true"));
}

#[test]
fn validate_bad_l_seq_names_failing_k() {
    let path = config_file("lseq", r#"{"n_seq": [3, 8, 15, 24, 35], "l_seq": [1, 2, 3]}"#);
    let o = nfc(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("condition_lk[1]"), "{}", stderr(&o));
    let (h, rows) = csv_rows(&o);
    let failing: Vec<_> = rows.iter().filter(|r| col(&h, r, "passed") == "false").collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(col(&h, failing[0], "check"), "condition_lk");
    assert_eq!(col(&h, failing[0], "index"), "1");
}

#[test]
fn missing_n_seq_is_a_parse_error() {
    let path = config_file("missing", "{\n  \"l_seq\": [1, 2, 8, 44]\n}\n");
    let o = nfc(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("n_seq") && err.contains("line"), "{err}");
}

#[test]
fn unknown_config_key_rejected() {
    let path = config_file("unknown", r#"{"n_seq": [3, 8], "l_seq": [1, 2, 8], "heigth": 3}"#);
    let o = nfc(&["heights", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn flags_override_file() {
    let path = config_file("override", r#"{"n_seq": [3, 8, 15, 24, 35], "l_seq": [1, 2, 8, 44], "trunc": 5}"#);
    let o = nfc(&["heights", "--config", path.to_str().unwrap(), "--trunc", "3", "--output", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["meta"]["config"]["trunc"], 3);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn usage_error_exits_3() {
    assert_eq!(nfc(&["bogus"]).status.code(), Some(3));
    assert_eq!(nfc(&["heights", "--window", "5..1"]).status.code(), Some(3));
    assert_eq!(nfc(&["--help"]).status.code(), Some(0));
}

#[test]
fn heights_table() {
    let o = nfc(&["heights", "--trunc", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = csv_rows(&o);
    let hs: Vec<&str> = rows.iter().map(|r| col(&h, r, "h")).collect();
    assert_eq!(hs, ["1", "4", "13", "40", "241", "724", "2173", "6520", "19561", "78244"]);
    assert_eq!(col(&h, &rows[0], "n"), "0");
    assert_eq!(col(&h, &rows[3], "mu"), "40/27");
    assert_eq!(col(&h, &rows[3], "special"), "1");
    // Tower 4 is the first built over a special stage.
    assert_eq!(col(&h, &rows[4], "growth"), "241/120");
    assert_eq!(col(&h, &rows[4], "special_growth"), "true");
}

#[test]
fn crossings_traced_example() {
    let o = nfc(&[
        "crossings", "--trunc", "4", "--d", "2", "--point", "idx:10", "--point", "idx:90", "--n", "3", "--window",
        "-10..35",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = csv_rows(&o);
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!((col(&h, r, "lo"), col(&h, r, "hi"), col(&h, r, "size")), ("-10", "29", "40"));
    assert_eq!(col(&h, r, "tvec"), "1;2");
    assert_eq!(col(&h, r, "synchronized"), "false");
}

#[test]
fn crossings_at_truncation_stage_single_partial_row() {
    let o = nfc(&["crossings", "--trunc", "4", "--point", "idx:10", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = csv_rows(&o);
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!((col(&h, r, "lo"), col(&h, r, "hi")), ("-10", "230"));
    assert_eq!(col(&h, r, "partial"), "true");
}

#[test]
fn crossings_out_of_truncation_reports_valid_range() {
    let o = nfc(&["crossings", "--trunc", "4", "--point", "idx:10", "--window", "-20..5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("-10..=230"), "{}", stderr(&o));
}

#[test]
fn json_and_csv_carry_identical_fields() {
    let args = ["crossings", "--trunc", "5", "--d", "2", "--point", "idx:100", "--point", "idx:300", "--n", "2"];
    let c = nfc(&args);
    let mut with_json = args.to_vec();
    with_json.extend(["--output", "json"]);
    let j = nfc(&with_json);
    let (h, rows) = csv_rows(&c);
    let v = json(&j);
    let jrows = v["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert_eq!(rows.len(), jrows.len());
    for (r, jr) in rows.iter().zip(jrows) {
        let obj = jr.as_object().unwrap();
        assert_eq!(obj.keys().cloned().collect::<Vec<_>>(), h);
        for (name, cell) in h.iter().zip(r) {
            let rendered = match &obj[name] {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            assert_eq!(&rendered, cell, "{name}");
        }
    }
    assert_eq!(v["meta"]["tool"], "nfc");
    assert_eq!(v["meta"]["config"]["d"], 2);
}

#[test]
fn ratergo_within_bound() {
    let o = nfc(&["report", "ratergo", "--trunc", "9", "--r", "40,121,241,724", "--output", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(&o);
    assert_eq!(v["meta"]["verdict"], "pass");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let m: f64 = r["m_hat_decimal"].as_str().unwrap().parse().unwrap();
        assert!((1.0..=144.0).contains(&m));
        assert!(r["m_hat"].as_str().unwrap().contains('/'));
    }
}

#[test]
fn twist_example_passes_every_m() {
    let o = nfc(&["report", "twist-example", "--trunc", "10", "--n", "5", "--a", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = csv_rows(&o);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| col(&h, r, "invariant") == "true"));
    assert!(rows[1..].iter().all(|r| col(&h, r, "swapped_fails") == "true"));
}

#[test]
fn twist_example_special_stage_is_unmet_hypothesis() {
    let o = nfc(&["report", "twist-example", "--trunc", "10", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn edge_ratio_decreases() {
    let o = nfc(&["report", "edge", "--trunc", "12", "--window", "0..78243", "--ns", "1..6"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = csv_rows(&o);
    let deltas: Vec<f64> = rows.iter().map(|r| col(&h, r, "delta_decimal").parse().unwrap()).collect();
    assert_eq!(deltas.len(), 6);
    assert!(deltas.windows(2).all(|w| w[1] < w[0]), "{deltas:?}");
}

#[test]
fn unmet_precondition_exits_2() {
    // n_3 = 15 lies past the truncation.
    let o = nfc(&["report", "theta1", "--trunc", "12"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hypothesis-not-satisfied"));
}

#[test]
fn reports_are_deterministic() {
    let args = ["report", "graph", "--trunc", "12", "--seed", "7", "--output", "json"];
    let (a, b) = (nfc(&args), nfc(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let args = ["orbit", "--trunc", "12", "--d", "2", "--seed", "3", "--n", "4"];
    assert_eq!(nfc(&args).stdout, nfc(&args).stdout);
    let other = nfc(&["orbit", "--trunc", "12", "--d", "2", "--seed", "4", "--n", "4"]);
    assert_ne!(nfc(&args).stdout, other.stdout);
}

#[test]
fn decompose_chain() {
    let o = nfc(&["decompose", "--trunc", "4", "--idx", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = csv_rows(&o);
    assert_eq!(col(&h, &rows[0], "m"), "3");
    assert!(rows.iter().all(|r| col(&h, r, "class") == "child" || col(&h, r, "class").starts_with("spacer:")));
}
