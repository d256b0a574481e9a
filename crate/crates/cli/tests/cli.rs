use std::path::{Path, PathBuf};
use std::process::Command;

use jsonschema::JSONSchema;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_crpchips"));
    c.env_remove("CRPCHIPS_THREADS");
    c
}

/// Runs the binary and returns (exit code, stdout, stderr).
fn call(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = call(args);
    assert_eq!(code, 0, "{args:?} failed: {err}");
    out
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn in_process(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let all: Vec<&str> = std::iter::once("crpchips").chain(args.iter().copied()).collect();
    let code = crpchips::cli::run(all, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn schema(name: &str) -> JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.schema.json"));
    let value: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    JSONSchema::compile(&value).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn assert_valid(name: &str, value: &Value) {
    let s = schema(name);
    if let Err(errors) = s.validate(value) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{name} schema rejects output: {msgs:?}");
    };
}

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("crpchips-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.0.join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_owned()
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn restaurant_file(dir: &Scratch, tables: &str, seed: &str) -> String {
    let text = ok(&["sample", "--z", "1", "--seed", seed, "--tables", tables]);
    dir.write("restaurant.json", &text)
}

#[test]
fn sampling_is_reproducible() {
    let a = ok(&["sample", "--z", "1", "--seed", "7", "--tables", "64"]);
    let b = ok(&["sample", "--z", "1", "--seed", "7", "--tables", "64"]);
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_valid("restaurant", &v);
    assert!(v["lengths"].as_array().unwrap().len() <= 64);
    let c = ok(&["sample", "--z", "1", "--seed", "8", "--tables", "64"]);
    assert_ne!(a, c);
}

#[test]
fn placed_guests_round_trip() {
    let dir = Scratch::new("place");
    let r = restaurant_file(&dir, "8", "2");
    let placed = json(&["place", "--restaurant", &r, "--count", "3", "--seed", "4"]);
    assert_valid("restaurant", &placed);
    assert_eq!(placed["guests"].as_array().unwrap().len(), 3);
    let p = dir.write("placed.json", &placed.to_string());
    let projected = json(&["project", "--restaurant", &p, "--n", "3"]);
    let images = projected["images"].as_array().unwrap();
    assert_eq!(images.len(), 3);
    let acted = json(&["act", "--restaurant", &p, "--left", "1,2,3", "--right", "2,3,1"]);
    assert!(acted.is_object());
}

#[test]
fn projection_of_a_permutation() {
    let v = json(&["project", "--perm", "3,2,4,1", "--m", "3"]);
    assert_eq!(v["images"], serde_json::json!([3, 2, 1]));
}

#[test]
fn cycle_engine_mass_is_within_bounds() {
    let dir = Scratch::new("cycles");
    let r = restaurant_file(&dir, "8", "3");
    let v = json(&["act-cycles", "--k", "2", "--restaurant", &r]);
    assert_valid("mixture", &v);
    assert_eq!(v["within_bounds"], Value::Bool(true));
    let literal = json(&["act-cycles", "--k", "2", "--restaurant", &r, "--literal", "--divisor", "full-aut"]);
    assert_valid("mixture", &literal);
    assert_eq!(literal["components"].as_array().unwrap().len(), v["components"].as_array().unwrap().len());
}

#[test]
fn chips_multiply_and_validate() {
    let dir = Scratch::new("chips");
    let c = json(&["chip-from-pair", "--g1", "2,1", "--g2", "1,2", "--alpha", "1", "--beta", "1"]);
    assert_valid("chip", &c);
    let f = dir.write("chip.json", &c.to_string());
    let product = ok(&["chip-mul", "--left", &f, "--right", &f]);
    let first: Value = serde_json::Deserializer::from_str(&product).into_iter().next().unwrap().unwrap();
    assert_valid("chip", &first);
}

#[test]
fn gamma_classes_validate() {
    let text = ok(&["enum-gamma", "--k", "2,2"]);
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    assert!(!lines.is_empty());
    for line in lines {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_valid("gamma-class", &v);
        assert_valid("surface", &v["surface"]);
    }
}

#[test]
fn dessin_statistics_and_drawing() {
    let stats = json(&["dessin", "--ga", "2,1", "--gb", "1,2", "--gc", "2,1", "--stats"]);
    assert_valid("surface", &stats["surface"]);
    assert_eq!(stats["euler"], 2);
    let dot = ok(&["dessin", "--ga", "2,1", "--gb", "1,2", "--gc", "2,1"]);
    assert!(dot.contains("graph"));
}

#[test]
fn laplace_modes_agree() {
    let closed = json(&["laplace", "--k", "1,2", "--ell", "1", "--u", "0.5,1", "--mode", "closed"]);
    let contour = json(&["laplace", "--k", "1,2", "--ell", "1", "--u", "0.5,1", "--mode", "contour"]);
    let re = |v: &Value| v["re"].as_str().unwrap().parse::<f64>().unwrap();
    assert!((re(&closed) - re(&contour)).abs() < 1e-9);
}

#[test]
fn simulation_outputs_validate() {
    let dir = Scratch::new("sim");
    let r = restaurant_file(&dir, "8", "5");
    let summary = json(&["simulate", "--k", "2", "--restaurant", &r, "--samples", "2000", "--seed", "1"]);
    assert_valid("summary", &summary);
    let compared = json(&["simulate", "--k", "2", "--restaurant", &r, "--samples", "2000", "--seed", "1", "--compare"]);
    assert_valid("compare", &compared);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = Scratch::new("threads");
    let r = restaurant_file(&dir, "8", "6");
    let args = ["simulate", "--k", "3", "--restaurant", &r, "--samples", "50000", "--seed", "9"];
    let one = ok(&[&["--threads", "1"][..], &args[..]].concat());
    let four = ok(&[&["--threads", "4"][..], &args[..]].concat());
    assert_eq!(one, four);
    let env = bin().env("CRPCHIPS_THREADS", "3").args(args).output().unwrap();
    assert_eq!(String::from_utf8(env.stdout).unwrap(), one);
}

#[test]
fn oracle_suite_passes() {
    let (code, out) = in_process(&["verify", "thm2-oracle", "--k", "2", "--samples", "1000000", "--seed", "1"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_valid("verify", &v);
    assert_eq!(code, 0, "{out}");
    assert_eq!(v["passed"], Value::Bool(true));
}

#[test]
fn verify_reports_validate() {
    let (code, out, _) = call(&["verify", "checker", "chip-assoc"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_valid("verify", &v);
    assert_eq!(v["suites"].as_array().unwrap().len(), 2);
}

#[test]
fn out_flag_writes_a_file() {
    let dir = Scratch::new("out");
    let target = dir.0.join("r.json");
    let stdout = ok(&["--out", target.to_str().unwrap(), "sample", "--z", "1/2", "--seed", "1", "--tables", "5"]);
    assert!(stdout.trim().is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_valid("restaurant", &v);
    assert_eq!(v["z"], serde_json::json!({"num": 1, "den": 2}));
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(call(&["sample", "--bogus"]).0, 2);
    assert_eq!(call(&["project", "--perm", "1,1,2", "--m", "2"]).0, 2);
    assert_eq!(call(&["act-cycles", "--k", "2", "--restaurant", "/nonexistent/r.json"]).0, 2);
    assert_eq!(call(&["verify", "no-such-suite"]).0, 2);
    assert_eq!(call(&["sample", "--z", "-1", "--seed", "1"]).0, 2);
}

#[test]
fn guard_exits_with_three() {
    let dir = Scratch::new("guard");
    let r = restaurant_file(&dir, "4", "1");
    let (code, _, err) = call(&["act-cycles", "--k", "7", "--restaurant", &r]);
    assert_eq!(code, 3, "{err}");
    assert_eq!(call(&["enum-gamma", "--k", "3,3,3"]).0, 3);
}

#[test]
fn unsafe_guard_reports_the_cost() {
    let (code, out, err) = call(&["--unsafe-guard", "enum-gamma", "--k", "5,4"]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("expected cost"));
    assert!(out.lines().count() > 0);
}

#[test]
fn failing_suite_exits_with_one() {
    // A one-sample oracle run cannot match the engine.
    let (code, out) = in_process(&["verify", "thm2-oracle", "--k", "2", "--samples", "1", "--seed", "1"]);
    assert_eq!(code, 1, "{out}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passed"], Value::Bool(false));
}

#[test]
fn help_exits_with_zero() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    for sub in ["sample", "chip-mul", "act-cycles", "act-chip", "act-center", "simulate", "verify"] {
        assert!(out.contains(sub), "help lists {sub}");
    }
}

#[test]
fn input_files_follow_their_schemas() {
    let dir = Scratch::new("inputs");
    let law = serde_json::json!({"convolution": [{"k": [1, 2], "ell": "5.0e-1"}, {"k": [2, 1], "ell": 0.5}]});
    assert_valid("dirichlet", &law);
    let f = dir.write("law.json", &law.to_string());
    let v = json(&["laplace", "--spec", &f, "--u", "1,2"]);
    assert!(v["re"].as_str().unwrap().parse::<f64>().unwrap() > 0.0);

    let chip = serde_json::json!({"sigma": [1], "phi": [1], "circles": []});
    assert_valid("trivial-left-chip", &chip);
    let c = dir.write("chip.json", &chip.to_string());
    let point = ok(&["sample", "--z", "1", "--seed", "3", "--tables", "6"]);
    let r = dir.write("r.json", &point);
    let placed = ok(&["place", "--restaurant", &r, "--count", "1", "--seed", "2"]);
    let p = dir.write("p.json", &placed);
    let m = json(&["act-chip", "--chip", &c, "--point", &p]);
    assert_valid("mixture", &m);
    assert_eq!(m["within_bounds"], Value::Bool(true));
}
