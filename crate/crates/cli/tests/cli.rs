use std::process::{Command, Output};

use serde_json::Value;

fn fbl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbl")).args(args).output().expect("run fbl")
}

fn json(args: &[&str]) -> Value {
    let out = fbl(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key} in {v}"))
}

#[test]
fn eval_examples() {
    let v = json(&["eval", "--space", "1:2", "|d([1,0])|", "--at", "[-2,5]"]);
    assert_eq!(num(&v, "value"), 2.0);
    let v = json(&["eval", "--space", "2:2", "d([3,-4])", "--at", "[1,0]"]);
    assert_eq!(num(&v, "value"), 3.0);
}

#[test]
fn malformed_input_exits_with_two() {
    let out = fbl(&["eval", "--space", "1:2", "d([1,0]) +", "--at", "[1,2]"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("syntax error"));
    assert_eq!(fbl(&["norm", "d([1])"]).status.code(), Some(2));
    assert_eq!(fbl(&["eval", "--space", "1:2", "d([1,0])", "--at", "[1]"]).status.code(), Some(2));
    assert_eq!(fbl(&["--bogus"]).status.code(), Some(2));
}

#[test]
fn norm_examples() {
    let v = json(&["norm", "--space", "1:2", "d([3,-4])"]);
    assert!((num(&v, "lower") - 7.0).abs() < 1e-9 && (num(&v, "upper") - 7.0).abs() < 1e-9);
    let v = json(&["norm", "--space", "1:2", "--exact-l1", "|d([1,0])| /\\ |d([0,1])|"]);
    assert!((num(&v, "lower") - 1.0).abs() < 1e-9);
    let phi: Vec<f64> = v["phi"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(phi.iter().zip([0.5, 0.5]).all(|(a, b)| (a - b).abs() < 1e-9), "{phi:?}");
    let v = json(&["norm", "--space", "2:3", "--restarts", "2", "gphi:[1,1,1]"]);
    assert!(num(&v, "lower") <= num(&v, "upper") + 1e-12);
}

#[test]
fn verify_flag_rederives_bounds() {
    let v = json(&["norm", "--space", "2:2", "--verify", "--restarts", "2", "|d([1,0])| \\/ |d([0,1])|"]);
    assert_eq!(v["verification"]["agrees"], Value::Bool(true));
}

#[test]
fn example_reports() {
    let v = json(&["example", "harmonic", "--N", "4"]);
    assert!((num(&v, "lower") - 25.0 / 12.0).abs() < 1e-12);
    assert_eq!(v["expected"], "25/12");
    let v = json(&["example", "rademacher", "--gamma", "4", "--p", "2", "--A", "1,3", "--grid", "6", "--restarts", "1", "--evals", "500"]);
    let pairings: Vec<f64> = v["pairings"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(pairings, vec![1.0, 0.0, 1.0, 0.0]);
    let v = json(&["example", "fatou", "--grid", "5", "--gscale", "1.5", "--samples", "100"]);
    assert_eq!(v["monotone"], Value::Bool(true));
    assert!(num(&v, "g_lower") >= 1.5 - 1e-9);
}

#[test]
fn rk_and_csv_projection() {
    let v = json(&["rk", "--y", "[1,2]", "--us", "[[1,0],[0,1]]"]);
    assert!((num(&v, "closed_form") - 3.0).abs() < 1e-9);
    let out = fbl(&["rk", "--y", "[1,2]", "--us", "[[1,0],[0,1]]", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("path,value"));
    assert!(text.lines().any(|l| l.starts_with("closed_form,")));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["norm", "--space", "3/2:3", "--restarts", "2", "--seed", "7", "|d([1,0,0])| \\/ d([0,1,-1])"];
    let a = fbl(&args);
    let b = fbl(&args);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "1"]);
    let c = fbl(&threaded);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn unmet_tolerance_exits_with_three() {
    let out = fbl(&["majorant", "--space", "2:2", "--tol", "0", "--restarts", "1", "|d([1,0])| \\/ |d([0,1])|"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out = fbl(&["majorant", "--space", "2:2", "--restarts", "1", "|d([1,0])| \\/ |d([0,1])|"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
