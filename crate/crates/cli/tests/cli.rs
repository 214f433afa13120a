use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn iet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("iet-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn lemma1_matches_golden_files() {
    let d = scratch("lemma1");
    let o = iet(&["reproduce-lemma1", "--out", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(d.join("table1.csv")).unwrap(),
        include_str!("../golden/table1.csv")
    );
    assert_eq!(
        fs::read_to_string(d.join("table2.csv")).unwrap(),
        include_str!("../golden/table2.csv")
    );
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("lemma1.json")).unwrap()).unwrap();
    assert_eq!(r["self_similar"], true);
    assert_eq!(r["matrix"][0], serde_json::json!([2, 4, 6, 5, 2]));
}

#[test]
fn corrupted_golden_file_fails() {
    let d = scratch("golden");
    let bad = include_str!("../golden/table1.csv").replacen("0,-5 -3 2 1 -4,1", "0,-5 -3 2 1 -4,0", 1);
    fs::write(d.join("table1.csv"), bad).unwrap();
    fs::write(d.join("table2.csv"), include_str!("../golden/table2.csv")).unwrap();
    let o = iet(&["reproduce-lemma1", "--golden", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("table 1 line 2"));
}

#[test]
fn tiny_truncation_is_inconclusive() {
    let d = scratch("theorem");
    let o = iet(&[
        "reproduce-theorem-a",
        "--gaps",
        "10",
        "--steps",
        "10000",
        "--out",
        d.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(r["density_status"], "inconclusive");
    assert_eq!(r["certificate"]["disjoint"], true);
    assert!(r["certificate"]["truncation_tail"].as_f64().unwrap() > 0.1);
    assert_eq!(
        r["spectral"]["factors"][1]["coeffs"],
        serde_json::json!([1, -8, 18, -10, 1])
    );
    let csv = fs::read_to_string(d.join("gaps.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 21);
}

#[test]
fn reports_are_deterministic() {
    let strip = |o: Output| {
        let mut v = json(&o);
        v.as_object_mut().unwrap().remove("runtime_seconds");
        serde_json::to_string(&v).unwrap()
    };
    let a = strip(iet(&["search", "--n", "3", "--max-len", "8", "--jobs", "1"]));
    let b = strip(iet(&["search", "--n", "3", "--max-len", "8", "--jobs", "3"]));
    assert!(a.replace("\"jobs\":1", "") == b.replace("\"jobs\":3", ""));
    let s1 = iet(&["spectral", "--digits", "20"]);
    let s2 = iet(&["spectral", "--digits", "20"]);
    assert_eq!(s1.stdout, s2.stdout);
    // independent 40-digit root of the quartic: 7.8293951529207509299204910272...
    assert_eq!(
        json(&s1)["spectral"]["perron_root"]["decimal"],
        "7.82939515292075092992"
    );
}

#[test]
fn small_search_report() {
    let o = iet(&["search", "--n", "2", "--max-len", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["n"], 2);
    assert_eq!(r["max_len"], 4);
    assert_eq!(r["qualifying"], serde_json::json!([]));
    assert_eq!(r["config"]["require_flips"], true);
}

#[test]
fn rational_spec_rotation() {
    let d = scratch("spec");
    let spec = d.join("rot.json");
    fs::write(&spec, r#"{"lengths": ["1/2", "1/2"], "signed_permutation": [2, 1]}"#).unwrap();
    let s = spec.to_str().unwrap();
    let o = iet(&["eval", "--spec", s, "--x", "1/4"]);
    assert_eq!(json(&o)["image"], "3/4");
    let o = iet(&["orbit", "--spec", s, "--x", "1/4", "--steps", "4"]);
    assert_eq!(
        json(&o)["points"],
        serde_json::json!(["1/4", "3/4", "1/4", "3/4", "1/4"])
    );
    let o = iet(&["induct", "--spec", s, "--steps", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["induction"]["degenerate_at"], 0);
}

#[test]
fn default_iet_evaluates_exactly() {
    let o = iet(&["eval", "--x", "1/10"]);
    assert_eq!(json(&o)["image"], "9/10");
    let o = iet(&["induct", "--steps", "14"]);
    let r = json(&o);
    assert_eq!(r["induction"]["cycle"]["length"], 14);
    assert_eq!(
        r["induction"]["cycle"]["product"][4],
        serde_json::json!([1, 3, 5, 4, 2])
    );
}

#[test]
fn exit_codes() {
    assert_eq!(iet(&["spectral", "--digits", "0"]).status.code(), Some(2));
    assert_eq!(iet(&["search", "--bogus"]).status.code(), Some(2));
    assert_eq!(iet(&["search", "--n", "8"]).status.code(), Some(2));
    assert_eq!(iet(&["eval", "--x", "one half"]).status.code(), Some(2));
    assert_eq!(
        iet(&["eval", "--spec", "/nonexistent/e.json", "--x", "1/2"])
            .status
            .code(),
        Some(2)
    );
    let d = scratch("codes");
    let m = d.join("id.json");
    fs::write(&m, "[[1, 0], [0, 1]]").unwrap();
    assert_eq!(
        iet(&["spectral", "--matrix", m.to_str().unwrap()]).status.code(),
        Some(3)
    );
    let bad = d.join("bad.json");
    fs::write(&bad, r#"{"lengths": ["1/2"], "signed_permutation": [1], "extra": 1}"#).unwrap();
    assert_eq!(
        iet(&["eval", "--spec", bad.to_str().unwrap(), "--x", "1/4"])
            .status
            .code(),
        Some(2)
    );
}
