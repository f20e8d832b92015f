use serde_json::Value;
use std::process::{Command, Output};

const F2: &str = r#"{"kind":"free","rank":2,"marked":"a"}"#;
const Z4: &str = r#"{"invariants":[4],"perms":[[1,2,3,0]]}"#;

fn sml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sml"))
        .args(args)
        .env_remove("SML_BUDGET")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = sml(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn half_atom_half_lebesgue() -> String {
    let samples = vec!["0.5"; 1 << 14].join(",");
    format!(r#"{{"atoms":[["0",0.5]],"density":{{"grid":16384,"samples":[{samples}]}}}}"#)
}

#[test]
fn rankone_build_staircase_height() {
    let v = json(&["rankone", "build", "--preset", "staircase", "-K", "3"]);
    assert_eq!(v["height"], 27);
}

#[test]
fn group_st_on_free_group() {
    let v = json(&["group", "st", F2, "--radius", "8"]);
    assert_eq!(v["verdict"], "holds_with_E");
    assert_eq!(v["E"], serde_json::json!([]));
}

#[test]
fn measure_wiener_recovers_atom_energy() {
    let dir = std::env::temp_dir().join(format!("sml-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("mu.json");
    std::fs::write(&path, half_atom_half_lebesgue()).unwrap();
    let v = json(&["measure", "wiener", path.to_str().unwrap(), "--horizon", "10000"]);
    let t = v["terminal"].as_f64().unwrap();
    assert!((t - 0.25).abs() < 0.0025, "{t}");
}

#[test]
fn output_is_byte_identical_for_equal_seeds() {
    let args = ["bimodule", "snag", Z4, "--trials", "20", "--seed", "9"];
    let a = sml(&args);
    let b = sml(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = sml(&["bimodule", "snag", Z4, "--trials", "20", "--seed", "10"]);
    assert!(c.status.success());
}

#[test]
fn exit_codes() {
    let budget = sml(&["rankone", "build", "--preset", "staircase", "-K", "12"]);
    assert_eq!(budget.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&budget.stderr).contains("1000000"));

    let parse = sml(&["group", "kg", F2, "--g", "b^"]);
    assert_eq!(parse.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&parse.stderr).contains("position"));

    let bad_json = sml(&["group", "malnormal", r#"{"kind":"free","rank":2,"marked":"a","extra":1}"#]);
    assert_eq!(bad_json.status.code(), Some(1));

    let unknown_flag = sml(&["group", "malnormal", F2, "--colour", "red"]);
    assert_eq!(unknown_flag.status.code(), Some(1));

    let pre = sml(&["masa", "cesaro", F2, "--x", "a", "--v", "a"]);
    assert_eq!(pre.status.code(), Some(1));
}

#[test]
fn numbers_have_at_most_twelve_significant_digits() {
    let v = json(&["bimodule", "fingerprint", "--geometric", "0.6666666666666666,0.3333333333333333", "--n-max", "4"]);
    assert_eq!(v["blocks"][0][0].as_f64().unwrap(), 0.666666666667);
}

#[test]
fn csv_output_uses_plain_decimals() {
    let out = sml(&["bimodule", "eta", r#"{"kind":"finite_cyclic","n":4,"marked":[[2]]}"#, "--zeta1", "(1)", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "t,s,re,im\n0,0,0.5,0\n1,1,0.5,0\n");
}

#[test]
fn json_inputs_round_trip() {
    let eta = json(&["bimodule", "eta", r#"{"kind":"finitely_generated_abelian","invariants":[4,2],"marked":[[1,0]]}"#, "--zeta1", "(1,1) + 2*(0,1)"]);
    let text = eta.to_string();
    let fibers = json(&["bimodule", "disintegrate", &text]);
    assert_eq!(fibers["reconstruction_defect"].as_f64().unwrap(), 0.0);
    let again: Value = serde_json::from_str(&serde_json::to_string(&eta).unwrap()).unwrap();
    assert_eq!(again, eta);

    let model = r#"{"kind":"semidirect","matrix":[[2,1],[1,1]],"marked":"acting_Z"}"#;
    let doc: sml::groups::ModelDoc = serde_json::from_str(model).unwrap();
    let back: sml::groups::ModelDoc = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(back, doc);
}

#[test]
fn every_subcommand_runs() {
    let m = half_atom_half_lebesgue();
    let z2 = r#"{"kind":"finitely_generated_abelian","invariants":[0,0],"marked":[[1,0]]}"#;
    let cases: Vec<Vec<&str>> = vec![
        vec!["measure", "fourier", &m, "--horizon", "8"],
        vec!["measure", "rajchman", &m, "--horizon", "64"],
        vec!["measure", "weakmix", &m, "--horizon", "64"],
        vec!["rankone", "correlate", "--preset", "staircase", "-K", "4", "--horizon", "20"],
        vec!["group", "kg", F2, "--g", "b"],
        vec!["group", "malnormal", F2, "--radius", "3"],
        vec!["group", "icc", F2, "--radius", "2"],
        vec!["masa", "condexp", F2, "--x", "a^2 + b"],
        vec!["masa", "cesaro", z2, "--x", "(0,1)", "--v", "(1,0)", "--horizon", "5"],
        vec!["masa", "ahp", F2, "--family", "b", "--family", "b^2", "--v", "a"],
        vec!["masa", "wandering", F2, "--zeta", "b", "--v", "a", "--horizon", "10"],
        vec!["masa", "summability", F2, "--xi1", "b + a*b", "--xi2", "b", "--v", "a"],
        vec!["bimodule", "fibers", r#"{"points":[[0,1,0.5,0],[1,0,0.5,0]],"circle":["0","1/2"]}"#],
        vec!["bimodule", "snag", Z4, "--f1", "0.75,-0.25,-0.25,-0.25", "--g2", "1", "--h2", "1"],
        vec!["bimodule", "transport", Z4, "--mu", "0,1,0,0"],
        vec!["bimodule", "fingerprint", "--weights", "0.5,0.3,0.2"],
    ];
    for args in cases {
        let out = sml(&args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let csv = sml(&[args.as_slice(), &["--format", "csv"]].concat());
        assert!(csv.status.success(), "{args:?}");
    }
    let v = json(&["bimodule", "snag", Z4, "--f1", "0.75,-0.25,-0.25,-0.25"]);
    assert!((v["lhs"][0].as_f64().unwrap() - 0.1875).abs() < 1e-12);
}
