use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn covalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covalg")).args(args).output().expect("spawn covalg")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("covalg-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, file: &str, v: &Value) -> String {
    let p = dir.join(file);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn real(m: &[Vec<f64>]) -> Value {
    json!(m.iter().map(|r| r.iter().map(|&x| [x, 0.0]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn shift(n: usize) -> Value {
    real(&(0..n).map(|i| (0..n).map(|j| if i == j + 1 { 1.0 } else { 0.0 }).collect()).collect::<Vec<_>>())
}

/// Shift on ℂ⁴: `V` as conjugation by `S`, `H` derived from `U1 = S`.
fn shift_files(dir: &Path) -> (String, String) {
    let interaction = json!({
        "algebra": [1, 1, 1, 1],
        "V": {"form": "conjugation", "K": shift(4)},
        "U1": shift(4),
        "x_max": 3
    });
    let rep = json!({"hilbert_dim": 4, "U1": shift(4)});
    (write(dir, "interaction.json", &interaction), write(dir, "rep.json", &rep))
}

#[test]
fn example_ex23_exits_zero() {
    let out = covalg(&["example", "ex23"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["command"], "example");
    assert_eq!(r["passed"], true);
}

#[test]
fn example_ex31_sine_defect() {
    let out = covalg(&["example", "ex31", "--rho", "sine", "--grid", "256", "--samples", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("completeness_defect"));
}

#[test]
fn topfree_on_shift_has_no_fixed_points() {
    let out = covalg(&["topfree", "--fixture", "shift:5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["passed"], true);
}

#[test]
fn malformed_json_exits_two() {
    let dir = scratch("bad");
    let p = dir.join("broken.json");
    std::fs::write(&p, "{ not json").unwrap();
    let out = covalg(&["check-interaction", "--interaction", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert!(r["error"].is_string());
}

#[test]
fn unknown_fixture_exits_two() {
    let out = covalg(&["verify-rep", "--fixture", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn file_based_interaction_and_rep() {
    let dir = scratch("files");
    let (i, r) = shift_files(&dir);
    for cmd in ["check-interaction", "verify-rep", "derive-dual"] {
        let out = covalg(&[cmd, "--interaction", &i, "--rep", &r, "--samples", "10"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stdout));
        assert_eq!(report(&out)["passed"], true, "{cmd}");
    }
}

#[test]
fn norm_and_property_star_on_element_file() {
    let dir = scratch("norm");
    let (i, r) = shift_files(&dir);
    // 1 + Û₁ written as two monomials.
    let el = json!([
        {"type": "pos", "word": [{"coeff": [[[[1.0, 0.0]]], [[[1.0, 0.0]]], [[[1.0, 0.0]]], [[[1.0, 0.0]]]]}]},
        {"type": "pos", "word": [{"step": 1}]}
    ]);
    let e = write(&dir, "element.json", &el);
    let out = covalg(&["norm", "--interaction", &i, "--rep", &r, "--element", &e, "--window", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let res = &report(&out)["result"];
    let lower = res["enclosure"]["lower"].as_f64().unwrap();
    let upper = res["enclosure"]["upper"].as_f64().unwrap();
    assert!(lower <= upper + 1e-12);
    assert!(lower <= 2.0 + 1e-9, "‖1 + Û₁‖ ≤ 2, got lower {lower}");

    let out = covalg(&["property-star", "--interaction", &i, "--rep", &r, "--element", &e]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["passed"], true);
}

#[test]
fn same_seed_same_output() {
    let strip = |out: &Output| {
        let mut v = report(out);
        v.as_object_mut().unwrap().remove("timing_ms");
        v
    };
    let a = covalg(&["check-interaction", "--fixture", "shift:4", "--seed", "7", "--samples", "5"]);
    let b = covalg(&["check-interaction", "--fixture", "shift:4", "--seed", "7", "--samples", "5"]);
    assert_eq!(strip(&a), strip(&b));
}
