use std::path::PathBuf;
use std::process::{Command, Output};

use congruence::algebra::{FlatAlgebra, LocalityPolicy};
use congruence::doc::{self, Document};
use congruence::duality::{construct_dual_pair, ThetaLink};
use congruence::dvr::{Matrix, Prime};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_congruence")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("congruence-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn eta_on_fiber_product_uses_both_routes() {
    let out = run(&["eta", fixture("fiber-product-p5-n3.json").to_str().unwrap(), "--mask-timings"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let r = &v["cases"][0]["results"];
    assert_eq!(r["eta_wiles"], 3);
    assert_eq!(r["eta_fitting"], 3);
    assert_eq!(r["modules"][0]["eta"], 3);
}

#[test]
fn shipped_fixtures_pass() {
    let out = run(&["run-suite", fixture("").to_str().unwrap(), "--mask-timings"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["summary"]["failed"], 0);
    assert_eq!(v["summary"]["errors"], 0);
    assert!(v["summary"]["total"].as_u64().unwrap() >= 10);
}

#[test]
fn masked_reports_are_byte_identical() {
    let dir = fixture("");
    let a = run(&["run-suite", dir.to_str().unwrap(), "--mask-timings"]);
    let b = run(&["run-suite", dir.to_str().unwrap(), "--mask-timings"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn synth_is_reproducible() {
    let (a, b) = (scratch("synth-a"), scratch("synth-b"));
    for d in [&a, &b] {
        let out = run(&["synth", "--seed", "9", "--count", "3", "--dir", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
    }
    let out = run(&["run-suite", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn msym_level_37_mod_2_exports_a_passing_bundle() {
    let dir = scratch("msym");
    let bundle = dir.join("bundle.json");
    let out = run(&["msym", "--level", "37", "--prime", "2", "--bundle", bundle.to_str().unwrap(), "--mask-timings"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let r = &v["cases"][0]["results"];
    assert_eq!(r["eigensystems"].as_array().unwrap().len(), 2);
    assert_eq!(r["eta_wiles"], 1);
    let again = run(&["verify-pairing", bundle.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
}

#[test]
fn negative_control_reports_unequal_exponents() {
    let out = run(&["verify-pairing", fixture("negative-control-p3-n2.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["cases"][0]["results"];
    assert_eq!(r["hypotheses_hold"], false);
    assert_ne!(r["eta1"], r["eta2"]);
}

/// A pairing whose θ is precomposed with the swap automorphism of the fiber
/// product: still an algebra isomorphism, but no longer carries λ to λ̃.
fn incoherent_pair() -> Document {
    let prime = Prime::new(3).unwrap();
    let (t, chars) = FlatAlgebra::fiber_product(prime, 1);
    let (pair, theta) = construct_dual_pair(&t, &chars[0], 4, LocalityPolicy::Strict).unwrap();
    let identity = ThetaLink::identity(2);
    let swap = (0..7i64.pow(4))
        .map(|k| {
            let e: Vec<i64> = (0..4).map(|i| (k / 7i64.pow(i)) % 7 - 3).collect();
            ThetaLink { matrix: Matrix::from_i64(&[&e[0..2], &e[2..4]]) }
        })
        .find(|s| *s != identity && s.check_homomorphism(&t, &t).is_ok() && s.matrix.inverse().is_some_and(|m| m.is_integral(prime)))
        .expect("the fiber product has a nontrivial automorphism");
    Document::Pairing(pair, Some(ThetaLink { matrix: theta.matrix.mul(&swap.matrix) }))
}

#[test]
fn incoherent_theta_fails_with_exit_one() {
    let dir = scratch("theta");
    let path = dir.join("swapped.json");
    std::fs::write(&path, doc::to_string(&incoherent_pair())).unwrap();
    let out = run(&["verify-pairing", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    let case = &json(&out)["cases"][0];
    assert_eq!(case["status"], "fail");
    assert!(case["failures"][0].as_str().unwrap().starts_with("θ coherence"));
}

#[test]
fn non_homomorphic_theta_exits_three() {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(fixture("pair-0000.json")).unwrap()).unwrap();
    v["body"]["theta"].as_array_mut().unwrap().swap(0, 1);
    let dir = scratch("theta-invalid");
    let path = dir.join("broken.json");
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let out = run(&["verify-pairing", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["cases"][0]["status"], "error");
}

#[test]
fn malformed_input_exits_two() {
    let dir = scratch("bad");
    let path = dir.join("bad.json");
    std::fs::write(&path, "{\"format\":\"congruence-doc\",\"version\":7}").unwrap();
    let out = run(&["eta", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["error"].is_object());
    let missing = run(&["eta", dir.join("absent.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn unsupported_level_exits_three() {
    let out = run(&["msym", "--level", "33", "--prime", "3"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert!(v["error"]["message"].as_str().unwrap().contains("torsion-free boundary"));
}

#[test]
fn out_flag_writes_the_report() {
    let dir = scratch("out");
    let path = dir.join("report.json");
    let out = run(&["cotangent", fixture("fiber-product-ring-p7-n2.json").to_str().unwrap(), "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["cases"][0]["status"], "pass");
}
