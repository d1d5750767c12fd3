//! End-to-end runs of the `indist` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use indist::io::NetworkFile;
use indist::network::NetworkMatrix;
use serde_json::Value;
use tempfile::TempDir;

fn indist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_indist")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn probabilities(v: &Value) -> Vec<f64> {
    v["outputs"].as_array().unwrap().iter().map(|o| o["p"].as_f64().unwrap()).collect()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn hom_distribution() {
    let out = indist(&["distribution", "--network", "fourier:2", "--input", "1,1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = probabilities(&v);
    assert_eq!(p.len(), 3);
    assert!((p[0] - 0.5).abs() < 1e-12 && p[1].abs() < 1e-12 && (p[2] - 0.5).abs() < 1e-12);
    assert!((v["sum"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["engine"], "jmatrix");
}

#[test]
fn photon_and_detector_files() {
    let dir = TempDir::new().unwrap();
    let photons = write(
        &dir,
        "photons.json",
        r#"[{"gaussian": {"omega": 0.0, "delta": 1.0, "t": 0.0}},
            {"jitter": {"omega": 0.2, "delta": 1.0, "t": 0.5, "sd": 0.4}},
            {"gaussian": {"omega": -0.1, "delta": 0.8, "t": 0.0, "pol": 1}}]"#,
    );
    let detectors = write(&dir, "detectors.json", r#"[{"kind": "flat", "eta": 0.8}]"#);
    let mut results = Vec::new();
    for engine in ["jmatrix", "general", "oracle"] {
        let path = dir.path().join(format!("{engine}.json"));
        let out = indist(&[
            "distribution", "--network", "haar:3:11", "--input", "1,1,1", "--photons", &photons, "--detectors", &detectors,
            "--engine", engine, "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{engine}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json_file(&path);
        assert!((v["sum"].as_f64().unwrap() - 0.8f64.powi(3)).abs() < 1e-9, "{engine}");
        results.push(probabilities(&v));
    }
    for other in &results[1..] {
        for (a, b) in results[0].iter().zip(other) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn network_file_round_trips() {
    let dir = TempDir::new().unwrap();
    let u = NetworkMatrix::<f64>::random_unitary(3, 5).unwrap();
    let path = write(&dir, "net.json", &serde_json::to_string(&NetworkFile::from_network(&u)).unwrap());
    let back: NetworkFile = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.to_network().unwrap().matrix(), u.matrix());
    let from_file = indist(&["distribution", "--network", &path, "--input", "1,0,1"]);
    let from_spec = indist(&["distribution", "--network", "haar:3:5", "--input", "1,0,1"]);
    assert_eq!(code(&from_file), 0);
    assert_eq!(from_file.stdout, from_spec.stdout);
}

#[test]
fn dump_j() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("j.json");
    let out = indist(&["distribution", "--network", "fourier:3", "--input", "1,1,0", "--dump-j", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json_file(&path);
    assert_eq!(v["n"], 2);
    assert_eq!(v["order"], "lex");
    assert_eq!(v["entries"].as_array().unwrap().len(), 4);
}

#[test]
fn exit_codes() {
    // Validation: mode count mismatch, malformed occupation, bad photon file, unknown engine.
    assert_eq!(code(&indist(&["distribution", "--network", "fourier:3", "--input", "1,1"])), 2);
    assert_eq!(code(&indist(&["distribution", "--network", "fourier:3", "--input", "1,x,1"])), 2);
    let dir = TempDir::new().unwrap();
    let photons = write(&dir, "p.json", r#"[{"gaussian": {"omega": 0.0, "delta": -1.0}}]"#);
    assert_eq!(code(&indist(&["distribution", "--network", "fourier:2", "--input", "1,0", "--photons", &photons])), 2);
    assert_eq!(code(&indist(&["distribution", "--network", "fourier:2", "--input", "1,0", "--photons", "/nonexistent"])), 2);
    let mixed_kinds = write(&dir, "k.json", r#"[{"gaussian": {"omega": 0.0, "delta": 1.0}}, {"coeffs": [[1.0, 0.0]]}]"#);
    assert_eq!(code(&indist(&["distribution", "--network", "fourier:2", "--input", "1,1", "--photons", &mixed_kinds])), 2);
    assert_eq!(code(&indist(&["distribution", "--network", "fourier:2", "--input", "1,1", "--engine", "magic"])), 2);
    // Size cap: nine photons exceed the J-matrix engine.
    assert_eq!(code(&indist(&["distribution", "--network", "fourier:9", "--input", "1,1,1,1,1,1,1,1,1"])), 3);
    // Conjecture violation, provoked by the fault hook.
    assert_eq!(code(&indist(&["suppress", "--network", "fourier:3", "--input", "1,1,1"])), 0);
    assert_eq!(code(&indist(&["suppress", "--network", "fourier:3", "--input", "1,1,1", "--inject-fault"])), 4);
}

#[test]
fn suppress_report() {
    let dir = TempDir::new().unwrap();
    let groups = write(
        &dir,
        "groups.json",
        r#"{"groups": [{"state": {"gaussian": {"omega": 0.0, "delta": 1.0}}, "modes": [0, 2]},
                       {"state": {"gaussian": {"omega": 0.0, "delta": 1.0, "t": 1.5}}, "modes": [1, 3]}]}"#,
    );
    let path = dir.path().join("scan.json");
    let out = indist(&["suppress", "--network", "fourier:4", "--groups", &groups, "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let records = json_file(&path);
    let records = records.as_array().unwrap();
    assert_eq!(records.len(), 35);
    let flagged: Vec<_> = records.iter().filter(|r| r["verdict"] == "suppressed-by-cancellation").collect();
    assert!(!flagged.is_empty());
    for r in flagged {
        let settings = r["settings"].as_array().unwrap();
        assert_eq!(settings.len(), 5);
        assert!(settings.iter().all(|s| s["p"].as_f64().unwrap() < 1e-12));
    }
}

#[test]
fn hom_scan_csv() {
    let out = indist(&["hom-scan", "--range", "-2:2:5"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tau,p_coincidence");
    assert_eq!(lines.len(), 6);
    let row = |i: usize| -> (f64, f64) {
        let (a, b) = lines[i].split_once(',').unwrap();
        (a.parse().unwrap(), b.parse().unwrap())
    };
    assert_eq!(row(3).0, 0.0);
    assert!(row(3).1.abs() < 1e-12);
    assert!((row(5).1 - (1.0 - (-4.0f64).exp()) / 2.0).abs() < 1e-11);
    assert_eq!(code(&indist(&["hom-scan", "--range", "0:1"])), 2);
}

#[test]
fn purity_csv() {
    let out = indist(&["purity", "--range", "0:0.5:2", "--n-list", "1,2"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "gamma,N,purity,trace");
    assert_eq!(lines.len(), 5);
    // N = 1 has no normalized purity; N = 2 at γ = 1/2 gives 1/3.
    assert!(lines.iter().any(|l| l.starts_with("0.5,1,,")));
    assert!(lines.iter().any(|l| l.starts_with("0.5,2,0.333333333333,")));
    assert_eq!(code(&indist(&["purity", "--range", "0:1:3"])), 2);
}

#[test]
fn verify_passes_and_detects_fault() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let ok = indist(&["verify", "--instances", "12", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(json_file(&a)["passed"], true);
    let threaded = indist(&["--threads", "3", "verify", "--instances", "12", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&threaded), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let bad = indist(&["verify", "--instances", "12", "--inject-fault"]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("FAIL engine-equivalence"));
}

#[test]
fn distribution_is_deterministic() {
    let args = ["distribution", "--network", "haar:4:3", "--input", "1,1,1,0", "--engine", "general"];
    let first = indist(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, indist(&args).stdout);
}
