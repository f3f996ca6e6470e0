use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const REF: [&str; 8] = ["--tau", "1.0471975512", "--delta", "1.0", "--B", "0.5", "--D", "0.5"];

fn run(dir: &Path, args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_brickwall")).args(args).arg("--out-dir").arg(dir).output().unwrap();
    out.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn with_ref<'a>(sub: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![sub];
    v.extend(REF);
    v.extend(extra);
    v
}

#[test]
fn classify_reference_point() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &with_ref("classify", &[])), 0);
    let v = json(&dir.path().join("classify.json"));
    assert_eq!(v["phase"], "I");
    assert!((v["eq16_lhs"].as_f64().unwrap() - 1.740).abs() < 1e-3);
    let rec = json(&dir.path().join("run_record.json"));
    assert_eq!(rec["status"], "ok");
    assert_eq!(rec["outputs"], serde_json::json!(["classify.json"]));
}

#[test]
fn classify_without_gate_is_a_parameter_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["classify"]), 2);
    let rec = json(&dir.path().join("run_record.json"));
    assert_eq!(rec["status"], "error");
    assert_eq!(rec["exit_code"], 2);
    assert!(rec["error"].as_str().unwrap().contains("usage"));
}

#[test]
fn verify_ybe_on_haar_draws() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["verify-ybe", "--haar-seed", "42", "--trials", "100"]), 0);
    let v = json(&dir.path().join("verify_ybe.json"));
    assert!(v["max_ybe_residual"].as_f64().unwrap() < 1e-12);
    assert!(v["max_inversion_residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["checked"].as_u64().unwrap() + v["skipped"].as_array().unwrap().len() as u64, 100);
}

#[test]
fn strict_config_rejects_unknown_keys_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "sed = 3\n[gate]\nhaar_seed = 1\n",
        "[gate]\nhaar_seed = 1\n[run]\nsteps = 5\nstepz = 6\n",
        "[gate]\nhaar_seed = 1\nhaar = { delta = 0.1, alpha = 0.2, phi = 0.3, chi = 0.4, theta = 0.5 }\n",
        // a valid key that domain-wall does not read
        "[gate]\nhaar_seed = 1\n[run]\nL = 8\nr = [3]\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("c{i}.toml"));
        fs::write(&cfg, text).unwrap();
        let out = dir.path().join(format!("o{i}"));
        assert_eq!(run(&out, &["domain-wall", "--config", cfg.to_str().unwrap()]), 2, "{text}");
        let rec = json(&out.join("run_record.json"));
        assert_eq!(rec["outputs"], serde_json::json!([]));
    }
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "seed = 5\n[gate]\nhamiltonian = { tau = 0.3, delta = 0.0 }\n[run]\nL = 6\nsteps = 4\n").unwrap();
    assert_eq!(run(dir.path(), &["domain-wall", "--config", cfg.to_str().unwrap(), "--steps", "7"]), 0);
    let rec = json(&dir.path().join("run_record.json"));
    assert_eq!(rec["parameters"]["run"]["L"], 6);
    assert_eq!(rec["parameters"]["run"]["steps"], 7);
    assert_eq!(rec["parameters"]["seed"], 5);
    let csv = fs::read_to_string(dir.path().join("domain_wall.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 8);
}

#[test]
fn capacity_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &with_ref("szm", &["--L", "14"])), 3);
    assert_eq!(run(dir.path(), &with_ref("rp-spectrum", &["--r", "7"])), 3);
    assert_eq!(json(&dir.path().join("run_record.json"))["exit_code"], 3);
}

fn check_embedded_hash(dir: &Path) {
    let rec = json(&dir.join("run_record.json"));
    let hash = rec["hash"].as_str().unwrap();
    let outputs = rec["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for f in outputs {
        let path = dir.join(f.as_str().unwrap());
        if path.extension().unwrap() == "csv" {
            let text = fs::read_to_string(&path).unwrap();
            assert_eq!(text.lines().next().unwrap(), format!("# run_record_hash={hash}"));
        } else {
            assert_eq!(json(&path)["run_record_hash"], hash);
        }
    }
}

#[test]
fn every_output_embeds_the_record_hash() {
    let root = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        with_ref("classify", &[]),
        with_ref("map-params", &[]),
        vec!["verify-ybe", "--trials", "5"],
        with_ref("charges", &["--L", "6"]),
        vec!["spectrum-stats", "--L", "6", "--realizations", "2", "--two-gate", "--boundary", "open"],
        with_ref("rp-spectrum", &["--r", "3,4", "--k", "0,1.5"]),
        with_ref("szm", &["--L", "6", "--steps", "5"]),
        with_ref("staggered-corr", &["--L", "8", "--steps", "5", "--method", "typicality", "--samples", "3"]),
        with_ref("domain-wall", &["--L", "6", "--steps", "5"]),
        with_ref("time-reversal", &["--L", "6"]),
    ];
    for (i, args) in runs.iter().enumerate() {
        let dir = root.path().join(i.to_string());
        assert_eq!(run(&dir, args), 0, "{args:?}");
        check_embedded_hash(&dir);
    }
}

#[test]
fn csv_values_carry_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &with_ref("szm", &["--L", "6", "--steps", "3"])), 0);
    let text = fs::read_to_string(dir.path().join("szm.csv")).unwrap();
    let row = text.lines().nth(3).unwrap();
    let value = row.split(',').nth(1).unwrap();
    let mantissa = value.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{value}");
}

#[test]
fn identical_parameters_reproduce_outputs_bit_for_bit() {
    let root = tempfile::tempdir().unwrap();
    let (a, b, c) = (root.path().join("a"), root.path().join("b"), root.path().join("c"));
    let args = with_ref("szm", &["--L", "8", "--steps", "10", "--method", "typicality", "--samples", "4", "--seed", "3"]);
    assert_eq!(run(&a, &[args.as_slice(), &["--threads", "1"]].concat()), 0);
    assert_eq!(run(&b, &[args.as_slice(), &["--threads", "3"]].concat()), 0);
    for f in ["szm.csv", "szm.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let other = with_ref("szm", &["--L", "8", "--steps", "10", "--method", "typicality", "--samples", "4", "--seed", "4"]);
    assert_eq!(run(&c, &other), 0);
    assert_ne!(json(&a.join("run_record.json"))["hash"], json(&c.join("run_record.json"))["hash"]);
    assert_ne!(fs::read(a.join("szm.csv")).unwrap(), fs::read(c.join("szm.csv")).unwrap());
}

#[test]
fn bad_flags_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["charges", "--tau", "1.0"]), 2);
    assert_eq!(run(dir.path(), &["charges", "--r", "3"]), 2);
    assert_eq!(run(dir.path(), &with_ref("staggered-corr", &["--L", "6"])), 2);
}
