use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wavetrain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavetrain")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    wavetrain(args).status.code().expect("exit code")
}

fn ok(args: &[&str]) -> Output {
    let out = wavetrain(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn rgl_profile(dir: &Path, q: f64, modes: usize) -> String {
    let out = dir.join(format!("rgl-{q}"));
    let s = out.to_str().unwrap().to_string();
    ok(&["profile", "--model", "rgl", "--param", &format!("q={q}"), "--modes", &modes.to_string(), "--guess", "analytic", "--out", &s]);
    s
}

/// d = k (1 - 3 q^2) / (1 - q^2) with k = q / 2 pi.
fn rgl_d(q: f64) -> f64 {
    q / (2.0 * PI) * (1.0 - 3.0 * q * q) / (1.0 - q * q)
}

#[test]
fn profile_converges_and_the_manifest_lists_its_output() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = rgl_profile(tmp.path(), 0.3, 32);
    let doc = json(&Path::new(&dir).join("profile.json"));
    assert!(doc["residual_norm"].as_f64().unwrap() < 1e-10);
    assert_eq!(doc["m_f"], 32);
    let manifest = json(&Path::new(&dir).join("manifest.json"));
    assert_eq!(manifest["command"], "profile");
    assert_eq!(manifest["schema_version"], 1);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1);
    let bytes = fs::read(Path::new(&dir).join("profile.json")).unwrap();
    use sha2::Digest;
    assert_eq!(outputs[0]["sha256"], hex::encode(sha2::Sha256::digest(&bytes)));
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = rgl_profile(tmp.path(), 0.3, 8);
    assert_eq!(code(&["profile", "--param", "q=0.3"]), 64);
    assert_eq!(code(&["profile", "--model", "rgl", "--param", "q=1.5"]), 65);
    assert_eq!(code(&["profile", "--model", "rgl", "--param", "zz=1"]), 65);
    assert_eq!(code(&["spectrum", "--profile", &dir, "--scan", "0"]), 64);
    assert_eq!(code(&["gap", "--profile", &dir, "--N", "0"]), 64);
    assert_eq!(code(&["sum-bounds", "--d", "0"]), 64);
    assert_eq!(code(&["sum-bounds", "--d", "-1"]), 64);
    assert_eq!(code(&["no-such-command"]), 64);
    assert_eq!(code(&["--help"]), 0);
    let missing = tmp.path().join("absent.json");
    assert_eq!(code(&["spectrum", "--profile", missing.to_str().unwrap()]), 66);
    let broken = tmp.path().join("broken.json");
    fs::write(&broken, "{").unwrap();
    assert_eq!(code(&["spectrum", "--profile", broken.to_str().unwrap()]), 66);
    // a Newton solve capped at one iteration from a poor guess
    assert_eq!(code(&["profile", "--model", "nagumo", "--modes", "16", "--max-iter", "1"]), 2);
}

#[test]
fn spectrum_verdicts_match_the_eckhaus_boundary() {
    let tmp = tempfile::tempdir().unwrap();
    for (q, expect) in [(0.3, true), (0.7, false)] {
        let dir = rgl_profile(tmp.path(), q, 12);
        let out = tmp.path().join(format!("spec-{q}"));
        ok(&["spectrum", "--profile", &dir, "--scan", "64", "--out-dir", out.to_str().unwrap()]);
        let doc = json(&out.join("stability.json"));
        assert_eq!(doc["verdict"], expect, "q = {q}");
        for key in ["theta", "a", "d", "xi_1", "delta_1"] {
            assert!(doc[key].is_number(), "{key} missing");
        }
        let d = doc["d"].as_f64().unwrap();
        // fitted over |xi| <= 0.5, so the xi^6 term of the branch limits the agreement
        assert!((d - rgl_d(q)).abs() < 1e-3 * rgl_d(q).abs(), "d = {d}");
        let rows = fs::read_to_string(out.join("spectrum.csv")).unwrap();
        assert!(rows.starts_with("xi,index,re,im\n"));
    }
}

#[test]
fn gap_table_tracks_the_diffusive_asymptotics() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = rgl_profile(tmp.path(), 0.3, 8);
    let out = tmp.path().join("gap");
    ok(&["gap", "--profile", &dir, "--N", "1,2,4,8,16,32,64", "--out-dir", out.to_str().unwrap()]);
    let doc = json(&out.join("gap.json"));
    let reports = doc["reports"].as_array().unwrap();
    let delta: Vec<f64> = reports.iter().map(|r| r["delta_n"].as_f64().unwrap()).collect();
    assert!(delta[1..5].windows(2).all(|w| w[1] <= w[0]), "{delta:?}");
    for (i, n) in [(5, 32.0), (6, 64.0)] {
        let scaled = delta[i] * n * n / (4.0 * PI * PI);
        assert!((scaled / rgl_d(0.3) - 1.0).abs() < 0.1);
    }
    // N = 1: the co-periodic gap, i.e. -max Re over sigma(L_0) without its zero eigenvalue
    let spec = tmp.path().join("spec");
    ok(&["spectrum", "--profile", &dir, "--scan", "8", "--out-dir", spec.to_str().unwrap()]);
    let csv = fs::read_to_string(spec.join("spectrum.csv")).unwrap();
    let mut at_zero: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .filter(|r| r[0] == 0.0)
        .map(|r| r[2])
        .collect();
    at_zero.sort_by(|a, b| b.total_cmp(a));
    assert!(at_zero[0].abs() < 1e-8);
    assert!((delta[0] + at_zero[1]).abs() < 1e-10, "{} vs {}", delta[0], -at_zero[1]);
    let table = fs::read_to_string(out.join("gap.csv")).unwrap();
    assert_eq!(table.lines().count(), 8);
}

#[test]
fn linear_decay_checks_its_horizon_and_reports_uniform_constants() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = rgl_profile(tmp.path(), 0.3, 8);
    assert_eq!(code(&["linear-decay", "--profile", &dir, "--N", "4,128"]), 65);
    let out = tmp.path().join("decay");
    ok(&["linear-decay", "--profile", &dir, "--out-dir", out.to_str().unwrap()]);
    let doc = json(&out.join("decay.json"));
    let per_n = doc["per_n"].as_array().unwrap();
    let n64 = per_n.iter().find(|r| r["n_periods"] == 64).unwrap();
    let slope = n64["sp"]["exponent"].as_f64().unwrap();
    assert!((slope + 0.25).abs() <= 0.1, "s_p slope {slope}");
    assert!(doc["sp_constant_spread"].as_f64().unwrap() <= 2.0);
    assert!(doc["stilde_constant_spread"].as_f64().unwrap() <= 2.0);
}

#[test]
fn sum_bounds_stay_within_a_factor_two_of_the_continuum() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sums");
    ok(&["sum-bounds", "--d", "1", "--N", "4..64", "--tmax", "1000", "--out-dir", out.to_str().unwrap()]);
    let doc = json(&out.join("sum_bounds.json"));
    for t in doc["tables"].as_array().unwrap() {
        let ratio = t["ratio_to_continuum"].as_f64().unwrap();
        assert!((0.5..=2.0).contains(&ratio), "{t}");
    }
    for p in doc["probes"].as_array().unwrap() {
        let probe = &p["probe"];
        let (rate, predicted) = (probe["late_rate"].as_f64().unwrap(), probe["predicted_rate"].as_f64().unwrap());
        assert!((rate / predicted - 1.0).abs() < 0.1, "{p}");
    }
}

#[test]
fn simulate_zero_perturbation_is_flat_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("zero.toml");
    fs::write(&cfg, "t_max = 20.0\nn_periods = 8\n[perturbation]\nshape = \"zero\"\n").unwrap();
    let runs: Vec<_> = ["a", "b"].iter().map(|r| tmp.path().join(r)).collect();
    for r in &runs {
        ok(&["simulate", "--config", cfg.to_str().unwrap(), "--out-dir", r.to_str().unwrap()]);
    }
    let report = json(&runs[0].join("report.json"));
    assert_eq!(report["pass"], true);
    let trace = fs::read_to_string(runs[0].join("trace.csv")).unwrap();
    for line in trace.lines().skip(1) {
        let gamma: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(gamma.abs() < 1e-12);
    }
    let (ma, mb) = (json(&runs[0].join("manifest.json")), json(&runs[1].join("manifest.json")));
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["inputs"][0]["sha256"], mb["inputs"][0]["sha256"]);
    assert_eq!(ma["steps"], 2000);
    // snapshots are readable with the documented layout
    let first = fs::read(runs[0].join("snapshots/00000.bin")).unwrap();
    assert_eq!(u64::from_le_bytes(first[..8].try_into().unwrap()), 8);
    assert_eq!(first.len(), 32 + 8 * 8 * 17 * 2);
}

#[test]
fn simulate_numeric_failures_have_their_own_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let blow = tmp.path().join("blow.toml");
    fs::write(&blow, "t_max = 20.0\nn_periods = 4\n[perturbation]\namplitude = 1e3\n[extraction]\nradius = 1e9\n").unwrap();
    let out = wavetrain(&["simulate", "--config", blow.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(70));
    assert!(String::from_utf8_lossy(&out.stderr).contains("last finite time"));
    let div = tmp.path().join("div.toml");
    fs::write(&div, "t_max = 5.0\nn_periods = 4\n[extraction]\nmode = \"duhamel\"\ntol = 1e-30\nmax_iter = 2\n").unwrap();
    assert_eq!(code(&["simulate", "--config", div.to_str().unwrap()]), 71);
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "t_max = 5.0\nno_such_key = 1\n").unwrap();
    assert_eq!(code(&["simulate", "--config", bad.to_str().unwrap()]), 65);
}
