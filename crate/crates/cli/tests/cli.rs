use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn pcflab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcflab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .env_remove("PCFLAB_OUT")
        .output()
        .expect("pcflab runs")
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn flat_run_keeps_every_series_constant() {
    let dir = tempfile::tempdir().unwrap();
    let res = pcflab(&["flow", "run", config("flat.cfg").to_str().unwrap()], dir.path());
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(dir.path());
    let verdicts = s["verdicts"].as_array().unwrap();
    assert!(!verdicts.is_empty());
    for v in verdicts {
        assert_eq!(v["first"], v["last"], "{}", v["name"]);
    }
    for f in s["files"].as_array().unwrap() {
        let rel = f["path"].as_str().unwrap();
        if rel.starts_with("series/") {
            let text = fs::read_to_string(dir.path().join(rel)).unwrap();
            let values: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
            assert!(values.windows(2).all(|w| w[0] == w[1]), "{rel} varies");
        }
    }
}

#[test]
fn small_nonkahler_run_has_decaying_torsion() {
    let dir = tempfile::tempdir().unwrap();
    let res = pcflab(&["flow", "run", config("torus_nonkahler_small.cfg").to_str().unwrap()], dir.path());
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(dir.path());
    let rate = s["fitted_rates"]["log_sup_torsion_sq"].as_f64().unwrap();
    assert!(rate < 0.0, "{rate}");
    assert!(s["violated"].as_array().unwrap().is_empty());
    assert!(dir.path().join("final.snap").exists());
    assert!(dir.path().join("plot.py").exists());
}

#[test]
fn oversized_step_exits_with_named_violation() {
    let dir = tempfile::tempdir().unwrap();
    let res = pcflab(&["flow", "run", config("negative_control_bigdt.cfg").to_str().unwrap()], dir.path());
    assert_eq!(res.status.code(), Some(1), "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(dir.path());
    let violated: Vec<&str> = s["violated"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(!violated.is_empty());
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains(violated[0]), "{stderr}");
}

#[test]
fn config_errors_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.cfg", "[domain]\nkind = \"torus\"\nn = 2\npoints = 8\nwidth = 1\n");
    let res = pcflab(&["flow", "run", bad.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("width"));
    let wrong = write_config(dir.path(), "wrong.cfg", "[domain]\nkind = \"algebra\"\ncatalog = \"nope\"\n");
    let res = pcflab(&["homog", "skt-scan", wrong.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(res.status.code(), Some(3));
    let res = pcflab(&["flow", "run", dir.path().join("missing.cfg").to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn skt_scan_separates_the_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let abelian = dir.path().join("abelian");
    let res = pcflab(&["homog", "skt-scan", config("homog_abelian4_scan.cfg").to_str().unwrap()], &abelian);
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(summary(&abelian)["min_residual"].as_f64().unwrap(), 0.0);
    let sl = dir.path().join("sl2c");
    let res = pcflab(&["homog", "skt-scan", config("homog_sl2c_scan.cfg").to_str().unwrap()], &sl);
    assert_eq!(res.status.code(), Some(0));
    let s = summary(&sl);
    assert_eq!(s["starts"].as_u64().unwrap(), 100);
    assert!(s["min_residual"].as_f64().unwrap() >= s["lower_bound"].as_f64().unwrap());
    assert!(s["lower_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn abelian_homogeneous_run_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let res = pcflab(&["homog", "run", config("homog_abelian4_run.cfg").to_str().unwrap()], dir.path());
    assert_eq!(res.status.code(), Some(0));
    let s = summary(dir.path());
    assert_eq!(s["max_change"].as_f64().unwrap(), 0.0);
    assert!(s["degenerated"].is_null());
}

#[test]
fn summaries_are_reproducible_and_hash_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("homog_sl2c_run.cfg");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(pcflab(&["homog", "run", cfg.to_str().unwrap(), "--seed", "5"], &a).status.code(), Some(0));
    assert_eq!(pcflab(&["homog", "run", cfg.to_str().unwrap(), "--seed", "5"], &b).status.code(), Some(0));
    let (sa, sb) = (fs::read(a.join("summary.json")).unwrap(), fs::read(b.join("summary.json")).unwrap());
    assert_eq!(sa, sb);
    let s = summary(&a);
    assert_eq!(s["seed"], 5);
    for f in s["files"].as_array().unwrap() {
        let bytes = fs::read(a.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), pcflab_cli::output::sha256_hex(&bytes));
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
}

#[test]
fn environment_overrides_config_directory_and_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("from_env");
    let cfg = config("homog_abelian4_run.cfg");
    let res = Command::new(env!("CARGO_BIN_EXE_pcflab"))
        .args(["homog", "run", cfg.to_str().unwrap(), "--quiet"])
        .env("PCFLAB_OUT", &env_out)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
    assert!(env_out.join("summary.json").exists());
    let flag_out = dir.path().join("from_flag");
    let res = Command::new(env!("CARGO_BIN_EXE_pcflab"))
        .args(["homog", "run", cfg.to_str().unwrap(), "--quiet", "--out"])
        .arg(&flag_out)
        .env("PCFLAB_OUT", &env_out.join("unused"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
    assert!(flag_out.join("summary.json").exists());
    assert!(!env_out.join("unused").exists());
}

#[test]
fn flat_identity_check_reports_exact_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "flat_identities.cfg",
        "[domain]\nkind = \"torus\"\nn = 2\npoints = 8\n\
         [initial]\nkind = \"flat\"\n\
         [identities]\nt_end = 0.02\ncalibration_samples = 2\ncalibration_amplitude = 0.01\n",
    );
    let out = dir.path().join("out");
    let res = pcflab(&["flow", "check-identities", cfg.to_str().unwrap()], &out);
    let s = summary(&out);
    for line in s["identities"].as_array().unwrap() {
        if line["id"] != "forced_covariant" && line["id"] != "forced_contravariant" {
            assert_eq!(line["order"], "exact", "{line}");
        }
    }
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(s["calibration"]["passed"], true);
}

fn identity_verdicts(out: &Path) -> Vec<(String, bool)> {
    summary(out)["identities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| (l["id"].as_str().unwrap().to_string(), l["passed"].as_bool().unwrap()))
        .collect()
}

#[test]
fn short_identity_check_passes_and_each_flip_breaks_only_its_family() {
    let dir = tempfile::tempdir().unwrap();
    let base = config("identities_short.cfg");
    let out = dir.path().join("plain");
    let res = pcflab(&["flow", "check-identities", base.to_str().unwrap()], &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(identity_verdicts(&out).iter().all(|(_, ok)| *ok));

    let text = fs::read_to_string(&base).unwrap();
    for (target, family) in [("covariant", "covariant_section"), ("contravariant", "contravariant_tensor")] {
        let flipped = text.replace("calibration_samples = 4", &format!("calibration_samples = 4\nflip = \"{target}\""));
        let cfg = write_config(dir.path(), &format!("{target}.cfg"), &flipped);
        let out = dir.path().join(target);
        let res = pcflab(&["flow", "check-identities", cfg.to_str().unwrap()], &out);
        assert_eq!(res.status.code(), Some(1));
        for (id, ok) in identity_verdicts(&out) {
            assert_eq!(ok, !id.starts_with(family), "{target}: {id}");
        }
    }
}
