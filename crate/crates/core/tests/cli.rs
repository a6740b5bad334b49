//! The `skdv` binary: exit codes, artifacts, determinism and config overrides.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 3

[model]
n_trunc = 4
n_max = 8

[time]
dt = 0.01
checkpoints = [0.2, 0.4]

[ensemble]
realizations = 200
companion = false

[output]
trajectories = 2

[generator]
truncations = [2, 4]
samples = 100
"#;

fn skdv(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_skdv"));
    cmd.current_dir(dir).args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("SKDV_")) {
        cmd.env_remove(k);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn generator_check_passes_and_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let o = skdv(
        tmp.path(),
        &["--config", cfg.to_str().unwrap(), "--out", "out", "verify-generator"],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let m = manifest(&tmp.path().join("out"));
    assert_eq!(m["subcommand"], "verify-generator");
    assert_eq!(m["pass"], true);
    assert_eq!(m["seed"], 3);
    let hash = m["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(m["reports"].as_array().unwrap().len(), 6);
    assert!(tmp.path().join("out/generator.json").exists());
    assert!(tmp.path().join("out/reports.json").exists());
}

#[test]
fn invalid_configs_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.toml", "[model\nn_trunc = 4"),
        ("unknown.toml", "[model]\nn_truncation = 4\n"),
        ("regularity.toml", "[[norms]]\ns = -0.4\np = 2.2\n"),
        ("aliasing.toml", "[model]\nn_trunc = 40\nn_max = 32\n"),
    ];
    for (name, text) in cases {
        let cfg = write_config(tmp.path(), name, text);
        let o = skdv(
            tmp.path(),
            &["--config", cfg.to_str().unwrap(), "--out", "out", "verify-generator"],
            &[],
        );
        assert_eq!(code(&o), 2, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = skdv(tmp.path(), &["--config", "missing.toml", "verify-generator"], &[]);
    assert_eq!(code(&o), 2);
    let o = skdv(tmp.path(), &["--threads", "0", "--out", "out", "verify-generator"], &[]);
    assert_eq!(code(&o), 2);
    let o = skdv(tmp.path(), &["no-such-command"], &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let o = skdv(
        tmp.path(),
        &["--config", cfg.to_str().unwrap(), "--out", "blocker/out", "verify-generator"],
        &[],
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_is_reproducible_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let cfg = cfg.to_str().unwrap();
    for (out, threads) in [("a", "1"), ("b", "2")] {
        let o = skdv(tmp.path(), &["--config", cfg, "--out", out, "--threads", threads, "simulate"], &[]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let files = manifest(&tmp.path().join("a"))["files"].as_array().unwrap().clone();
    let csvs: Vec<&str> = files
        .iter()
        .map(|f| f["path"].as_str().unwrap())
        .filter(|p| p.ends_with(".csv"))
        .collect();
    for name in [
        "modes.csv",
        "samples.csv",
        "initial_state.csv",
        "trajectory_0.csv",
        "trajectory_1.csv",
    ] {
        assert!(csvs.contains(&name), "{name} missing from {csvs:?}");
    }
    for name in csvs {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
        let text = String::from_utf8(a).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("# schema=skdv."), "{name}: {first}");
    }
}

#[test]
fn norms_of_a_simulated_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&skdv(tmp.path(), &["--config", cfg, "--out", "sim", "simulate"], &[])), 0);
    let o = skdv(
        tmp.path(),
        &[
            "--config",
            cfg,
            "--out",
            "nrm",
            "norms",
            "--input",
            "sim/trajectory_0.csv",
            "--b",
            "0.3",
            "--window",
            "0,0.2",
            "--tau-cutoff",
            "150",
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("nrm/norms.csv")).unwrap();
    assert!(text.starts_with("# schema=skdv.norms/v1"));
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["norm_name", "value", "window", "grid"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let value: f64 = r[1].parse().unwrap();
        assert!(value.is_finite() && value > 0.0, "{r:?}");
        assert_eq!(&r[2], "0.0:0.2");
    }

    // without a cutoff the sampled grid cannot resolve n_max^3
    let o = skdv(
        tmp.path(),
        &[
            "--config",
            cfg,
            "--out",
            "nrm2",
            "norms",
            "--input",
            "sim/trajectory_0.csv",
            "--b",
            "0.3",
        ],
        &[],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn trotter_commuting_pair_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[trotter]\na = [[1.0, 2.0], [0.0, 3.0]]\nb = [[1.5, 1.0], [0.0, 2.5]]\nsde = false\n";
    let cfg = write_config(tmp.path(), "commuting.toml", text);
    let o = skdv(tmp.path(), &["--config", cfg.to_str().unwrap(), "--out", "out", "trotter"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let m = manifest(&tmp.path().join("out"));
    assert_eq!(m["reports"][0]["name"], "trotter commuting");
}

#[test]
fn failed_test_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    // first order splitting cannot show a second order rate
    let cfg = write_config(tmp.path(), "second.toml", "[trotter]\nrate_range = [1.8, 2.2]\nsde = false\n");
    let o = skdv(tmp.path(), &["--config", cfg.to_str().unwrap(), "--out", "out", "trotter"], &[]);
    assert_eq!(code(&o), 1);
    assert_eq!(manifest(&tmp.path().join("out"))["pass"], false);
    assert!(String::from_utf8_lossy(&o.stdout).contains("trotter: FAIL"));
}

#[test]
fn environment_overrides_config_and_flags_override_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let o = skdv(
        tmp.path(),
        &["verify-generator"],
        &[
            ("SKDV_CONFIG", cfg.to_str().unwrap()),
            ("SKDV_OUT", "env_out"),
            ("SKDV_SEED", "11"),
            ("SKDV_GENERATOR__SAMPLES", "50"),
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&tmp.path().join("env_out"));
    assert_eq!(m["seed"], 11);
    assert_eq!(m["config"]["generator"]["samples"], 50);

    let o = skdv(
        tmp.path(),
        &["--seed", "12", "verify-generator"],
        &[("SKDV_CONFIG", cfg.to_str().unwrap()), ("SKDV_OUT", "env_out"), ("SKDV_SEED", "11")],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(manifest(&tmp.path().join("env_out"))["seed"], 12);

    let o = skdv(tmp.path(), &["--out", "x", "verify-generator"], &[("SKDV_MODEL__N_TRUNC", "-3")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn json_config_hashes_like_the_equivalent_toml() {
    let tmp = tempfile::tempdir().unwrap();
    let toml_cfg = write_config(tmp.path(), "c.toml", "seed = 5\n[generator]\ntruncations = [2]\nsamples = 20\n");
    let json_cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"seed": 5, "generator": {"truncations": [2], "samples": 20}}"#,
    );
    for (cfg, out) in [(&toml_cfg, "t"), (&json_cfg, "j")] {
        assert_eq!(
            code(&skdv(
                tmp.path(),
                &["--config", cfg.to_str().unwrap(), "--out", out, "verify-generator"],
                &[]
            )),
            0
        );
    }
    assert_eq!(
        manifest(&tmp.path().join("t"))["config_hash"],
        manifest(&tmp.path().join("j"))["config_hash"]
    );
}

#[test]
fn verify_measure_small_ensemble_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let o = skdv(
        tmp.path(),
        &["--config", cfg.to_str().unwrap(), "--out", "out", "verify-measure"],
        &[("SKDV_TOLERANCES__KURTOSIS_ABS", "1.0")],
    );
    let c = code(&o);
    assert!(c == 0 || c == 1, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&tmp.path().join("out"));
    let names: Vec<&str> = m["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert!(names.iter().filter(|n| n.starts_with("measure")).count() == 3, "{names:?}");
    assert!(names.iter().any(|n| n.contains("energy")), "{names:?}");
}
