use std::fs;
use std::path::Path;

use twophoton_core::io::RunManifest;

use super::launch;

fn call(dir: &Path, args: &[&str]) -> u8 {
    let mut argv = vec!["twophoton".into(), "--out-dir".into(), dir.as_os_str().to_owned()];
    argv.extend(args.iter().map(Into::into));
    launch(argv)
}

fn rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn scan_writes_one_row_per_frequency_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(call(dir.path(), &["floquet", "--b1", "0.05", "--scan-omega", "0.9:1.1:21"]), 0);
    assert_eq!(rows(&dir.path().join("gap_scan.csv")), 21);
    let m = RunManifest::read(&dir.path().join("floquet_manifest.json")).unwrap();
    assert_eq!(m.subcommand, "floquet");
    assert_eq!(m.outputs, vec!["gap_scan.csv".to_string()]);
    assert_eq!(m.parameters["arguments"]["b1"], 0.05);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // No task selected.
    assert_eq!(call(dir.path(), &["floquet", "--b1", "0.05"]), 2);
    // β and physical parameters together.
    assert_eq!(call(dir.path(), &["spectrum", "--beta", "1", "--b-tilde", "0.1", "--bz", "0.2", "--tau", "1"]), 2);
    // Out-of-range physics reaches the core and is reported as a usage error.
    assert_eq!(call(dir.path(), &["correlator", "--b-tilde", "0.1", "--bz", "0.2", "--tau=-1"]), 2);
    assert_eq!(call(dir.path(), &["--threads", "0", "spectrum", "--beta", "1"]), 2);
    assert_eq!(call(dir.path(), &["--config", "/nonexistent/run.cfg", "spectrum", "--beta", "1"]), 2);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "beta = 2\ndelta = 0:1:5\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(call(dir.path(), &["--config", cfg, "spectrum", "--delta", "0:1:7", "--methods", "zeroth"]), 0);
    assert_eq!(rows(&dir.path().join("lineshape.csv")), 7);
    let m = RunManifest::read(&dir.path().join("spectrum_manifest.json")).unwrap();
    assert_eq!(m.parameters["derived"]["beta"], 2.0);
}

#[test]
fn ensembles_repeat_exactly_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    for (sub, threads) in [("a", "1"), ("b", "3"), ("c", "3")] {
        let d = dir.path().join(sub);
        let args = [
            "--seed", "9", "--threads", threads, "dynamics", "--bx", "1", "--bz", "0.2", "--tau", "1",
            "--b-tilde", "0.05", "--t-end", "50", "--steps", "100", "--n", "200",
        ];
        assert_eq!(call(&d, &args), 0);
        out.push(fs::read(d.join("ensemble.csv")).unwrap());
    }
    assert_eq!(out[0], out[1]);
    assert_eq!(out[1], out[2]);
}

#[test]
fn model_outputs_have_their_documented_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let base = ["dynamics", "--bz", "0.2", "--tau", "1", "--b-tilde", "0.05", "--t-end", "20", "--steps", "200"];
    for (model, file) in [("cumulant", "cumulant.csv"), ("volterra", "volterra.csv")] {
        let mut args = base.to_vec();
        args.extend(["--model", model]);
        assert_eq!(call(p, &args), 0);
        assert_eq!(rows(&p.join(file)), 201);
    }
    let m = RunManifest::read(&p.join("dynamics_manifest.json")).unwrap();
    assert_eq!(m.beta_convention.as_deref(), Some("appendix"));

    assert_eq!(call(p, &["correlator", "--b-tilde", "0.05", "--bz", "0.2", "--tau", "1", "--lags", "0:4:9", "--n", "500"]), 0);
    assert_eq!(rows(&p.join("correlator.csv")), 9);
    assert_eq!(rows(&p.join("correlator_mc.csv")), 9);

    assert_eq!(call(p, &["noise", "--t-max", "500", "--tau", "10"]), 0);
    assert!(rows(&p.join("noise.csv")) > 0);
}

#[test]
fn failed_validation_exits_with_one_and_keeps_the_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(call(dir.path(), &["validate", "--fast", "--tol-scale", "0"]), 1);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("validate_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    assert!(dir.path().join("validate_manifest.json").exists());
}
