// Black-box behavior of the binary: exit codes, schema validation, output
// resolution, and the shapes of the light data files. The heavy subcommands
// get their contract coverage in the acceptance suite.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torus-atlas"))
}

fn write_config(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn csv_rows(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().map(|l| l.to_string()).collect()
}

#[test]
fn unknown_subcommand_exits_one_with_usage() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Usage"), "no usage text in: {stderr}");
}

#[test]
fn unknown_config_field_exits_one() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"schema_version": 1, "i_range": [0.0, 0.5], "e_range": [0.0, 0.5], "grid": [2, 2], "grdi": 3}"#,
    );
    let out = bin()
        .args(["bifurcation", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grdi"));
}

#[test]
fn unsupported_schema_version_exits_one() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v9.json",
        r#"{"schema_version": 9, "i_range": [0.0, 0.5], "e_range": [0.0, 0.5], "grid": [2, 2]}"#,
    );
    let out = bin()
        .args(["bifurcation", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema_version"));
}

#[test]
fn missing_config_exits_one() {
    let out = bin()
        .args(["monodromy", "--config", "/no/such/file.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn grid_point_outside_oscillation_region_exits_two() {
    let dir = tempdir().unwrap();
    // (0.8, -0.9) asks for more momentum than that energy can carry.
    let cfg = write_config(
        dir.path(),
        "fm.json",
        r#"{"schema_version": 1, "i_range": [0.8, 0.8], "e_range": [-0.9, -0.9], "grid": [1, 1]}"#,
    );
    let out = bin()
        .args(["freqmap", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bifurcation_grid_has_expected_shape() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bif.json",
        r#"{"schema_version": 1, "i_range": [0.0, 0.8], "e_range": [-1.5, 1.5], "grid": [3, 4]}"#,
    );
    run_ok(&[
        "bifurcation",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--quiet",
    ]);
    let rows = csv_rows(&dir.path().join("bifurcation.csv"));
    assert_eq!(rows[0], "i,e,class");
    assert_eq!(rows.len(), 1 + 12);
    let known = [
        "regular",
        "stable-equilibrium",
        "focus-focus",
        "boundary",
        "exterior",
    ];
    for row in &rows[1..] {
        let class = row.rsplit(',').next().unwrap();
        assert!(known.contains(&class), "unexpected class {class}");
        let i: f64 = row.split(',').next().unwrap().parse().unwrap();
        assert!(i.is_finite());
    }
}

#[test]
fn freqmap_two_by_two_yields_four_rows() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fm.json",
        r#"{"schema_version": 1, "i_range": [0.1, 0.4], "e_range": [0.2, 0.6], "grid": [2, 2]}"#,
    );
    run_ok(&[
        "freqmap",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--quiet",
    ]);
    let rows = csv_rows(&dir.path().join("freqmap.csv"));
    assert_eq!(rows[0], "i,e,action,period,advance,omega1,omega2,det_jac");
    assert_eq!(rows.len(), 1 + 4);
    for row in &rows[1..] {
        assert_eq!(row.split(',').count(), 8);
    }
}

#[test]
fn monodromy_default_loop_reports_the_unit_shear() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "mono.json", r#"{"schema_version": 1}"#);
    run_ok(&[
        "monodromy",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--quiet",
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("monodromy.json")).unwrap())
            .unwrap();
    assert_eq!(report["winding"], 1);
    assert_eq!(report["matrix"], serde_json::json!([[1, 1], [0, 1]]));
}

#[test]
fn seed_flag_overrides_the_config_seed() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dio.json",
        r#"{"schema_version": 1, "seed": 7, "samples": 50, "omega_box": [[0.5, 2.0], [0.5, 2.0]]}"#,
    );
    let run = |out: &str, seed: Option<&str>| {
        let mut args = vec![
            "diophantine".to_string(),
            "--config".into(),
            cfg.to_str().unwrap().into(),
            "--out".into(),
            dir.path().join(out).to_str().unwrap().into(),
            "--quiet".into(),
        ];
        if let Some(s) = seed {
            args.push("--seed".into());
            args.push(s.into());
        }
        let out = bin().args(&args).output().unwrap();
        assert!(out.status.success());
    };
    run("a", None);
    run("b", Some("8"));
    run("c", Some("8"));
    let read = |name: &str| std::fs::read(dir.path().join(name).join("diophantine.csv")).unwrap();
    assert_ne!(read("a"), read("b"), "different seeds drew the same samples");
    assert_eq!(read("b"), read("c"), "same seed must reproduce the run");
}

#[test]
fn out_env_var_is_used_when_no_flag_given() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "mono.json", r#"{"schema_version": 1, "loop": {"vertices": 8, "center": [0.3, 0.2], "radius": 0.05}}"#);
    let target = dir.path().join("from_env");
    let out = bin()
        .args(["monodromy", "--config", cfg.to_str().unwrap(), "--quiet"])
        .env("TORUS_ATLAS_OUT", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("monodromy.json").exists());
    assert!(target.join("manifest.json").exists());
}

#[test]
fn quiet_silences_progress_lines() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bif.json",
        r#"{"schema_version": 1, "i_range": [0.1, 0.2], "e_range": [0.1, 0.2], "grid": [2, 2]}"#,
    );
    let loud = run_ok(&[
        "bifurcation",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&loud.stdout).contains("bifurcation.csv"));
    let silent = run_ok(&[
        "bifurcation",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert!(silent.stdout.is_empty());
}

#[test]
fn manifest_hashes_the_config_bytes() {
    use sha2::{Digest, Sha256};
    let dir = tempdir().unwrap();
    let text = r#"{"schema_version": 1, "i_range": [0.1, 0.2], "e_range": [0.1, 0.2], "grid": [2, 2]}"#;
    let cfg = write_config(dir.path(), "bif.json", text);
    run_ok(&[
        "bifurcation",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--quiet",
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    let expected = format!("{:x}", Sha256::digest(text.as_bytes()));
    assert_eq!(manifest["config_sha256"], serde_json::json!(expected));
    assert_eq!(manifest["command"], "bifurcation");
    assert_eq!(manifest["outputs"], serde_json::json!(["bifurcation.csv"]));
    assert!(manifest.get("timestamp").is_none());
}
