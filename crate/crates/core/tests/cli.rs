use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use renormalab::cli::{resolve_config, write_artifacts, Artifact, ConfigFile, Manifest, CACHE_DIR_ENV};
use renormalab::Error;
use serde_json::Value;
use tempfile::TempDir;

struct Env {
    tmp: TempDir,
}

impl Env {
    fn new() -> Env {
        Env {
            tmp: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.tmp.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_renormalab"))
            .args(args)
            .env(CACHE_DIR_ENV, self.path("cache"))
            .current_dir(self.tmp.path())
            .output()
            .unwrap()
    }
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn cascade_writes_rows_and_summary() {
    let env = Env::new();
    let out = env.run(&["cascade", "--n-max", "12", "--output-dir", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(env.path("out/cascade.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    let summary: Value = serde_json::from_slice(&fs::read(env.path("out/cascade_summary.json")).unwrap()).unwrap();
    let delta: f64 = summary["delta_extrapolated"].as_str().unwrap().parse().unwrap();
    assert!((delta - 4.669201609).abs() < 1e-6);
    let m = manifest(&env.path("out"));
    assert_eq!(m["subcommand"], "cascade");
    assert_eq!(m["files"].as_array().unwrap().len(), 2);
}

#[test]
fn second_fixed_point_run_hits_the_cache() {
    let env = Env::new();
    assert!(env.run(&["fixed-point", "--word", "2", "--output-dir", "a"]).status.success());
    assert!(env.run(&["fixed-point", "--word", "2", "--output-dir", "b"]).status.success());
    assert_eq!(manifest(&env.path("a"))["cache_hit"], false);
    assert_eq!(manifest(&env.path("b"))["cache_hit"], true);
    for f in ["fixed_point.json", "coefficients.csv"] {
        assert_eq!(fs::read(env.path("a").join(f)).unwrap(), fs::read(env.path("b").join(f)).unwrap());
    }
    assert!(env.path("cache").read_dir().unwrap().count() >= 1);
}

#[test]
fn zoom_writes_a_binary_pgm() {
    let env = Env::new();
    let out = env.run(&["zoom", "--center=-0.75,0.1", "--scale", "1e-2", "--output-dir", "z"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pgm = fs::read(env.path("z/zoom.pgm")).unwrap();
    let header = b"P5\n512 512\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    assert_eq!(pgm.len(), header.len() + 512 * 512);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let env = Env::new();
    fs::write(env.path("bad.toml"), "N = 30\nwarp_factor = 9\n").unwrap();
    let out = env.run(&["--config", "bad.toml", "fixed-point", "--output-dir", "o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warp_factor"));
    assert!(!env.path("o/manifest.json").exists());
}

#[test]
fn flags_override_file_values() {
    let env = Env::new();
    fs::write(env.path("c.toml"), "N = 20\nrho = 2.0\noutput_dir = \"from-file\"\n").unwrap();
    let out = env.run(&["--config", "c.toml", "--N", "24", "fixed-point", "--no-cache"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let numerics = &manifest(&env.path("from-file"))["config"]["run"]["numerics"];
    assert_eq!(numerics["truncation"], 24);
    assert_eq!(numerics["rho"], 2.0);
}

#[test]
fn cache_dir_precedence() {
    let file = ConfigFile::from_toml("cache_dir = \"file-cache\"").unwrap();
    let none = ConfigFile::default();
    let flag = ConfigFile {
        cache_dir: Some("flag-cache".into()),
        ..ConfigFile::default()
    };
    let env = Some(PathBuf::from("env-cache"));
    assert_eq!(resolve_config(file.clone(), &none, None).unwrap().cache_dir, PathBuf::from("file-cache"));
    assert_eq!(resolve_config(file.clone(), &none, env.clone()).unwrap().cache_dir, PathBuf::from("env-cache"));
    assert_eq!(resolve_config(file, &flag, env).unwrap().cache_dir, PathBuf::from("flag-cache"));
}

#[test]
fn env_cache_dir_is_used() {
    let env = Env::new();
    assert!(env.run(&["cascade", "--n-max", "4", "--output-dir", "o"]).status.success());
    let entries: Vec<_> = fs::read_dir(env.path("cache")).unwrap().filter_map(|e| e.ok()).collect();
    assert!(entries.iter().any(|e| e.file_name().to_string_lossy().ends_with(".json")));
    assert!(!env.path(".renormalab-cache").exists());
}

#[test]
fn unwritable_output_dir_fails_without_manifest() {
    let env = Env::new();
    fs::write(env.path("blocker"), "not a directory").unwrap();
    let out = env.run(&["cascade", "--n-max", "4", "--output-dir", "blocker/out", "--no-cache"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!env.path("blocker/out/manifest.json").exists());
}

#[test]
fn rerun_preserves_previous_output() {
    let env = Env::new();
    assert!(env.run(&["cascade", "--n-max", "4", "--output-dir", "o"]).status.success());
    let first = fs::read(env.path("o/cascade.csv")).unwrap();
    assert!(env.run(&["cascade", "--n-max", "5", "--output-dir", "o"]).status.success());
    let m = manifest(&env.path("o"));
    let prev = m["previous"].as_str().unwrap();
    assert!(prev.starts_with("previous-"));
    assert_eq!(fs::read(env.path("o").join(prev).join("cascade.csv")).unwrap(), first);
    assert!(env.path("o").join(prev).join("manifest.json").exists());
}

#[test]
fn numeric_failure_exits_two() {
    let env = Env::new();
    let out = env.run(&["--newton-tol", "1e-40", "--N", "16", "fixed-point", "--output-dir", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!env.path("o/manifest.json").exists());
}

#[test]
fn bad_arguments_exit_one() {
    let env = Env::new();
    assert_eq!(env.run(&["--N", "17", "fixed-point"]).status.code(), Some(1));
    assert_eq!(env.run(&["levitate"]).status.code(), Some(1));
    assert_eq!(env.run(&["--help"]).status.code(), Some(0));
}

#[test]
fn empty_artifact_list_still_gets_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("empty");
    let m = write_artifacts(&[], &dir, Manifest::new("noop", Value::Null)).unwrap();
    assert!(m.files.is_empty());
    let v = manifest(&dir);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["files"].as_array().unwrap().len(), 0);
}

#[test]
fn artifact_names_may_not_escape_the_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = Artifact::text("../x.csv", "a\n".into());
    let err = write_artifacts(&[bad], tmp.path(), Manifest::new("noop", Value::Null)).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}
