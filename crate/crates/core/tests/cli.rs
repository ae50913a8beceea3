use std::path::Path;
use std::process::{Command, Output};

use chdim::schottky::{Cap, SchottkyDescriptor};

fn chdim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chdim")).args(args).arg("-o").arg(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn assert_meta(dir: &Path) {
    let version = env!("CARGO_PKG_VERSION");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.ends_with(".json") {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["format"], "chdim-summary", "{name}");
            assert_eq!(v["version"], version, "{name}");
            assert!(v["seed"].is_u64() && v["config_hash"].as_str().is_some_and(|h| h.len() == 64), "{name}");
        } else {
            let first = text.lines().next().unwrap();
            assert!(first.starts_with(&format!("# chdim {version}")), "{name}: {first}");
            assert!(first.contains("seed=") && first.contains("config_hash="), "{name}: {first}");
        }
    }
}

#[test]
fn build_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = chdim(dir.path(), &["schottky-build", "--seed", "7"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let desc = dir.path().join("descriptor.toml");
    let out = chdim(dir.path(), &["schottky-verify", "-d", desc.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(read(dir.path(), "verify-report.txt").contains("status: verified"));
    assert_meta(dir.path());
}

#[test]
fn forced_shared_chain_exits_with_construction_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = chdim(dir.path(), &["schottky-build", "--forced-shared-chain"]);
    assert_eq!(code(&out), 3);
    let report = read(dir.path(), "build-report.txt");
    assert!(report.contains("condition 4") && report.contains("witness"), "{report}");
    assert!(!dir.path().join("descriptor.toml").exists());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&chdim(dir.path(), &["no-such-command"])), 2);
    assert_eq!(code(&chdim(dir.path(), &["sanity", "--n", "1"])), 2);
    assert_eq!(code(&chdim(dir.path(), &["schottky-verify", "-d", "/nonexistent.toml"])), 2);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\nunknown_key = 2\n").unwrap();
    assert_eq!(code(&chdim(dir.path(), &["sanity", "--config", cfg.to_str().unwrap()])), 2);
    let garbage = dir.path().join("garbage.toml");
    std::fs::write(&garbage, "n = 2\n").unwrap();
    assert_eq!(code(&chdim(dir.path(), &["schottky-verify", "-d", garbage.to_str().unwrap()])), 2);
}

#[test]
fn tampered_descriptor_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&chdim(dir.path(), &["schottky-build", "--seed", "7"])), 0);
    let desc = dir.path().join("descriptor.toml");
    let s = SchottkyDescriptor::from_toml(&read(dir.path(), "descriptor.toml")).unwrap();
    let shrunk: Vec<Cap> = s.domains.iter().map(|c| Cap::new(c.center.clone(), c.radius / 10.0)).collect();
    let tampered = s.with_domains(shrunk).to_toml();
    std::fs::write(&desc, tampered).unwrap();
    let out = chdim(dir.path(), &["schottky-verify", "-d", desc.to_str().unwrap()]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = cfg_dir.path().join("run.toml");
    std::fs::write(&cfg, "word_length = 5\nsanity_instances = 50\n").unwrap();
    let c = cfg.to_str().unwrap();
    let out = chdim(dir.path(), &["--config", c, "limit-sample", "-d", "bundled"]);
    assert_eq!(code(&out), 0);
    let csv = read(dir.path(), "limit-points.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[1], "index,s0,s1,s2,s3,v0_re,v0_im,t");
    // 4 * 3^4 reduced words of length 5, minus any skipped.
    assert!(lines.len() - 2 <= 324 && lines.len() - 2 > 300);
    let out = chdim(dir.path(), &["--config", c, "--word-length", "6", "exponent", "-d", "bundled"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&read(dir.path(), "exponent.json")).unwrap();
    assert_eq!(v["result"]["word_length"], 6);
    let out = chdim(dir.path(), &["--config", c, "sanity"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&read(dir.path(), "sanity.json")).unwrap();
    assert!(v["result"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    assert_meta(dir.path());
}

#[test]
fn dimension_run_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = chdim(dir.path(), &["dimension-run", "-d", "bundled", "--word-length", "8"]);
    let v: serde_json::Value = serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    let r = &v["result"];
    assert_eq!(r["word_length"], 8);
    assert!(r["alpha"].is_f64() && r["beta"].is_f64() && r["delta"].is_f64());
    let failed = r["gates"].as_array().unwrap().iter().any(|g| g["pass"] == false);
    assert_eq!(code(&out), if failed { 4 } else { 0 });
    for m in ["spherical", "heisenberg", "euclidean"] {
        let csv = read(dir.path(), &format!("boxcount-{m}.csv"));
        assert_eq!(csv.lines().nth(1), Some("scale,count,in_window"));
    }
    assert_meta(dir.path());
}
