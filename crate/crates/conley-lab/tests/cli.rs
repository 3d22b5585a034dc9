use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conley-lab"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("conley-lab-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(bin().args(["index"])), 64);
    assert_eq!(code(bin().args(["dance", "--scenario", "x.toml"])), 64);
    assert_eq!(code(bin().args(["--help"])), 0);
}

#[test]
fn unknown_keys_and_mismatched_blocks_exit_2() {
    let dir = scratch("schema");
    let typo = write_scenario(&dir, "name = \"t\"\ntask = \"index\"\n[hamiltonian]\nbuiltin = \"elliptic\"\n[index]\nmax_tt = 3\n");
    let out = bin().args(["index", "--scenario"]).arg(&typo).arg("--out").arg(dir.join("a")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_tt"));
    let wrong_block = write_scenario(&dir, "name = \"t\"\ntask = \"index\"\n[hamiltonian]\nbuiltin = \"elliptic\"\n[census]\nperiods = [1]\n");
    assert_eq!(code(bin().args(["index", "--scenario"]).arg(&wrong_block).arg("--out").arg(dir.join("b"))), 2);
    // the task on the command line must agree with the file
    assert_eq!(code(bin().args(["census", "--scenario"]).arg(scenario("index_elliptic.toml")).arg("--out").arg(dir.join("c"))), 2);
}

#[test]
fn numerical_failures_exit_3_and_leave_a_marker() {
    let dir = scratch("numerical");
    let bad = write_scenario(&dir, "name = \"t\"\ntask = \"normal-form\"\n[normal_form]\nmatrix = [[2.0, 0.0], [0.0, 0.5]]\nsigmas = [0.1]\n");
    let out = dir.join("out");
    assert_eq!(code(bin().args(["normal-form", "--scenario"]).arg(&bad).arg("--out").arg(&out)), 3);
    assert!(out.join("FAILED").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn reruns_are_byte_identical_and_fully_listed() {
    let dir = scratch("determinism");
    let run = |k: usize| {
        let out = dir.join(format!("run{k}"));
        let status = bin().args(["orbits", "--scenario"]).arg(scenario("orbits_random.toml")).arg("--out").arg(&out).args(["--seed", "5", "--threads", "2"]).output().unwrap().status;
        assert!(status.success());
        out
    };
    let (a, b) = (run(0), run(1));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    let files = manifest["files"].as_array().unwrap();
    assert!(!files.is_empty());
    let mut on_disk: Vec<String> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).filter(|n| n != "manifest.json").collect();
    on_disk.sort();
    let mut listed: Vec<String> = files.iter().map(|f| f["path"].as_str().unwrap().to_string()).collect();
    listed.sort();
    assert_eq!(on_disk, listed);
    for f in files {
        let name = f["path"].as_str().unwrap();
        let body = std::fs::read(a.join(name)).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&body)), "{name}");
        if name.ends_with(".csv") {
            assert_eq!(body, std::fs::read(b.join(name)).unwrap(), "{name} differs between runs");
        }
    }
}
