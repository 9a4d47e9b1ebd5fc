use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn highway(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_highway"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(
        &path,
        format!("# small run\nepisodes = 3\nhidden = 8\nlearn_start = 30\nbatch_size = 4\n{extra}"),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("run");
    let o = highway(&["train", "--config", &cfg, "--algo", "ddqn", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 4);

    let ck = out.join("checkpoint_final.txt");
    let e1 = highway(&["eval", "--checkpoint", ck.to_str().unwrap(), "--episodes", "4", "--seed", "1"]);
    assert!(e1.status.success());
    let text = String::from_utf8(e1.stdout.clone()).unwrap();
    assert!(text.contains("collision_rate = "));
    let e2 = highway(&["eval", "--checkpoint", ck.to_str().unwrap(), "--episodes", "4", "--seed", "1"]);
    assert_eq!(e1.stdout, e2.stdout);
}

#[test]
fn repeated_training_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = highway(&["train", "--config", &cfg, "--seed", "9", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        files.push(fs::read(out.join("metrics.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn compare_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("cmp");
    let o = highway(&["compare", "--config", &cfg, "--seeds", "1,2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 2 * 3);
    assert!(out.join("summary.csv").exists());
}

#[test]
fn compare_with_a_failed_cell_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("cmp");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("ddqn_seed1"), "in the way").unwrap();
    let o = highway(&["compare", "--config", &cfg, "--seeds", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_and_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(highway(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(highway(&["train", "--algo", "ppo"]).status.code(), Some(1));
    assert_eq!(highway(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(highway(&["compare"]).status.code(), Some(1));
    let bad = write_config(dir.path(), "not_a_key = 3\n");
    assert_eq!(highway(&["train", "--config", &bad]).status.code(), Some(1));
    let missing = dir.path().join("nope.cfg");
    assert_eq!(highway(&["train", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(highway(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    assert_eq!(
        highway(&["eval", "--checkpoint", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
    let truncated = dir.path().join("trunc.txt");
    fs::write(&truncated, "# highway checkpoint\nformat_version = 1\nglobal_step = 3\n").unwrap();
    let o = highway(&["eval", "--checkpoint", truncated.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncated"));
}
