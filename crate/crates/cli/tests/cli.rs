use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sparsecg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsecg")).args(args).output().unwrap()
}

fn write_config(dir: &Path, train_extra: &str) -> String {
    let path = dir.join("exp.toml");
    let text = format!(
        "n_seeds = 2\noutput_dir = \"{}\"\n\n[env]\nname = \"disperse\"\nn_agents = 4\nn_hospitals = 2\nhorizon = 10\n\n[train]\nlr = 0.1\ntotal_steps = 600\neval_interval = 300\neval_episodes = 4\nbatch_episodes = 4\n{train_extra}\n[prop1]\nn_instances = 30\nbootstrap_resamples = 100\n",
        dir.join("out").display()
    );
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_then_sweep_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = sparsecg(&["run", "--config", &cfg, "--criterion", "delta_var", "--lambda", "0.5", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let written = fs::read_to_string(dir.path().join("out/config.toml")).unwrap();
    assert!(written.contains("kind = \"delta_var\""));
    assert!(written.contains("lambda = 0.5"));
    for seed in [4, 5] {
        assert!(dir.path().join(format!("out/curve_seed_{seed}.csv")).exists());
        assert!(dir.path().join(format!("out/tables_seed_{seed}.ckpt")).exists());
    }
    let out = sparsecg(&["sweep-sparsity", "--config", &cfg, "--seed", "4", "--lambda", "0.5,0,1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 2 * 3);
    let out = sparsecg(&["eval", "--config", &cfg, "--seed", "4", "--criterion", "full"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(dir.path().join("out/eval.csv")).unwrap().lines().nth(1).unwrap().starts_with("4,full,"));
}

#[test]
fn prop1_writes_tables_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let alt = dir.path().join("alt");
    let out = sparsecg(&["prop1", "--config", &cfg, "--out", alt.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(alt.join("prop1_rows.csv").exists() && alt.join("prop1_bins.csv").exists());
}

#[test]
fn config_problems_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    assert_eq!(sparsecg(&["run", "--config", "/nonexistent/exp.toml"]).status.code(), Some(2));
    assert_eq!(sparsecg(&["run", "--config", &cfg, "--lambda", "1.5"]).status.code(), Some(2));
    assert_eq!(sparsecg(&["run", "--config", &cfg, "--criterion", "bogus"]).status.code(), Some(2));
    assert_eq!(sparsecg(&["eval", "--config", &cfg]).status.code(), Some(2));
    let typo = write_config(dir.path(), "learnin_rate = 0.1\n");
    let out = sparsecg(&["run", "--config", &typo]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learnin_rate"));
}

#[test]
fn runtime_failure_exits_3_with_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "entry_cap = 4\n");
    let out = sparsecg(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("out/aggregate.csv").exists());
    assert!(dir.path().join("out/config.toml").exists());
}

#[test]
fn workers_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = Command::new(env!("CARGO_BIN_EXE_sparsecg")).args(["run", "--config", &cfg]).env("SPARSECG_WORKERS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_sparsecg")).args(["run", "--config", &cfg]).env("SPARSECG_WORKERS", "1").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}
