use std::path::Path;
use std::process::{Command, Output};

fn ktune(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ktune")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_tune_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = ktune(&["generate", "nk", "--n", "8", "--k", "2", "--seed", "3", "--out", "nk.json"], d);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));

    let tune = ktune(&["tune", "--cache", "nk.json", "--algo", "first-ils", "--budget", "100", "--seed", "1"], d);
    assert!(tune.status.success());
    assert!(stdout(&tune).contains("fraction"));

    let analyze = ktune(&["analyze", "--cache", "nk.json", "--export", "dot", "--out", "an"], d);
    assert!(analyze.status.success(), "{}", String::from_utf8_lossy(&analyze.stderr));
    for f in ["report.json", "minima.csv", "cp_curve.csv", "ffg.dot"] {
        assert!(d.join("an").join(f).exists(), "{f}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(ktune(&["tune", "--cache", "x.json", "--algo", "nope", "--budget", "10"], d).status.code(), Some(2));
    assert_eq!(ktune(&["tune", "--cache", "x.json", "--algo", "random", "--budget", "0"], d).status.code(), Some(2));
    assert_eq!(ktune(&["frobnicate"], d).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = ktune(&["tune", "--cache", "absent.json", "--algo", "random", "--budget", "10"], d);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));

    std::fs::write(d.join("bad.json"), "{\"cache\": 3}").unwrap();
    assert_eq!(ktune(&["analyze", "--cache", "bad.json"], d).status.code(), Some(1));
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(ktune(&["generate", "nk", "--n", "6", "--k", "1", "--out", "nk.json"], d).status.success());
    std::fs::write(d.join("cfg.json"), r#"{"seed": 4, "tune": {"cache": "nk.json", "algo": "random", "budget": 20}}"#).unwrap();
    let a = ktune(&["--config", "cfg.json", "tune"], d);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = ktune(&["tune", "--cache", "nk.json", "--algo", "random", "--budget", "20", "--seed", "4"], d);
    assert_eq!(stdout(&a), stdout(&b));

    std::fs::write(d.join("bad.json"), r#"{"tune": {"colour": "red"}}"#).unwrap();
    assert_eq!(ktune(&["--config", "bad.json", "tune"], d).status.code(), Some(2));
}

#[test]
fn hyperopt_writes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for seed in ["1", "2"] {
        let out = format!("nk{seed}.json");
        assert!(ktune(&["generate", "nk", "--n", "8", "--k", "2", "--seed", seed, "--out", &out], d).status.success());
    }
    std::fs::write(d.join("grid.json"), r#"{"neighbourhood": ["hamming", "adjacent"], "restart": [true, false]}"#).unwrap();
    let hyperopt = |caches: &[&str], out: &str| {
        let mut args = vec!["hyperopt", "--algo", "first-mls", "--grid", "grid.json", "--budgets", "25,50", "--repetitions", "5", "--out", out];
        for c in caches {
            args.extend(["--cache", c]);
        }
        ktune(&args, d)
    };
    // one cache: its best setting is always common
    let run = hyperopt(&["nk1.json"], "sel.json");
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let sel: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("sel.json")).unwrap()).unwrap();
    let table = sel["first-mls"].as_object().unwrap();
    assert_eq!(table.keys().collect::<Vec<_>>(), vec!["25", "50"]);

    // these two disagree beyond k = 16 at budget 50
    let run = hyperopt(&["nk1.json", "nk2.json"], "sel2.json");
    assert_eq!(run.status.code(), Some(1));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("no common hyperparameter setting") && err.contains("nk-n8-k2-s2"), "{err}");
    assert!(!d.join("sel2.json").exists());
}
