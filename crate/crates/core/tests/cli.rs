use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_extremesim"));
    c.env_remove("EXTREMESIM_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn read(path: &str) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn synth(dir: &Path) -> String {
    let data = p(dir, "data.csv");
    ok(&["synth", "--nu", "2,3,2.5", "--theta", "2.6", "--n", "1500", "--seed", "7", "-o", &data]);
    data
}

#[test]
fn synth_writes_headed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let text = read(&synth(dir.path()));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "X1,X2,X3");
    assert_eq!(lines.len(), 1501);
    assert!(text.ends_with('\n'));
    assert!(lines[1..].iter().all(|l| l.split(',').all(|c| c.parse::<f64>().is_ok())));
}

#[test]
fn pipeline_from_data_to_risk_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = synth(d);
    let (margins, excess, thr, sim) = (p(d, "m.json"), p(d, "z.csv"), p(d, "u.json"), p(d, "sim.csv"));
    ok(&["fit", "-i", &data, "-o", &margins]);
    let models: serde_json::Value = serde_json::from_str(&read(&margins)).unwrap();
    assert_eq!(models.as_array().unwrap().len(), 3);

    ok(&["transform", "-i", &data, "--margins", &margins, "--threshold-level", "0.9", "-o", &excess, "--threshold-output", &thr]);
    let n_exc = read(&excess).lines().count() - 1;
    assert!((150..=450).contains(&n_exc), "{n_exc}");

    ok(&["simulate-joint", "-i", &excess, "--m", "5000", "--q", "1", "-o", &sim, "--margins", &margins, "--threshold", &thr]);
    assert_eq!(read(&sim).lines().count(), 5001);

    let trm = p(d, "trm.csv");
    ok(&["trm", "-i", &data, "--sim", &sim, "--alpha", "0.99", "--margins", &margins, "-o", &trm]);
    let text = read(&trm);
    assert!(text.starts_with("metric,scope,value,n_exceed,sufficient\n"));
    assert_eq!(text.lines().count(), 1 + 9);

    let cond = p(d, "cond.csv");
    ok(&["simulate-cond", "-i", &excess, "--j", "2", "--given", "0.5,0.3", "--m", "500", "-o", &cond]);
    assert_eq!(read(&cond).lines().count(), 501);

    let mu = p(d, "mu.csv");
    ok(&["mu", "-i", &data, "--margins", &margins, "--j", "2", "--given", "4,5", "--m", "2000", "-o", &mu]);
    let text = read(&mu);
    assert!(text.contains("\ncond_sim,") && text.contains("\nlinreg,"));
}

#[test]
fn theoretical_var_requires_margins() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let out = run(&["trm", "-i", &data, "--alpha", "0.99", "-o", &p(dir.path(), "t.csv")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn insufficient_joint_exceedances_are_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "tiny.csv");
    // Anti-monotone columns never exceed their upper quantiles together.
    let rows: String = (1..=10).map(|i| format!("{i},{}\n", 11 - i)).collect();
    std::fs::write(&data, format!("a,b\n{rows}")).unwrap();
    let out = p(dir.path(), "t.csv");
    ok(&["trm", "-i", &data, "--alpha", "0.8", "--var-method", "empirical", "-o", &out]);
    let text = read(&out);
    // MES only conditions on the other column, DCTE on both.
    assert!(text.contains("\nMES,Orig,1.5,2,true\n"), "{text}");
    assert!(text.contains("\nDCTE,Orig,NA,0,false\n"), "{text}");
}

#[test]
fn usage_and_data_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["synth", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    let empty = p(dir.path(), "empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = run(&["fit", "-i", &empty, "-o", &p(dir.path(), "m.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    let bad = p(dir.path(), "bad.csv");
    std::fs::write(&bad, "a\nfoo\n").unwrap();
    assert_eq!(run(&["chi", "-i", &bad, "-o", &p(dir.path(), "c.csv")]).status.code(), Some(2));
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn chi_and_validate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let chi = p(dir.path(), "chi.csv");
    ok(&["chi", "-i", &data, "--grid", "0.8:0.95:4", "-o", &chi]);
    assert_eq!(read(&chi).lines().count(), 5);

    let rep = p(dir.path(), "v.json");
    ok(&["validate", "--rho", "0.4,0.8,0.1", "--j", "2", "--given", "0.5,0.2", "--m", "5000", "-o", &rep]);
    let v: serde_json::Value = serde_json::from_str(&read(&rep)).unwrap();
    assert!(v.is_object());
}

fn experiment_config(dir: &Path) -> String {
    let cfg = p(dir, "cfg.json");
    std::fs::write(
        &cfg,
        r#"{"theta": 2.6, "alpha": 0.999, "n": 1500, "m": 2000, "r_orig": 3, "r_sim": 2}"#,
    )
    .unwrap();
    cfg
}

#[test]
fn experiment_is_identical_across_thread_settings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = experiment_config(d);
    let a = p(d, "a.csv");
    let b = p(d, "b.csv");
    ok(&["experiment", "--config", &cfg, "--threads", "1", "-o", &a]);
    let out = bin()
        .env("EXTREMESIM_THREADS", "3")
        .args(["experiment", "--config", &cfg, "-o", &b])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(read(&a), read(&b));
    // 3 originals x (1 + 2 sims x 2 scopes) x 3 metrics.
    assert_eq!(read(&a).lines().count(), 1 + 3 * 5 * 3);
}

#[test]
fn experiment_keeps_intermediates_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = experiment_config(d);
    let keep: PathBuf = d.join("keep");
    let summary = p(d, "s.csv");
    ok(&[
        "experiment", "--config", &cfg, "-o", &p(d, "r.csv"), "--summary", &summary,
        "--keep-intermediates", keep.to_str().unwrap(),
    ]);
    let kept: Vec<String> = std::fs::read_dir(&keep)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(kept.len() >= 4, "{kept:?}");
    assert_eq!(read(&summary).lines().count(), 1 + 3 * 3);

    let bad = p(d, "bad.json");
    std::fs::write(&bad, r#"{"thetas": [2.6], "unknown_field": 1}"#).unwrap();
    // A config file is treated like a flag: rejecting it is a usage error.
    assert_eq!(run(&["experiment", "--config", &bad, "-o", &p(d, "x.csv")]).status.code(), Some(1));
}

#[test]
fn data_experiment_runs_on_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = synth(d);
    let cfg = p(d, "cfg.json");
    std::fs::write(&cfg, r#"{"alphas": [0.99], "m": 2000, "r_sim": 2, "targets": [0]}"#).unwrap();
    let out = p(d, "r.csv");
    ok(&["experiment", "--config", &cfg, "-i", &data, "-o", &out]);
    assert!(read(&out).lines().count() > 1);
}
