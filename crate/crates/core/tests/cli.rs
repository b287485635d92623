use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn axp(args: &[&str]) -> Output {
    axp_env(args, &[])
}

fn axp_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_axp"));
    cmd.args(args).env_remove("AXP_ORACLE_CAP");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn example1_args<'a>(m: &'a str, i: &'a str) -> Vec<&'a str> {
    vec!["explain", "--model", m, "--instance", i]
}

#[test]
fn explain_example1() {
    let (m, i) = (fixture("example1.model.json"), fixture("example1.instance.json"));
    let o = axp(&example1_args(m.to_str().unwrap(), i.to_str().unwrap()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["axps"], serde_json::json!([["Age", "Purpose"], ["Credit"], ["Bank"]]));
    assert_eq!(v["complete"], true);
    assert_eq!(v["scores"]["resp"]["Credit"], 1.0);
    assert_eq!(v["exact_scores"]["dp"]["Age"], "1/2");
    assert_eq!(v["manifest"]["command"], "explain");
}

#[test]
fn explain_csv_and_normalization() {
    let (m, i) = (fixture("loan_f.model.json"), fixture("loan.instance.json"));
    let mut args = example1_args(m.to_str().unwrap(), i.to_str().unwrap());
    args.extend(["--format", "csv", "--normalize", "powerset", "--index", "dp"]);
    let o = axp(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "feature,dp\nAge,0.125\nPurpose,0.042\nCredit,0.104\nBank,0.104\n"
    );
}

#[test]
fn explain_cross_oracle_agrees() {
    let (m, i) = (fixture("loan_g.model.json"), fixture("loan.instance.json"));
    let mut args = example1_args(m.to_str().unwrap(), i.to_str().unwrap());
    args.extend(["--oracle", "cross"]);
    let o = axp(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn missing_file_is_an_io_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let i = fixture("example1.instance.json");
    let o = axp(&[
        "explain",
        "--model",
        "does-not-exist.json",
        "--instance",
        i.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());
    assert!(!out.exists());
    assert!(stderr(&o).contains("does-not-exist.json"));
}

#[test]
fn malformed_model_is_a_validation_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"features\": [], \"model\": {\"kind\": \"rule_set\", \"rules\": [[{\"feature\": 0, \"op\": \"zz\", \"value\": 1}]]}}").unwrap();
    let i = fixture("example1.instance.json");
    let o = axp(&[
        "explain",
        "--model",
        bad.to_str().unwrap(),
        "--instance",
        i.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("unknown condition op 'zz'") && e.contains("line 1"), "{e}");
}

#[test]
fn limit_truncates_with_exit_four() {
    let (m, i) = (fixture("example1.model.json"), fixture("example1.instance.json"));
    let mut args = example1_args(m.to_str().unwrap(), i.to_str().unwrap());
    args.extend(["--limit", "1"]);
    let o = axp(&args);
    assert_eq!(o.status.code(), Some(4));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["complete"], false);
    assert_eq!(
        v["axps"].as_array().unwrap().len() + v["cxps"].as_array().unwrap().len(),
        1
    );
}

#[test]
fn usage_error_exits_one() {
    assert_eq!(axp(&["explain"]).status.code(), Some(1));
    assert_eq!(axp(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn axioms_default_and_control() {
    let o = axp(&["axioms", "--universe-n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("forced sum = 2, required = 1, contradiction"), "{text}");

    let o = axp(&[
        "axioms",
        "--aggregator",
        "constant-one",
        "--universe-n",
        "3",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let reports = v["matrix"]["rows"][0]["reports"].as_array().unwrap();
    let null = reports.iter().find(|r| r["axiom"] == "null_feature").unwrap();
    assert_eq!(null["verdict"], "violated");
    assert_eq!(null["counterexample"]["kind"], "null_feature");

    let o = axp(&["axioms", "--aggregator", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn smaller_universe_keeps_the_passes() {
    let verdicts = |n: &str| -> Vec<(String, String, String)> {
        let o = axp(&["axioms", "--universe-n", n, "--format", "csv"]);
        stdout(&o)
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0].to_string(), f[1].to_string(), f[2].to_string())
            })
            .collect()
    };
    let (small, big) = (verdicts("2"), verdicts("4"));
    assert_eq!(small.len(), big.len());
    for (s, b) in small.iter().zip(&big) {
        if b.2 == "pass" {
            assert_eq!(s.2, "pass", "{s:?} vs {b:?}");
        }
    }
}

#[test]
fn attack_csv_is_reproducible() {
    let cfg = fixture("compas-like.json");
    let args = [
        "attack",
        "--config",
        cfg.to_str().unwrap(),
        "--index",
        "responsibility",
        "--seed",
        "11",
    ];
    let (a, b) = (axp(&args), axp(&args));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let csv = stdout(&a);
    let race = csv.lines().find(|l| l.starts_with("race,resp,")).unwrap();
    let top1: f64 = race.split(',').nth(2).unwrap().parse().unwrap();
    assert!(top1 >= 0.8, "{csv}");
}

#[test]
fn attack_config_feature_mismatch_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("compas-like.json")).unwrap()).unwrap();
    v["dataset"]["weights"].as_array_mut().unwrap().pop();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, v.to_string()).unwrap();
    let o = axp(&["attack", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dataset.weights"), "{}", stderr(&o));
}

#[test]
fn verify_fixtures_and_cap() {
    for m in ["example1.model.json", "loan_f.model.json", "loan_g.model.json"] {
        let i = if m.starts_with("example1") {
            "example1.instance.json"
        } else {
            "loan.instance.json"
        };
        let (m, i) = (fixture(m), fixture(i));
        let o = axp(&[
            "verify",
            "--model",
            m.to_str().unwrap(),
            "--instance",
            i.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(
            stdout(&o).ends_with("agree\n") && !stdout(&o).contains("disagree"),
            "{}",
            stdout(&o)
        );
    }
    let (m, i) = (fixture("loan_f.model.json"), fixture("loan.instance.json"));
    let o = axp_env(
        &[
            "verify",
            "--model",
            m.to_str().unwrap(),
            "--instance",
            i.to_str().unwrap(),
        ],
        &[("AXP_ORACLE_CAP", "100")],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("exceed cap 100"), "{}", stderr(&o));
}

#[test]
fn verify_fuzz_is_deterministic() {
    let args = [
        "verify", "--fuzz", "--trials", "100", "--seed", "42", "--format", "json",
    ];
    let (a, b) = (axp(&args), axp(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["verdict"], "agree");
    assert_eq!(v["fuzz"]["trials"], 100);
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("explain.json");
    let (m, i) = (fixture("loan_f.model.json"), fixture("loan.instance.json"));
    let o = axp(&[
        "explain",
        "--model",
        m.to_str().unwrap(),
        "--instance",
        i.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let first = std::fs::read(&out).unwrap();
    let manifest = dir.path().join("explain.json.manifest.json");
    std::fs::remove_file(&out).unwrap();
    let o = axp(&["replay", manifest.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(&out).unwrap(), first);
}
