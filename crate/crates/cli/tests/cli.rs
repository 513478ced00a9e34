use std::path::Path;
use std::process::{Command, Output};

use kahler_toric_cli::report::REPORT_SCHEMA;

fn kt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kahler-toric")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn families_listing() {
    let o = kt(&["families", "list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().any(|l| l.starts_with("normal-known-var: not toric")));

    let o = kt(&["families", "list", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);

    let o = kt(&["families", "list", "--json", "--family", "poisson"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["dim"], 1);

    assert_eq!(kt(&["families", "list", "--family", "gamma"]).status.code(), Some(2));
}

#[test]
fn zero_tolerance_on_finite_differences_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "suite.toml",
        "[[check]]\ncheck = \"dual-flatness\"\nfamily = \"binomial\"\nparams = { n = 3 }\nsamples = 5\ntol = 0.0\n",
    );
    let o = kt(&["check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL dual-flatness/dual-jacobian"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "a.toml", "[[check]]\ncheck = \"curvature\"\nfamily = \"poisson\"\n");
    assert_eq!(kt(&["check", "--config", &unknown]).status.code(), Some(2));
    let not_toric = write(dir.path(), "b.toml", "[[check]]\ncheck = \"factorization\"\nfamily = \"normal-known-var\"\n");
    assert_eq!(kt(&["check", "--config", &not_toric]).status.code(), Some(2));
    assert_eq!(kt(&["check", "--config", "/nonexistent/suite.toml"]).status.code(), Some(2));
    assert_eq!(kt(&["check", "--only", "nothing"]).status.code(), Some(2));
}

#[test]
fn only_and_seed_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let o = kt(&["check", "--only", "lift", "--seed", "7", "--deterministic", "--json", path.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let reports: serde_json::Value = serde_json::from_str(&text).unwrap();
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    assert!(jsonschema::JSONSchema::compile(&schema).unwrap().is_valid(&reports));
    for r in reports.as_array().unwrap() {
        assert!(r["check_name"].as_str().unwrap().starts_with("lift/"));
    }
}

#[test]
fn recorded_seed_reproduces_error() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    kt(&["check", "--only", "factorization", "--json", first.to_str().unwrap()]);
    let reports: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&first).unwrap()).unwrap();
    let r = &reports[0];
    let cfg = write(
        dir.path(),
        "rerun.toml",
        &format!(
            "[[check]]\ncheck = \"factorization\"\nfamily = \"{}\"\nsamples = {}\nseed = {}\n",
            r["target"].as_str().unwrap(),
            r["n_samples"],
            r["seed"]
        ),
    );
    let second = dir.path().join("second.json");
    kt(&["check", "--config", &cfg, "--json", second.to_str().unwrap()]);
    let again: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&second).unwrap()).unwrap();
    assert_eq!(again[0]["check_name"], r["check_name"]);
    assert_eq!(again[0]["max_abs_error"], r["max_abs_error"]);
}

#[test]
fn eval_tables() {
    let o = kt(&["eval", "--what", "potential", "--target", "categorical:1", "--grid", "-1,0,1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("x1,value,status"));
    for (line, theta) in rows.zip([-1.0f64, 0.0, 1.0]) {
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((value - theta.exp().ln_1p()).abs() < 1e-15);
    }

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mu.csv");
    let o = kt(&["eval", "--what", "momentum", "--target", "projective:1:1", "--grid", "-2:2:9", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 10);
    for line in text.lines().skip(1) {
        let mu: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(mu > -4.0 * std::f64::consts::PI && mu < 0.0);
    }

    let o = kt(&["eval", "--what", "metric", "--target", "binomial:3", "--grid", ""]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "x1,h1_1,status\n");

    let o = kt(&["eval", "--what", "potential", "--target", "negative-binomial:2", "--grid", "-1,1"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(2).unwrap().starts_with("1,,"));

    let o = kt(&["eval", "--what", "lift", "--target", "segre:1:1", "--grid", "0;0.5;1;2"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("0+1i,0.5+2i,"));

    assert_eq!(kt(&["eval", "--what", "potential", "--target", "binomial:3", "--grid", "0;1"]).status.code(), Some(2));
}

#[test]
fn readme_example_suite_runs() {
    let readme = include_str!("../../../README.md");
    let start = readme.find("Complete example:").unwrap();
    let block = &readme[start..];
    let body = &block[block.find("```toml\n").unwrap() + 8..];
    let body = &body[..body.find("```").unwrap()];
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "example.toml", body);
    let o = kt(&["check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
