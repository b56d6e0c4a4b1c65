use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn nlkpp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlkpp"))
        .args(args)
        .env("NLKPP_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn summary(out: &Path, name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(out.join(name).join("summary.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn constant_logistic_runs_clean() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("constant_logistic.toml");
    let out = nlkpp(&["run", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "constant_logistic");
    assert_eq!(s["schema"], "nlkpp.summary/1");
    assert_eq!(s["report"]["status"], "strictly_positive");
    let floor = s["measured"]["u_star_min"].as_f64().unwrap();
    assert!((floor - 1.5).abs() < 1e-6);
    let csv = std::fs::read_to_string(dir.path().join("constant_logistic/u_star.csv")).unwrap();
    assert!(csv.starts_with("t,x,u\n"));
}

#[test]
fn missing_kernel_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(
        &path,
        "name = \"broken\"\nexperiment = \"simulate\"\n[domain]\nkind = \"torus\"\nbounds = [[0.0, 6.0]]\npoints = [16]\n",
    )
    .unwrap();
    let out = nlkpp(&["run", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel"));
}

#[test]
fn syntax_errors_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    std::fs::write(&path, "name = \"typo\"\nexperiment = \"simulate\"\n[domain]\nkind = \"torus\"\npoints = [16\n").unwrap();
    let out = nlkpp(&["run", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn wrong_expectation_fails_and_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("constant_logistic.toml"))
        .unwrap()
        .replace("u_star_max = { value = 1.5", "u_star_max = { value = 2.5");
    let path = dir.path().join("corrupted.toml");
    std::fs::write(&path, text).unwrap();
    let out = nlkpp(&["run", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("u_star_max") && !err.contains("u_star_min"), "{err}");
}

#[test]
fn reruns_are_bit_for_bit_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let path = scenario("nested_box.toml");
    for dir in [&a, &b] {
        let out = nlkpp(&["simulate", "--scenario", path.to_str().unwrap(), "--seed", "11"], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    for file in ["summary.json", "trajectory.csv"] {
        let x = std::fs::read(a.path().join("nested_box").join(file)).unwrap();
        let y = std::fs::read(b.path().join("nested_box").join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
    assert_eq!(summary(a.path(), "nested_box")["seed"], 11);
}

#[test]
fn parallel_jobs_and_out_flag() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (scenario("interval_eigen.toml"), scenario("extinction.toml"));
    let out = nlkpp(
        &[
            "run",
            "--scenario",
            p1.to_str().unwrap(),
            "--scenario",
            p2.to_str().unwrap(),
            "--jobs",
            "2",
            "--out",
            flag_dir.path().to_str().unwrap(),
        ],
        env_dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(flag_dir.path().join("interval_eigen/eigenvector.csv").exists());
    assert!(flag_dir.path().join("extinction/trajectory.csv").exists());
    assert!(!env_dir.path().join("extinction").exists());
}

#[test]
fn subcommand_overrides_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("static_cosine.toml");
    let out = nlkpp(&["eigen", "--scenario", path.to_str().unwrap()], dir.path());
    // The expectation `lambda >= 2` is checked against the eigenvalue as well.
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "static_cosine");
    assert_eq!(s["experiment"], "eigen");
    assert!(s["measured"]["lambda"].as_f64().unwrap() > 2.0);
}

#[test]
fn verify_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlkpp(&["verify", "--criterion", "12", "--criterion", "13"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("criterion 12") && text.contains("criterion 13"));
}
