use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grushin-lab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn identities_run_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "identities.cfg",
        &format!("# identity checks\nproblem = identities\nN = 1\nl = 1\ngamma = 1\noutput_dir = {}\n", out.display()),
    );
    let first = lab(&["run", &cfg]);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(String::from_utf8_lossy(&first.stdout).contains("identities PASS"));
    let a = snapshot(&out);
    assert!(a.iter().any(|(n, _)| n == "identities.csv"));
    assert!(a.iter().any(|(n, _)| n == "summary.json"));
    let second = lab(&["run", &cfg]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(a, snapshot(&out));
}

#[test]
fn missing_gamma_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.cfg", "problem = identities\nN = 1\nl = 1\n");
    let out = lab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn parse_error_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.cfg", "problem = identities\nN 1\n");
    let out = lab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn solver_failure_exits_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "tight.cfg",
        &format!(
            "problem = dirichlet_power\nN = 1\nl = 1\ngamma = 1\nnodes = 17\nnewton_max = 1\noutput_dir = {}\n",
            tmp.path().join("out").display()
        ),
    );
    let out = lab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn inspect_reads_solution_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "dp.cfg",
        &format!("problem = dirichlet_power\nN = 1\nl = 1\ngamma = 1\nnodes = 33\noutput_dir = {}\n", out_dir.display()),
    );
    assert_eq!(lab(&["run", &cfg]).status.code(), Some(0));
    let out = lab(&["inspect", &out_dir.join("solution.grsh").display().to_string()]);
    assert_eq!(out.status.code(), Some(0));
    let info: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(info["dims"], serde_json::json!([33, 33]));
    assert_eq!(info["boundary_max_abs"], 0.0);
    assert!(info["max"].as_f64().unwrap() > 0.0);

    let bogus = tmp.path().join("bogus.grsh");
    std::fs::write(&bogus, b"NOPE\n").unwrap();
    assert_eq!(lab(&["inspect", &bogus.display().to_string()]).status.code(), Some(1));
}

#[test]
fn verify_suites() {
    let out = lab(&["verify", "kelvin"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("kelvin PASS"));
    assert_eq!(lab(&["verify", "nonsense"]).status.code(), Some(2));
}

#[test]
fn thread_variable_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_grushin-lab"))
        .args(["verify", "identities"])
        .env("GRUSHIN_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_grushin-lab"))
        .args(["verify", "identities"])
        .env("GRUSHIN_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
