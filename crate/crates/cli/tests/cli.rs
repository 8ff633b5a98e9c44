use std::path::PathBuf;
use std::process::{Command, Output};

fn accel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_accel"))
        .args(args)
        .env_remove("ACCEL_CERT_TOL")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn temp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("accel-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn run_writes_one_row_per_iterate() {
    let o = accel(&["run", "--method", "fgm", "--problem", "quad-diag-10", "--n", "50"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "k,f_gap,grad_norm_sq,Lk,jump_flag,bound,slack");
    assert_eq!(lines.count(), 51);
}

#[test]
fn run_from_the_minimizer_has_zero_gap() {
    let o = accel(&["run", "--method", "ogm", "--n", "5", "--x0", "at-minimizer"]);
    assert_eq!(code(&o), 0);
    for line in stdout(&o).lines().skip(1) {
        let gap: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(gap, 0.0);
    }
}

#[test]
fn randomized_and_line_search_runs() {
    for m in ["orc-f", "fgm-rc", "fgm-rc-sharp", "obl-f", "obl-g", "fgm-bl"] {
        let o = accel(&["run", "--method", m, "--n", "12", "--seed", "3"]);
        assert_eq!(code(&o), 0, "{m}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout(&o).lines().count(), 14, "{m}");
    }
}

#[test]
fn json_output_to_file() {
    let path = temp("traj.json");
    let p = path.to_str().unwrap();
    let o = accel(&["run", "--method", "obl-f-flat", "--n", "4", "--format", "json", "--output", p]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn config_file_supplies_defaults() {
    let path = temp("run.json");
    std::fs::write(&path, r#"{"method": "ogm-g", "problem": "huber-1d", "n": 7}"#).unwrap();
    let o = accel(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 9);
    // Flags win over the file.
    let o = accel(&["run", "--config", path.to_str().unwrap(), "--n", "3"]);
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn usage_errors_exit_two() {
    let bad = temp("bad.json");
    std::fs::write(&bad, r#"{"method": "fgm", "bogus": 1}"#).unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--method", "no-such-method", "--n", "3"],
        vec!["run", "--method", "fgm", "--problem", "no-such-problem", "--n", "3"],
        vec!["run", "--method", "obl-g-flat", "--n", "2"],
        vec!["run", "--config", bad.to_str().unwrap()],
        vec!["certify", "--method", "gd", "--n", "3"],
        vec!["verify-lyapunov", "--method", "fgm", "--n", "0"],
        vec!["sweep", "--method", "fgm", "--n", "5..2"],
        vec!["run", "--method", "obl-f", "--n", "3", "--eta", "1"],
        vec!["no-such-command"],
    ];
    for args in cases {
        let o = accel(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn certify_passes_and_fails_on_tolerance() {
    let o = accel(&["certify", "--method", "orc-f-flat", "--n", "1..6"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);
    // An impossible tolerance is a verification failure, not a usage error.
    let o = accel(&["certify", "--method", "obl-g-flat", "--n", "8", "--tol", "1e-40"]);
    assert_eq!(code(&o), 1);
    let o = Command::new(env!("CARGO_BIN_EXE_accel"))
        .args(["certify", "--method", "obl-g-flat", "--n", "8"])
        .env("ACCEL_CERT_TOL", "1e-40")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn sweep_and_verify() {
    let o = accel(&["sweep", "--method", "ogm", "--n", "1..10"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 11);
    let o = accel(&["verify-lyapunov", "--method", "orc-f", "--n", "20", "--seeds", "50"]);
    assert_eq!(code(&o), 0);
    let o = accel(&["verify-lyapunov", "--method", "obl-g", "--n", "20"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn listings() {
    let o = accel(&["list-methods"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 14);
    let o = accel(&["list-problems"]);
    assert!(stdout(&o).contains("quad-diag-10"));
}
