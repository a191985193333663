use std::path::Path;
use std::process::{Command, Output};

fn afs(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afs"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run afs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn tca_prints_implied_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let o = afs(
        dir.path(),
        &["tca", "--c", "0.5", "--tau", "0.2", "--g", "1.0", "--T", "0.2", "--order-frac", "1.4444"],
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("implied alpha/sigma = 1.0000"), "{}", stdout(&o));
}

#[test]
fn tca_rejects_non_square_root_impact() {
    let dir = tempfile::tempdir().unwrap();
    let o = afs(dir.path(), &["tca", "--c", "0.6", "--order-frac", "0.01"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn concavity_scan_is_one_at_the_actual_concavity() {
    let dir = tempfile::tempdir().unwrap();
    let o = afs(
        dir.path(),
        &["scan-concavity", "--c", "0.48", "--sharpe", "1", "--chat", "0.30:1.00:0.01", "-o", "scan.csv"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("axis1,axis2,ratio,u_misspec,u_opt"));
    let row: Vec<f64> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect::<Vec<f64>>())
        .find(|r| r[0] == 0.48)
        .expect("c_hat = 0.48 row");
    assert_eq!(row[2], 1.0);
    assert!(dir.path().join("scan.criticals.csv").exists());
    assert!(dir.path().join("scan.csv.config.json").exists());
}

#[test]
fn synth_is_deterministic_and_feeds_calibrate() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = afs(dir.path(), &["synth", "--n", "1000", "--seed", "7", "-o", "orders.csv"]);
        assert!(o.status.success());
    }
    for file in ["orders.csv", "orders.csv.config.json"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
    let o = afs(
        a.path(),
        &["calibrate", "-i", "orders.csv", "-o", "grid.csv", "--bootstrap", "100"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("argmax"));
    let grid = std::fs::read_to_string(a.path().join("grid.csv")).unwrap();
    assert!(grid.starts_with("c,tau,r2,g\n"));
    assert_eq!(grid.lines().count(), 1 + 36 * 8);
    for f in ["grid.loglog.csv", "grid.summary.json", "grid.csv.config.json"] {
        assert!(a.path().join(f).exists(), "{f}");
    }

    let o = afs(a.path(), &["compare-fig1", "--calib", "grid.csv", "--c", "0.48", "-o", "fig1.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = afs(
        a.path(),
        &["scan-concavity", "--calib", "grid.csv", "--tau", "0.2", "-o", "sc.csv", "--format", "json"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn decay_scan_reports_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let o = afs(
        dir.path(),
        &["scan-decay", "--tau", "0.2", "--theta", "1", "--c", "0.48", "-o", "d.csv"],
    );
    assert!(o.status.success());
    let crit = std::fs::read_to_string(dir.path().join("d.criticals.csv")).unwrap();
    let value: f64 = crit.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - (1.48 * 1.2 - 1.0)).abs() < 1e-9);
}

#[test]
fn optimize_and_backtest_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = afs(dir.path(), &["optimize", "--c", "0.5", "--alpha0", "0.6", "-o", "plan.csv"]);
    assert!(o.status.success());
    let plan = std::fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    assert!(plan.starts_with("t,alpha,drift,i_star,j_star,q_star\n"));
    let first: Vec<f64> = plan.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((first[3] / first[1] - 2.0 / 3.0).abs() < 1e-12);

    let o = afs(
        dir.path(),
        &["backtest", "--c", "0.5", "--c-hat", "0.7", "--paths", "100", "--steps", "20", "-o", "r.json"],
    );
    assert!(o.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert!(report["raw"].is_number() && report["normalized"].is_number());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(afs(dir.path(), &["backtest", "--c", "2", "-o", "r.json"]).status.code(), Some(2));
    assert_eq!(afs(dir.path(), &["optimize", "--bogus", "1", "-o", "x.csv"]).status.code(), Some(2));
    assert_eq!(afs(dir.path(), &["optimize"]).status.code(), Some(2));
    assert_eq!(
        afs(dir.path(), &["scan-concavity", "--chat", "1:0:0.1", "-o", "x.csv"]).status.code(),
        Some(2)
    );
    assert_eq!(
        afs(dir.path(), &["calibrate", "-i", "missing.csv", "-o", "x.csv"]).status.code(),
        Some(1)
    );
}
