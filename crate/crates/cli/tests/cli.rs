use std::path::Path;
use std::process::{Command, Output};

use qbessel_core::qbessel::BesselSpec;
use qbessel_core::qcore::{AlphaVector, QBase, Tolerance};
use qbessel_core::qheat::{translated_kernel, HeatPolySpec};

fn qbessel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbessel"))
        .args(args)
        .env_remove("QBESSEL_Q")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn eval_trivial_values() {
    for args in [
        &["eval", "jalpha", "--x", "0"][..],
        &["eval", "cosr", "--x", "0", "--r", "3"],
        &["eval", "heatpoly", "--n", "0", "--x", "0.7", "--t", "0.3"],
    ] {
        let o = qbessel(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        assert_eq!(stdout(&o).trim(), "1");
        assert!(stderr(&o).contains("terms="));
    }
}

#[test]
fn config_errors_exit_two() {
    let o = qbessel(&["--r", "3", "--alpha", "0.5,-0.9", "eval", "jalpha", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha[2] < -1 + 2/r"));
    let o = qbessel(&["--q", "1.2", "eval", "cosr", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qbessel(&["eval", "kernel", "--x", "1", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2), "kernel needs delta > 1");
}

#[test]
fn table_rows_follow_lattice_order_and_match_eval() {
    let o = qbessel(&["table", "jalpha", "--kmin", "0", "--kmax", "5", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r[0], ["x", "value", "terms", "tail"]);
    assert_eq!(r.len(), 7);
    for (i, row) in r[1..].iter().enumerate() {
        let x: f64 = row[0].parse().unwrap();
        assert_eq!(x, 0.5f64.powi(i as i32));
        let e = qbessel(&["eval", "jalpha", "--x", &row[0], "--alpha", "0.5"]);
        let direct: f64 = stdout(&e).trim().parse().unwrap();
        let tabled: f64 = row[1].parse().unwrap();
        assert!((direct - tabled).abs() <= 1e-12 * direct.abs());
    }
}

#[test]
fn kernel_grid_has_nine_rows() {
    let o = qbessel(&["--delta", "2", "table", "kernel", "--kmin", "0", "--kmax", "2", "--t", "0.5,1,2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r[0], ["x", "t", "value", "terms", "tail"]);
    assert_eq!(r.len(), 10);
}

#[test]
fn csv_output_is_deterministic_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = qbessel(&["--r", "3", "--csv", p.to_str().unwrap(), "table", "cosr", "--kmin", "-2", "--kmax", "4"]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let failed = dir.path().join("failed.csv");
    let o = qbessel(&["--csv", failed.to_str().unwrap(), "table", "kernel", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!failed.exists());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 2);
}

#[test]
fn verify_reports_and_exit_codes() {
    let o = qbessel(&["verify", "duplication"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("PASS duplication/"), "{out}");
    let o = qbessel(&["--q", "0.5", "--r", "2", "verify", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().count() >= 15);
    assert!(!stdout(&o).contains("FAIL"));
    let o = qbessel(&["verify", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_failure_exits_one() {
    // the translation series overflows for a sixth-order operator at this base
    let o = qbessel(&["--r", "6", "--q", "0.4", "verify", "translation"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL translation/"));
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_zero_and_atom_data() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write(dir.path(), "zero.csv", "x,value\n1,0\n0.5,0\n");
    let o = qbessel(&["--delta", "3", "--kmax", "3", "solve", "--input", &zero, "--t", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r[0], ["x", "t", "u", "residual"]);
    assert_eq!(r.len(), 5);
    assert!(r[1..].iter().all(|row| row[2] == "0"));

    let atom = write(dir.path(), "atom.csv", "x,value\n0.5,1\n");
    let o = qbessel(&["--delta", "3", "--alpha", "0.5", "--kmax", "2", "solve", "--input", &atom, "--t", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let spec = BesselSpec::new(QBase::new(0.5, 2, 3.0).unwrap(), AlphaVector::new(vec![0.5], 2).unwrap()).unwrap();
    let h = HeatPolySpec::new(spec, 1).unwrap();
    for row in &rows(&stdout(&o))[1..] {
        let x: f64 = row[0].parse().unwrap();
        let u: f64 = row[2].parse().unwrap();
        let direct = 0.25 * translated_kernel(&h, 0.5, x, 1.0, &Tolerance::default()).unwrap().value;
        assert!((u - direct).abs() <= 1e-14 * direct.abs(), "x={x} {u} {direct}");
        let res: f64 = row[3].parse().unwrap();
        assert!(res.abs() <= 1e-5 * u.abs().max(1.0));
    }
}

#[test]
fn solve_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let header = write(dir.path(), "h.csv", "x,value\n");
    let o = qbessel(&["--delta", "3", "solve", "--input", &header, "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let bad = write(dir.path(), "bad.csv", "x,value\n1,2\n0.3,1\n");
    let o = qbessel(&["--delta", "3", "solve", "--input", &bad, "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let nan = write(dir.path(), "nan.csv", "x,value\n1,oops\n");
    let o = qbessel(&["--delta", "3", "solve", "--input", &nan, "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn solve_divergent_kernel_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let atom = write(dir.path(), "atom.csv", "x,value\n0.5,1\n");
    let o = qbessel(&["--delta", "1.5", "solve", "--input", &atom, "--t", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn environment_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write(dir.path(), "run.conf", "q = 0.3\nr = 3\n");
    let via_file = stdout(&qbessel(&["--config", &conf, "eval", "cosr", "--x", "1"]));
    let via_flags = stdout(&qbessel(&["--q", "0.3", "--r", "3", "eval", "cosr", "--x", "1"]));
    assert_eq!(via_file, via_flags);
    let via_env = Command::new(env!("CARGO_BIN_EXE_qbessel"))
        .args(["--r", "3", "eval", "cosr", "--x", "1"])
        .env("QBESSEL_Q", "0.3")
        .output()
        .unwrap();
    assert_eq!(stdout(&via_env), via_flags);
    let flag_wins = Command::new(env!("CARGO_BIN_EXE_qbessel"))
        .args(["--config", &conf, "--q", "0.6", "eval", "cosr", "--x", "1"])
        .env("QBESSEL_Q", "0.4")
        .output()
        .unwrap();
    let expect = stdout(&qbessel(&["--q", "0.6", "--r", "3", "eval", "cosr", "--x", "1"]));
    assert_eq!(stdout(&flag_wins), expect);
    let broken = write(dir.path(), "broken.conf", "q = 0.3\nbogus = 1\n");
    let o = qbessel(&["--config", &broken, "eval", "cosr", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));
}
