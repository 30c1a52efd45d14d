use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sunbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| {
        panic!(
            "stderr is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

struct Files {
    _dir: TempDir,
    tetrahedron: String,
    stretched: String,
    cyclic: String,
    ghz: String,
    euler: String,
    root: PathBuf,
}

fn files() -> Files {
    let dir = TempDir::new().unwrap();
    let root = dir.path().to_path_buf();
    let s = |p: PathBuf| p.to_string_lossy().into_owned();
    Files {
        tetrahedron: s(write(&root, "tet.json", r#"{"kind": "tetrahedron_j2"}"#)),
        stretched: s(write(
            &root,
            "fock.json",
            r#"{"kind": "fock", "n": 2, "occupations": [4, 0]}"#,
        )),
        cyclic: s(write(
            &root,
            "cyc.json",
            r#"{"kind": "su3_cyclic", "k": 3, "l": 3}"#,
        )),
        ghz: s(write(
            &root,
            "ghz.json",
            r#"{"kind": "ghz", "n": 3, "N": 9}"#,
        )),
        euler: s(write(
            &root,
            "euler.json",
            r#"{"kind": "euler_su2", "n": 2}"#,
        )),
        root,
        _dir: dir,
    }
}

fn approx(v: &Value, expected: f64, tol: f64) -> bool {
    v.as_f64().is_some_and(|x| (x - expected).abs() < tol)
}

#[test]
fn bound_tetrahedron_through_euler_angles() {
    let f = files();
    let out = run(&[
        "bound",
        "--probe",
        &f.tetrahedron,
        "--param",
        &f.euler,
        "--theta",
        "0.3,1.1,-0.4",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let j = stdout_json(&out);
    assert!(approx(&j["intrinsic_bound"], 0.375, 1e-12));
    assert!(approx(&j["weighted_bound"], 0.375, 1e-10));
    assert_eq!(j["flags"]["saturable"], Value::Bool(true));
    assert_eq!(j["metric"].as_array().unwrap().len(), 3);
}

#[test]
fn bound_stretched_state_is_singular() {
    let f = files();
    let out = run(&["bound", "--probe", &f.stretched]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
    let j = stderr_json(&out);
    assert_eq!(j["error"], "singular_information");
    assert_eq!(j["flags"]["covariance_singular"], Value::Bool(true));
}

#[test]
fn bound_identity_weight_at_gimbal_lock_is_singular() {
    let f = files();
    let out = run(&[
        "bound",
        "--probe",
        &f.tetrahedron,
        "--param",
        &f.euler,
        "--theta",
        "0,0,0",
        "--weight",
        "identity",
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(
        stderr_json(&out)["flags"]["qfim_singular"],
        Value::Bool(true)
    );
}

#[test]
fn bound_accepts_weight_file_and_pseudo_inverse() {
    let f = files();
    let w = write(&f.root, "w.json", "[[2,0,0],[0,1,0],[0,0,1]]");
    let out = run(&[
        "bound",
        "--probe",
        &f.tetrahedron,
        "--param",
        &f.euler,
        "--theta",
        "0.2,0.9,1.0",
        "--weight",
        w.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout_json(&out)["weighted_bound"].as_f64().unwrap() > 0.0);

    let out = run(&["bound", "--probe", &f.stretched, "--pseudo-inverse"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout_json(&out)["flags"]["pseudo_inverse"],
        Value::Bool(true)
    );
}

#[test]
fn bound_input_errors_exit_one() {
    let f = files();
    let out = run(&[
        "bound",
        "--probe",
        &f.tetrahedron,
        "--param",
        &f.euler,
        "--theta",
        "1,2",
    ]);
    assert_eq!(code(&out), 1);
    let bad = write(
        &f.root,
        "bad.json",
        r#"{"kind": "su3_cyclic", "k": 2, "l": 2}"#,
    );
    assert_eq!(code(&run(&["bound", "--probe", bad.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["bound", "--probe", "/nonexistent.json"])), 1);
    assert_eq!(code(&run(&["bound"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn check_reports_unpolarization() {
    let f = files();
    let j = stdout_json(&run(&["check", "--probe", &f.cyclic]));
    assert_eq!(j["second_order"], Value::Bool(true));
    assert!(approx(&j["intrinsic_bound"], 4.0 / 9.0, 1e-10));
    assert_eq!(j["intrinsic_bound"], j["floor"]);
    let keys: Vec<&str> = j.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(
        keys,
        [
            "first_order",
            "second_order",
            "deviation",
            "intrinsic_bound",
            "floor",
            "saturable"
        ]
    );

    assert_eq!(
        stdout_json(&run(&["check", "--probe", &f.ghz]))["second_order"],
        Value::Bool(false)
    );
    assert_eq!(
        stdout_json(&run(&["check", "--probe", &f.tetrahedron]))["saturable"],
        Value::Bool(true)
    );

    let out = run(&["check", "--probe", &f.stretched]);
    assert_eq!(code(&out), 0);
    let j = stdout_json(&out);
    assert_eq!(j["intrinsic_bound"], Value::Null);
    assert_eq!(j["saturable"], Value::Bool(false));
}

#[test]
fn scan_writes_csv_and_plot() {
    let f = files();
    let csv = f.root.join("scan.csv");
    let svg = f.root.join("scan.svg");
    let out = run(&[
        "scan",
        "--n",
        "2",
        "--nmin",
        "1",
        "--nmax",
        "12",
        "--states",
        "ghz,floor",
        "--out",
        csv.to_str().unwrap(),
        "--plot",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,N,casimir,cs_ghz,cs_floor,cs_optimized");
    assert_eq!(lines.len(), 13);
    assert_eq!(lines[2], "2,2,2,singular,1.125,");
    assert_eq!(lines[4], "2,4,6,0.5625,0.375,");
    for line in &lines[3..] {
        let cols: Vec<&str> = line.split(',').collect();
        let (g, fl): (f64, f64) = (cols[3].parse().unwrap(), cols[4].parse().unwrap());
        assert!(g >= fl);
    }
    let plot = fs::read_to_string(&svg).unwrap();
    assert_eq!(plot.matches("<polyline").count(), 2);

    // identical flags give identical bytes, whatever the thread count
    let again = run(&[
        "scan", "--n", "2", "--nmin", "1", "--nmax", "12", "--jobs", "1",
    ]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn scan_three_modes_and_skips() {
    let out = run(&["scan", "--n", "3", "--nmin", "9", "--nmax", "9"]);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .nth(1)
        .unwrap()
        .contains(",0.444444444444,"));
    let out = run(&[
        "scan", "--n", "3", "--nmin", "2", "--nmax", "5", "--cap", "12",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().last().unwrap(),
        "3,5,skipped,skipped,skipped,skipped"
    );
    assert_eq!(
        code(&run(&["scan", "--n", "2", "--nmin", "5", "--nmax", "3"])),
        1
    );
    assert_eq!(
        code(&run(&[
            "scan",
            "--n",
            "2",
            "--nmin",
            "2",
            "--nmax",
            "3",
            "--states",
            "optimized"
        ])),
        1
    );
}

#[test]
fn scan_optimized_series_stays_between_floor_and_ghz() {
    let out = run(&[
        "scan",
        "--n",
        "2",
        "--nmin",
        "3",
        "--nmax",
        "6",
        "--states",
        "ghz,floor,optimized",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&out), 0);
    for line in String::from_utf8(out.stdout).unwrap().lines().skip(1) {
        let cols: Vec<f64> = line
            .split(',')
            .skip(3)
            .map(|c| c.parse().unwrap())
            .collect();
        let (ghz, floor, opt) = (cols[0], cols[1], cols[2]);
        assert!(opt >= floor - 1e-9 && opt <= ghz + 1e-12, "{line}");
    }
}

#[test]
fn optimize_is_deterministic_and_reaches_floor() {
    let a = run(&["optimize", "--n", "2", "-N", "4", "--seed", "7"]);
    assert_eq!(code(&a), 0);
    let j = stdout_json(&a);
    assert!(approx(&j["bound_achieved"], 0.375, 0.375 * 0.01));
    assert_eq!(j["converged"], Value::Bool(true));
    assert_eq!(j["amplitudes"].as_array().unwrap().len(), 5);
    let b = run(&[
        "optimize",
        "--n",
        "2",
        "--particles",
        "4",
        "--seed",
        "7",
        "--jobs",
        "1",
    ]);
    assert_eq!(a.stdout, b.stdout);

    let j = stdout_json(&run(&["optimize", "--n", "3", "-N", "9", "--seed", "7"]));
    assert!(approx(&j["bound_achieved"], 4.0 / 9.0, 4.0 / 9.0 * 0.01));
}

#[test]
fn optimize_failure_modes() {
    let out = run(&["optimize", "--n", "2", "-N", "1", "--seed", "7"]);
    assert_eq!(code(&out), 2);
    assert_eq!(stderr_json(&out)["error"], "optimization_failed");

    assert_eq!(code(&run(&["optimize", "--n", "2", "-N", "4"])), 1);

    let f = files();
    let cfg = write(&f.root, "cfg.json", r#"{"restarts": 2, "max_iters": 1}"#);
    let out = run(&[
        "optimize",
        "--n",
        "3",
        "-N",
        "3",
        "--seed",
        "1",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert_eq!(stdout_json(&out)["converged"], Value::Bool(false));

    let bad = write(&f.root, "bad.json", r#"{"restarts": 0}"#);
    assert_eq!(
        code(&run(&[
            "optimize",
            "--n",
            "2",
            "-N",
            "4",
            "--seed",
            "1",
            "--config",
            bad.to_str().unwrap()
        ])),
        1
    );
}
