use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sobdde::problem::ProblemSpec;
use sobdde::{solve, GridFunction};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sobdde"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const PURE_DELAY: &str = r#"{
    "rhs": {"builtin": "pure_delay", "params": {"a": 1.0}},
    "dim": 1, "R": 1.0, "r": 1.0,
    "phi": {"kind": "const", "params": {"value": 1.0}},
    "p": 2.0, "h": 0.001, "t_end": 2.0
}"#;

const LOGISTIC: &str = r#"{
    "rhs": {"builtin": "logistic"},
    "dim": 1, "R": 1.0, "r": 0.5,
    "phi": {"kind": "linear", "params": {"value": 0.5, "slope": 0.1}},
    "p": 1.0, "h": 0.001, "t_end": 1.0
}"#;

const ZERO_RHS: &str = r#"{
    "rhs": {"builtin": "constant", "params": {"value": 0.0}},
    "dim": 2, "R": 1.0, "r": 0.5,
    "phi": {"kind": "kink", "params": {"center": -0.5, "scale": [1.0, -2.0]}},
    "h": 0.01, "t_end": 1.5
}"#;

fn read_grid(path: &Path) -> GridFunction {
    GridFunction::read_csv(std::fs::File::open(path).unwrap()).unwrap()
}

fn read_csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn solve_zero_rhs_is_constant_after_zero() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "zero.json", ZERO_RHS);
    let out = dir.path().join("zero");
    let o = run(&["solve", "--spec", s(&spec), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let traj = read_grid(&dir.path().join("zero.traj.csv"));
    let at_zero = traj.evaluate(0.0).unwrap();
    assert_eq!(at_zero, vec![0.5, -1.0]);
    for k in 0..=traj.segments() {
        if traj.node_time(k) >= 0.0 {
            assert_eq!(traj.node(k), at_zero.as_slice());
        }
    }
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("zero.diag.json")).unwrap())
            .unwrap();
    assert_eq!(diag["escaped"], false);
    assert_eq!(diag["t_reached"], 1.5);
}

#[test]
fn trajectory_csv_round_trips_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "log.json", LOGISTIC);
    let out = dir.path().join("log");
    assert_eq!(
        run(&["solve", "--spec", s(&spec), "--out", s(&out)])
            .status
            .code(),
        Some(0)
    );
    let p = ProblemSpec::from_json(LOGISTIC).unwrap().build().unwrap();
    let direct = solve(&p.phi, p.r, &p.model, &p.cfg).unwrap().trajectory;
    assert_eq!(
        read_grid(&dir.path().join("log.traj.csv")).values(),
        direct.values()
    );
}

#[test]
fn blowup_exits_with_escape() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "blowup.json",
        r#"{"rhs": {"expr": ["x1^2"]}, "dim": 1, "R": 1, "r": 0.5,
            "phi": {"kind": "const", "params": {"value": 2}}, "p": 1, "h": 0.001, "t_end": 2}"#,
    );
    let out = dir.path().join("b");
    let o = run(&["solve", "--spec", s(&spec), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.diag.json")).unwrap())
            .unwrap();
    assert_eq!(diag["escaped"], true);
    // x' = x^2, x(0) = 2 blows up at t = 1/2
    let reached = diag["t_reached"].as_f64().unwrap();
    assert!(reached > 0.3 && reached <= 0.5, "{reached}");
}

#[test]
fn malformed_json_exits_one_with_position() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "bad.json",
        "{\"rhs\": {\"builtin\": \"logistic\"},\n  \"dim\": ",
    );
    let o = run(&[
        "solve",
        "--spec",
        s(&spec),
        "--out",
        s(&dir.path().join("x")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn input_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "bad.json",
        &PURE_DELAY.replace("\"r\": 1.0", "\"r\": 2.0"),
    );
    let o = run(&[
        "solve",
        "--spec",
        s(&spec),
        "--out",
        s(&dir.path().join("x")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`r`"), "{}", stderr(&o));
    let missing = run(&[
        "solve",
        "--spec",
        s(&dir.path().join("nope.json")),
        "--out",
        "x",
    ]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn delay_sensitivity_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "pd.json", PURE_DELAY);
    let d = write(dir.path(), "dir.json", r#"{"chi": "zero", "xi": 1.0}"#);
    let out = dir.path().join("pd");
    let o = run(&["sens", "--spec", s(&spec), "--dir", s(&d), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dx = read_grid(&dir.path().join("pd.dx.csv"));
    for k in 0..=dx.segments() {
        let t = dx.node_time(k);
        let exact = if t > 1.0 { -(t - 1.0) } else { 0.0 };
        assert!((dx.node(k)[0] - exact).abs() < 1e-9, "t = {t}");
    }
}

#[test]
fn zero_direction_gives_zero_derivative() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "log.json", LOGISTIC);
    let d = write(dir.path(), "dir.json", r#"{"chi": "zero", "xi": 0.0}"#);
    let out = dir.path().join("z");
    assert_eq!(
        run(&["sens", "--spec", s(&spec), "--dir", s(&d), "--out", s(&out)])
            .status
            .code(),
        Some(0)
    );
    assert!(read_grid(&dir.path().join("z.dx.csv"))
        .values()
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn fd_table_has_one_decreasing_row_per_step() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "log.json", LOGISTIC);
    let d = write(
        dir.path(),
        "dir.json",
        r#"{"chi": {"kind": "kink", "params": {"center": -0.3}}, "xi": 0.0}"#,
    );
    let out = dir.path().join("fd");
    let o = run(&[
        "sens",
        "--spec",
        s(&spec),
        "--dir",
        s(&d),
        "--out",
        s(&out),
        "--fd",
        "--eps",
        "1e-1,1e-2,1e-3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_csv_rows(&dir.path().join("fd.fd_table.csv"));
    assert_eq!(rows.len(), 3);
    let errs: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn neumann_failure_exits_three_with_window() {
    let dir = TempDir::new().unwrap();
    let text = LOGISTIC.replace(
        "\"t_end\": 1.0",
        "\"t_end\": 1.0, \"overrides\": {\"neumann_max_iter\": 1}",
    );
    let spec = write(dir.path(), "log.json", &text);
    let d = write(
        dir.path(),
        "dir.json",
        r#"{"chi": {"kind": "const", "params": {"value": 1}}, "xi": 1}"#,
    );
    let o = run(&[
        "sens",
        "--spec",
        s(&spec),
        "--dir",
        s(&d),
        "--out",
        s(&dir.path().join("n")),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("window 0"), "{}", stderr(&o));
}

#[test]
fn sweep_of_zero_rhs_is_flat() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "zero.json", ZERO_RHS);
    let out = dir.path().join("sw");
    let o = run(&[
        "sweep",
        "--spec",
        s(&spec),
        "--out",
        s(&out),
        "--r-min",
        "0.1",
        "--r-max",
        "0.9",
        "--steps",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_csv_rows(&dir.path().join("sw.sweep.csv"));
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert_eq!(&r[3..5], &rows[0][3..5]);
        assert!(r[5..7].iter().all(|v| v.parse::<f64>().unwrap() == 0.0));
    }
}

#[test]
fn sweep_of_pure_delay_is_first_order_consistent() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "pd.json",
        &PURE_DELAY.replace("\"R\": 1.0", "\"R\": 1.5"),
    );
    let out = dir.path().join("sw");
    let o = run(&[
        "sweep",
        "--spec",
        s(&spec),
        "--out",
        s(&out),
        "--r-min",
        "0.5",
        "--r-max",
        "1.5",
        "--steps",
        "11",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sw.sweep.json")).unwrap())
            .unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 11);
    assert!(report["max_residual"].as_f64().unwrap() <= 1e-2);
    // x(2; r) = 1 + 2 + (2 - r)^2 / 2 for r >= 1
    let last = &report["rows"][10];
    assert!((last["x"][0].as_f64().unwrap() - 3.125).abs() < 1e-9);
    assert!((last["dxdr"][0].as_f64().unwrap() + 0.5).abs() < 1e-9);
}

#[test]
fn sweep_single_point_and_thread_independence() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "log.json", LOGISTIC);
    let one = dir.path().join("one");
    assert_eq!(
        run(&[
            "sweep",
            "--spec",
            s(&spec),
            "--out",
            s(&one),
            "--r-min",
            "0.3",
            "--r-max",
            "0.3",
            "--steps",
            "1"
        ])
        .status
        .code(),
        Some(0)
    );
    assert_eq!(read_csv_rows(&dir.path().join("one.sweep.csv")).len(), 1);

    let outputs: Vec<String> = ["1", "4"]
        .iter()
        .map(|threads| {
            let out = dir.path().join(format!("t{threads}"));
            let o = bin()
                .env("SOBDDE_THREADS", threads)
                .args([
                    "sweep",
                    "--spec",
                    s(&spec),
                    "--out",
                    s(&out),
                    "--r-min",
                    "0.2",
                    "--r-max",
                    "1.0",
                    "--steps",
                    "6",
                ])
                .output()
                .unwrap();
            assert_eq!(o.status.code(), Some(0));
            std::fs::read_to_string(dir.path().join(format!("t{threads}.sweep.csv"))).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn counterexample_csv_shows_the_jump() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ce");
    assert_eq!(
        run(&["counterexample", "--out", s(&out), "--t", "1.5"])
            .status
            .code(),
        Some(0)
    );
    let rows = read_csv_rows(&dir.path().join("ce.counterexample.csv"));
    let get = |c: f64| {
        let r = rows
            .iter()
            .find(|r| r[0].parse::<f64>().unwrap() == c)
            .unwrap();
        (r[3].parse::<f64>().unwrap(), r[4].parse::<f64>().unwrap())
    };
    let (l, r) = get(0.5);
    assert!(((l - r).abs() - 3.0).abs() < 1e-3);
    let (l, r) = get(0.2);
    assert!((l - r).abs() < 1e-4);

    let zero = dir.path().join("z");
    assert_eq!(
        run(&["counterexample", "--out", s(&zero), "--t", "0"])
            .status
            .code(),
        Some(0)
    );
    for r in read_csv_rows(&dir.path().join("z.counterexample.csv")) {
        assert_eq!(r[3].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn verify_writes_a_passing_report() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("report.json");
    let o = run(&["verify", "--seed", "3", "--json", s(&json)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["seed"], 3);
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}
