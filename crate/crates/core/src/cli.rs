//! Subcommands of the `sobdde` binary. Every command maps its outcome to an
//! exit code: 0 success, 1 input or I/O error, 2 escape before `t_end`,
//! 3 non-convergent Picard or Neumann iteration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    counterexample_time_dependent, kinked_history, run_verify_suite, VerifyConfig,
    COUNTEREXAMPLE_STEP,
};
use crate::error::{Error, Result};
use crate::problem::{DirectionSpec, Problem, ProblemSpec};
use crate::sensitivity::{fd_check, propagate_sensitivity, SensitivityDirection};
use crate::solver::{solve, SolveResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_ESCAPE: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "sobdde",
    version,
    about = "Delay differential equations with history and delay sensitivities"
)]
pub struct Cli {
    /// Worker threads for parallel commands.
    #[arg(long, global = true, env = "SOBDDE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem; writes <out>.traj.csv and <out>.diag.json.
    Solve(SolveArgs),
    /// Derivative of the solution along a direction; writes <out>.dx.csv.
    Sens(SensArgs),
    /// Run the built-in check suite.
    Verify(VerifyArgs),
    /// Solve over a grid of delays; writes <out>.sweep.csv and <out>.sweep.json.
    Sweep(SweepArgs),
    /// Difference quotients of the state-dependent-delay example; writes <out>.counterexample.csv.
    Counterexample(CounterexampleArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SensArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Direction JSON `{"chi": ..., "xi": ...}`.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also compare against finite differences; writes <out>.fd_table.csv.
    #[arg(long)]
    pub fd: bool,
    /// Comma-separated finite-difference steps.
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
    pub eps: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub r_min: f64,
    #[arg(long)]
    pub r_max: f64,
    /// Number of delays, endpoints included.
    #[arg(long)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Time at which the solution is evaluated.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Number of intervals in the c-grid on [0, 1].
    #[arg(long, default_value_t = 20)]
    pub points: usize,
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a.spec, &a.out),
        Command::Sens(a) => cmd_sens(&a.spec, &a.dir, &a.out, a.fd, &a.eps),
        Command::Verify(a) => cmd_verify(a.seed, a.json.as_deref()),
        Command::Sweep(a) => cmd_sweep(&a.spec, a.r_min, a.r_max, a.steps, &a.out),
        Command::Counterexample(a) => cmd_counterexample(&a.out, a.t, a.points),
    }
}

/// Exit code for an error, with the message on stderr.
fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    match e {
        Error::EscapeBeforeT { .. } => EXIT_ESCAPE,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_INPUT,
    }
}

fn finish(r: Result<i32>) -> i32 {
    r.unwrap_or_else(|e| fail(&e))
}

/// `<prefix><suffix>`, keeping any directories in the prefix.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn load_problem(spec: &Path) -> Result<Problem> {
    ProblemSpec::load(spec)?.build()
}

pub fn cmd_solve(spec: &Path, out: &Path) -> i32 {
    finish((|| {
        let p = load_problem(spec)?;
        let res = solve(&p.phi, p.r, &p.model, &p.cfg)?;
        res.trajectory
            .write_csv(File::create(with_suffix(out, ".traj.csv"))?)?;
        write_json(&with_suffix(out, ".diag.json"), &res)?;
        if res.escaped {
            eprintln!(
                "escaped at t = {} before t_end = {}: {:?}",
                res.t_reached, res.t_end, res.escape
            );
            return Ok(EXIT_ESCAPE);
        }
        Ok(EXIT_OK)
    })())
}

#[derive(Serialize)]
struct SensDiag<'a> {
    xi: f64,
    solve: &'a SolveResult,
    windows: &'a [crate::sensitivity::WindowSensitivity],
}

fn solve_to_end(p: &Problem) -> Result<Option<SolveResult>> {
    let res = solve(&p.phi, p.r, &p.model, &p.cfg)?;
    if res.escaped {
        eprintln!(
            "escaped at t = {} before t_end = {}: {:?}",
            res.t_reached, res.t_end, res.escape
        );
        return Ok(None);
    }
    Ok(Some(res))
}

pub fn cmd_sens(spec: &Path, dir: &Path, out: &Path, fd: bool, eps: &[f64]) -> i32 {
    finish((|| {
        let p = load_problem(spec)?;
        let direction = DirectionSpec::load(dir)?.build(&p.phi)?;
        let Some(res) = solve_to_end(&p)? else {
            return Ok(EXIT_ESCAPE);
        };
        let prop = propagate_sensitivity(&res, &p.phi, p.r, &p.model, &direction, &p.cfg)?;
        prop.dx
            .write_csv(File::create(with_suffix(out, ".dx.csv"))?)?;
        write_json(
            &with_suffix(out, ".sens.json"),
            &SensDiag {
                xi: direction.xi,
                solve: &res,
                windows: &prop.windows,
            },
        )?;
        if fd {
            let table = fd_check(&p.phi, p.r, &p.model, &direction, &p.cfg, eps)?;
            let mut w = csv::Writer::from_path(with_suffix(out, ".fd_table.csv"))?;
            w.write_record(["eps", "err", "scheme"])?;
            for row in &table.rows {
                w.write_record([
                    row.eps.to_string(),
                    row.err.to_string(),
                    format!("{:?}", row.scheme).to_lowercase(),
                ])?;
            }
            w.flush()?;
            for row in &table.rows {
                println!("eps {:.3e}  err {:.6e}", row.eps, row.err);
            }
        }
        Ok(EXIT_OK)
    })())
}

pub fn cmd_verify(seed: u64, json: Option<&Path>) -> i32 {
    finish((|| {
        let report = run_verify_suite(&VerifyConfig {
            seed,
            ..Default::default()
        });
        for c in &report.checks {
            println!(
                "{:<4} {:<28} observed {:.3e}  bound {:.3e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.observed,
                c.bound
            );
        }
        println!(
            "verify: {}",
            if report.passed {
                "all checks passed"
            } else {
                "FAILED"
            }
        );
        if let Some(path) = json {
            write_json(path, &report)?;
        }
        Ok(if report.passed { EXIT_OK } else { EXIT_INPUT })
    })())
}

/// One delay of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub escaped: bool,
    pub t_reached: f64,
    /// `x(t_end)`; empty on escape.
    pub x: Vec<f64>,
    /// `dx/dr (t_end)`; empty on escape or failed sensitivity.
    pub dxdr: Vec<f64>,
    pub error: Option<String>,
}

/// First-order consistency of a pair of adjacent rows `r` and `r + d`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepConsistency {
    pub r: f64,
    pub step: f64,
    /// `max_i |x_i(r + d) - x_i(r) - d dx_i/dr(r)|`, of order `d^2 |x''| / 2`.
    pub taylor_residual: f64,
    /// `max_i |x_i(r + d) - x_i(r) - d (dx_i/dr(r) + dx_i/dr(r + d)) / 2|`,
    /// of order `d^3`.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub consistency: Vec<SweepConsistency>,
    pub max_residual: Option<f64>,
}

fn sweep_row(p: &Problem, r: f64) -> SweepRow {
    let mut row = SweepRow {
        r,
        escaped: false,
        t_reached: 0.0,
        x: vec![],
        dxdr: vec![],
        error: None,
    };
    let res = match solve(&p.phi, r, &p.model, &p.cfg) {
        Ok(res) => res,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.escaped = res.escaped;
    row.t_reached = res.t_reached;
    if res.escaped {
        return row;
    }
    let end = res.trajectory.segments();
    row.x = res.trajectory.node(end).to_vec();
    match propagate_sensitivity(
        &res,
        &p.phi,
        r,
        &p.model,
        &SensitivityDirection::delay(&p.phi, 1.0),
        &p.cfg,
    ) {
        Ok(prop) => row.dxdr = prop.dx.node(prop.dx.segments()).to_vec(),
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Parallel solves and delay derivatives over an evenly spaced grid of
/// delays; the result does not depend on the thread count.
pub fn sweep(p: &Problem, r_min: f64, r_max: f64, steps: usize) -> Result<SweepReport> {
    let lag = -p.phi.a();
    if steps == 0 {
        return Err(Error::InvalidSpec("steps must be at least 1".into()));
    }
    if !(0.0 <= r_min && r_min <= r_max && r_max <= lag) {
        return Err(Error::InvalidSpec(format!(
            "delay range [{r_min}, {r_max}] is not inside [0, R = {lag}]"
        )));
    }
    let rs: Vec<f64> = if steps == 1 {
        vec![r_min]
    } else {
        (0..steps)
            .map(|k| r_min + (r_max - r_min) * k as f64 / (steps - 1) as f64)
            .collect()
    };
    let rows: Vec<SweepRow> = rs.par_iter().map(|&r| sweep_row(p, r)).collect();
    let consistency: Vec<SweepConsistency> = rows
        .windows(2)
        .filter(|w| !w[0].dxdr.is_empty() && !w[1].dxdr.is_empty())
        .map(|w| {
            let step = w[1].r - w[0].r;
            let max_over = |f: &dyn Fn(usize) -> f64| (0..w[0].x.len()).map(f).fold(0.0, f64::max);
            let dx = |i: usize| w[1].x[i] - w[0].x[i];
            SweepConsistency {
                r: w[0].r,
                step,
                taylor_residual: max_over(&|i| (dx(i) - step * w[0].dxdr[i]).abs()),
                residual: max_over(&|i| (dx(i) - 0.5 * step * (w[0].dxdr[i] + w[1].dxdr[i])).abs()),
            }
        })
        .collect();
    let max_residual = consistency.iter().map(|c| c.residual).reduce(f64::max);
    Ok(SweepReport {
        rows,
        consistency,
        max_residual,
    })
}

pub fn cmd_sweep(spec: &Path, r_min: f64, r_max: f64, steps: usize, out: &Path) -> i32 {
    finish((|| {
        let p = load_problem(spec)?;
        let report = sweep(&p, r_min, r_max, steps)?;
        let dim = p.phi.dim();
        let mut w = csv::Writer::from_path(with_suffix(out, ".sweep.csv"))?;
        let mut header = vec!["r".to_string(), "escaped".into(), "t_reached".into()];
        header.extend((1..=dim).map(|i| format!("x_{i}")));
        header.extend((1..=dim).map(|i| format!("dxdr_{i}")));
        w.write_record(&header)?;
        for row in &report.rows {
            let mut rec = vec![
                row.r.to_string(),
                row.escaped.to_string(),
                row.t_reached.to_string(),
            ];
            let cell = |v: &[f64], i: usize| v.get(i).map_or(String::new(), |x| x.to_string());
            rec.extend((0..dim).map(|i| cell(&row.x, i)));
            rec.extend((0..dim).map(|i| cell(&row.dxdr, i)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        write_json(&with_suffix(out, ".sweep.json"), &report)?;
        for row in &report.rows {
            if let Some(e) = &row.error {
                eprintln!("r = {}: {e}", row.r);
            }
        }
        if let Some(m) = report.max_residual {
            println!("max trapezoid residual between adjacent delays: {m:.3e}");
        }
        let computed = report.rows.iter().all(|r| r.error.is_none());
        Ok(if computed { EXIT_OK } else { EXIT_INPUT })
    })())
}

/// Rows `(c, t, value, left_dq, right_dq)` over `c = k / points`, skipping the
/// endpoints where one-sided quotients leave `[0, 1]`.
pub fn counterexample_rows(t: f64, points: usize) -> Result<Vec<[f64; 5]>> {
    if points < 2 {
        return Err(Error::InvalidSpec("points must be at least 2".into()));
    }
    let phi = kinked_history(1000)?;
    (1..points)
        .map(|k| k as f64 / points as f64)
        .filter(|&c| c >= COUNTEREXAMPLE_STEP && c <= 1.0 - COUNTEREXAMPLE_STEP)
        .map(|c| {
            let ce = counterexample_time_dependent(&phi, c, t)?;
            Ok([c, t, ce.value[0], ce.left_dq[0], ce.right_dq[0]])
        })
        .collect()
}

pub fn cmd_counterexample(out: &Path, t: f64, points: usize) -> i32 {
    finish((|| {
        let rows = counterexample_rows(t, points)?;
        let mut w = csv::Writer::from_path(with_suffix(out, ".counterexample.csv"))?;
        w.write_record(["c", "t", "value", "left_dq", "right_dq"])?;
        for row in &rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(EXIT_OK)
    })())
}

/// Builds the global thread pool; a second call is a no-op.
pub fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes_append() {
        assert_eq!(
            with_suffix(Path::new("out/run"), ".traj.csv"),
            PathBuf::from("out/run.traj.csv")
        );
    }

    #[test]
    fn counterexample_grid() {
        let rows = counterexample_rows(1.0, 20).unwrap();
        assert_eq!(rows.len(), 19);
        let at_kink = rows.iter().find(|r| r[0] == 0.5).unwrap();
        assert!(((at_kink[3] - at_kink[4]).abs() - 2.0).abs() < 1e-3);
        let zero = counterexample_rows(0.0, 20).unwrap();
        assert!(zero.iter().all(|r| r[3] == 0.0 && r[4] == 0.0));
    }

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "sobdde",
            "sens",
            "--spec",
            "a",
            "--dir",
            "b",
            "--out",
            "c",
            "--fd",
            "--eps",
            "1e-1,1e-2",
        ])
        .unwrap();
        match cli.command {
            Command::Sens(a) => {
                assert!(a.fd);
                assert_eq!(a.eps, vec![1e-1, 1e-2]);
            }
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn sweep_rejects_bad_ranges() {
        let spec = ProblemSpec::from_json(
            r#"{"rhs": {"builtin": "constant", "params": {"value": 0}}, "dim": 1, "R": 1, "r": 0.5,
                "phi": {"kind": "const", "params": {"value": 1}}, "h": 0.1, "t_end": 1}"#,
        )
        .unwrap();
        let p = spec.build().unwrap();
        assert!(sweep(&p, 0.5, 1.5, 3).is_err());
        assert!(sweep(&p, 0.5, 0.6, 0).is_err());
        let one = sweep(&p, 0.5, 0.5, 1).unwrap();
        assert_eq!(one.rows.len(), 1);
        assert!(one.consistency.is_empty());
    }
}
