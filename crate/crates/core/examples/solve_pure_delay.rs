//! Solves `x' = x(t - 1)` with `x = 1` on `[-1, 0]` and compares the nodes
//! with the closed-form solution `1 + t`, then `1 + t + (t - 1)^2 / 2`.

use sobdde::analysis::linear_oracle;
use sobdde::rhs::Builtin;
use sobdde::{solve, GridFunction, RhsModel, SolveConfig};

fn main() -> sobdde::Result<()> {
    let phi = GridFunction::constant(-1.0, 0.0, 1000, &[1.0])?;
    let model = RhsModel::builtin(Builtin::PureDelay { a: 1.0, dim: 1 });
    let res = solve(&phi, 1.0, &model, &SolveConfig::new(1e-3, 2.0))?;

    let traj = &res.trajectory;
    let err = (0..=traj.segments())
        .map(|k| (traj.node(k)[0] - linear_oracle(traj.node_time(k))).abs())
        .fold(0.0, f64::max);
    println!("windows: {}", res.windows.len());
    println!("x(2) = {:.15}", traj.evaluate(2.0)?[0]);
    println!("max nodal error against the closed form: {err:.3e}");
    let worst = res
        .windows
        .iter()
        .map(|w| w.contraction_bound)
        .fold(0.0, f64::max);
    println!("largest certified contraction constant: {worst:.4}");
    Ok(())
}
