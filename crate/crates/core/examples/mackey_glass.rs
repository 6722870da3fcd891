//! Mackey-Glass over a long horizon, printing how the contraction windows
//! adapt to the local Lipschitz constant.

use sobdde::rhs::Builtin;
use sobdde::{solve, GridFunction, PNorm, RhsModel, SolveConfig, VecNorm};

fn main() -> sobdde::Result<()> {
    let model = RhsModel::builtin(Builtin::MackeyGlass {
        beta: 2.0,
        gamma: 1.0,
        n: 10.0,
        dim: 1,
    });
    let phi = GridFunction::constant(-2.0, 0.0, 2000, &[0.5])?;
    let cfg = SolveConfig::new(1e-3, 30.0).with_p_norm(PNorm::new(1.0, VecNorm::L2)?);
    let res = solve(&phi, 2.0, &model, &cfg)?;
    println!(
        "reached t = {} in {} windows",
        res.t_reached,
        res.windows.len()
    );
    let lengths: Vec<f64> = res.windows.iter().map(|w| w.length).collect();
    let shortest = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let longest = lengths.iter().copied().fold(0.0, f64::max);
    println!("window lengths between {shortest} and {longest}");
    for t in (0..=30).step_by(5) {
        println!("x({t:2}) = {:.6}", res.trajectory.evaluate(t as f64)?[0]);
    }
    Ok(())
}
