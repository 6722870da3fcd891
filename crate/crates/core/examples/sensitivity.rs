//! Derivatives of the solution of `x' = x(t - 1)`, `x = 1` on `[-1, 0]`, with
//! respect to the history and to the delay, against their closed forms.

use sobdde::rhs::Builtin;
use sobdde::{
    propagate_sensitivity, solve, GridFunction, RhsModel, SensitivityDirection, SolveConfig,
};

fn main() -> sobdde::Result<()> {
    let phi = GridFunction::constant(-1.0, 0.0, 1000, &[1.0])?;
    let model = RhsModel::builtin(Builtin::PureDelay { a: 1.0, dim: 1 });
    let cfg = SolveConfig::new(1e-3, 2.0);
    let res = solve(&phi, 1.0, &model, &cfg)?;

    let delay = propagate_sensitivity(
        &res,
        &phi,
        1.0,
        &model,
        &SensitivityDirection::delay(&phi, 1.0),
        &cfg,
    )?;
    let history = propagate_sensitivity(
        &res,
        &phi,
        1.0,
        &model,
        &SensitivityDirection::history(phi.clone()),
        &cfg,
    )?;
    println!("   t   dx/dr   -(t-1)+   dx/dphi[1]");
    for t in [0.0, 0.5, 1.0, 1.5, 2.0] {
        println!(
            "{t:4.1} {:8.4} {:8.4} {:10.4}",
            delay.dx.evaluate(t)?[0],
            (1.0 - t).min(0.0),
            history.dx.evaluate(t)?[0],
        );
    }
    let worst = delay
        .windows
        .iter()
        .map(|w| w.ratio - w.picard_ratio)
        .fold(f64::MIN, f64::max);
    println!("Neumann ratio minus Picard ratio, worst window: {worst:.2e}");
    Ok(())
}
