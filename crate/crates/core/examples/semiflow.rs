//! The solution map as a semiflow on histories: composition of steps, and
//! escape when the solution blows up.

use sobdde::solver::semiflow_step;
use sobdde::{Error, GridFunction, PNorm, RhsModel, SemiflowState, SolveConfig, VecNorm};

fn main() -> sobdde::Result<()> {
    let model = RhsModel::from_exprs(&["-x1 + 1.5*sin(y1)"])?;
    let phi = GridFunction::from_fn(-1.0, 0.0, 1000, 1, |t, o| {
        o[0] = 0.5 * (3.0 * t).sin() + 0.2
    })?;
    let cfg = SolveConfig::new(1e-3, 0.0);
    let start = SemiflowState::new(phi, 1.0);

    let whole = semiflow_step(&start, 1.3, &model, &cfg)?;
    let split = semiflow_step(
        &semiflow_step(&start, 0.7, &model, &cfg)?,
        0.6,
        &model,
        &cfg,
    )?;
    let defect = GridFunction::combine(1.0, &whole.history, -1.0, &split.history)?
        .w1p_norm(&PNorm::default());
    println!("||Phi(1.3) - Phi(0.6) Phi(0.7)||_W = {defect:.3e}");

    // x' = x^2 from x = 2 blows up at t = 1/2
    let blowup = RhsModel::from_exprs(&["x1^2"])?;
    let two = SemiflowState::new(GridFunction::constant(-1.0, 0.0, 1000, &[2.0])?, 0.5);
    let cfg = SolveConfig::new(1e-3, 0.0).with_p_norm(PNorm::new(1.0, VecNorm::L2)?);
    match semiflow_step(&two, 2.0, &blowup, &cfg) {
        Err(Error::EscapeBeforeT {
            reached, partial, ..
        }) => {
            println!(
                "escaped at t = {reached}, last value {:.3e}",
                partial.history.evaluate(0.0)?[0]
            );
        }
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
