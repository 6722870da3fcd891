//! User-defined right-hand sides from expressions: evaluation, finite
//! difference Jacobians and the sampled Lipschitz estimate that sizes
//! contraction windows.

use sobdde::rhs::{parse_expr, Arg, BoxDomain};
use sobdde::{RhsModel, VecNorm};

fn main() -> sobdde::Result<()> {
    // a damped delayed oscillator in two components
    let model = RhsModel::from_exprs(&["x2", "-0.5*x2 - sin(y1)"])?;
    let (u, v) = ([0.3, -0.1], [1.0, 0.2]);
    println!("f(u, v) = {:?}", model.eval(&u, &v)?);
    println!("D1 f = {:?}", model.jacobian(&u, &v, Arg::Current)?);
    println!("D2 f = {:?}", model.jacobian(&u, &v, Arg::Delayed)?);

    let probe = model.probe(&BoxDomain::symmetric(2, 2.0), 256, VecNorm::L2)?;
    println!(
        "on the box of radius 2: L = {:.4}, sup |f| = {:.4}",
        probe.lipschitz, probe.sup
    );

    let ast = parse_expr("-(x1 + 2)^2 * exp(-y1) / 3", 1)?;
    let printed = ast.to_string();
    println!("pretty-printed: {printed}");
    println!(
        "reparses to the same tree: {}",
        parse_expr(&printed, 1)? == ast
    );
    Ok(())
}
