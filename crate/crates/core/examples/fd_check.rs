//! Finite-difference tables for history and delay directions on the delayed
//! logistic equation.

use sobdde::rhs::Builtin;
use sobdde::{fd_check, GridFunction, PNorm, RhsModel, SensitivityDirection, SolveConfig, VecNorm};

fn main() -> sobdde::Result<()> {
    let phi = GridFunction::from_fn(-1.0, 0.0, 1000, 1, |t, o| o[0] = 0.5 + 0.1 * t)?;
    let model = RhsModel::builtin(Builtin::Logistic { dim: 1 });
    let cfg = SolveConfig::new(1e-3, 1.0).with_p_norm(PNorm::new(1.0, VecNorm::L2)?);
    let chi = GridFunction::from_fn(-1.0, 0.0, 1000, 1, |t, o| o[0] = (2.0 * t).cos())?;
    let dirs = [
        ("history", SensitivityDirection::history(chi)),
        ("delay", SensitivityDirection::delay(&phi, 1.0)),
    ];
    for (name, dir) in dirs {
        let table = fd_check(&phi, 0.5, &model, &dir, &cfg, &[1e-1, 1e-2, 1e-3])?;
        println!("{name} direction on [0, {}]", table.horizon);
        for row in &table.rows {
            println!(
                "  eps {:.0e}  err {:.3e}  {:?}",
                row.eps, row.err, row.scheme
            );
        }
        println!("  observed orders {:?}", table.observed_orders());
    }
    Ok(())
}
