//! Parallel sweep over delays with the first-order consistency between
//! neighbouring delays.

use sobdde::cli::sweep;
use sobdde::problem::ProblemSpec;

fn main() -> sobdde::Result<()> {
    let spec = ProblemSpec::load(
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/examples/specs/sweep_pure_delay.json"
        )
        .as_ref(),
    )?;
    let report = sweep(&spec.build()?, 0.5, 1.5, 11)?;
    println!("    r    x(2)     dx/dr(2)");
    for row in &report.rows {
        println!("{:5.2} {:8.5} {:9.5}", row.r, row.x[0], row.dxdr[0]);
    }
    for c in &report.consistency {
        println!(
            "r = {:.1}: one-sided residual {:.2e}, trapezoid residual {:.2e}",
            c.r, c.taylor_residual, c.residual
        );
    }
    Ok(())
}
