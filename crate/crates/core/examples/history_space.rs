//! Piecewise-linear histories: `W^{1,p}` norms, the norm equivalence with
//! `C + L^p`, static prolongation and the history map `t -> x_t`.

use sobdde::{GridFunction, PNorm, VecNorm};

fn main() -> sobdde::Result<()> {
    let x = GridFunction::from_fn(-1.0, 2.0, 300, 2, |t, row| {
        row[0] = (2.0 * t).sin();
        row[1] = (t - 0.5).abs();
    })?;
    for p in [1.0, 1.5, 2.0, 3.0] {
        let nrm = PNorm::new(p, VecNorm::L2)?;
        let (w, mid, upper) = x.norm_equivalence_sides(&nrm);
        println!("p = {p}: ||x||_W = {w:.6} <= ||x||_C + ||x'||_p = {mid:.6} <= {upper:.6}");
    }

    let nrm = PNorm::default();
    let phi = x.restrict(-1.0, 0.0)?;
    let bar = phi.static_prolongation(1.5)?;
    println!(
        "prolongation keeps the norm: {:.15} vs {:.15}",
        phi.w1p_norm(&nrm),
        bar.w1p_norm(&nrm)
    );

    let x_t = x.history_at(1.25)?;
    println!(
        "x_1.25 lives on [{}, {}], x_1.25(0) = {:?}",
        x_t.a(),
        x_t.b(),
        x_t.evaluate(0.0)?
    );

    let mut buf = Vec::new();
    phi.write_csv(&mut buf)?;
    let back = GridFunction::read_csv(buf.as_slice())?;
    println!("CSV round trip exact: {}", back == phi);
    Ok(())
}
