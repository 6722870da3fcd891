//! The two translation estimates in `L^p`, evaluated exactly on step
//! functions and on piecewise-linear functions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sobdde::analysis::{
    check_translation_bound, check_translation_diff, default_delta_ladder, PiecewiseConstant,
};
use sobdde::GridFunction;

fn main() -> sobdde::Result<()> {
    let g = PiecewiseConstant::indicator(0.0, 1.0)?;
    let r = check_translation_bound(&g, 0.0, 1.0, 0.0, 0.1, 1.0);
    println!("indicator: lhs {:.4} <= {:.4}", r.observed, r.bound);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let worst = (0..100)
        .map(|i| {
            let g = PiecewiseConstant::random(&mut rng, 8);
            let r = check_translation_bound(&g, -2.0, 2.0, -0.3, 0.4, [1.0, 2.0, 3.0][i % 3]);
            r.observed / r.bound
        })
        .fold(0.0, f64::max);
    println!("100 random step functions: largest lhs / bound = {worst:.4}");

    let kink = GridFunction::from_fn(-1.0, 1.2, 22, 1, |t, o| o[0] = t.abs())?;
    let smooth = GridFunction::from_fn(-1.0, 1.2, 2200, 1, |t, o| o[0] = (3.0 * t).sin())?;
    for (name, x) in [("|t|", kink), ("sin 3t", smooth)] {
        let r = check_translation_diff(&x, -1.0, 1.0, 2.0, &default_delta_ladder())?;
        println!("{name}: remainder ratios {}", r.details["ratios"]);
    }
    Ok(())
}
