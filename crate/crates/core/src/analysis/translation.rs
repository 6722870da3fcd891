//! Exact evaluation of the two translation estimates in `L^p`: the
//! double-integral bound and the first-order remainder of a shift.

use rand::Rng;
use serde_json::json;

use super::CheckReport;
use crate::error::{Error, Result};
use crate::hist_space::GridFunction;

/// Step function on `R`: `values[j]` on `[breaks[j], breaks[j + 1])`, zero
/// outside `[breaks[0], breaks[last])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() + 1 {
            return Err(Error::InvalidGrid(format!(
                "{} breaks cannot carry {} pieces",
                breaks.len(),
                values.len()
            )));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1]))
            || !breaks.iter().chain(&values).all(|v| v.is_finite())
        {
            return Err(Error::InvalidGrid(
                "breaks must be finite and strictly increasing".into(),
            ));
        }
        Ok(PiecewiseConstant { breaks, values })
    }

    pub fn zero() -> Self {
        PiecewiseConstant {
            breaks: vec![0.0],
            values: vec![],
        }
    }

    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![1.0])
    }

    /// Random step function with `pieces` pieces inside `[-2, 2]`.
    pub fn random<R: Rng>(rng: &mut R, pieces: usize) -> Self {
        let mut breaks: Vec<f64> = (0..=pieces).map(|_| rng.gen_range(-2.0..2.0)).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let values = (1..breaks.len())
            .map(|_| rng.gen_range(-3.0..3.0))
            .collect();
        PiecewiseConstant { breaks, values }
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.values
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(v, w)| (w[1] - w[0]) * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    /// `int_{-inf}^x |g|`, continuous and piecewise linear.
    fn abs_antiderivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (v, w) in self.values.iter().zip(self.breaks.windows(2)) {
            if x <= w[0] {
                break;
            }
            acc += v.abs() * (x.min(w[1]) - w[0]);
        }
        acc
    }
}

/// `int_0^len |e(u)|^p du` for `e` linear from `e0` to `e1`.
fn abs_power_integral(e0: f64, e1: f64, len: f64, p: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let scale = e0.abs().max(e1.abs());
    if scale == 0.0 {
        return 0.0;
    }
    if (e1 - e0).abs() <= 1e-8 * scale {
        return len * (0.5 * (e0 + e1)).abs().powf(p);
    }
    // w |w|^p is an antiderivative of (p + 1) |w|^p, across sign changes too
    let anti = |w: f64| w * w.abs().powf(p);
    len * (anti(e1) - anti(e0)) / ((p + 1.0) * (e1 - e0))
}

/// Checks `(int_a^b |int_s^t |g(x + y)| dy|^p dx)^{1/p} <= ||g||_p |t - s|`
/// with both sides evaluated in closed form.
pub fn check_translation_bound(
    g: &PiecewiseConstant,
    a: f64,
    b: f64,
    s: f64,
    t: f64,
    p: f64,
) -> CheckReport {
    let (lo, hi) = (s.min(t), s.max(t));
    let inner = |x: f64| g.abs_antiderivative(x + hi) - g.abs_antiderivative(x + lo);
    let mut cuts = vec![a, b];
    for &k in &g.breaks {
        for c in [k - lo, k - hi] {
            if c > a && c < b {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let lhs = cuts
        .windows(2)
        .map(|w| abs_power_integral(inner(w[0]), inner(w[1]), w[1] - w[0], p))
        .sum::<f64>()
        .powf(1.0 / p);
    let bound = g.lp_norm(p) * (t - s).abs();
    CheckReport::new("translation_bound", lhs, bound, 1)
        .with_tolerance(1e-12)
        .with_details(json!({"a": a, "b": b, "s": s, "t": t, "p": p, "pieces": g.values.len()}))
}

/// `(int_a^b |x(tau + delta) - x(tau) - delta x'(tau)|^p dtau)^{1/p} / delta`
/// for a scalar piecewise-linear `x`, exact up to rounding.
pub fn translation_remainder_ratio(
    x: &GridFunction,
    a: f64,
    b: f64,
    p: f64,
    delta: f64,
) -> Result<f64> {
    if x.dim() != 1 {
        return Err(Error::InvalidGrid(format!(
            "exact remainder evaluation needs a scalar function, got dimension {}",
            x.dim()
        )));
    }
    if a < x.a() || b + delta > x.b() + 1e-12 * (x.b() - x.a()) {
        return Err(Error::OutOfDomain {
            t: if a < x.a() { a } else { b + delta },
            a: x.a(),
            b: x.b(),
        });
    }
    let mut cuts = vec![a, b];
    for k in 0..=x.segments() {
        for c in [x.node_time(k), x.node_time(k) - delta] {
            if c > a && c < b {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        // the slope is constant on the open piece, so take it at the midpoint
        let slope = x.derivative_at(mid)?[0];
        let e = |tau: f64| -> Result<f64> {
            let end = (tau + delta).min(x.b());
            Ok(x.evaluate(end)?[0] - x.evaluate(tau)?[0] - delta * slope)
        };
        total += abs_power_integral(e(w[0])?, e(w[1])?, w[1] - w[0], p);
    }
    Ok(total.powf(1.0 / p) / delta)
}

/// Ratio ladder for the differentiability of translation. Passes when the
/// ratios never increase and the last is at most a quarter of the first
/// (or below [`RATIO_FLOOR`]).
pub fn check_translation_diff(
    x: &GridFunction,
    a: f64,
    b: f64,
    p: f64,
    deltas: &[f64],
) -> Result<CheckReport> {
    if deltas.is_empty()
        || deltas.windows(2).any(|w| !(w[1] < w[0]))
        || !(deltas[deltas.len() - 1] > 0.0)
    {
        return Err(Error::DomainViolation(
            "deltas must be positive and decreasing".into(),
        ));
    }
    let ratios = deltas
        .iter()
        .map(|&d| translation_remainder_ratio(x, a, b, p, d))
        .collect::<Result<Vec<_>>>()?;
    // relative slack for rounding in ratios that are already at noise level
    let monotone = ratios
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-9) + RATIO_FLOOR);
    let first = ratios[0];
    let last = ratios[ratios.len() - 1];
    // ratios of an affine x are pure rounding, so the bound has a floor
    Ok(CheckReport::new(
        "translation_diff",
        last,
        (first / 4.0).max(RATIO_FLOOR),
        deltas.len(),
    )
    .with_tolerance(0.0)
    .with_flag(monotone)
    .with_details(json!({"deltas": deltas, "ratios": ratios, "p": p})))
}

/// Ratios below this are rounding noise.
pub const RATIO_FLOOR: f64 = 1e-12;

/// `0.1 * 2^{-k}` for `k = 0..=5`.
pub fn default_delta_ladder() -> Vec<f64> {
    (0..6).map(|k| 0.1 * 0.5f64.powi(k)).collect()
}
