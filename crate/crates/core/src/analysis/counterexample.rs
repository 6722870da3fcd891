//! A time-dependent delay for which the solution is not differentiable in
//! the delay parameter.
//!
//! With `f(u, v) = v` and `r_c(t) = t + c` on `[0, T]`, the delayed argument
//! `t - r_c(t) = -c` is frozen, so `x(t) = phi(0) + t phi(-c)`. Its derivative
//! in `c` inherits every kink of `phi`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hist_space::GridFunction;

/// Step of the one-sided difference quotients in `c`.
pub const COUNTEREXAMPLE_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub value: Vec<f64>,
    pub left_dq: Vec<f64>,
    pub right_dq: Vec<f64>,
}

/// Closed-form value at `(c, t)` and one-sided difference quotients in `c`.
pub fn counterexample_time_dependent(phi: &GridFunction, c: f64, t: f64) -> Result<Counterexample> {
    let lag = -phi.a();
    let h = COUNTEREXAMPLE_STEP;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::DomainViolation(format!(
            "time must be non-negative, got {t}"
        )));
    }
    if !(c - h >= 0.0 && c + h <= lag) {
        return Err(Error::DomainViolation(format!(
            "c = {c} leaves no room for quotients of step {h} inside [0, {lag}]"
        )));
    }
    let x0 = phi.evaluate(0.0)?;
    let value = |c: f64| -> Result<Vec<f64>> {
        let delayed = phi.evaluate(-c)?;
        Ok(x0.iter().zip(delayed).map(|(a, b)| a + t * b).collect())
    };
    let mid = value(c)?;
    let below = value(c - h)?;
    let above = value(c + h)?;
    Ok(Counterexample {
        left_dq: mid.iter().zip(&below).map(|(m, b)| (m - b) / h).collect(),
        right_dq: above.iter().zip(&mid).map(|(a, m)| (a - m) / h).collect(),
        value: mid,
    })
}

/// `|theta + 0.5|` on `[-1, 0]`, the kinked history used by the demos.
pub fn kinked_history(segments: usize) -> Result<GridFunction> {
    GridFunction::from_fn(-1.0, 0.0, segments, 1, |t, o| o[0] = (t + 0.5).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_history_is_smooth() {
        let phi = GridFunction::constant(-1.0, 0.0, 10, &[1.0]).unwrap();
        let ce = counterexample_time_dependent(&phi, 0.3, 0.7).unwrap();
        assert!((ce.value[0] - 1.7).abs() < 1e-15);
        assert_eq!(ce.left_dq, vec![0.0]);
        assert_eq!(ce.right_dq, vec![0.0]);
    }

    #[test]
    fn kink_produces_a_jump() {
        let phi = kinked_history(1000).unwrap();
        let ce = counterexample_time_dependent(&phi, 0.5, 1.0).unwrap();
        assert!((ce.left_dq[0] + 1.0).abs() < 1e-6);
        assert!((ce.right_dq[0] - 1.0).abs() < 1e-6);
        let smooth = counterexample_time_dependent(&phi, 0.2, 1.0).unwrap();
        assert!((smooth.left_dq[0] - smooth.right_dq[0]).abs() < 1e-4);
    }

    #[test]
    fn smooth_history_matches_derivative() {
        // d/dc [t phi(-c)] = -t phi'(-c) = 2 t c for phi = theta^2
        let phi = GridFunction::from_fn(-1.0, 0.0, 100_000, 1, |t, o| o[0] = t * t).unwrap();
        let ce = counterexample_time_dependent(&phi, 0.3, 0.5).unwrap();
        assert!((ce.left_dq[0] - 0.3).abs() < 1e-4);
        assert!((ce.right_dq[0] - 0.3).abs() < 1e-4);
    }

    #[test]
    fn zero_time_gives_zero_quotients() {
        let phi = kinked_history(100).unwrap();
        let ce = counterexample_time_dependent(&phi, 0.5, 0.0).unwrap();
        assert_eq!(ce.left_dq, vec![0.0]);
        assert_eq!(ce.right_dq, vec![0.0]);
    }

    #[test]
    fn rejects_parameters_outside_the_history() {
        let phi = kinked_history(100).unwrap();
        assert!(matches!(
            counterexample_time_dependent(&phi, 1.0, 1.0),
            Err(Error::DomainViolation(_))
        ));
        assert!(counterexample_time_dependent(&phi, 0.5, -1.0).is_err());
    }
}
