use serde::Serialize;

use super::frame::steps_of;
use super::{solve, SolveConfig};
use crate::error::{Error, Result};
use crate::hist_space::GridFunction;
use crate::rhs::RhsModel;

/// A point `(history, r)` of the semiflow together with the time elapsed to
/// reach it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiflowState {
    pub history: GridFunction,
    pub r: f64,
    pub elapsed: f64,
    pub escaped: bool,
}

impl SemiflowState {
    pub fn new(history: GridFunction, r: f64) -> Self {
        SemiflowState {
            history,
            r,
            elapsed: 0.0,
            escaped: false,
        }
    }
}

/// Advances `state` by the grid-aligned time `t`.
pub fn semiflow_step(
    state: &SemiflowState,
    t: f64,
    m: &RhsModel,
    cfg: &SolveConfig,
) -> Result<SemiflowState> {
    if state.escaped {
        return Err(Error::EscapeBeforeT {
            reached: 0.0,
            requested: t,
            partial: Box::new(state.clone()),
        });
    }
    let steps = steps_of(t, state.history.step())
        .ok_or_else(|| Error::GridMismatch(format!("time {t} is not a multiple of h")))?;
    if steps == 0 {
        return Ok(state.clone());
    }
    let t = steps as f64 * state.history.step();
    let cfg = SolveConfig {
        t_end: t,
        ..cfg.clone()
    };
    let res = solve(&state.history, state.r, m, &cfg)?;
    let history = if res.t_reached > 0.0 {
        res.trajectory.history_at(res.t_reached)?
    } else {
        state.history.clone()
    };
    let next = SemiflowState {
        history,
        r: state.r,
        elapsed: state.elapsed + res.t_reached,
        escaped: res.escaped,
    };
    if res.escaped {
        return Err(Error::EscapeBeforeT {
            reached: res.t_reached,
            requested: t,
            partial: Box::new(next),
        });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hist_space::PNorm;
    use crate::rhs::Builtin;

    fn setup() -> (SemiflowState, RhsModel, SolveConfig) {
        let phi = GridFunction::from_fn(-1.0, 0.0, 100, 1, |t, o| o[0] = 1.0 + 0.3 * t).unwrap();
        let m = RhsModel::builtin(Builtin::PureDelay { a: 1.0, dim: 1 });
        (SemiflowState::new(phi, 1.0), m, SolveConfig::new(0.01, 1.0))
    }

    #[test]
    fn zero_time_is_identity() {
        let (s, m, cfg) = setup();
        assert_eq!(semiflow_step(&s, 0.0, &m, &cfg).unwrap(), s);
    }

    #[test]
    fn history_after_one_unit() {
        let phi = GridFunction::constant(-1.0, 0.0, 100, &[1.0]).unwrap();
        let (_, m, cfg) = setup();
        let s = semiflow_step(&SemiflowState::new(phi, 1.0), 1.0, &m, &cfg).unwrap();
        for k in 0..=100 {
            let t = 1.0 + s.history.node_time(k);
            assert!((s.history.node(k)[0] - (1.0 + t)).abs() < 1e-12);
        }
        assert_eq!(s.elapsed, 1.0);
    }

    #[test]
    fn semigroup_law() {
        let (s, m, cfg) = setup();
        let whole = semiflow_step(&s, 1.3, &m, &cfg).unwrap();
        let half = semiflow_step(&s, 0.5, &m, &cfg).unwrap();
        let split = semiflow_step(&half, 0.8, &m, &cfg).unwrap();
        let defect = GridFunction::combine(1.0, &whole.history, -1.0, &split.history)
            .unwrap()
            .w1p_norm(&PNorm::default());
        assert!(defect <= 1e-8, "{defect}");
    }

    #[test]
    fn escape_carries_partial_state() {
        let phi = GridFunction::constant(-1.0, 0.0, 100, &[2.0]).unwrap();
        let m = RhsModel::from_exprs(&["x1^2"]).unwrap();
        let cfg =
            SolveConfig::new(0.01, 1.0).with_p_norm(PNorm::new(1.0, Default::default()).unwrap());
        match semiflow_step(&SemiflowState::new(phi, 1.0), 1.0, &m, &cfg) {
            Err(Error::EscapeBeforeT {
                reached, partial, ..
            }) => {
                assert!(reached < 0.5 + 1e-12);
                assert!(partial.escaped);
                assert_eq!(partial.elapsed, reached);
            }
            other => panic!("expected escape, got {other:?}"),
        }
    }
}
