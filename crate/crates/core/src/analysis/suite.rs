//! The built-in problems every suite-wide check runs over.

use crate::error::Result;
use crate::hist_space::{GridFunction, PNorm, VecNorm};
use crate::rhs::{Builtin, Matrix, RhsModel};
use crate::solver::SolveConfig;

#[derive(Debug, Clone)]
pub struct SuiteProblem {
    pub name: &'static str,
    pub model: RhsModel,
    pub phi: GridFunction,
    pub r: f64,
    pub cfg: SolveConfig,
}

const H: f64 = 1e-3;
const SEGMENTS: usize = 1000;

fn history(f: impl Fn(f64) -> Vec<f64>, dim: usize) -> Result<GridFunction> {
    GridFunction::from_fn(-1.0, 0.0, SEGMENTS, dim, |t, out| {
        out.copy_from_slice(&f(t))
    })
}

fn config(p: f64, t_end: f64) -> SolveConfig {
    SolveConfig::new(H, t_end).with_p_norm(PNorm::new(p, VecNorm::L2).expect("valid exponent"))
}

/// One problem per built-in right-hand side, each solved to `t_end = 2`
/// without escape. Nonlinear models use `p = 1`, where windows scale like
/// `1 / L` rather than `1 / L^2`.
pub fn default_suite() -> Result<Vec<SuiteProblem>> {
    let linear = Builtin::Linear {
        a: Matrix::from_rows(&[vec![-1.0, 0.5], vec![0.0, -0.5]]).expect("square"),
        b: Matrix::from_rows(&[vec![0.2, 0.0], vec![0.1, -0.3]]).expect("square"),
    };
    Ok(vec![
        SuiteProblem {
            name: "constant",
            model: RhsModel::builtin(Builtin::Constant {
                value: vec![1.0, -0.5],
            }),
            phi: history(|t| vec![t, 1.0], 2)?,
            r: 0.5,
            cfg: config(2.0, 2.0),
        },
        SuiteProblem {
            name: "ikeda",
            model: RhsModel::builtin(Builtin::Ikeda { mu: 1.5, dim: 1 }),
            phi: history(|t| vec![0.5 * (3.0 * t).sin() + 0.2], 1)?,
            r: 1.0,
            cfg: config(2.0, 2.0),
        },
        SuiteProblem {
            name: "linear",
            model: RhsModel::builtin(linear),
            phi: history(|t| vec![(2.0 * t).cos(), 1.0 + t], 2)?,
            r: 0.5,
            cfg: config(2.0, 2.0),
        },
        SuiteProblem {
            name: "logistic",
            model: RhsModel::builtin(Builtin::Logistic { dim: 1 }),
            phi: history(|t| vec![0.5 + 0.1 * t], 1)?,
            r: 0.5,
            cfg: config(1.0, 2.0),
        },
        SuiteProblem {
            name: "mackey_glass",
            model: RhsModel::builtin(Builtin::MackeyGlass {
                beta: 2.0,
                gamma: 1.0,
                n: 10.0,
                dim: 1,
            }),
            phi: history(|_| vec![0.5], 1)?,
            r: 1.0,
            cfg: config(1.0, 2.0),
        },
        SuiteProblem {
            name: "pure_delay",
            model: RhsModel::builtin(Builtin::PureDelay { a: -1.0, dim: 1 }),
            phi: history(|_| vec![1.0], 1)?,
            r: 1.0,
            cfg: config(2.0, 2.0),
        },
    ])
}
