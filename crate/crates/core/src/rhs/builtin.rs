//! Standard delay test problems with analytic Jacobians.

use super::{Arg, JacKind, Matrix, VectorField};

/// Registry of built-in right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    /// `f(u, v) = A u + B v`.
    Linear { a: Matrix, b: Matrix },
    /// `f(u, v) = a v`, componentwise.
    PureDelay { a: f64, dim: usize },
    /// `f(u, v) = u (1 - v)`, componentwise.
    Logistic { dim: usize },
    /// `f(u, v) = beta v / (1 + v^n) - gamma u`, componentwise.
    MackeyGlass {
        beta: f64,
        gamma: f64,
        n: f64,
        dim: usize,
    },
    /// `f(u, v) = mu sin(v) - u`, componentwise.
    Ikeda { mu: f64, dim: usize },
    /// `f(u, v) = c`.
    Constant { value: Vec<f64> },
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Linear { .. } => "linear",
            Builtin::PureDelay { .. } => "pure_delay",
            Builtin::Logistic { .. } => "logistic",
            Builtin::MackeyGlass { .. } => "mackey_glass",
            Builtin::Ikeda { .. } => "ikeda",
            Builtin::Constant { .. } => "constant",
        }
    }
}

fn mg_pow(v: f64, n: f64) -> f64 {
    if n.fract() == 0.0 {
        v.powi(n as i32)
    } else {
        v.powf(n)
    }
}

impl VectorField for Builtin {
    fn dim(&self) -> usize {
        match self {
            Builtin::Linear { a, .. } => a.dim(),
            Builtin::PureDelay { dim, .. }
            | Builtin::Logistic { dim }
            | Builtin::MackeyGlass { dim, .. }
            | Builtin::Ikeda { dim, .. } => *dim,
            Builtin::Constant { value } => value.len(),
        }
    }

    fn eval(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            Builtin::Linear { a, b } => {
                out.fill(0.0);
                a.mul_add_into(u, out);
                b.mul_add_into(v, out);
            }
            Builtin::PureDelay { a, .. } => {
                for (o, vi) in out.iter_mut().zip(v) {
                    *o = a * vi;
                }
            }
            Builtin::Logistic { .. } => {
                for ((o, ui), vi) in out.iter_mut().zip(u).zip(v) {
                    *o = ui * (1.0 - vi);
                }
            }
            Builtin::MackeyGlass { beta, gamma, n, .. } => {
                for ((o, ui), vi) in out.iter_mut().zip(u).zip(v) {
                    *o = beta * vi / (1.0 + mg_pow(*vi, *n)) - gamma * ui;
                }
            }
            Builtin::Ikeda { mu, .. } => {
                for ((o, ui), vi) in out.iter_mut().zip(u).zip(v) {
                    *o = mu * vi.sin() - ui;
                }
            }
            Builtin::Constant { value } => out.copy_from_slice(value),
        }
    }

    fn jac_kind(&self) -> JacKind {
        JacKind::Analytic
    }

    fn analytic_jacobian(&self, u: &[f64], v: &[f64], which: Arg, out: &mut Matrix) -> bool {
        out.fill(0.0);
        let n = self.dim();
        match (self, which) {
            (Builtin::Linear { a, .. }, Arg::Current) => *out = a.clone(),
            (Builtin::Linear { b, .. }, Arg::Delayed) => *out = b.clone(),
            (Builtin::PureDelay { .. }, Arg::Current) => {}
            (Builtin::PureDelay { a, .. }, Arg::Delayed) => {
                for i in 0..n {
                    out[(i, i)] = *a;
                }
            }
            (Builtin::Logistic { .. }, Arg::Current) => {
                for i in 0..n {
                    out[(i, i)] = 1.0 - v[i];
                }
            }
            (Builtin::Logistic { .. }, Arg::Delayed) => {
                for i in 0..n {
                    out[(i, i)] = -u[i];
                }
            }
            (Builtin::MackeyGlass { gamma, .. }, Arg::Current) => {
                for i in 0..n {
                    out[(i, i)] = -gamma;
                }
            }
            (Builtin::MackeyGlass { beta, n: e, .. }, Arg::Delayed) => {
                for i in 0..n {
                    let vi = v[i];
                    let vn = mg_pow(vi, *e);
                    // d/dv [v / (1 + v^n)] = (1 + (1 - n) v^n) / (1 + v^n)^2
                    out[(i, i)] = beta * (1.0 + (1.0 - e) * vn) / (1.0 + vn).powi(2);
                }
            }
            (Builtin::Ikeda { .. }, Arg::Current) => {
                for i in 0..n {
                    out[(i, i)] = -1.0;
                }
            }
            (Builtin::Ikeda { mu, .. }, Arg::Delayed) => {
                for i in 0..n {
                    out[(i, i)] = mu * v[i].cos();
                }
            }
            (Builtin::Constant { .. }, _) => {}
        }
        true
    }
}
