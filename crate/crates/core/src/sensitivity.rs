//! First-order derivatives of solutions with respect to the history `phi`
//! and the delay `r`.
//!
//! On a window `[-R, T]` with fixed point `y`, the derivative `eta` of `y` in
//! the direction `(chi, xi)` solves `eta = A(eta, chi) + xi B`, where `A` is
//! the linearization of the window operator in `(y, phi)` and `B` its
//! derivative in `r`. The total derivative of the solution is
//! `dx = eta + chi_bar`. Windows are chained by feeding the history of `dx`
//! at each window start in as the next `chi`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hist_space::GridFunction;
use crate::rhs::{Arg, Matrix, RhsModel};
use crate::solver::frame::{steps_of, Frame};
use crate::solver::{solve, SolveConfig, SolveResult};

pub use crate::analysis::{counterexample_time_dependent, Counterexample};

/// Direction `(chi, xi)` in history-delay space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityDirection {
    pub chi: GridFunction,
    pub xi: f64,
}

impl SensitivityDirection {
    /// `(0, xi)` on the grid of `phi`.
    pub fn delay(phi: &GridFunction, xi: f64) -> Self {
        SensitivityDirection {
            chi: phi.scaled(0.0),
            xi,
        }
    }

    /// `(chi, 0)`.
    pub fn history(chi: GridFunction) -> Self {
        SensitivityDirection { chi, xi: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult {
    /// Derivative of the window fixed point, zero on `[-R, 0]`.
    pub eta: GridFunction,
    /// `eta + chi_bar`, equal to `chi` on `[-R, 0]`.
    pub dx: GridFunction,
    pub neumann_iters: usize,
    pub neumann_ratio: f64,
}

/// Jacobians of `f` along `rho(s) = ((y + phi_bar)(s), (y + phi_bar)(s - r))`
/// at the window nodes.
struct Linearization<'a> {
    frame: Frame<'a>,
    /// `y + phi_bar` on `[-R, T]`.
    x: Vec<f64>,
    d1: Vec<Matrix>,
    d2: Vec<Matrix>,
}

impl<'a> Linearization<'a> {
    fn new(frame: Frame<'a>, m: &RhsModel, x: Vec<f64>) -> Result<Self> {
        let d = frame.dim;
        let mut v = vec![0.0; d];
        let mut d1 = Vec::with_capacity(frame.n + 1);
        let mut d2 = Vec::with_capacity(frame.n + 1);
        for i in 0..=frame.n {
            let node = frame.mr + i;
            let u = &x[node * d..(node + 1) * d];
            frame.delayed(&x, i, &mut v);
            d1.push(m.jacobian(u, &v, Arg::Current)?);
            d2.push(m.jacobian(u, &v, Arg::Delayed)?);
        }
        Ok(Linearization { frame, x, d1, d2 })
    }

    fn from_fixed_point(
        y: &GridFunction,
        phi: &'a GridFunction,
        r: f64,
        m: &RhsModel,
    ) -> Result<Self> {
        if phi.dim() != m.dim() {
            return Err(Error::GridMismatch(format!(
                "history has dimension {}, right-hand side {}",
                phi.dim(),
                m.dim()
            )));
        }
        let n = y
            .segments()
            .checked_sub(phi.segments())
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Error::GridMismatch("window function does not extend the history".into())
            })?;
        let frame = Frame::new(phi, r, n)?;
        frame.check(y, "y")?;
        let x = frame.glue(y.values());
        Self::new(frame, m, x)
    }

    /// `chi_bar` on `[-R, T]` as nodal values.
    fn prolong(&self, chi: &GridFunction) -> Result<Vec<f64>> {
        let f = &self.frame;
        if chi.dim() != f.dim || !chi.same_grid(f.phi) {
            return Err(Error::GridMismatch(format!(
                "direction on [{}, {}] with M = {} does not match the history grid",
                chi.a(),
                chi.b(),
                chi.segments()
            )));
        }
        let mut out = chi.values().to_vec();
        let last = chi.node(f.mr);
        for _ in 0..f.n {
            out.extend_from_slice(last);
        }
        Ok(out)
    }

    /// Window slopes of `A` applied to the nodal function `w = eta + chi_bar`.
    fn a_slopes(&self, w: &[f64]) -> Vec<f64> {
        let f = &self.frame;
        let d = f.dim;
        let mut g = vec![0.0; (f.n + 1) * d];
        let mut v = vec![0.0; d];
        for i in 0..=f.n {
            let node = f.mr + i;
            let out = &mut g[i * d..(i + 1) * d];
            self.d1[i].mul_add_into(&w[node * d..(node + 1) * d], out);
            f.delayed(w, i, &mut v);
            self.d2[i].mul_add_into(&v, out);
        }
        f.averaged(&g)
    }

    /// Window slopes of `B`: the negated average of `D2 f (y + phi_bar)'(s - r)`
    /// over each interval, with the one-sided slopes taken from inside it.
    fn b_slopes(&self) -> Vec<f64> {
        let f = &self.frame;
        let d = f.dim;
        let mut out = vec![0.0; f.n * d];
        let mut right = vec![0.0; d];
        let mut left = vec![0.0; d];
        for i in 0..f.n {
            let node = f.mr + i;
            f.segment_slope(&self.x, f.shift.right_segment(node), &mut right);
            f.segment_slope(&self.x, f.shift.left_segment(node + 1), &mut left);
            let mut acc = vec![0.0; d];
            self.d2[i].mul_add_into(&right, &mut acc);
            self.d2[i + 1].mul_add_into(&left, &mut acc);
            for (o, a) in out[i * d..(i + 1) * d].iter_mut().zip(acc) {
                *o = -0.5 * a;
            }
        }
        out
    }

    /// Neumann iteration for `eta = A(eta, chi) + xi B`.
    fn neumann(&self, chi: &[f64], xi: f64, cfg: &SolveConfig) -> Result<(Vec<f64>, usize, f64)> {
        let f = &self.frame;
        let d = f.dim;
        let mut source = self.a_slopes(chi);
        if xi != 0.0 {
            for (s, b) in source.iter_mut().zip(self.b_slopes()) {
                *s += xi * b;
            }
        }
        let mut slopes = vec![0.0; f.n * d];
        let mut eta = vec![0.0; f.total_nodes() * d];
        let mut prev_inc: Option<f64> = None;
        let mut ratio = 0.0f64;
        // eta is zero on the history, so A(eta, chi) = A(eta, 0) + A(0, chi)
        for k in 1..=cfg.neumann_max_iter {
            let mut next = self.a_slopes(&eta);
            next.iter_mut().zip(&source).for_each(|(a, s)| *a += s);
            let inc = f.slope_distance(&next, &slopes, &cfg.p_norm);
            let size = f.slope_norm(&next, &cfg.p_norm);
            if let Some(prev) = prev_inc.filter(|&p| p > 0.0) {
                ratio = ratio.max(inc / prev);
            }
            slopes = next;
            eta = f.cumulate(&slopes);
            if !slopes.iter().all(|s| s.is_finite()) {
                return Err(Error::NonFinite("sensitivity iterate".into()));
            }
            if inc <= cfg.neumann_tol * size.max(1.0) {
                return Ok((eta, k, ratio));
            }
            if ratio >= 1.0 {
                return Err(Error::NoConvergence {
                    iterations: k,
                    ratio,
                    window: None,
                });
            }
            prev_inc = Some(inc);
        }
        Err(Error::NoConvergence {
            iterations: cfg.neumann_max_iter,
            ratio,
            window: None,
        })
    }

    fn solve(&self, dir: &SensitivityDirection, cfg: &SolveConfig) -> Result<SensitivityResult> {
        let chi = self.prolong(&dir.chi)?;
        let (eta, iters, ratio) = self.neumann(&chi, dir.xi, cfg)?;
        let dx: Vec<f64> = eta.iter().zip(&chi).map(|(e, c)| e + c).collect();
        Ok(SensitivityResult {
            eta: self.frame.to_grid(eta)?,
            dx: self.frame.to_grid(dx)?,
            neumann_iters: iters,
            neumann_ratio: ratio,
        })
    }
}

/// Linearized window operator: the cumulative trapezoid of
/// `D1 f(rho) (eta + chi_bar)(s) + D2 f(rho) (eta + chi_bar)(s - r)`.
pub fn apply_a(
    y: &GridFunction,
    phi: &GridFunction,
    r: f64,
    m: &RhsModel,
    eta: &GridFunction,
    chi: &GridFunction,
) -> Result<GridFunction> {
    let lin = Linearization::from_fixed_point(y, phi, r, m)?;
    lin.frame.check(eta, "eta")?;
    let mut w = lin.prolong(chi)?;
    w.iter_mut().zip(eta.values()).for_each(|(c, e)| *c += e);
    lin.frame.to_grid(lin.frame.cumulate(&lin.a_slopes(&w)))
}

/// Derivative of the window operator in `r`: the cumulative trapezoid of
/// `-D2 f(rho(s)) (y + phi_bar)'(s - r)`.
///
/// `(y + phi_bar)'` is piecewise constant, so at each interval end the slope
/// from the inside of the interval is used; at an interior sample point of a
/// linear piece both conventions agree.
pub fn compute_b(
    y: &GridFunction,
    phi: &GridFunction,
    r: f64,
    m: &RhsModel,
) -> Result<GridFunction> {
    let lin = Linearization::from_fixed_point(y, phi, r, m)?;
    lin.frame.to_grid(lin.frame.cumulate(&lin.b_slopes()))
}

/// `-int_0^t (f o phi)'(s - r) ds` for `t <= r`, valid when `f` ignores its
/// current-state argument.
pub fn compute_b_special(
    phi: &GridFunction,
    r: f64,
    m1: &RhsModel,
    t: f64,
) -> Result<GridFunction> {
    if !(r > 0.0) {
        return Err(Error::DomainViolation(format!("need r > 0, got {r}")));
    }
    if t > r * (1.0 + 1e-12) {
        return Err(Error::DomainViolation(format!(
            "horizon {t} exceeds the delay {r}"
        )));
    }
    let n = steps_of(t, phi.step()).filter(|&n| n > 0).ok_or_else(|| {
        Error::GridMismatch(format!("horizon {t} is not a positive multiple of h"))
    })?;
    let frame = Frame::new(phi, r, n)?;
    let d = frame.dim;
    let hist = phi.values();
    let u = phi.node(frame.mr);
    let (mut v, mut right, mut left) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut slopes = vec![0.0; n * d];
    let mut jac = |i: usize| -> Result<Matrix> {
        frame.delayed(hist, i, &mut v);
        m1.jacobian(u, &v, Arg::Delayed)
    };
    for i in 0..n {
        let node = frame.mr + i;
        frame.segment_slope(hist, frame.shift.right_segment(node), &mut right);
        frame.segment_slope(hist, frame.shift.left_segment(node + 1), &mut left);
        let mut acc = vec![0.0; d];
        jac(i)?.mul_add_into(&right, &mut acc);
        jac(i + 1)?.mul_add_into(&left, &mut acc);
        for (o, a) in slopes[i * d..(i + 1) * d].iter_mut().zip(acc) {
            *o = -0.5 * a;
        }
    }
    frame.to_grid(frame.cumulate(&slopes))
}

/// Solves `eta = A(eta, chi) + xi B` on the window of the fixed point `y`.
pub fn neumann_solve(
    y: &GridFunction,
    phi: &GridFunction,
    r: f64,
    m: &RhsModel,
    dir: &SensitivityDirection,
    cfg: &SolveConfig,
) -> Result<SensitivityResult> {
    Linearization::from_fixed_point(y, phi, r, m)?.solve(dir, cfg)
}

/// Neumann statistics of one window of a propagated derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowSensitivity {
    pub start: f64,
    pub iterations: usize,
    pub ratio: f64,
    /// Picard ratio measured on the same window.
    pub picard_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedSensitivity {
    /// Derivative of the solution on `[-R, t_reached]`.
    pub dx: GridFunction,
    pub windows: Vec<WindowSensitivity>,
}

/// Chains window derivatives along the windows of `result`.
pub fn propagate_sensitivity(
    result: &SolveResult,
    phi: &GridFunction,
    r: f64,
    m: &RhsModel,
    dir: &SensitivityDirection,
    cfg: &SolveConfig,
) -> Result<PropagatedSensitivity> {
    if !dir.chi.same_grid(phi) {
        return Err(Error::GridMismatch(
            "direction and history grids differ".into(),
        ));
    }
    let traj = &result.trajectory;
    let d = phi.dim();
    let mr = phi.segments();
    let mut dx = dir.chi.values().to_vec();
    let mut stats = Vec::with_capacity(result.windows.len());
    for (index, w) in result.windows.iter().enumerate() {
        let s0 = w.start_step;
        let x = traj.values()[s0 * d..(s0 + mr + w.steps + 1) * d].to_vec();
        let history = GridFunction::new(phi.a(), 0.0, d, x[..(mr + 1) * d].to_vec())?;
        let chi = GridFunction::new(phi.a(), 0.0, d, dx[s0 * d..(s0 + mr + 1) * d].to_vec())?;
        let lin = Linearization::new(Frame::new(&history, r, w.steps)?, m, x)?;
        let local = lin
            .solve(&SensitivityDirection { chi, xi: dir.xi }, cfg)
            .map_err(|e| match e {
                Error::NoConvergence {
                    iterations, ratio, ..
                } => Error::NoConvergence {
                    iterations,
                    ratio,
                    window: Some(index),
                },
                other => other,
            })?;
        dx.extend_from_slice(&local.dx.values()[(mr + 1) * d..]);
        stats.push(WindowSensitivity {
            start: w.start,
            iterations: local.neumann_iters,
            ratio: local.neumann_ratio,
            picard_ratio: w.measured_ratio,
        });
    }
    Ok(PropagatedSensitivity {
        dx: GridFunction::new(phi.a(), traj.b(), d, dx)?,
        windows: stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FdScheme {
    Central,
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdRow {
    pub eps: f64,
    /// `W^{1,p}` distance between the difference quotient and `dx`.
    pub err: f64,
    pub scheme: FdScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdTable {
    pub horizon: f64,
    pub rows: Vec<FdRow>,
}

impl FdTable {
    pub fn is_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].err < w[0].err)
    }

    /// Log-log slopes between consecutive rows.
    pub fn observed_orders(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| (w[0].err / w[1].err).ln() / (w[0].eps / w[1].eps).ln())
            .collect()
    }
}

/// Compares the propagated derivative against difference quotients of full
/// solves. Central differences are used unless `r +- eps xi` leaves `[0, R]`,
/// in which case the one-sided quotient pointing into the interval is used.
pub fn fd_check(
    phi: &GridFunction,
    r: f64,
    m: &RhsModel,
    dir: &SensitivityDirection,
    cfg: &SolveConfig,
    eps_list: &[f64],
) -> Result<FdTable> {
    let lag = -phi.a();
    let run = |phi: &GridFunction, r: f64| -> Result<SolveResult> {
        let res = solve(phi, r, m, cfg)?;
        if res.escaped {
            let state = crate::solver::SemiflowState {
                history: res.trajectory.history_at(res.t_reached)?,
                r,
                elapsed: res.t_reached,
                escaped: true,
            };
            return Err(Error::EscapeBeforeT {
                reached: res.t_reached,
                requested: cfg.t_end,
                partial: Box::new(state),
            });
        }
        Ok(res)
    };
    let base = run(phi, r)?;
    let dx = propagate_sensitivity(&base, phi, r, m, dir, cfg)?.dx;
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !(eps > 0.0) {
            return Err(Error::DomainViolation(format!(
                "step {eps} must be positive"
            )));
        }
        let shift = eps * dir.xi;
        let up_ok = r + shift >= 0.0 && r + shift <= lag;
        let down_ok = r - shift >= 0.0 && r - shift <= lag;
        let perturbed = |sign: f64| -> Result<GridFunction> {
            let p = GridFunction::combine(1.0, phi, sign * eps, &dir.chi)?;
            Ok(run(&p, r + sign * shift)?.trajectory)
        };
        let (scheme, quotient) = match (up_ok, down_ok) {
            (true, true) => {
                let q = GridFunction::combine(1.0, &perturbed(1.0)?, -1.0, &perturbed(-1.0)?)?;
                (FdScheme::Central, q.scaled(0.5 / eps))
            }
            (true, false) => {
                let q = GridFunction::combine(1.0, &perturbed(1.0)?, -1.0, &base.trajectory)?;
                (FdScheme::Forward, q.scaled(1.0 / eps))
            }
            (false, true) => {
                let q = GridFunction::combine(1.0, &base.trajectory, -1.0, &perturbed(-1.0)?)?;
                (FdScheme::Backward, q.scaled(1.0 / eps))
            }
            (false, false) => {
                return Err(Error::DomainViolation(format!(
                    "r = {r} perturbed by +-{shift} leaves [0, {lag}]"
                )))
            }
        };
        let err = GridFunction::combine(1.0, &quotient, -1.0, &dx)?.w1p_norm(&cfg.p_norm);
        rows.push(FdRow { eps, err, scheme });
    }
    Ok(FdTable {
        horizon: base.t_reached,
        rows,
    })
}
