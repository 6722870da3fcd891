//! Contraction windows, Picard iteration on each window, and continuation
//! of solutions into a semiflow.

pub(crate) mod frame;
mod semiflow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hist_space::{GridFunction, PNorm};
use crate::rhs::{BoxDomain, RhsModel};
use frame::{steps_of, Frame};

pub use semiflow::{semiflow_step, SemiflowState};

/// Radius `delta` of the ball the window iterates are confined to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delta {
    /// Fixed radius.
    Absolute(f64),
    /// `k (||phi||_C + 1)`, recomputed for every window.
    Relative(f64),
}

impl Delta {
    pub fn resolve(self, phi_sup: f64) -> f64 {
        match self {
            Delta::Absolute(d) => d,
            Delta::Relative(k) => k * (phi_sup + 1.0),
        }
    }
}

impl Default for Delta {
    fn default() -> Self {
        Delta::Relative(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub p_norm: PNorm,
    /// Grid step; must divide `R`.
    pub h: f64,
    pub delta: Delta,
    /// Target contraction constant `c*` in `(0, 1)`.
    pub contraction_target: f64,
    /// Picard stops once an increment is below `picard_tol * max(1, ||y||)`.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Window halvings allowed after a failed Picard iteration.
    pub max_retries: usize,
    /// Escape once the sup norm of the solution exceeds this.
    pub blowup_bound: f64,
    pub t_end: f64,
    /// Upper cap on a single window length.
    pub max_window: f64,
    /// Box samples used for the Lipschitz and sup estimates.
    pub lipschitz_samples: usize,
    pub neumann_tol: f64,
    pub neumann_max_iter: usize,
}

impl SolveConfig {
    pub fn new(h: f64, t_end: f64) -> Self {
        SolveConfig {
            p_norm: PNorm::default(),
            h,
            delta: Delta::default(),
            contraction_target: 0.5,
            picard_tol: 1e-12,
            picard_max_iter: 200,
            max_retries: 10,
            blowup_bound: 1e8,
            t_end,
            max_window: 1.0,
            lipschitz_samples: 256,
            neumann_tol: 1e-12,
            neumann_max_iter: 500,
        }
    }

    pub fn with_p_norm(mut self, p_norm: PNorm) -> Self {
        self.p_norm = p_norm;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.contraction_target > 0.0 && self.contraction_target < 1.0) {
            return bad(format!(
                "contraction_target must lie in (0, 1), got {}",
                self.contraction_target
            ));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        let delta = match self.delta {
            Delta::Absolute(d) | Delta::Relative(d) => d,
        };
        if !(delta > 0.0 && delta.is_finite()) {
            return bad(format!("delta must be positive, got {delta}"));
        }
        if !(self.picard_tol > 0.0 && self.neumann_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.picard_max_iter == 0 || self.neumann_max_iter == 0 {
            return bad("iteration limits must be at least 1".into());
        }
        if !(self.max_window > 0.0) {
            return bad(format!(
                "max_window must be positive, got {}",
                self.max_window
            ));
        }
        if self.lipschitz_samples < 2 {
            return bad("lipschitz_samples must be at least 2".into());
        }
        if !(self.blowup_bound > 0.0) {
            return bad(format!(
                "blowup_bound must be positive, got {}",
                self.blowup_bound
            ));
        }
        Ok(())
    }

    fn check_grid(&self, phi: &GridFunction) -> Result<()> {
        if (phi.step() - self.h).abs() > 1e-9 * self.h {
            return Err(Error::GridMismatch(format!(
                "history step {} differs from configured h = {}",
                phi.step(),
                self.h
            )));
        }
        Ok(())
    }
}

/// Window length and the estimates that justified it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowPlan {
    pub length: f64,
    pub steps: usize,
    /// Radius `delta` of the ball.
    pub delta: f64,
    /// Safety-scaled Lipschitz estimate on the inflated box.
    pub lipschitz: f64,
    /// Sampled `sup |f|` on the inflated box.
    pub sup_bound: f64,
}

impl WindowPlan {
    /// `2 L T^{1/p}`.
    pub fn contraction_bound(&self, p: f64) -> f64 {
        2.0 * self.lipschitz * self.length.powf(1.0 / p)
    }
}

/// Accepted window of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowInfo {
    pub start: f64,
    pub length: f64,
    pub start_step: usize,
    pub steps: usize,
    pub picard_iters: usize,
    pub measured_ratio: f64,
    pub lipschitz: f64,
    pub sup_bound: f64,
    pub contraction_bound: f64,
    /// Number of halvings before Picard converged.
    pub retries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EscapeReason {
    /// The sup norm of the solution exceeded the blow-up bound.
    Blowup {
        sup: f64,
        bound: f64,
    },
    /// The admissible window dropped below one grid step.
    WindowCollapse {
        window: f64,
        h: f64,
    },
    /// Picard failed on every retry.
    NoConvergence {
        iterations: usize,
        ratio: f64,
    },
    NonFinite {
        context: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    /// Solution on `[-R, t_reached]`; equals the history on `[-R, 0]`.
    #[serde(skip)]
    pub trajectory: GridFunction,
    pub r: f64,
    pub t_reached: f64,
    pub t_end: f64,
    pub escaped: bool,
    pub escape: Option<EscapeReason>,
    pub windows: Vec<WindowInfo>,
}

/// One application of the window operator:
/// `T(y)(t) = int_0^t f((y + phi_bar)(s), (y + phi_bar)(s - r)) ds`, by the
/// composite trapezoid rule at the grid nodes.
pub fn apply_t(y: &GridFunction, phi: &GridFunction, r: f64, m: &RhsModel) -> Result<GridFunction> {
    let n = window_steps(y, phi)?;
    let frame = Frame::new(phi, r, n)?;
    frame.check(y, "y")?;
    check_dim(phi, m)?;
    let x = frame.glue(y.values());
    let slopes = frame.averaged(&frame.integrand(m, &x)?);
    frame.to_grid(frame.cumulate(&slopes))
}

fn window_steps(y: &GridFunction, phi: &GridFunction) -> Result<usize> {
    y.segments()
        .checked_sub(phi.segments())
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::GridMismatch(format!(
                "window function with {} segments does not extend a history with {}",
                y.segments(),
                phi.segments()
            ))
        })
}

fn check_dim(phi: &GridFunction, m: &RhsModel) -> Result<()> {
    if phi.dim() != m.dim() {
        return Err(Error::GridMismatch(format!(
            "history has dimension {}, right-hand side {}",
            phi.dim(),
            m.dim()
        )));
    }
    Ok(())
}

/// Largest grid-aligned window on which the operator is a contraction with
/// constant `c*`, capped by `cfg.t_end` and `cfg.max_window`.
pub fn choose_window(
    phi: &GridFunction,
    r: f64,
    m: &RhsModel,
    cfg: &SolveConfig,
) -> Result<WindowPlan> {
    plan_window(phi, r, m, cfg, cfg.t_end)
}

fn plan_window(
    phi: &GridFunction,
    r: f64,
    m: &RhsModel,
    cfg: &SolveConfig,
    remaining: f64,
) -> Result<WindowPlan> {
    check_dim(phi, m)?;
    Frame::new(phi, r, 1)?;
    let p = cfg.p_norm.p();
    let phi_sup = phi.sup_norm(&cfg.p_norm);
    let delta = cfg.delta.resolve(phi_sup);
    let radius = 2.0 * (delta + phi_sup);
    let probe = m.probe(
        &BoxDomain::symmetric(m.dim(), radius),
        cfg.lipschitz_samples,
        cfg.p_norm.vec_norm(),
    )?;
    let by_lipschitz = if probe.lipschitz > 0.0 {
        (cfg.contraction_target / (2.0 * probe.lipschitz)).powf(p)
    } else {
        f64::INFINITY
    };
    let by_sup = if probe.sup > 0.0 {
        (delta / probe.sup).powf(p)
    } else {
        f64::INFINITY
    };
    let t = by_lipschitz.min(by_sup).min(remaining).min(cfg.max_window);
    let h = phi.step();
    let steps = (t / h + 1e-9).floor();
    if !(steps >= 1.0) {
        return Err(Error::WindowTooSmall { window: t, h });
    }
    Ok(WindowPlan {
        length: steps * h,
        steps: steps as usize,
        delta,
        lipschitz: probe.lipschitz,
        sup_bound: probe.sup,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    /// Fixed point on `[-R, T]`, zero on `[-R, 0]`.
    pub y: GridFunction,
    pub iterations: usize,
    /// Largest ratio of successive increments.
    pub measured_ratio: f64,
}

/// Picard iteration `y_{k+1} = T(y_k)` from `y_0 = 0` on `[-R, t]`.
pub fn picard_window(
    phi: &GridFunction,
    r: f64,
    m: &RhsModel,
    t: f64,
    cfg: &SolveConfig,
) -> Result<PicardOutcome> {
    let n = steps_of(t, phi.step()).filter(|&n| n > 0).ok_or_else(|| {
        Error::GridMismatch(format!("window {t} is not a positive multiple of h"))
    })?;
    check_dim(phi, m)?;
    let frame = Frame::new(phi, r, n)?;
    let (y, iterations, measured_ratio) = picard_nodes(&frame, m, cfg)?;
    Ok(PicardOutcome {
        y: frame.to_grid(y)?,
        iterations,
        measured_ratio,
    })
}

fn picard_nodes(frame: &Frame, m: &RhsModel, cfg: &SolveConfig) -> Result<(Vec<f64>, usize, f64)> {
    let mut y = vec![0.0; frame.total_nodes() * frame.dim];
    let mut slopes = vec![0.0; frame.n * frame.dim];
    let mut prev_inc: Option<f64> = None;
    let mut ratio = 0.0f64;
    for k in 1..=cfg.picard_max_iter {
        let next = frame.averaged(&frame.integrand(m, &frame.glue(&y))?);
        let inc = frame.slope_distance(&next, &slopes, &cfg.p_norm);
        let size = frame.slope_norm(&next, &cfg.p_norm);
        if let Some(prev) = prev_inc.filter(|&p| p > 0.0) {
            ratio = ratio.max(inc / prev);
        }
        slopes = next;
        y = frame.cumulate(&slopes);
        if inc <= cfg.picard_tol * size.max(1.0) {
            return Ok((y, k, ratio));
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
        iterations: cfg.picard_max_iter,
        ratio,
        window: None,
    })
}

/// Solves on `[0, t_end]` window by window. Escape is reported in the
/// result; errors are reserved for invalid input.
pub fn solve(phi: &GridFunction, r: f64, m: &RhsModel, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    cfg.check_grid(phi)?;
    check_dim(phi, m)?;
    Frame::new(phi, r, 1)?;
    let h = phi.step();
    let d = phi.dim();
    let mr = phi.segments();
    let total = (cfg.t_end / h + 1e-9).floor() as usize;

    let mut values = phi.values().to_vec();
    let mut windows = Vec::new();
    let mut done = 0usize;
    let mut escape = None;
    let p = cfg.p_norm.p();

    while done < total {
        let history = GridFunction::new(phi.a(), 0.0, d, values[done * d..].to_vec())?;
        let plan = match plan_window(&history, r, m, cfg, (total - done) as f64 * h) {
            Ok(plan) => plan,
            Err(Error::WindowTooSmall { window, h }) => {
                escape = Some(EscapeReason::WindowCollapse { window, h });
                break;
            }
            Err(Error::NonFinite(context)) => {
                escape = Some(EscapeReason::NonFinite { context });
                break;
            }
            Err(e) => return Err(e),
        };

        let mut steps = plan.steps;
        let mut retries = 0;
        let accepted = loop {
            let frame = Frame::new(&history, r, steps)?;
            match picard_nodes(&frame, m, cfg) {
                Ok(found) => break Ok(found),
                Err(e @ (Error::NoConvergence { .. } | Error::NonFinite(_))) => {
                    if retries == cfg.max_retries || steps == 1 {
                        break Err(e);
                    }
                    retries += 1;
                    steps /= 2;
                }
                Err(e) => return Err(e),
            }
        };
        let (y, iters, ratio) = match accepted {
            Ok(found) => found,
            Err(Error::NoConvergence {
                iterations, ratio, ..
            }) => {
                escape = Some(EscapeReason::NoConvergence { iterations, ratio });
                break;
            }
            Err(Error::NonFinite(context)) => {
                escape = Some(EscapeReason::NonFinite { context });
                break;
            }
            Err(e) => return Err(e),
        };

        let base = history.node(mr).to_vec();
        let mut new_nodes = Vec::with_capacity(steps * d);
        let mut sup = 0.0f64;
        for i in 1..=steps {
            let row = &y[(mr + i) * d..(mr + i + 1) * d];
            let x: Vec<f64> = row.iter().zip(&base).map(|(a, b)| a + b).collect();
            sup = sup.max(cfg.p_norm.norm(&x));
            new_nodes.extend(x);
        }
        if !(sup <= cfg.blowup_bound) {
            escape = Some(EscapeReason::Blowup {
                sup,
                bound: cfg.blowup_bound,
            });
            break;
        }

        let length = steps as f64 * h;
        let used = WindowPlan {
            length,
            steps,
            ..plan
        };
        let info = WindowInfo {
            start: done as f64 * h,
            length,
            start_step: done,
            steps,
            picard_iters: iters,
            measured_ratio: ratio,
            lipschitz: plan.lipschitz,
            sup_bound: plan.sup_bound,
            contraction_bound: used.contraction_bound(p),
            retries,
        };
        debug_assert!(
            retries > 0 || info.measured_ratio <= info.contraction_bound * (1.0 + 1e-6) + 1e-9,
            "contraction certificate violated: {info:?}"
        );
        windows.push(info);
        values.extend(new_nodes);
        done += steps;
    }

    let t_reached = done as f64 * h;
    let trajectory = GridFunction::new(phi.a(), t_reached, d, values)?;
    Ok(SolveResult {
        trajectory,
        r,
        t_reached,
        t_end: cfg.t_end,
        escaped: escape.is_some(),
        escape,
        windows,
    })
}

/// Direct integration `x(t) = phi(0) + int_0^t f(phi(s - r)) ds` on
/// `[0, t]` for `t <= r`, valid when `f` ignores its current-state argument.
pub fn solve_steps_special(
    phi: &GridFunction,
    r: f64,
    m1: &RhsModel,
    t: f64,
) -> Result<GridFunction> {
    let lag = -phi.a();
    if !(r > 0.0 && r <= lag * (1.0 + 1e-12)) {
        return Err(Error::DomainViolation(format!(
            "need 0 < r <= R = {lag}, got r = {r}"
        )));
    }
    if t > r * (1.0 + 1e-12) {
        return Err(Error::DomainViolation(format!(
            "horizon {t} exceeds the delay {r}"
        )));
    }
    check_dim(phi, m1)?;
    let n = steps_of(t, phi.step()).filter(|&n| n > 0).ok_or_else(|| {
        Error::GridMismatch(format!("horizon {t} is not a positive multiple of h"))
    })?;
    let frame = Frame::new(phi, r, n)?;
    let d = frame.dim;
    let x0 = phi.node(frame.mr);
    let mut g = vec![0.0; (n + 1) * d];
    let mut v = vec![0.0; d];
    for i in 0..=n {
        // only history values are needed since s - r <= 0
        frame.delayed(phi.values(), i, &mut v);
        m1.eval_into(x0, &v, &mut g[i * d..(i + 1) * d])?;
    }
    let y = frame.cumulate(&frame.averaged(&g));
    frame.to_grid(frame.glue(&y))
}
