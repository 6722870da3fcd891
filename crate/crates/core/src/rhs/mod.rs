//! Right-hand sides `f: R^N x R^N -> R^N` of `x'(t) = f(x(t), x(t - r))`.

mod builtin;
pub mod expr;
mod linalg;

use std::fmt;
use std::sync::Arc;

pub use builtin::Builtin;
pub use expr::{parse_expr, ExprAst};
pub use linalg::Matrix;

use crate::error::{Error, Result};
use crate::hist_space::VecNorm;

/// Multiplier applied to sampled Jacobian norms.
pub const LIPSCHITZ_SAFETY: f64 = 1.5;

/// Argument slot of `f`: `D1 f` is the Jacobian in the current state,
/// `D2 f` in the delayed state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arg {
    Current,
    Delayed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacKind {
    Analytic,
    FiniteDifference,
}

/// A vector field evaluated at the current and delayed state.
///
/// Implementations must be pure. Jacobians default to central finite
/// differences unless [`VectorField::jac_kind`] reports `Analytic`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, u: &[f64], v: &[f64], out: &mut [f64]);

    fn jac_kind(&self) -> JacKind {
        JacKind::FiniteDifference
    }

    /// Writes `D1 f` or `D2 f` into `out`; returns `false` when no closed
    /// form is available.
    fn analytic_jacobian(&self, _u: &[f64], _v: &[f64], _which: Arg, _out: &mut Matrix) -> bool {
        false
    }
}

/// Vector field given by one parsed expression per component.
#[derive(Debug, Clone)]
pub struct ExprField {
    components: Vec<ExprAst>,
}

impl ExprField {
    pub fn parse<S: AsRef<str>>(sources: &[S]) -> Result<Self> {
        let dim = sources.len();
        if dim == 0 {
            return Err(Error::InvalidSpec("need at least one expression".into()));
        }
        let components = sources
            .iter()
            .map(|s| parse_expr(s.as_ref(), dim))
            .collect::<Result<_>>()?;
        Ok(Self { components })
    }

    pub fn components(&self) -> &[ExprAst] {
        &self.components
    }
}

impl VectorField for ExprField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.components) {
            *o = e.eval(u, v);
        }
    }
}

struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        (self.f)(u, v, out)
    }
}

/// Shared handle to a right-hand side with finiteness checks and
/// Jacobians (analytic or finite-difference).
#[derive(Clone)]
pub struct RhsModel {
    field: Arc<dyn VectorField>,
    label: String,
}

impl fmt::Debug for RhsModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RhsModel")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("jac_kind", &self.jac_kind())
            .finish()
    }
}

impl RhsModel {
    pub fn builtin(b: Builtin) -> Self {
        let label = b.name().to_string();
        Self {
            field: Arc::new(b),
            label,
        }
    }

    /// One expression per component; the dimension is the number of
    /// expressions.
    pub fn from_exprs<S: AsRef<str>>(sources: &[S]) -> Result<Self> {
        let field = ExprField::parse(sources)?;
        let label = field
            .components()
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        Ok(Self {
            field: Arc::new(field),
            label,
        })
    }

    /// Wraps a closure; Jacobians are finite differences.
    pub fn from_fn<F>(dim: usize, label: &str, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            field: Arc::new(FnField { dim, f }),
            label: label.to_string(),
        }
    }

    pub fn from_field(field: Arc<dyn VectorField>, label: &str) -> Self {
        Self {
            field,
            label: label.to_string(),
        }
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn jac_kind(&self) -> JacKind {
        self.field.jac_kind()
    }

    pub fn eval_into(&self, u: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        self.field.eval(u, v, out);
        if out.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("f({u:?}, {v:?})")))
        }
    }

    /// `f(u, v)`.
    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(u, v, &mut out)?;
        Ok(out)
    }

    pub fn jacobian_into(&self, u: &[f64], v: &[f64], which: Arg, out: &mut Matrix) -> Result<()> {
        let analytic =
            self.jac_kind() == JacKind::Analytic && self.field.analytic_jacobian(u, v, which, out);
        if !analytic {
            *out = self.fd_jacobian(u, v, which)?;
        }
        if out.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("Jacobian of f at ({u:?}, {v:?})")))
        }
    }

    /// `D1 f(u, v)` or `D2 f(u, v)`.
    pub fn jacobian(&self, u: &[f64], v: &[f64], which: Arg) -> Result<Matrix> {
        let mut out = Matrix::zeros(self.dim());
        self.jacobian_into(u, v, which, &mut out)?;
        Ok(out)
    }

    /// Central differences with step `eps^{1/3} max(1, |x_j|)` per coordinate.
    pub fn fd_jacobian(&self, u: &[f64], v: &[f64], which: Arg) -> Result<Matrix> {
        let n = self.dim();
        let mut jac = Matrix::zeros(n);
        let (mut up, mut vp) = (u.to_vec(), v.to_vec());
        let (mut fp, mut fm) = (vec![0.0; n], vec![0.0; n]);
        let base = f64::EPSILON.cbrt();
        for j in 0..n {
            let x0 = match which {
                Arg::Current => u[j],
                Arg::Delayed => v[j],
            };
            let step = base * x0.abs().max(1.0);
            let (xp, xm) = (x0 + step, x0 - step);
            let set = |up: &mut Vec<f64>, vp: &mut Vec<f64>, x: f64| match which {
                Arg::Current => up[j] = x,
                Arg::Delayed => vp[j] = x,
            };
            set(&mut up, &mut vp, xp);
            self.eval_into(&up, &vp, &mut fp)?;
            set(&mut up, &mut vp, xm);
            self.eval_into(&up, &vp, &mut fm)?;
            set(&mut up, &mut vp, x0);
            let width = xp - xm;
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / width;
            }
        }
        Ok(jac)
    }

    /// Sampled Lipschitz constant of `f` on `domain` with respect to the sum
    /// norm `|u| + |v|` on the argument pair, times [`LIPSCHITZ_SAFETY`].
    pub fn lipschitz_estimate(
        &self,
        domain: &BoxDomain,
        samples: usize,
        norm: VecNorm,
    ) -> Result<f64> {
        Ok(self.probe(domain, samples, norm)?.lipschitz)
    }

    /// Sampled Lipschitz constant and sampled `sup |f|` over `domain`.
    pub fn probe(&self, domain: &BoxDomain, samples: usize, norm: VecNorm) -> Result<BoxProbe> {
        let n = self.dim();
        if samples < 2 {
            return Err(Error::DomainViolation(format!(
                "need at least 2 samples, got {samples}"
            )));
        }
        if domain.lower.len() != 2 * n {
            return Err(Error::DomainViolation(format!(
                "box has {} coordinates, expected {}",
                domain.lower.len(),
                2 * n
            )));
        }
        let mut d1 = Matrix::zeros(n);
        let mut d2 = Matrix::zeros(n);
        let mut fx = vec![0.0; n];
        let mut max_jac = 0.0f64;
        let mut max_f = 0.0f64;
        for point in domain.sample_points(samples) {
            let (u, v) = point.split_at(n);
            self.eval_into(u, v, &mut fx)?;
            self.jacobian_into(u, v, Arg::Current, &mut d1)?;
            self.jacobian_into(u, v, Arg::Delayed, &mut d2)?;
            // ||[D1 D2]|| w.r.t. |u| + |v| is max(||D1||, ||D2||)
            let pair = d1.operator_norm(norm).max(d2.operator_norm(norm));
            max_jac = max_jac.max(pair);
            max_f = max_f.max(norm.norm(&fx));
        }
        Ok(BoxProbe {
            lipschitz: LIPSCHITZ_SAFETY * max_jac,
            sup: max_f,
        })
    }
}

/// Result of sampling a right-hand side over a box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxProbe {
    /// Safety-scaled Lipschitz estimate.
    pub lipschitz: f64,
    /// Largest sampled `|f|`, without safety factor.
    pub sup: f64,
}

/// Axis-aligned box in `R^N x R^N`: the first `N` coordinates bound the
/// current state, the last `N` the delayed state.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Corners are enumerated only up to this many coordinates.
const MAX_CORNER_DIM: usize = 12;

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() % 2 != 0 || lower.is_empty() {
            return Err(Error::DomainViolation(
                "box needs 2N lower and upper bounds".into(),
            ));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::DomainViolation("box needs lower <= upper".into()));
        }
        Ok(Self { lower, upper })
    }

    /// `[-radius, radius]^{2N}`.
    pub fn symmetric(dim: usize, radius: f64) -> Self {
        Self {
            lower: vec![-radius; 2 * dim],
            upper: vec![radius; 2 * dim],
        }
    }

    /// Box with independent ranges for the current and delayed state.
    pub fn product(u_range: (f64, f64), v_range: (f64, f64), dim: usize) -> Result<Self> {
        let mut lower = vec![u_range.0; dim];
        lower.extend(std::iter::repeat(v_range.0).take(dim));
        let mut upper = vec![u_range.1; dim];
        upper.extend(std::iter::repeat(v_range.1).take(dim));
        Self::new(lower, upper)
    }

    /// Deterministic sample: corners (for small dimension), the center, and
    /// the first `samples` points of a Halton sequence.
    pub fn sample_points(&self, samples: usize) -> Vec<Vec<f64>> {
        let d = self.lower.len();
        let mut pts = Vec::new();
        if d <= MAX_CORNER_DIM {
            for mask in 0u32..(1 << d) {
                pts.push(
                    (0..d)
                        .map(|i| {
                            if mask & (1 << i) != 0 {
                                self.upper[i]
                            } else {
                                self.lower[i]
                            }
                        })
                        .collect(),
                );
            }
        }
        pts.push(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
        );
        let primes = first_primes(d);
        for k in 1..=samples {
            pts.push(
                primes
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| {
                        let s = radical_inverse(k as u64, p);
                        self.lower[i] + s * (self.upper[i] - self.lower[i])
                    })
                    .collect(),
            );
        }
        pts
    }
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut out) = (inv, 0.0);
    while k > 0 {
        out += (k % base) as f64 * f;
        k /= base;
        f *= inv;
    }
    out
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= c)
            .all(|&p| c % p != 0)
        {
            primes.push(c);
        }
        c += 1;
    }
    primes
}
