//! Index bookkeeping for one window `[-R, T]` glued to a history on `[-R, 0]`.
//!
//! Nodal arrays here are flat, row-major and cover the whole window: `mr`
//! history steps followed by `n` new steps, `mr + n + 1` nodes in total.

use crate::error::{Error, Result};
use crate::hist_space::{GridFunction, PNorm};
use crate::rhs::RhsModel;

/// Relative tolerance for snapping a delay to a whole number of steps.
const DELAY_SNAP: f64 = 1e-9;

/// The delay `r = (whole + frac) h`, `0 <= frac < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Shift {
    whole: usize,
    frac: f64,
}

impl Shift {
    pub(crate) fn new(r: f64, h: f64) -> Self {
        let s = r / h;
        let nearest = s.round();
        if (s - nearest).abs() <= DELAY_SNAP * nearest.max(1.0) {
            Shift {
                whole: nearest as usize,
                frac: 0.0,
            }
        } else {
            let whole = s.floor();
            Shift {
                whole: whole as usize,
                frac: s - whole,
            }
        }
    }

    /// `(k, w)` with `x(t_node - r) = (1 - w) x[k] + w x[k + 1]`.
    pub(crate) fn bracket(&self, node: usize) -> (usize, f64) {
        if self.frac == 0.0 {
            (node - self.whole, 0.0)
        } else {
            (node - self.whole - 1, 1.0 - self.frac)
        }
    }

    /// Segment carrying the right-continuous slope at `t_node - r`.
    pub(crate) fn right_segment(&self, node: usize) -> usize {
        self.bracket(node).0
    }

    /// Segment carrying the left-continuous slope at `t_node - r`.
    pub(crate) fn left_segment(&self, node: usize) -> usize {
        node - self.whole - 1
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Frame<'a> {
    pub phi: &'a GridFunction,
    /// History steps, `R / h`.
    pub mr: usize,
    /// Window steps, `T / h`.
    pub n: usize,
    pub dim: usize,
    pub h: f64,
    pub shift: Shift,
}

impl<'a> Frame<'a> {
    pub(crate) fn new(phi: &'a GridFunction, r: f64, n: usize) -> Result<Self> {
        let lag = -phi.a();
        let h = phi.step();
        if lag <= 0.0 || phi.b().abs() > 1e-12 * lag {
            return Err(Error::DomainViolation(format!(
                "history must live on [-R, 0] with R > 0, got [{}, {}]",
                phi.a(),
                phi.b()
            )));
        }
        let tol = 1e-12 * lag;
        if !(r >= -tol && r <= lag + tol) {
            return Err(Error::DomainViolation(format!(
                "delay r = {r} outside [0, {lag}]"
            )));
        }
        if n == 0 {
            return Err(Error::WindowTooSmall { window: 0.0, h });
        }
        let r = r.clamp(0.0, lag);
        Ok(Frame {
            phi,
            mr: phi.segments(),
            n,
            dim: phi.dim(),
            h,
            shift: Shift::new(r, h),
        })
    }

    pub(crate) fn total_nodes(&self) -> usize {
        self.mr + self.n + 1
    }

    pub(crate) fn horizon(&self) -> f64 {
        self.n as f64 * self.h
    }

    /// `y + phi_bar` for window nodes `y` (zero on the history part).
    pub(crate) fn glue(&self, y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let phi = self.phi.values();
        let last = self.phi.node(self.mr);
        let mut x = Vec::with_capacity(self.total_nodes() * d);
        for k in 0..self.total_nodes() {
            let base = if k <= self.mr {
                &phi[k * d..(k + 1) * d]
            } else {
                last
            };
            x.extend(base.iter().zip(&y[k * d..(k + 1) * d]).map(|(p, v)| p + v));
        }
        x
    }

    /// Value at `s_i - r` of the nodal array `x`, with `s_i` the `i`-th
    /// window node.
    pub(crate) fn delayed(&self, x: &[f64], i: usize, out: &mut [f64]) {
        let d = self.dim;
        let (k, w) = self.shift.bracket(self.mr + i);
        let lo = &x[k * d..(k + 1) * d];
        if w == 0.0 {
            out.copy_from_slice(lo);
        } else {
            let hi = &x[(k + 1) * d..(k + 2) * d];
            for ((o, l), r) in out.iter_mut().zip(lo).zip(hi) {
                *o = (1.0 - w) * l + w * r;
            }
        }
    }

    pub(crate) fn segment_slope(&self, x: &[f64], k: usize, out: &mut [f64]) {
        let d = self.dim;
        for (j, o) in out.iter_mut().enumerate() {
            *o = (x[(k + 1) * d + j] - x[k * d + j]) / self.h;
        }
    }

    /// Samples `f((x)(s_i), x(s_i - r))` at the `n + 1` window nodes.
    pub(crate) fn integrand(&self, m: &RhsModel, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim;
        let mut g = vec![0.0; (self.n + 1) * d];
        let mut v = vec![0.0; d];
        for i in 0..=self.n {
            let node = self.mr + i;
            self.delayed(x, i, &mut v);
            m.eval_into(&x[node * d..(node + 1) * d], &v, &mut g[i * d..(i + 1) * d])?;
        }
        Ok(g)
    }

    /// Interval averages `(g_i + g_{i+1}) / 2`.
    pub(crate) fn averaged(&self, g: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..self.n * d).map(|j| 0.5 * (g[j] + g[j + d])).collect()
    }

    /// Nodal values on `[-R, T]` that vanish on the history and have the
    /// given window slopes.
    pub(crate) fn cumulate(&self, slopes: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut z = vec![0.0; self.total_nodes() * d];
        for i in 0..self.n {
            let at = (self.mr + i) * d;
            for j in 0..d {
                z[at + d + j] = z[at + j] + self.h * slopes[i * d + j];
            }
        }
        z
    }

    /// `(sum_i h |s_i - t_i|^p)^{1/p}` over window slopes, i.e. the
    /// `W^{1,p}` distance of two functions that vanish on the history.
    pub(crate) fn slope_distance(&self, s: &[f64], t: &[f64], nrm: &PNorm) -> f64 {
        let d = self.dim;
        let mut diff = vec![0.0; d];
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..d {
                diff[j] = s[i * d + j] - t[i * d + j];
            }
            acc += self.h * nrm.norm(&diff).powf(nrm.p());
        }
        acc.powf(1.0 / nrm.p())
    }

    pub(crate) fn slope_norm(&self, s: &[f64], nrm: &PNorm) -> f64 {
        self.slope_distance(s, &vec![0.0; s.len()], nrm)
    }

    pub(crate) fn to_grid(&self, nodes: Vec<f64>) -> Result<GridFunction> {
        GridFunction::new(self.phi.a(), self.horizon(), self.dim, nodes)
    }

    /// Checks that `y` lives on this frame's grid `[-R, T]`.
    pub(crate) fn check(&self, y: &GridFunction, what: &str) -> Result<()> {
        let tol = 1e-9 * self.h;
        if y.dim() != self.dim
            || y.segments() != self.mr + self.n
            || (y.a() - self.phi.a()).abs() > tol
            || (y.b() - self.horizon()).abs() > tol * (self.n as f64).max(1.0)
        {
            return Err(Error::GridMismatch(format!(
                "{what} on [{}, {}] with M = {}, N = {} does not match [{}, {}] with M = {}, N = {}",
                y.a(),
                y.b(),
                y.segments(),
                y.dim(),
                self.phi.a(),
                self.horizon(),
                self.mr + self.n,
                self.dim
            )));
        }
        Ok(())
    }
}

/// Number of whole steps of `h` in `t`, if `t` is grid-aligned.
pub(crate) fn steps_of(t: f64, h: f64) -> Option<usize> {
    let s = t / h;
    let n = s.round();
    ((s - n).abs() <= DELAY_SNAP * n.max(1.0) && n >= 0.0).then_some(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_brackets() {
        let s = Shift::new(1.0, 0.25);
        assert_eq!(
            s,
            Shift {
                whole: 4,
                frac: 0.0
            }
        );
        assert_eq!(s.bracket(6), (2, 0.0));
        assert_eq!(s.right_segment(6), 2);
        assert_eq!(s.left_segment(6), 1);

        let s = Shift::new(0.3, 0.25);
        assert_eq!(s.whole, 1);
        assert!((s.frac - 0.2).abs() < 1e-12);
        // t_6 - r sits at node 4.8: between nodes 4 and 5, weight 0.8 on 5
        let (k, w) = s.bracket(6);
        assert_eq!(k, 4);
        assert!((w - 0.8).abs() < 1e-12);
        assert_eq!(s.right_segment(6), 4);
        assert_eq!(s.left_segment(6), 4);
    }
}
