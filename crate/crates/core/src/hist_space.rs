//! Continuous piecewise-linear functions on uniform grids, used as exact
//! elements of `W^{1,p}([a,b], R^N)`.
//!
//! A [`GridFunction`] stores nodal values at `a + k h`, `h = (b - a) / M`.
//! Its almost-everywhere derivative is the piecewise-constant slope
//! function, so every norm below is evaluated in closed form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance (in units of the interval length) accepted when a
/// time lies marginally outside `[a, b]`.
const DOMAIN_TOL: f64 = 1e-12;

/// Relative tolerance (in grid units) under which a time snaps onto a node.
const SNAP_TOL: f64 = 1e-9;

/// The norm `|.|` on `R^N`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VecNorm {
    L1,
    #[default]
    L2,
    Linf,
}

impl VecNorm {
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            VecNorm::L1 => v.iter().map(|x| x.abs()).sum(),
            VecNorm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            VecNorm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

/// Exponent `p` of the Sobolev norm together with the vector norm on `R^N`.
///
/// The Hölder conjugate `q = p / (p - 1)` is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PNormJson", into = "PNormJson")]
pub struct PNorm {
    p: f64,
    vec_norm: VecNorm,
}

#[derive(Serialize, Deserialize)]
struct PNormJson {
    p: f64,
    #[serde(default)]
    vec_norm: VecNorm,
}

impl TryFrom<PNormJson> for PNorm {
    type Error = Error;
    fn try_from(raw: PNormJson) -> Result<Self> {
        PNorm::new(raw.p, raw.vec_norm)
    }
}

impl From<PNorm> for PNormJson {
    fn from(n: PNorm) -> Self {
        PNormJson {
            p: n.p,
            vec_norm: n.vec_norm,
        }
    }
}

impl Default for PNorm {
    fn default() -> Self {
        Self {
            p: 2.0,
            vec_norm: VecNorm::L2,
        }
    }
}

impl PNorm {
    pub fn new(p: f64, vec_norm: VecNorm) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::DomainViolation(format!(
                "p must satisfy 1 <= p < inf, got {p}"
            )));
        }
        Ok(Self { p, vec_norm })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn vec_norm(&self) -> VecNorm {
        self.vec_norm
    }

    /// `q = p / (p - 1)`, infinite for `p = 1`.
    pub fn conjugate(&self) -> f64 {
        if self.p == 1.0 {
            f64::INFINITY
        } else {
            self.p / (self.p - 1.0)
        }
    }

    /// `1 / q`, which is `0` for `p = 1`.
    pub fn inv_conjugate(&self) -> f64 {
        1.0 - 1.0 / self.p
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.vec_norm.norm(v)
    }
}

/// A continuous piecewise-linear function `[a, b] -> R^N` on a uniform grid
/// of `M >= 1` subintervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFunctionJson", into = "GridFunctionJson")]
pub struct GridFunction {
    a: f64,
    b: f64,
    segments: usize,
    dim: usize,
    /// Row-major nodal values, `(segments + 1) * dim` entries.
    values: Vec<f64>,
}

impl GridFunction {
    /// Builds a grid function from flat row-major nodal values.
    pub fn new(a: f64, b: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidGrid(format!(
                "need a < b, got a = {a}, b = {b}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if values.len() % dim != 0 {
            return Err(Error::InvalidGrid(format!(
                "{} values do not split into rows of length {dim}",
                values.len()
            )));
        }
        let rows = values.len() / dim;
        if rows < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least two nodes (one subinterval), got {rows}"
            )));
        }
        Ok(Self {
            a,
            b,
            segments: rows - 1,
            dim,
            values,
        })
    }

    pub fn from_rows(a: f64, b: f64, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some((k, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::InvalidGrid(format!(
                "row {k} has length {}, expected {dim}",
                row.len()
            )));
        }
        Self::new(a, b, dim, rows.concat())
    }

    /// Samples `f` at the `segments + 1` nodes of `[a, b]`.
    pub fn from_fn(
        a: f64,
        b: f64,
        segments: usize,
        dim: usize,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Result<Self> {
        if segments == 0 {
            return Err(Error::InvalidGrid("need at least one subinterval".into()));
        }
        let h = (b - a) / segments as f64;
        let mut values = vec![0.0; (segments + 1) * dim];
        for (k, row) in values.chunks_mut(dim.max(1)).enumerate() {
            let t = if k == segments { b } else { a + k as f64 * h };
            f(t, row);
        }
        Self::new(a, b, dim, values)
    }

    pub fn constant(a: f64, b: f64, segments: usize, value: &[f64]) -> Result<Self> {
        Self::from_fn(a, b, segments, value.len(), |_, out| {
            out.copy_from_slice(value)
        })
    }

    pub fn zeros(a: f64, b: f64, segments: usize, dim: usize) -> Result<Self> {
        Self::from_fn(a, b, segments, dim, |_, out| out.fill(0.0))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.segments as f64
    }

    pub fn node_time(&self, k: usize) -> f64 {
        if k == self.segments {
            self.b
        } else {
            self.a + k as f64 * self.step()
        }
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Slope of the `k`-th subinterval written into `out`.
    pub fn slope_into(&self, k: usize, out: &mut [f64]) {
        let h = self.step();
        let (lo, hi) = (self.node(k), self.node(k + 1));
        for ((o, l), r) in out.iter_mut().zip(lo).zip(hi) {
            *o = (r - l) / h;
        }
    }

    pub fn slope(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.slope_into(k, &mut out);
        out
    }

    /// Splits `t` into a subinterval index and a local coordinate in `[0, 1)`.
    /// A node `k` is returned as `(k, 0.0)`, including `k = M`.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let tol = DOMAIN_TOL * (self.b - self.a);
        if !t.is_finite() || t < self.a - tol || t > self.b + tol {
            return Err(Error::OutOfDomain {
                t,
                a: self.a,
                b: self.b,
            });
        }
        let s = ((t - self.a) / self.step()).clamp(0.0, self.segments as f64);
        let nearest = s.round();
        if (s - nearest).abs() <= SNAP_TOL * nearest.max(1.0) {
            return Ok((nearest as usize, 0.0));
        }
        let k = (s.floor() as usize).min(self.segments - 1);
        Ok((k, s - k as f64))
    }

    pub fn evaluate_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let (k, lambda) = self.locate(t)?;
        if lambda == 0.0 {
            out.copy_from_slice(self.node(k));
        } else {
            let (lo, hi) = (self.node(k), self.node(k + 1));
            for ((o, l), r) in out.iter_mut().zip(lo).zip(hi) {
                *o = (1.0 - lambda) * l + lambda * r;
            }
        }
        Ok(())
    }

    /// Linear interpolation between the bracketing nodes; exact at nodes.
    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.evaluate_into(t, &mut out)?;
        Ok(out)
    }

    /// Index of the subinterval whose slope is the right-continuous
    /// derivative at `t` (the last one at `t = b`).
    pub fn right_segment(&self, t: f64) -> Result<usize> {
        let (k, _) = self.locate(t)?;
        Ok(k.min(self.segments - 1))
    }

    /// Index of the subinterval whose slope is the left-continuous
    /// derivative at `t` (the first one at `t = a`).
    pub fn left_segment(&self, t: f64) -> Result<usize> {
        let (k, lambda) = self.locate(t)?;
        Ok(if lambda == 0.0 {
            k.saturating_sub(1)
        } else {
            k
        })
    }

    /// Right-continuous a.e. derivative; at `b` the last slope.
    pub fn derivative_at(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.slope(self.right_segment(t)?))
    }

    /// Left-continuous a.e. derivative; at `a` the first slope.
    pub fn derivative_left_at(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.slope(self.left_segment(t)?))
    }

    /// `sum_k h |slope_k|^p`, the `p`-th power of `||x'||_{L^p}`.
    fn deriv_power_sum(&self, nrm: &PNorm) -> f64 {
        let h = self.step();
        let mut slope = vec![0.0; self.dim];
        (0..self.segments)
            .map(|k| {
                self.slope_into(k, &mut slope);
                h * nrm.norm(&slope).powf(nrm.p())
            })
            .sum()
    }

    /// `(|x(a)|^p + ||x'||_{L^p}^p)^{1/p}`, exact for the representation.
    pub fn w1p_norm(&self, nrm: &PNorm) -> f64 {
        let head = nrm.norm(self.node(0)).powf(nrm.p());
        (head + self.deriv_power_sum(nrm)).powf(1.0 / nrm.p())
    }

    pub fn lp_deriv_norm(&self, nrm: &PNorm) -> f64 {
        self.deriv_power_sum(nrm).powf(1.0 / nrm.p())
    }

    /// Maximum over nodes, which is the true supremum since `|x(.)|` is
    /// convex on each subinterval.
    pub fn sup_norm(&self, nrm: &PNorm) -> f64 {
        self.nodes().fold(0.0, |m, row| m.max(nrm.norm(row)))
    }

    /// Checks `||x||_W <= ||x||_C + ||x'||_Lp <= 2^{1/q} [(b-a)^{1/q} + 1] ||x||_W`.
    pub fn norm_equivalence_bounds(&self, nrm: &PNorm) -> (bool, bool) {
        let (low, mid, high) = self.norm_equivalence_sides(nrm);
        let slack = 1.0 + 1e-12;
        (low <= mid * slack, mid <= high * slack)
    }

    /// The three quantities compared by [`Self::norm_equivalence_bounds`].
    pub fn norm_equivalence_sides(&self, nrm: &PNorm) -> (f64, f64, f64) {
        let w = self.w1p_norm(nrm);
        let mid = self.sup_norm(nrm) + self.lp_deriv_norm(nrm);
        let iq = nrm.inv_conjugate();
        let constant = 2f64.powf(iq) * ((self.b - self.a).powf(iq) + 1.0);
        (w, mid, constant * w)
    }

    /// Number of grid steps `t` spans, if it is (numerically) an integer.
    pub fn steps_in(&self, t: f64) -> Option<usize> {
        let s = t / self.step();
        let n = s.round();
        ((s - n).abs() <= SNAP_TOL * n.max(1.0) && n >= 0.0).then_some(n as usize)
    }

    /// `R_t x`: the history `theta -> x(t + theta)` on `[-R, 0]`, `R = -a`.
    ///
    /// Grid-aligned `t` is a pure index shift; otherwise nodal values are
    /// interpolated.
    pub fn history_at(&self, t: f64) -> Result<GridFunction> {
        let lag = -self.a;
        let tol = DOMAIN_TOL * (self.b - self.a);
        if lag <= 0.0 || self.b < -tol {
            return Err(Error::DomainViolation(format!(
                "history needs a function on [-R, T] with R > 0, T >= 0; got [{}, {}]",
                self.a, self.b
            )));
        }
        if !(t >= -tol && t <= self.b + tol) {
            return Err(Error::OutOfDomain {
                t,
                a: 0.0,
                b: self.b,
            });
        }
        let m = self.steps_in(lag).ok_or_else(|| {
            Error::GridMismatch(format!(
                "R = {lag} is not a multiple of h = {}",
                self.step()
            ))
        })?;
        if let Some(j) = self.steps_in(t.max(0.0)) {
            let j = j.min(self.segments - m);
            let values = self.values[j * self.dim..(j + m + 1) * self.dim].to_vec();
            return GridFunction::new(self.a, 0.0, self.dim, values);
        }
        let h = self.step();
        let mut values = vec![0.0; (m + 1) * self.dim];
        for (k, row) in values.chunks_mut(self.dim).enumerate() {
            let tau = (t + self.a + k as f64 * h).min(self.b);
            self.evaluate_into(tau, row)?;
        }
        GridFunction::new(self.a, 0.0, self.dim, values)
    }

    /// Static prolongation `phi_bar` on `[a, horizon]`: the function is
    /// frozen at its value at `b` beyond `b`.
    pub fn static_prolongation(&self, horizon: f64) -> Result<GridFunction> {
        let extra = horizon - self.b;
        let n = self
            .steps_in(extra)
            .filter(|&n| n >= 1 && extra > 0.0)
            .ok_or_else(|| {
                Error::GridMismatch(format!(
                    "prolongation length {extra} is not a positive multiple of h = {}",
                    self.step()
                ))
            })?;
        let mut values = Vec::with_capacity((self.segments + 1 + n) * self.dim);
        values.extend_from_slice(&self.values);
        let last = self.node(self.segments).to_vec();
        for _ in 0..n {
            values.extend_from_slice(&last);
        }
        GridFunction::new(self.a, horizon, self.dim, values)
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        let tol = DOMAIN_TOL * (self.b - self.a).abs().max(1.0);
        self.segments == other.segments
            && self.dim == other.dim
            && (self.a - other.a).abs() <= tol
            && (self.b - other.b).abs() <= tol
    }

    fn require_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}] with M = {}, N = {} vs [{}, {}] with M = {}, N = {}",
                self.a,
                self.b,
                self.segments,
                self.dim,
                other.a,
                other.b,
                other.segments,
                other.dim
            )))
        }
    }

    /// Nodal linear combination `alpha x + beta y`.
    pub fn combine(
        alpha: f64,
        x: &GridFunction,
        beta: f64,
        y: &GridFunction,
    ) -> Result<GridFunction> {
        x.require_same_grid(y)?;
        let values = x
            .values
            .iter()
            .zip(&y.values)
            .map(|(u, v)| alpha * u + beta * v)
            .collect();
        Ok(GridFunction {
            values,
            ..x.clone()
        })
    }

    pub fn scaled(&self, alpha: f64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|v| alpha * v).collect(),
            ..self.clone()
        }
    }

    /// Restriction to the grid-aligned subinterval `[t0, t1]`.
    pub fn restrict(&self, t0: f64, t1: f64) -> Result<GridFunction> {
        let k0 = self.steps_in(t0 - self.a);
        let k1 = self.steps_in(t1 - self.a);
        match (k0, k1) {
            (Some(k0), Some(k1)) if k0 < k1 && k1 <= self.segments => {
                let values = self.values[k0 * self.dim..(k1 + 1) * self.dim].to_vec();
                GridFunction::new(t0, t1, self.dim, values)
            }
            _ => Err(Error::GridMismatch(format!(
                "[{t0}, {t1}] is not a grid-aligned subinterval of [{}, {}]",
                self.a, self.b
            ))),
        }
    }

    /// Interpolates onto a uniform grid of `segments` subintervals.
    pub fn resample(&self, segments: usize) -> Result<GridFunction> {
        let mut err = None;
        let out = GridFunction::from_fn(self.a, self.b, segments, self.dim, |t, row| {
            if let Err(e) = self.evaluate_into(t, row) {
                err.get_or_insert(e);
            }
        })?;
        err.map_or(Ok(out), Err)
    }

    /// Writes one row per node: `t, x_1, ..., x_N`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x_{i}")));
        w.write_record(&header)?;
        for k in 0..=self.segments {
            let mut row = vec![self.node_time(k)];
            row.extend_from_slice(self.node(k));
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`Self::write_csv`]; the grid is taken
    /// from the first and last `t` entries.
    pub fn read_csv<R: Read>(reader: R) -> Result<GridFunction> {
        let mut r = csv::Reader::from_reader(reader);
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for record in r.deserialize::<Vec<f64>>() {
            let mut rec = record?;
            if rec.len() < 2 {
                return Err(Error::InvalidGrid(
                    "CSV rows need t and at least one component".into(),
                ));
            }
            times.push(rec.remove(0));
            rows.push(rec);
        }
        let (a, b) = match (times.first(), times.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::InvalidGrid("empty CSV".into())),
        };
        GridFunction::from_rows(a, b, &rows)
    }
}

/// `alpha x + beta y` for grid functions on identical grids.
pub fn combine(alpha: f64, x: &GridFunction, beta: f64, y: &GridFunction) -> Result<GridFunction> {
    GridFunction::combine(alpha, x, beta, y)
}

#[derive(Serialize, Deserialize)]
struct GridFunctionJson {
    a: f64,
    b: f64,
    dim: usize,
    values: Vec<Vec<f64>>,
}

impl TryFrom<GridFunctionJson> for GridFunction {
    type Error = Error;

    fn try_from(raw: GridFunctionJson) -> Result<Self> {
        let g = GridFunction::from_rows(raw.a, raw.b, &raw.values)?;
        if g.dim != raw.dim {
            return Err(Error::InvalidGrid(format!(
                "declared dim {} but rows have length {}",
                raw.dim, g.dim
            )));
        }
        Ok(g)
    }
}

impl From<GridFunction> for GridFunctionJson {
    fn from(g: GridFunction) -> Self {
        GridFunctionJson {
            a: g.a,
            b: g.b,
            dim: g.dim,
            values: g.values.chunks(g.dim).map(<[f64]>::to_vec).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(a: f64, b: f64, vals: &[f64]) -> GridFunction {
        GridFunction::new(a, b, 1, vals.to_vec()).unwrap()
    }

    fn random_fn(rng: &mut ChaCha8Rng, dim: usize) -> GridFunction {
        let a = rng.gen_range(-3.0..0.0);
        let b = a + rng.gen_range(0.1..3.0);
        let m = rng.gen_range(1..40);
        GridFunction::from_fn(a, b, m, dim, |_, row| {
            row.iter_mut().for_each(|v| *v = rng.gen_range(-2.0..2.0))
        })
        .unwrap()
    }

    #[test]
    fn evaluate_interpolates_and_is_exact_at_nodes() {
        let x = scalar(0.0, 1.0, &[0.0, 1.0]);
        assert_eq!(x.evaluate(0.5).unwrap(), vec![0.5]);
        let y = scalar(-1.0, 0.0, &[3.0, -7.25, 0.125, 9.5]);
        for k in 0..=3 {
            assert_eq!(y.evaluate(y.node_time(k)).unwrap(), y.node(k));
        }
    }

    #[test]
    fn evaluate_sine_samples() {
        let x = GridFunction::from_fn(0.0, 1.0, 1000, 1, |t, o| o[0] = t.sin()).unwrap();
        let v = x.evaluate(0.3).unwrap()[0];
        assert!((v - 0.3f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn evaluate_rejects_out_of_domain() {
        let x = scalar(0.0, 1.0, &[0.0, 1.0]);
        assert!(matches!(x.evaluate(1.1), Err(Error::OutOfDomain { .. })));
        assert!(matches!(x.evaluate(-0.01), Err(Error::OutOfDomain { .. })));
        assert!(x.evaluate(1.0 + 1e-14).is_ok());
    }

    #[test]
    fn derivative_conventions() {
        let x = scalar(0.0, 1.0, &[0.0, 1.0]);
        assert_eq!(x.derivative_at(0.3).unwrap(), vec![1.0]);
        assert_eq!(x.derivative_at(1.0).unwrap(), vec![1.0]);
        let c = scalar(0.0, 2.0, &[4.0, 4.0, 4.0]);
        assert_eq!(c.derivative_at(1.0).unwrap(), vec![0.0]);
        // |t - 0.5| with a node at 0.5
        let k = GridFunction::from_fn(0.0, 1.0, 4, 1, |t, o| o[0] = (t - 0.5).abs()).unwrap();
        assert_eq!(k.derivative_at(0.5).unwrap(), vec![1.0]);
        assert_eq!(k.derivative_left_at(0.5).unwrap(), vec![-1.0]);
        assert_eq!(k.derivative_left_at(0.0).unwrap(), vec![-1.0]);
    }

    #[test]
    fn derivative_integrates_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_fn(&mut rng, 2);
        let h = x.step();
        let mut acc = x.node(0).to_vec();
        for k in 0..x.segments() {
            let d = x.derivative_at(x.node_time(k)).unwrap();
            for (a, s) in acc.iter_mut().zip(&d) {
                *a += h * s;
            }
            for (a, v) in acc.iter().zip(x.node(k + 1)) {
                assert!((a - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn w1p_norm_closed_forms() {
        let nrm = PNorm::default();
        assert_eq!(
            GridFunction::zeros(-1.0, 0.0, 5, 3).unwrap().w1p_norm(&nrm),
            0.0
        );
        let x = GridFunction::from_fn(-1.0, 0.0, 10, 1, |t, o| o[0] = t).unwrap();
        assert!((x.w1p_norm(&nrm) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn w1p_norm_matches_riemann_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x =
            GridFunction::from_fn(0.0, 1.0, 5, 1, |_, o| o[0] = rng.gen_range(-1.0..1.0)).unwrap();
        let nrm = PNorm::new(3.0, VecNorm::L2).unwrap();
        let n = 100_000;
        let dt = 1.0 / n as f64;
        let riemann: f64 = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * dt;
                x.derivative_at(t).unwrap()[0].abs().powi(3) * dt
            })
            .sum();
        let oracle = (x.node(0)[0].abs().powi(3) + riemann).powf(1.0 / 3.0);
        assert!((x.w1p_norm(&nrm) - oracle).abs() < 1e-8);
    }

    #[test]
    fn sup_norm_matches_dense_sampling() {
        let nrm = PNorm::default();
        assert_eq!(scalar(0.0, 1.0, &[-3.0, 1.0]).sup_norm(&nrm), 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_fn(&mut rng, 2);
        let n = 100_000;
        let dense = (0..=n)
            .map(|i| {
                let t = x.a() + (x.b() - x.a()) * i as f64 / n as f64;
                nrm.norm(&x.evaluate(t).unwrap())
            })
            .fold(0.0, f64::max);
        // the supremum is attained at a node, reached through evaluate()
        let at_nodes = (0..=x.segments())
            .map(|k| nrm.norm(&x.evaluate(x.node_time(k)).unwrap()))
            .fold(0.0, f64::max);
        assert!(x.sup_norm(&nrm) >= dense - 1e-12);
        assert!((x.sup_norm(&nrm) - at_nodes).abs() < 1e-12);
    }

    #[test]
    fn norm_equivalence_examples() {
        let nrm = PNorm::default();
        let z = GridFunction::zeros(0.0, 1.0, 3, 1).unwrap();
        assert_eq!(z.norm_equivalence_bounds(&nrm), (true, true));
        let x = GridFunction::from_fn(-1.0, 0.0, 10, 1, |t, o| o[0] = t).unwrap();
        assert_eq!(x.norm_equivalence_bounds(&nrm), (true, true));
        for p in [1.0, 1.5, 2.0, 3.0] {
            let nrm = PNorm::new(p, VecNorm::L1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
            for _ in 0..200 {
                let x = random_fn(&mut rng, 3);
                assert_eq!(x.norm_equivalence_bounds(&nrm), (true, true));
            }
        }
    }

    #[test]
    fn history_at_zero_and_tail() {
        let phi = GridFunction::from_fn(-1.0, 0.0, 10, 1, |t, o| o[0] = t * t).unwrap();
        let bar = phi.static_prolongation(2.0).unwrap();
        let h0 = bar.history_at(0.0).unwrap();
        assert_eq!(h0.values(), phi.values());
        let tail = bar.history_at(1.5).unwrap();
        assert!(tail.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn history_at_off_grid_matches_dense_shift() {
        let x = GridFunction::from_fn(-1.0, 1.0, 200, 1, |t, o| o[0] = (3.0 * t).sin()).unwrap();
        let h = x.step();
        let t = 0.37 * h;
        let hist = x.history_at(t).unwrap();
        for k in 0..=hist.segments() {
            let theta = hist.node_time(k);
            let expect = x.evaluate((t + theta).min(x.b())).unwrap()[0];
            assert!((hist.node(k)[0] - expect).abs() < 1e-10);
        }
        assert!(x.history_at(1.5).is_err());
    }

    #[test]
    fn history_composition_is_index_shift() {
        let x = GridFunction::from_fn(-1.0, 2.0, 300, 2, |t, o| {
            o[0] = t.cos();
            o[1] = t * t
        })
        .unwrap();
        let direct = x.history_at(0.7).unwrap();
        let tail = x.restrict(-1.0 + 0.3, 2.0).unwrap();
        let tail =
            GridFunction::new(-1.0, tail.b() - tail.a() - 1.0, 2, tail.into_values()).unwrap();
        assert_eq!(tail.history_at(0.4).unwrap().values(), direct.values());
    }

    #[test]
    fn prolongation_is_isometric() {
        let phi = GridFunction::from_fn(-1.0, 0.0, 10, 1, |t, o| o[0] = t).unwrap();
        let bar = phi.static_prolongation(2.0).unwrap();
        let nrm = PNorm::default();
        assert!((bar.w1p_norm(&nrm) - 2f64.sqrt()).abs() < 1e-14);
        let five = GridFunction::constant(-1.0, 0.0, 4, &[5.0]).unwrap();
        assert!(five
            .static_prolongation(1.0)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 5.0));
        assert!(matches!(
            phi.static_prolongation(0.05),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn combine_is_pointwise() {
        let x = scalar(0.0, 1.0, &[1.0, 2.0, 3.0]);
        let y = scalar(0.0, 1.0, &[-1.0, 0.5, 4.0]);
        assert!(combine(1.0, &x, -1.0, &x)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        assert_eq!(combine(1.0, &x, 0.0, &y).unwrap(), x);
        assert_eq!(
            combine(2.0, &x, 3.0, &y).unwrap().node(2),
            &[2.0 * 3.0 + 3.0 * 4.0]
        );
        let z = scalar(0.0, 2.0, &[1.0, 2.0, 3.0]);
        assert!(matches!(
            combine(1.0, &x, 1.0, &z),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn construction_rejects_degenerate_input() {
        assert!(GridFunction::new(0.0, 1.0, 1, vec![1.0]).is_err());
        assert!(GridFunction::new(1.0, 1.0, 1, vec![1.0, 2.0]).is_err());
        assert!(GridFunction::from_rows(0.0, 1.0, &[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(PNorm::new(0.5, VecNorm::L2).is_err());
        assert!(PNorm::new(f64::INFINITY, VecNorm::L2).is_err());
    }

    #[test]
    fn json_validates_on_read() {
        let x = scalar(-1.0, 0.0, &[0.5, 1.5]);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"a":-1.0,"b":0.0,"dim":1,"values":[[0.5],[1.5]]}"#);
        assert_eq!(serde_json::from_str::<GridFunction>(&s).unwrap(), x);
        let bad = r#"{"a":-1.0,"b":0.0,"dim":2,"values":[[0.5],[1.5]]}"#;
        assert!(serde_json::from_str::<GridFunction>(bad).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let x = GridFunction::from_fn(-1.0, 2.0, 37, 2, |t, o| {
            o[0] = (7.0 * t).sin() / 3.0;
            o[1] = t.exp()
        })
        .unwrap();
        let mut buf = Vec::new();
        x.write_csv(&mut buf).unwrap();
        let y = GridFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(x.values(), y.values());
    }

    #[test]
    fn conjugate_exponent() {
        assert!(PNorm::new(1.0, VecNorm::L2)
            .unwrap()
            .conjugate()
            .is_infinite());
        assert_eq!(PNorm::new(2.0, VecNorm::L2).unwrap().conjugate(), 2.0);
        assert_eq!(PNorm::new(1.0, VecNorm::L2).unwrap().inv_conjugate(), 0.0);
    }
}
