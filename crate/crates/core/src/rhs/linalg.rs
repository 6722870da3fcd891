//! Dense square matrices small enough for Jacobians of `f`.

use crate::hist_space::VecNorm;

/// Row-major `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.data.iter_mut().for_each(|v| *v *= s);
        self
    }

    /// `out += self * x`.
    pub fn mul_add_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_add_into(x, &mut out);
        out
    }

    fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, xi) in x.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.data[i * self.n + j] * xi;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Operator norm induced by `norm` on both sides.
    pub fn operator_norm(&self, norm: VecNorm) -> f64 {
        let n = self.n;
        match norm {
            VecNorm::L1 => (0..n)
                .map(|j| (0..n).map(|i| self.data[i * n + j].abs()).sum::<f64>())
                .fold(0.0, f64::max),
            VecNorm::Linf => (0..n)
                .map(|i| {
                    self.data[i * n..(i + 1) * n]
                        .iter()
                        .map(|v| v.abs())
                        .sum::<f64>()
                })
                .fold(0.0, f64::max),
            VecNorm::L2 => self.spectral_norm(),
        }
    }

    /// Largest singular value by power iteration on `A^T A`, stopped at a
    /// relative change of `1e-10` in the Rayleigh quotient.
    pub fn spectral_norm(&self) -> f64 {
        if self.data.iter().all(|&v| v == 0.0) {
            return 0.0;
        }
        // Fixed, irregular start vector: nonzero overlap with every direction
        // except on a measure-zero set.
        let mut v: Vec<f64> = (0..self.n)
            .map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
            .collect();
        normalize(&mut v);
        let mut lambda = 0.0;
        for _ in 0..100_000 {
            let w = self.transpose_mul_vec(&self.mul_vec(&v));
            let next: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            v = w;
            if normalize(&mut v) == 0.0 {
                return 0.0;
            }
            if (next - lambda).abs() <= 1e-10 * next.abs() {
                lambda = next;
                break;
            }
            lambda = next;
        }
        // One more Rayleigh quotient with the converged vector.
        let av = self.mul_vec(&v);
        av.iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
            .max(lambda.max(0.0).sqrt())
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}
