//! Independent oracles: everything here works on the full ordered tensor
//! `c[i][j][k]` and never calls the library's moment or action code.
#![allow(dead_code)]

use momentflow_core::Bracket;
use nalgebra::{DMatrix, DVector};

pub struct Tensor {
    pub n: usize,
    pub c: Vec<f64>,
}

impl Tensor {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.n + j) * self.n + k]
    }

    pub fn from_bracket(mu: &Bracket<f64>) -> Self {
        let n = mu.n();
        let mut c = vec![0.0; n * n * n];
        for (i, j, k, v) in mu.entries() {
            c[(i * n + j) * n + k] = v;
            c[(j * n + i) * n + k] = -v;
        }
        Self { n, c }
    }

    pub fn norm_sq(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum()
    }
}

/// `⟨ρ(E_ab)μ, μ⟩ = Σ_{ij} c_ija c_ijb − 2 Σ_{jk} c_ajk c_bjk`, which is the
/// `(a, b)` entry of the moment matrix.
pub fn moment_oracle(t: &Tensor) -> DMatrix<f64> {
    let n = t.n;
    DMatrix::from_fn(n, n, |a, b| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += t.get(i, j, a) * t.get(i, j, b);
                s -= 2.0 * t.get(a, i, j) * t.get(b, i, j);
            }
        }
        s
    })
}

/// Matrix of `X ↦ X·μ` with rows over ordered pairs `i ≠ j` and all `k`,
/// columns over `E_ab`: entry `δ_ka c_ijb − δ_bi c_ajk − δ_bj c_iak`.
pub fn contraction_matrix(t: &Tensor) -> DMatrix<f64> {
    let n = t.n;
    let rows = n * (n - 1) * n;
    let mut m = DMatrix::zeros(rows, n * n);
    let mut r = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let mut v = 0.0;
                        if k == a {
                            v += t.get(i, j, b);
                        }
                        if b == i {
                            v -= t.get(a, j, k);
                        }
                        if b == j {
                            v -= t.get(i, a, k);
                        }
                        m[(r, a * n + b)] = v;
                    }
                }
                r += 1;
            }
        }
    }
    m
}

/// Nullity from a column-pivoted QR: `|R_ii|` is non-increasing, so the
/// rank is the number of diagonal entries above the relative cut.
pub fn nullity(m: &DMatrix<f64>) -> usize {
    let r = m.clone().col_piv_qr().r();
    let d: Vec<f64> = r.diagonal().iter().map(|x| x.abs()).collect();
    let top = d.first().copied().unwrap_or(0.0);
    m.ncols() - d.iter().filter(|&&x| x > 1e-8 * top).count()
}

/// Central finite-difference gradient of `f` in the orthonormal frame
/// `e_i / sqrt(weight)`.
pub fn fd_gradient<F: Fn(&DVector<f64>) -> f64>(f: F, v: &DVector<f64>, weight: f64, h: f64) -> DVector<f64> {
    let s = weight.sqrt();
    DVector::from_fn(v.len(), |i, _| {
        let mut p = v.clone();
        let mut m = v.clone();
        p[i] += h / s;
        m[i] -= h / s;
        (f(&p) - f(&m)) / (2.0 * h)
    })
}

pub fn diag(d: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(d))
}
