//! Seeded sampling of group elements and test tensors.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bracket::{stored_dim, Bracket};
use crate::linalg::{self, condition_number};

pub type SeededRng = ChaCha8Rng;

/// Condition-number ceiling for random perturbations.
pub const MAX_COND: f64 = 100.0;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_matrix<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0))
}

/// Entries uniform in `[−1, 1]`, resampled until `cond(g) < MAX_COND`.
pub fn well_conditioned_gl<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    loop {
        let g = uniform_matrix(rng, n);
        if condition_number(&g) < MAX_COND {
            return g;
        }
    }
}

/// Realified `GL_n(C)` element with real and imaginary parts uniform in
/// `[−1, 1]`, resampled until well conditioned.
pub fn well_conditioned_gl_complex<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    loop {
        let re = uniform_matrix(rng, n);
        let im = uniform_matrix(rng, n);
        let g = linalg::realify(&re, &im);
        // singular values of the realification are those of re + i·im, doubled
        if condition_number(&g) < MAX_COND {
            return g;
        }
    }
}

/// Orthogonal matrix from the QR factor of a random matrix, with the sign
/// of each column fixed by the diagonal of R.
pub fn orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let qr = well_conditioned_gl(rng, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}

/// Realified unitary matrix, built by orthonormalizing a random complex
/// matrix through its realification.
pub fn unitary<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    use nalgebra::Complex;
    let a = DMatrix::from_fn(n, n, |_, _| {
        Complex::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
    });
    let q = a.qr().q();
    let re = q.map(|z| z.re);
    let im = q.map(|z| z.im);
    linalg::realify(&re, &im)
}

/// Raw tensor with stored entries uniform in `[−1, 1]`; not a Lie bracket
/// in general.
pub fn bracket<R: Rng>(rng: &mut R, n: usize) -> Bracket<f64> {
    let data = (0..stored_dim(n)).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Bracket::from_raw(n, data).expect("length matches")
}

pub fn vector<R: Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = seeded(1);
        for n in 2..6 {
            let q = orthogonal(&mut rng, n);
            assert!((q.transpose() * &q - DMatrix::identity(n, n)).amax() < 1e-12);
            let u = unitary(&mut rng, n);
            assert!((u.transpose() * &u - DMatrix::identity(2 * n, 2 * n)).amax() < 1e-12);
        }
    }

    #[test]
    fn perturbations_are_well_conditioned_and_seeded() {
        let a = well_conditioned_gl(&mut seeded(7), 4);
        let b = well_conditioned_gl(&mut seeded(7), 4);
        assert_eq!(a, b);
        assert!(condition_number(&a) < MAX_COND);
    }
}
