//! Small dense linear-algebra helpers shared by the moment and bracket code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative singular-value threshold used for every numerical rank decision.
pub const RANK_RTOL: f64 = 1e-8;

/// Singular values (descending) with matching left and right singular
/// vectors as columns of `u` and `v`. Vectors for values at rounding level
/// are not meaningful.
#[derive(Debug, Clone)]
pub struct SingularSystem {
    pub values: Vec<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

/// Singular system of `a` from the symmetric eigenproblem of
/// `[[0, a], [aᵗ, 0]]`, whose eigenvalues are `±σ`.
///
/// nalgebra's bidiagonal SVD occasionally returns singular values that are
/// off in the second digit on the orbit-map matrices used here, without any
/// error. The symmetric eigensolver has not shown that and keeps absolute
/// accuracy `ε·σ_max` without squaring the condition number.
pub fn singular_system(a: &DMatrix<f64>) -> SingularSystem {
    let (m, n) = a.shape();
    if m < n {
        let t = singular_system(&a.transpose());
        return SingularSystem {
            values: t.values,
            u: t.v,
            v: t.u,
        };
    }
    if m > n {
        // a = QR with orthonormal Q; R carries the same singular values
        let qr = a.clone().qr();
        let (q, r) = qr.unpack();
        let inner = augmented_singular_system(&r);
        return SingularSystem {
            values: inner.values,
            u: q * inner.u,
            v: inner.v,
        };
    }
    augmented_singular_system(a)
}

fn augmented_singular_system(a: &DMatrix<f64>) -> SingularSystem {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return SingularSystem {
            values: Vec::new(),
            u: DMatrix::zeros(m, 0),
            v: DMatrix::zeros(n, 0),
        };
    }
    let mut jw = DMatrix::zeros(m + n, m + n);
    jw.view_mut((0, m), (m, n)).copy_from(a);
    jw.view_mut((m, 0), (n, m)).copy_from(&a.transpose());
    let eig = SymmetricEigen::new(jw);
    let mut order: Vec<usize> = (0..m + n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut u = DMatrix::zeros(m, k);
    let mut v = DMatrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for (c, &i) in order.iter().take(k).enumerate() {
        values.push(eig.eigenvalues[i].max(0.0));
        let w = eig.eigenvectors.column(i);
        u.set_column(c, &(w.rows(0, m) * std::f64::consts::SQRT_2));
        v.set_column(c, &(w.rows(m, n) * std::f64::consts::SQRT_2));
    }
    SingularSystem { values, u, v }
}

pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    singular_system(a).values
}

/// Numerical rank of `a`: singular values below `RANK_RTOL * max(sigma_max, scale)`
/// count as zero. `scale` is a floor that keeps a matrix of pure rounding noise
/// from being reported as full rank.
pub fn numerical_rank(a: &DMatrix<f64>, scale: f64) -> usize {
    let sv = singular_values(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax <= f64::MIN_POSITIVE {
        return 0;
    }
    let cut = RANK_RTOL * smax.max(scale);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Nullity of the linear map whose matrix is `a` (columns = domain).
pub fn nullity(a: &DMatrix<f64>, scale: f64) -> usize {
    a.ncols() - numerical_rank(a, scale)
}

/// Orthonormal basis (as columns) of the column span of `a`.
pub fn column_space(a: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    let sys = singular_system(a);
    let smax = sys.values.first().copied().unwrap_or(0.0);
    if smax <= f64::MIN_POSITIVE {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let cut = RANK_RTOL * smax.max(scale);
    let r = sys.values.iter().filter(|&&s| s > cut).count();
    sys.u.columns(0, r).into_owned()
}

/// Minimum-norm least-squares solution of `a x = b`, ignoring singular
/// values below `rtol·σ_max`.
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>, rtol: f64) -> DVector<f64> {
    let sys = singular_system(a);
    let smax = sys.values.first().copied().unwrap_or(0.0);
    let mut x = DVector::zeros(a.ncols());
    for (i, &s) in sys.values.iter().enumerate() {
        if s > rtol * smax && s > 0.0 {
            x.axpy(sys.u.column(i).dot(b) / s, &sys.v.column(i), 1.0);
        }
    }
    x
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().cloned().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// 2-norm condition number via singular values; infinite when singular.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = singular_values(a);
    let (Some(&smax), Some(&smin)) = (sv.first(), sv.last()) else {
        return f64::INFINITY;
    };
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Trace form `tr(a b^t)`.
pub fn trace_form(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Matrix unit `E_ij`.
pub fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

/// Realification of the complex matrix `re + i im` as `[[re, -im], [im, re]]`.
pub fn realify(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let n = re.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(re);
    out.view_mut((n, n), (n, n)).copy_from(re);
    out.view_mut((n, 0), (n, n)).copy_from(im);
    out.view_mut((0, n), (n, n)).copy_from(&(-im));
    out
}

/// Inverse of [`realify`]: the (re, im) blocks of a realified matrix.
pub fn derealify(x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = x.nrows() / 2;
    (x.view((0, 0), (n, n)).into_owned(), x.view((n, 0), (n, n)).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_rank_one() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, -1.0, -2.0, -3.0]);
        assert_eq!(numerical_rank(&a, 0.0), 1);
        assert_eq!(nullity(&a, 0.0), 2);
        assert_eq!(column_space(&a, 0.0).ncols(), 1);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let a = DMatrix::<f64>::zeros(4, 2);
        assert_eq!(numerical_rank(&a, 1.0), 0);
        assert_eq!(column_space(&a, 1.0).ncols(), 0);
    }

    #[test]
    fn singular_system_reconstructs() {
        let a = DMatrix::from_fn(7, 4, |i, j| ((3 * i + 5 * j) % 7) as f64 - 2.5 + 0.1 * (i * j) as f64);
        let sys = singular_system(&a);
        let rec = &sys.u * DMatrix::from_diagonal(&DVector::from_vec(sys.values.clone())) * sys.v.transpose();
        assert!((rec - &a).amax() < 1e-12);
        assert!(sys.values.windows(2).all(|w| w[0] >= w[1]));
        let wide = singular_values(&a.transpose());
        assert!(sys.values.iter().zip(&wide).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn pinv_is_minimum_norm() {
        // x + y = 2 has minimum-norm solution (1, 1)
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = pinv_solve(&a, &DVector::from_vec(vec![2.0]), 1e-12);
        assert!((x - DVector::from_vec(vec![1.0, 1.0])).amax() < 1e-14);
    }

    #[test]
    fn realify_round_trip() {
        let re = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let im = DMatrix::from_row_slice(2, 2, &[0.5, -1.0, 0.0, 2.0]);
        let (r, i) = derealify(&realify(&re, &im));
        assert_eq!(r, re);
        assert_eq!(i, im);
    }
}
