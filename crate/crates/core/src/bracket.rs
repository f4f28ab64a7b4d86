//! Structure-constant tensors on `R^n` (or `C^n`) as points of
//! `V = Λ²(R^n)* ⊗ R^n`, the `GL_n` action on them and the Lie-theoretic
//! invariants used to certify orbit membership.
//!
//! Only the entries `c[i][j][k]` with `i < j` are stored; reads of `i > j`
//! are mirrored with a sign flip and `i == j` reads as zero, so every
//! `Bracket` is skew-symmetric by construction.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, column_space, nullity};
use crate::moment::ActionModel;

/// Scalars a bracket can carry: `f64` or `Complex<f64>`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    /// 2-norm condition number of a square matrix.
    fn condition_number(g: &DMatrix<Self>) -> f64;
}

impl Scalar for f64 {
    fn condition_number(g: &DMatrix<Self>) -> f64 {
        linalg::condition_number(g)
    }
}

impl Scalar for Complex<f64> {
    fn condition_number(g: &DMatrix<Self>) -> f64 {
        // the realification has the same singular values, each twice
        linalg::condition_number(&linalg::realify(&g.map(|z| z.re), &g.map(|z| z.im)))
    }
}

/// Jacobi defect below which a tensor is accepted as a Lie bracket.
pub const JACOBI_TOL: f64 = 1e-9;

/// Threshold for calling an eigenvalue of the Killing form zero, relative to
/// its spectral radius.
pub const KILLING_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Bracket<T: Scalar = f64> {
    n: usize,
    data: Vec<T>,
}

pub type ComplexBracket = Bracket<Complex<f64>>;

/// Number of stored `(i<j, k)` coordinates for dimension `n`.
pub fn stored_dim(n: usize) -> usize {
    n * n.saturating_sub(1) / 2 * n
}

#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // pairs ordered (0,1),(0,2),..,(0,n-1),(1,2),..
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl<T: Scalar> Bracket<T> {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); stored_dim(n)],
        }
    }

    /// Builds a bracket from `(i, j, k, c)` triples, 0-based, meaning
    /// `μ(e_i, e_j) += c e_k`. Pairs with `i > j` are stored negated.
    pub fn from_entries<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, usize, T)>,
    {
        let mut mu = Self::zero(n);
        for (i, j, k, c) in entries {
            if i == j || i >= n || j >= n || k >= n {
                return Err(Error::BadIndex { i, j, k, n });
            }
            let (a, b, s) = if i < j { (i, j, c) } else { (j, i, -c) };
            let idx = pair_index(n, a, b) * n + k;
            mu.data[idx] += s;
        }
        Ok(mu)
    }

    pub fn from_raw(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != stored_dim(n) {
            return Err(Error::DimensionMismatch {
                expected: stored_dim(n),
                got: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn raw(&self) -> &[T] {
        &self.data
    }

    /// Coefficient of `e_k` in `μ(e_i, e_j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.data[pair_index(self.n, i, j) * self.n + k],
            Greater => -self.data[pair_index(self.n, j, i) * self.n + k],
            Equal => T::zero(),
        }
    }

    /// Nonzero stored entries as 0-based `(i, j, k, c)` with `i < j`.
    pub fn entries(&self) -> Vec<(usize, usize, usize, T)> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    let c = self.data[pair_index(n, i, j) * n + k];
                    if c != T::zero() {
                        out.push((i, j, k, c));
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| *c == T::zero())
    }

    /// Largest absolute structure constant.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, c| m.max(c.modulus()))
    }

    /// Norm induced by `⟨μ, λ⟩ = Σ_{i,j} ⟨μ(e_i,e_j), λ(e_i,e_j)⟩` over ordered pairs.
    pub fn norm(&self) -> f64 {
        (2.0 * self.data.iter().map(|c| c.modulus_squared()).sum::<f64>()).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|c| *c * s).collect(),
        }
    }

    /// Sup-norm distance between two brackets of the same dimension.
    pub fn distance_sup(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((*a - *b).modulus()))
    }

    /// `μ(x, y)` for arbitrary vectors.
    pub fn apply(&self, x: &DVector<T>, y: &DVector<T>) -> DVector<T> {
        let n = self.n;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let w = x[i] * y[j] - x[j] * y[i];
                if w == T::zero() {
                    continue;
                }
                let base = pair_index(n, i, j) * n;
                for k in 0..n {
                    out[k] += w * self.data[base + k];
                }
            }
        }
        out
    }

    /// Full `n×n×n` tensor, index `(i*n + j)*n + k`.
    fn full_tensor(&self) -> Vec<T> {
        let n = self.n;
        let mut t = vec![T::zero(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t[(i * n + j) * n + k] = self.get(i, j, k);
                }
            }
        }
        t
    }

    fn from_full_tensor(n: usize, t: &[T]) -> Self {
        let mut mu = Self::zero(n);
        for i in 0..n {
            for j in i + 1..n {
                let base = pair_index(n, i, j) * n;
                for k in 0..n {
                    mu.data[base + k] = t[(i * n + j) * n + k];
                }
            }
        }
        mu
    }

    fn check_square(&self, m: &DMatrix<T>) -> Result<()> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: m.nrows().max(m.ncols()),
            });
        }
        Ok(())
    }
}

impl Bracket<f64> {
    /// The stored coordinates as a vector of `V`.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.data)
    }

    pub fn from_vector(n: usize, v: &DVector<f64>) -> Result<Self> {
        Self::from_raw(n, v.iter().cloned().collect())
    }

    pub fn to_complex(&self) -> ComplexBracket {
        Bracket {
            n: self.n,
            data: self.data.iter().map(|&c| Complex::new(c, 0.0)).collect(),
        }
    }
}

impl ComplexBracket {
    /// Realified coordinates `[re..., im...]`.
    pub fn to_realified(&self) -> DVector<f64> {
        let d = self.data.len();
        let mut v = DVector::zeros(2 * d);
        for (idx, c) in self.data.iter().enumerate() {
            v[idx] = c.re;
            v[d + idx] = c.im;
        }
        v
    }

    pub fn from_realified(n: usize, v: &DVector<f64>) -> Result<Self> {
        let d = stored_dim(n);
        if v.len() != 2 * d {
            return Err(Error::DimensionMismatch {
                expected: 2 * d,
                got: v.len(),
            });
        }
        Ok(Self {
            n,
            data: (0..d).map(|i| Complex::new(v[i], v[d + i])).collect(),
        })
    }

    pub fn real_part(&self) -> Bracket<f64> {
        Bracket {
            n: self.n,
            data: self.data.iter().map(|c| c.re).collect(),
        }
    }

    pub fn imag_sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()))
    }
}

/// `(g·μ)(x, y) = g μ(g⁻¹x, g⁻¹y)`.
pub fn group_act<T: Scalar>(g: &DMatrix<T>, mu: &Bracket<T>) -> Result<Bracket<T>> {
    mu.check_square(g)?;
    let n = mu.n;
    let cond = T::condition_number(g);
    if !cond.is_finite() || cond > 1e15 {
        return Err(Error::SingularGroupElement);
    }
    if cond > 1e8 {
        log::warn!("group element is ill-conditioned (cond = {cond:.3e})");
    }
    let h = g.clone().try_inverse().ok_or(Error::SingularGroupElement)?;
    let t = mu.full_tensor();
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;

    // first slot: t1[i][b][k] = Σ_a h[a][i] t[a][b][k]
    let mut t1 = vec![T::zero(); n * n * n];
    for a in 0..n {
        for i in 0..n {
            let w = h[(a, i)];
            if w == T::zero() {
                continue;
            }
            for b in 0..n {
                for k in 0..n {
                    t1[idx(i, b, k)] += w * t[idx(a, b, k)];
                }
            }
        }
    }
    // second slot
    let mut t2 = vec![T::zero(); n * n * n];
    for b in 0..n {
        for j in 0..n {
            let w = h[(b, j)];
            if w == T::zero() {
                continue;
            }
            for i in 0..n {
                for k in 0..n {
                    t2[idx(i, j, k)] += w * t1[idx(i, b, k)];
                }
            }
        }
    }
    // output slot
    let mut t3 = vec![T::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let mut s = T::zero();
                for k in 0..n {
                    s += g[(l, k)] * t2[idx(i, j, k)];
                }
                t3[idx(i, j, l)] = s;
            }
        }
    }
    Ok(Bracket::from_full_tensor(n, &t3))
}

/// Derivative of the `GL_n` action at the identity:
/// `(X·μ)(a, b) = X μ(a, b) − μ(Xa, b) − μ(a, Xb)`.
pub fn infinitesimal_act<T: Scalar>(x: &DMatrix<T>, mu: &Bracket<T>) -> Result<Bracket<T>> {
    mu.check_square(x)?;
    let n = mu.n;
    let mut out = Bracket::zero(n);
    for i in 0..n {
        for j in i + 1..n {
            let base = pair_index(n, i, j) * n;
            let mut col = vec![T::zero(); n];
            // X μ(e_i, e_j)
            for l in 0..n {
                let c = mu.data[base + l];
                if c == T::zero() {
                    continue;
                }
                for (k, slot) in col.iter_mut().enumerate() {
                    *slot += x[(k, l)] * c;
                }
            }
            // − μ(X e_i, e_j) − μ(e_i, X e_j)
            for a in 0..n {
                let xi = x[(a, i)];
                let xj = x[(a, j)];
                if xi != T::zero() {
                    for (k, slot) in col.iter_mut().enumerate() {
                        *slot -= xi * mu.get(a, j, k);
                    }
                }
                if xj != T::zero() {
                    for (k, slot) in col.iter_mut().enumerate() {
                        *slot -= xj * mu.get(i, a, k);
                    }
                }
            }
            out.data[base..base + n].copy_from_slice(&col);
        }
    }
    Ok(out)
}

/// Sup-norm over basis triples of `Σ_cyc μ(μ(a,b),c)`.
pub fn jacobi_defect<T: Scalar>(mu: &Bracket<T>) -> f64 {
    let n = mu.n;
    let mut worst = 0.0_f64;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for k in 0..n {
                    let mut s = T::zero();
                    for l in 0..n {
                        s += mu.get(a, b, l) * mu.get(l, c, k)
                            + mu.get(b, c, l) * mu.get(l, a, k)
                            + mu.get(c, a, l) * mu.get(l, b, k);
                    }
                    worst = worst.max(s.modulus());
                }
            }
        }
    }
    worst
}

/// Rank floor tied to the size of the structure constants.
fn rank_scale(mu: &Bracket<f64>) -> f64 {
    mu.sup_norm()
}

/// Orthonormal basis of `span{ μ(x, y) : x ∈ cols(a), y ∈ cols(b) }`.
fn bracket_span(mu: &Bracket<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = mu.n;
    let mut cols = DMatrix::zeros(n, a.ncols() * b.ncols());
    let mut c = 0;
    for p in 0..a.ncols() {
        let x: DVector<f64> = a.column(p).into_owned();
        for q in 0..b.ncols() {
            let y: DVector<f64> = b.column(q).into_owned();
            cols.set_column(c, &mu.apply(&x, &y));
            c += 1;
        }
    }
    column_space(&cols, rank_scale(mu))
}

/// Dimensions of the lower central series `g ⊇ [g,g] ⊇ [g,[g,g]] ⊇ …`,
/// recorded until the dimension reaches zero or stops changing.
pub fn lower_central_dims(mu: &Bracket<f64>) -> Vec<usize> {
    let full = DMatrix::<f64>::identity(mu.n, mu.n);
    series_dims(mu, |cur| bracket_span(mu, &full, cur))
}

/// Dimensions of the derived series `g ⊇ [g,g] ⊇ [[g,g],[g,g]] ⊇ …`.
pub fn derived_dims(mu: &Bracket<f64>) -> Vec<usize> {
    series_dims(mu, |cur| bracket_span(mu, cur, cur))
}

fn series_dims<F>(mu: &Bracket<f64>, mut next: F) -> Vec<usize>
where
    F: FnMut(&DMatrix<f64>) -> DMatrix<f64>,
{
    let mut cur = DMatrix::<f64>::identity(mu.n, mu.n);
    let mut dims = vec![mu.n];
    while cur.ncols() > 0 {
        let nxt = next(&cur);
        if nxt.ncols() == cur.ncols() {
            break;
        }
        dims.push(nxt.ncols());
        cur = nxt;
    }
    dims
}

pub fn is_nilpotent(mu: &Bracket<f64>) -> bool {
    lower_central_dims(mu).last() == Some(&0)
}

pub fn is_solvable(mu: &Bracket<f64>) -> bool {
    derived_dims(mu).last() == Some(&0)
}

pub fn center_dim(mu: &Bracket<f64>) -> usize {
    let n = mu.n;
    // x ↦ ([x, e_0], …, [x, e_{n-1}])
    let mut m = DMatrix::zeros(n * n, n);
    for a in 0..n {
        for i in 0..n {
            for k in 0..n {
                m[(i * n + k, a)] = mu.get(a, i, k);
            }
        }
    }
    nullity(&m, rank_scale(mu))
}

/// Matrix of `X ↦ X·μ` over the basis `E_ab` of `gl_n` (column `a*n + b`).
pub fn derivation_matrix(mu: &Bracket<f64>) -> DMatrix<f64> {
    let n = mu.n;
    let d = stored_dim(n);
    let mut m = DMatrix::zeros(d, n * n);
    for a in 0..n {
        for b in 0..n {
            let img = infinitesimal_act(&linalg::unit(n, a, b), mu).expect("square");
            m.set_column(a * n + b, &img.to_vector());
        }
    }
    m
}

pub fn derivation_dim(mu: &Bracket<f64>) -> usize {
    nullity(&derivation_matrix(mu), rank_scale(mu))
}

/// `ad e_i` as a matrix: `(ad e_i)[k][j] = c[i][j][k]`.
pub fn ad_matrix(mu: &Bracket<f64>, i: usize) -> DMatrix<f64> {
    let n = mu.n;
    DMatrix::from_fn(n, n, |k, j| mu.get(i, j, k))
}

/// `B(e_i, e_j) = tr(ad e_i ad e_j)`.
pub fn killing_form(mu: &Bracket<f64>) -> DMatrix<f64> {
    let n = mu.n;
    let ads: Vec<_> = (0..n).map(|i| ad_matrix(mu, i)).collect();
    DMatrix::from_fn(n, n, |i, j| (&ads[i] * &ads[j]).trace())
}

/// `(positive, negative, zero)` eigenvalue counts of the Killing form.
pub fn killing_signature(mu: &Bracket<f64>) -> (usize, usize, usize) {
    let n = mu.n;
    let ev = linalg::sym_eigenvalues(&killing_form(mu));
    let radius = ev.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let s = mu.sup_norm();
    if radius <= 1e-10 * (s * s).max(f64::MIN_POSITIVE) {
        return (0, 0, n);
    }
    let cut = KILLING_RTOL * radius;
    let pos = ev.iter().filter(|&&x| x > cut).count();
    let neg = ev.iter().filter(|&&x| x < -cut).count();
    (pos, neg, n - pos - neg)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraInvariants {
    pub lower_central_dims: Vec<usize>,
    pub derived_dims: Vec<usize>,
    pub center_dim: usize,
    pub derivation_dim: usize,
    pub killing_signature: (usize, usize, usize),
    pub nilpotent: bool,
}

impl AlgebraInvariants {
    /// The part of the invariants that survives complexification: all
    /// dimensions plus the rank of the Killing form.
    pub fn complexified(&self) -> ComplexInvariants {
        let (p, q, _) = self.killing_signature;
        ComplexInvariants {
            lower_central_dims: self.lower_central_dims.clone(),
            derived_dims: self.derived_dims.clone(),
            center_dim: self.center_dim,
            derivation_dim: self.derivation_dim,
            killing_rank: p + q,
            nilpotent: self.nilpotent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexInvariants {
    pub lower_central_dims: Vec<usize>,
    pub derived_dims: Vec<usize>,
    pub center_dim: usize,
    pub derivation_dim: usize,
    pub killing_rank: usize,
    pub nilpotent: bool,
}

/// Orbit invariants of a Lie bracket. Fails with [`Error::NotLie`] when the
/// Jacobi defect exceeds [`JACOBI_TOL`] (relative to `|μ|²`).
pub fn invariants(mu: &Bracket<f64>) -> Result<AlgebraInvariants> {
    let defect = jacobi_defect(mu);
    let s = mu.sup_norm();
    if defect > JACOBI_TOL * (s * s).max(1.0) {
        return Err(Error::NotLie { defect });
    }
    let lcs = lower_central_dims(mu);
    let nilpotent = lcs.last() == Some(&0);
    Ok(AlgebraInvariants {
        lower_central_dims: lcs,
        derived_dims: derived_dims(mu),
        center_dim: center_dim(mu),
        derivation_dim: derivation_dim(mu),
        killing_signature: killing_signature(mu),
        nilpotent,
    })
}

/// `|D·μ|`, zero exactly when `D` is a derivation of `μ`.
pub fn derivation_defect(d: &DMatrix<f64>, mu: &Bracket<f64>) -> Result<f64> {
    Ok(infinitesimal_act(d, mu)?.norm())
}

/// Embeds a real bracket into `V^C` and returns it together with the
/// realified `GL_n(C)` model.
pub fn complexify(mu: &Bracket<f64>) -> (ComplexBracket, ActionModel) {
    (mu.to_complex(), ActionModel::gl_complex(mu.n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn storage_is_skew() {
        let mu = Bracket::from_entries(3, [(1, 0, 2, 1.0)]).unwrap();
        assert_eq!(mu.get(0, 1, 2), -1.0);
        assert_eq!(mu.get(1, 0, 2), 1.0);
        assert_eq!(mu.get(1, 1, 2), 0.0);
    }

    #[test]
    fn bad_index_rejected() {
        assert!(Bracket::from_entries(3, [(0, 0, 1, 1.0)]).is_err());
        assert!(Bracket::from_entries(3, [(0, 3, 1, 1.0)]).is_err());
    }

    #[test]
    fn identity_and_scalar_action() {
        let mu = catalog::heisenberg3();
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(group_act(&id, &mu).unwrap(), mu);
        let g = &id * 2.0;
        let out = group_act(&g, &mu).unwrap();
        assert!(out.distance_sup(&mu.scale(0.5)) < 1e-15);
    }

    #[test]
    fn diagonal_action_on_heisenberg() {
        // [e1,e2] = e3 under diag(1,1,2): g μ(g⁻¹e1, g⁻¹e2) = 2 e3
        let mu = catalog::heisenberg3();
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 2.0]));
        let out = group_act(&g, &mu).unwrap();
        assert_eq!(out.get(0, 1, 2), 2.0);
        assert_eq!(out.entries().len(), 1);
    }

    #[test]
    fn singular_group_element() {
        let mu = catalog::heisenberg3();
        let g = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(group_act(&g, &mu), Err(Error::SingularGroupElement));
    }

    #[test]
    fn identity_infinitesimal_is_minus_one() {
        let mu = catalog::so3();
        let out = infinitesimal_act(&DMatrix::identity(3, 3), &mu).unwrap();
        assert!(out.distance_sup(&mu.scale(-1.0)) == 0.0);
    }

    #[test]
    fn infinitesimal_dimension_mismatch() {
        let mu = catalog::so3();
        assert!(infinitesimal_act(&DMatrix::identity(4, 4), &mu).is_err());
    }

    #[test]
    fn jacobi_and_nilpotency() {
        let h = catalog::heisenberg3();
        assert_eq!(jacobi_defect(&h), 0.0);
        assert!(is_nilpotent(&h));

        let so3 = catalog::so3();
        assert_eq!(jacobi_defect(&so3), 0.0);
        assert!(!is_nilpotent(&so3));

        // [e1,e2] = e1: ad e2 acts on e1 by -1, never nilpotent
        let aff = Bracket::from_entries(2, [(0, 1, 0, 1.0)]).unwrap();
        assert_eq!(jacobi_defect(&aff), 0.0);
        assert!(!is_nilpotent(&aff));
        assert!(is_solvable(&aff));
        assert_eq!(lower_central_dims(&aff), vec![2, 1]);
        assert_eq!(derived_dims(&aff), vec![2, 1, 0]);
    }

    #[test]
    fn non_lie_tensor_has_defect() {
        // [e1,e2]=e3, [e3,e1]=e1: Jacobi fails on (e1,e2,e3)
        let mu = Bracket::from_entries(3, [(0, 1, 2, 1.0), (2, 0, 0, 1.0)]).unwrap();
        assert!(jacobi_defect(&mu) > 0.5);
        assert!(matches!(invariants(&mu), Err(Error::NotLie { .. })));
    }

    #[test]
    fn heisenberg_invariants() {
        let inv = invariants(&catalog::heisenberg3()).unwrap();
        assert_eq!(inv.lower_central_dims, vec![3, 1, 0]);
        assert_eq!(inv.derived_dims, vec![3, 1, 0]);
        assert_eq!(inv.center_dim, 1);
        assert_eq!(inv.derivation_dim, 6);
        assert_eq!(inv.killing_signature, (0, 0, 3));
        assert!(inv.nilpotent);
    }

    #[test]
    fn semisimple_signatures() {
        assert_eq!(killing_signature(&catalog::sl2r()), (2, 1, 0));
        assert_eq!(killing_signature(&catalog::so3()), (0, 3, 0));
        let inv = invariants(&catalog::so3()).unwrap();
        assert_eq!(inv.lower_central_dims, vec![3]);
        assert_eq!(inv.center_dim, 0);
        assert_eq!(inv.derivation_dim, 3);
    }

    #[test]
    fn derivation_defects() {
        let h = catalog::heisenberg3();
        assert_eq!(derivation_defect(&DMatrix::zeros(3, 3), &h).unwrap(), 0.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 4.0, 8.0]));
        assert_eq!(derivation_defect(&d, &h).unwrap(), 0.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0]));
        // (D·μ)(e1,e2) = -e3, counted for both orders
        let defect = derivation_defect(&d, &h).unwrap();
        assert!((defect - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn complexify_embeds_with_zero_imaginary_part() {
        let (c, model) = complexify(&catalog::heisenberg3());
        assert_eq!(c.imag_sup_norm(), 0.0);
        assert_eq!(c.real_part(), catalog::heisenberg3());
        assert_eq!(model.dim_v(), 2 * stored_dim(3));
    }

    #[test]
    fn realified_round_trip() {
        let mu = Bracket::from_entries(3, [(0, 1, 2, Complex::new(1.0, -2.0))]).unwrap();
        let v = mu.to_realified();
        assert_eq!(ComplexBracket::from_realified(3, &v).unwrap(), mu);
    }
}
