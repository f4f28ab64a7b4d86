//! Moment maps for linear reductive actions.
//!
//! An [`ActionModel`] packages a representation `ρ` of a Lie algebra `g` on a
//! real vector space `V`, an inner product on `V` for which `ρ(p)` acts by
//! symmetric operators, and an orthonormal basis of the symmetric part `p`.
//! The moment map `m̃: V → p` is fixed by `⟪m̃(v), X⟫ = ⟨ρ(X)v, v⟩` and is
//! assembled here by summing over that basis.
//!
//! Three groups are supported, all acting on brackets: `GL_n(R)`, `SL_n(R)`
//! and `GL_n(C)` seen as a real group acting on the realified `V^C`. In the
//! complex case algebra elements are `2n×2n` realified matrices and `p` is
//! spanned by realified Hermitian matrices, so the moment map is the real
//! moment map of the complex group.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bracket::{self, stored_dim, Bracket, ComplexBracket};
use crate::error::{Error, Result};
use crate::linalg::{self, nullity, trace_form, unit};

/// Width of the buckets used to group critical values.
pub const BUCKET_TOL: f64 = 1e-6;

/// Tolerance on `|v| = 1` for operations defined on the unit sphere.
pub const UNIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupTag {
    GlReal,
    SlReal,
    GlComplexRealified,
}

impl std::fmt::Display for GroupTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GroupTag::GlReal => "GL_n(R)",
            GroupTag::SlReal => "SL_n(R)",
            GroupTag::GlComplexRealified => "GL_n(C)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct ActionModel {
    n: usize,
    group: GroupTag,
    dim_v: usize,
    p_basis: Vec<DMatrix<f64>>,
    algebra_basis: Vec<DMatrix<f64>>,
    /// `⟨v, w⟩ = v_weight · Σ v_i w_i`; each stored `i<j` coordinate
    /// stands for two ordered pairs.
    v_weight: f64,
    /// `⟪X, Y⟫ = g_scale · tr(X Yᵗ)`; `1/2` on realified matrices so that
    /// it agrees with `Re tr(X Y*)`.
    g_scale: f64,
}

/// Orthonormal basis of traceless real diagonal matrices.
fn traceless_diagonal(n: usize) -> Vec<DMatrix<f64>> {
    (1..n)
        .map(|k| {
            let s = ((k * (k + 1)) as f64).sqrt();
            let mut m = DMatrix::zeros(n, n);
            for i in 0..k {
                m[(i, i)] = 1.0 / s;
            }
            m[(k, k)] = -(k as f64) / s;
            m
        })
        .collect()
}

fn symmetric_offdiag(n: usize) -> Vec<DMatrix<f64>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push((unit(n, i, j) + unit(n, j, i)) * r);
        }
    }
    out
}

fn skew_offdiag(n: usize) -> Vec<DMatrix<f64>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push((unit(n, i, j) - unit(n, j, i)) * r);
        }
    }
    out
}

impl ActionModel {
    pub fn gl_real(n: usize) -> Self {
        let mut p: Vec<_> = (0..n).map(|i| unit(n, i, i)).collect();
        p.extend(symmetric_offdiag(n));
        let mut alg = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                alg.push(unit(n, a, b));
            }
        }
        Self {
            n,
            group: GroupTag::GlReal,
            dim_v: stored_dim(n),
            p_basis: p,
            algebra_basis: alg,
            v_weight: 2.0,
            g_scale: 1.0,
        }
    }

    pub fn sl_real(n: usize) -> Self {
        let mut p = traceless_diagonal(n);
        p.extend(symmetric_offdiag(n));
        let mut alg = traceless_diagonal(n);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    alg.push(unit(n, a, b));
                }
            }
        }
        Self {
            n,
            group: GroupTag::SlReal,
            dim_v: stored_dim(n),
            p_basis: p,
            algebra_basis: alg,
            v_weight: 2.0,
            g_scale: 1.0,
        }
    }

    /// `GL_n(C)` on realified `V^C`. The Hermitian basis is ordered real
    /// diagonal, real symmetric off-diagonal, imaginary skew off-diagonal.
    pub fn gl_complex(n: usize) -> Self {
        let z = DMatrix::zeros(n, n);
        let mut p: Vec<_> = (0..n).map(|i| linalg::realify(&unit(n, i, i), &z)).collect();
        p.extend(symmetric_offdiag(n).iter().map(|s| linalg::realify(s, &z)));
        // i·K with K real skew is Hermitian
        p.extend(skew_offdiag(n).iter().map(|k| linalg::realify(&z, k)));
        let mut alg = Vec::with_capacity(2 * n * n);
        for a in 0..n {
            for b in 0..n {
                alg.push(linalg::realify(&unit(n, a, b), &z));
            }
        }
        for a in 0..n {
            for b in 0..n {
                alg.push(linalg::realify(&z, &unit(n, a, b)));
            }
        }
        Self {
            n,
            group: GroupTag::GlComplexRealified,
            dim_v: 2 * stored_dim(n),
            p_basis: p,
            algebra_basis: alg,
            v_weight: 2.0,
            g_scale: 0.5,
        }
    }

    pub fn for_group(group: GroupTag, n: usize) -> Self {
        match group {
            GroupTag::GlReal => Self::gl_real(n),
            GroupTag::SlReal => Self::sl_real(n),
            GroupTag::GlComplexRealified => Self::gl_complex(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn group(&self) -> GroupTag {
        self.group
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn is_complex(&self) -> bool {
        self.group == GroupTag::GlComplexRealified
    }

    /// Side length of the matrices representing algebra elements.
    pub fn matrix_dim(&self) -> usize {
        if self.is_complex() {
            2 * self.n
        } else {
            self.n
        }
    }

    pub fn p_basis(&self) -> &[DMatrix<f64>] {
        &self.p_basis
    }

    /// Basis of the whole Lie algebra (real span), used for stabilizers.
    pub fn algebra_basis(&self) -> &[DMatrix<f64>] {
        &self.algebra_basis
    }

    pub fn inner_v(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        self.v_weight * a.dot(b)
    }

    pub fn norm_v(&self, a: &DVector<f64>) -> f64 {
        self.inner_v(a, a).sqrt()
    }

    pub fn inner_g(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        self.g_scale * trace_form(x, y)
    }

    pub fn norm_g(&self, x: &DMatrix<f64>) -> f64 {
        self.inner_g(x, x).sqrt()
    }

    fn check_vector(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim_v {
            return Err(Error::DimensionMismatch {
                expected: self.dim_v,
                got: v.len(),
            });
        }
        Ok(())
    }

    fn check_matrix(&self, x: &DMatrix<f64>) -> Result<()> {
        let d = self.matrix_dim();
        if x.nrows() != d || x.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.nrows().max(x.ncols()),
            });
        }
        Ok(())
    }

    /// Infinitesimal action `ρ(X)v`.
    pub fn act(&self, x: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_vector(v)?;
        self.check_matrix(x)?;
        Ok(self.act_unchecked(x, v))
    }

    fn act_unchecked(&self, x: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
        if self.is_complex() {
            let (re, im) = linalg::derealify(x);
            let xc = DMatrix::from_fn(self.n, self.n, |i, j| Complex::new(re[(i, j)], im[(i, j)]));
            let mu = ComplexBracket::from_realified(self.n, v).expect("checked length");
            bracket::infinitesimal_act(&xc, &mu)
                .expect("checked shape")
                .to_realified()
        } else {
            let mu = Bracket::from_vector(self.n, v).expect("checked length");
            bracket::infinitesimal_act(x, &mu).expect("checked shape").to_vector()
        }
    }

    /// Group action `g·v`; `g` is `n×n` real, or realified `2n×2n` in the
    /// complex model.
    pub fn transport(&self, g: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_vector(v)?;
        self.check_matrix(g)?;
        if self.is_complex() {
            let (re, im) = linalg::derealify(g);
            let gc = DMatrix::from_fn(self.n, self.n, |i, j| Complex::new(re[(i, j)], im[(i, j)]));
            let mu = ComplexBracket::from_realified(self.n, v)?;
            Ok(bracket::group_act(&gc, &mu)?.to_realified())
        } else {
            let mu = Bracket::from_vector(self.n, v)?;
            Ok(bracket::group_act(g, &mu)?.to_vector())
        }
    }

    /// Multiplication by `i` on realified `V^C`.
    pub fn mult_by_i(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if !self.is_complex() {
            return Err(Error::UnsupportedModel(format!(
                "multiplication by i needs the complex model, got {}",
                self.group
            )));
        }
        self.check_vector(v)?;
        let d = self.dim_v / 2;
        let mut out = DVector::zeros(self.dim_v);
        for k in 0..d {
            out[k] = -v[d + k];
            out[d + k] = v[k];
        }
        Ok(out)
    }

    /// Largest deviation of `p_basis` from orthonormality under `⟪,⟫`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (a, x) in self.p_basis.iter().enumerate() {
            for (b, y) in self.p_basis.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((self.inner_g(x, y) - target).abs());
            }
        }
        worst
    }

    /// Orthogonal projection of a matrix onto `span(p_basis)`.
    pub fn project_p(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.matrix_dim();
        self.p_basis
            .iter()
            .fold(DMatrix::zeros(d, d), |acc, b| acc + b * self.inner_g(x, b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentValue {
    pub group: GroupTag,
    /// `m̃(v)`, realified in the complex model.
    pub matrix: DMatrix<f64>,
    /// `⟪m̃(v), m̃(v)⟫`.
    pub norm_sq: f64,
    pub vector_norm_sq: f64,
    /// `F(v) = ||m̃(v)||² / |v|⁴`; `None` at `v = 0`.
    pub f_value: Option<f64>,
}

impl MomentValue {
    /// `m[v] = m̃(v)/|v|²`.
    pub fn projective(&self) -> Option<DMatrix<f64>> {
        (self.vector_norm_sq > 0.0).then(|| &self.matrix / self.vector_norm_sq)
    }

    /// Ascending spectrum of `m[v]`. In the complex model the realified
    /// eigenvalues come in equal pairs and one of each pair is reported.
    pub fn spectrum(&self) -> Option<Vec<f64>> {
        let m = self.projective()?;
        let ev = linalg::sym_eigenvalues(&m);
        Some(match self.group {
            GroupTag::GlComplexRealified => ev.into_iter().step_by(2).collect(),
            _ => ev,
        })
    }

    /// Complex trace `tr m̃` (real part of the complex trace in the complex model).
    pub fn trace(&self) -> f64 {
        match self.group {
            GroupTag::GlComplexRealified => self.matrix.trace() / 2.0,
            _ => self.matrix.trace(),
        }
    }
}

/// `m̃(v) = Σ_i ⟨ρ(X_i)v, v⟩ X_i` over the orthonormal `p`-basis.
pub fn moment(model: &ActionModel, v: &DVector<f64>) -> Result<MomentValue> {
    model.check_vector(v)?;
    let d = model.matrix_dim();
    let mut m = DMatrix::zeros(d, d);
    for x in &model.p_basis {
        let c = model.inner_v(&model.act_unchecked(x, v), v);
        if c != 0.0 {
            m += x * c;
        }
    }
    let norm_sq = model.inner_g(&m, &m);
    let vn = model.inner_v(v, v);
    Ok(MomentValue {
        group: model.group,
        matrix: m,
        norm_sq,
        vector_norm_sq: vn,
        f_value: (vn > 0.0).then(|| norm_sq / (vn * vn)),
    })
}

/// `F(v) = ||m̃(v)||²/|v|⁴`, the norm square of the projective moment map.
pub fn f_value(model: &ActionModel, v: &DVector<f64>) -> Result<f64> {
    moment(model, v)?
        .f_value
        .ok_or(Error::ZeroVector("F is undefined at 0"))
}

/// Gradient of `F` restricted to the unit sphere at a unit vector `v`:
/// `4(ρ(m̃(v))v − ⟨ρ(m̃(v))v, v⟩ v)`.
pub fn grad_f_sphere(model: &ActionModel, v: &DVector<f64>) -> Result<DVector<f64>> {
    model.check_vector(v)?;
    let norm = model.norm_v(v);
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnit { norm });
    }
    Ok(sphere_gradient_unchecked(model, v))
}

pub(crate) fn sphere_gradient_unchecked(model: &ActionModel, v: &DVector<f64>) -> DVector<f64> {
    let mv = moment(model, v).expect("checked length");
    let w = model.act_unchecked(&mv.matrix, v);
    let c = model.inner_v(&w, v);
    (w - v * c) * 4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCertificate {
    /// `|ρ(m̃)v − λv| / (|m̃|·|v|)`, zero when `m̃(v) = 0`.
    pub residual: f64,
    /// `||m̃(v)||² / |v|²`.
    pub lambda: f64,
    /// Ascending spectrum of `m[v]`.
    pub spectrum: Vec<f64>,
    pub f_value: f64,
    /// `F` rounded to a multiple of [`BUCKET_TOL`].
    pub bucket: f64,
}

pub fn bucket(f: f64) -> f64 {
    (f / BUCKET_TOL).round() * BUCKET_TOL
}

/// Checks the eigenvector equation `ρ(m̃(v))v = λv` at `v ≠ 0`.
pub fn critical_residual(model: &ActionModel, v: &DVector<f64>) -> Result<CriticalCertificate> {
    let mv = moment(model, v)?;
    if mv.vector_norm_sq == 0.0 {
        return Err(Error::ZeroVector("critical residual needs v != 0"));
    }
    let lambda = mv.norm_sq / mv.vector_norm_sq;
    let residual = if mv.norm_sq == 0.0 {
        0.0
    } else {
        let w = model.act_unchecked(&mv.matrix, v) - v * lambda;
        model.norm_v(&w) / (mv.norm_sq.sqrt() * mv.vector_norm_sq.sqrt())
    };
    let f = mv.f_value.expect("v != 0");
    Ok(CriticalCertificate {
        residual,
        lambda,
        spectrum: mv.spectrum().expect("v != 0"),
        f_value: f,
        bucket: bucket(f),
    })
}

/// Matrix of `X ↦ ρ(X)v` over the model's algebra basis.
pub fn orbit_map_matrix(model: &ActionModel, v: &DVector<f64>) -> Result<DMatrix<f64>> {
    model.check_vector(v)?;
    let basis = model.algebra_basis();
    let mut m = DMatrix::zeros(model.dim_v, basis.len());
    for (c, x) in basis.iter().enumerate() {
        m.set_column(c, &model.act_unchecked(x, v));
    }
    Ok(m)
}

/// Dimension of the stabilizer algebra of `v`. At `v = 0` every element
/// fixes `v` and the full algebra dimension is returned.
pub fn stabilizer_dimension(model: &ActionModel, v: &DVector<f64>) -> Result<usize> {
    let m = orbit_map_matrix(model, v)?;
    let scale = linalg::sup_norm(v);
    if scale == 0.0 {
        log::info!("stabilizer of the zero vector is the whole algebra");
        return Ok(m.ncols());
    }
    Ok(nullity(&m, scale))
}

/// `dim g − dim stab(v)`.
pub fn orbit_dimension(model: &ActionModel, v: &DVector<f64>) -> Result<usize> {
    Ok(model.algebra_basis().len() - stabilizer_dimension(model, v)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn diag(d: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(d))
    }

    #[test]
    fn bases_are_orthonormal() {
        for n in 2..6 {
            for m in [
                ActionModel::gl_real(n),
                ActionModel::sl_real(n),
                ActionModel::gl_complex(n),
            ] {
                assert!(m.orthonormality_defect() < 1e-12, "{} n={n}", m.group());
            }
            assert_eq!(ActionModel::gl_real(n).p_basis().len(), n * (n + 1) / 2);
            assert_eq!(ActionModel::sl_real(n).p_basis().len(), n * (n + 1) / 2 - 1);
            assert_eq!(ActionModel::gl_complex(n).p_basis().len(), n * n);
            assert_eq!(ActionModel::sl_real(n).algebra_basis().len(), n * n - 1);
            assert_eq!(ActionModel::gl_complex(n).algebra_basis().len(), 2 * n * n);
        }
    }

    #[test]
    fn moment_at_zero() {
        let model = ActionModel::gl_real(3);
        let mv = moment(&model, &DVector::zeros(model.dim_v())).unwrap();
        assert_eq!(mv.matrix, DMatrix::zeros(3, 3));
        assert_eq!(mv.f_value, None);
        assert!(mv.spectrum().is_none());
    }

    #[test]
    fn heisenberg_moment() {
        let model = ActionModel::gl_real(3);
        let mv = moment(&model, &catalog::heisenberg3().to_vector()).unwrap();
        assert!((mv.matrix - diag(&[-2.0, -2.0, 2.0])).amax() < 1e-12);
        assert_eq!(mv.vector_norm_sq, 2.0);
        assert!((mv.f_value.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn so3_moment() {
        let model = ActionModel::gl_real(3);
        let mv = moment(&model, &catalog::so3().to_vector()).unwrap();
        assert!((mv.matrix + DMatrix::identity(3, 3) * 2.0).amax() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let model = ActionModel::gl_real(3);
        assert!(matches!(
            moment(&model, &DVector::zeros(4)),
            Err(Error::DimensionMismatch { expected: 9, got: 4 })
        ));
    }

    #[test]
    fn sl_moment_is_traceless_projection() {
        let gl = ActionModel::gl_real(3);
        let sl = ActionModel::sl_real(3);
        let v = catalog::sl2r().to_vector();
        let m_gl = moment(&gl, &v).unwrap();
        let m_sl = moment(&sl, &v).unwrap();
        let shift = DMatrix::identity(3, 3) * (m_gl.vector_norm_sq / 3.0);
        assert!((&m_sl.matrix - (&m_gl.matrix + shift)).amax() < 1e-12);
        assert!((m_sl.matrix - diag(&[-8.0, 4.0, 4.0])).amax() < 1e-12);
    }

    #[test]
    fn heisenberg_is_critical() {
        let model = ActionModel::gl_real(3);
        let cert = critical_residual(&model, &catalog::heisenberg3().to_vector()).unwrap();
        assert!(cert.residual < 1e-12);
        assert!((cert.lambda - 6.0).abs() < 1e-12);
        assert!((cert.f_value - 3.0).abs() < 1e-12);
        for (a, b) in cert.spectrum.iter().zip([-1.0, -1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(cert.bucket, 3.0);
    }

    #[test]
    fn so3_is_critical() {
        let model = ActionModel::gl_real(3);
        let cert = critical_residual(&model, &catalog::so3().to_vector()).unwrap();
        assert!(cert.residual < 1e-12);
        // |μ|² = 6 with the ordered-pair inner product, ||−2I||² = 12
        assert!((cert.lambda - 2.0).abs() < 1e-12);
        assert!((cert.f_value - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn minimal_vector_certificate() {
        let model = ActionModel::sl_real(3);
        let cert = critical_residual(&model, &catalog::so3().to_vector()).unwrap();
        assert_eq!(cert.residual, 0.0);
        assert!(cert.lambda < 1e-24);
    }

    #[test]
    fn zero_vector_errors() {
        let model = ActionModel::gl_real(3);
        let z = DVector::zeros(9);
        assert!(critical_residual(&model, &z).is_err());
        assert!(f_value(&model, &z).is_err());
        assert_eq!(stabilizer_dimension(&model, &z).unwrap(), 9);
    }

    #[test]
    fn non_unit_gradient_rejected() {
        let model = ActionModel::gl_real(3);
        let v = catalog::heisenberg3().to_vector();
        assert!(matches!(grad_f_sphere(&model, &v), Err(Error::NotUnit { .. })));
        let u = &v / model.norm_v(&v);
        assert!(grad_f_sphere(&model, &u).unwrap().amax() < 1e-12);
    }

    #[test]
    fn heisenberg_stabilizer() {
        let v = catalog::heisenberg3().to_vector();
        assert_eq!(stabilizer_dimension(&ActionModel::gl_real(3), &v).unwrap(), 6);
        assert_eq!(orbit_dimension(&ActionModel::gl_real(3), &v).unwrap(), 3);
        let (c, model) = crate::bracket::complexify(&catalog::heisenberg3());
        assert_eq!(stabilizer_dimension(&model, &c.to_realified()).unwrap(), 12);
    }

    #[test]
    fn mult_by_i_only_complex() {
        let model = ActionModel::gl_real(3);
        assert!(model.mult_by_i(&DVector::zeros(9)).is_err());
    }
}
