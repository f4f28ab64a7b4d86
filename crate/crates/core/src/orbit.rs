//! Orbit verdicts assembled from flows and certificates.
//!
//! A bracket whose `GL_n(R)`-orbit meets the critical set of `F` is called
//! distinguished; the projective flow started anywhere in the orbit lands in
//! one `O(n)`-orbit of critical points, which is why limits are compared
//! through `O(n)`-invariant signatures. Orbit membership of a limit is only
//! ever reported as "invariants consistent", never as an isomorphism proof.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bracket::{self, complexify, invariants, AlgebraInvariants, Bracket, ComplexInvariants};
use crate::error::{Error, Result};
use crate::flow::{flow_kempf_ness, flow_projective, FlowConfig, FlowResult, FlowStatus};
use crate::linalg;
use crate::moment::{critical_residual, moment, ActionModel, CriticalCertificate, GroupTag};
use crate::par::{self, Execution};
use crate::random;

/// Window for recognising eigenvalue ratios as small rationals.
pub const RATIONAL_TOL: f64 = 1e-6;
/// Largest denominator tried when rationalizing an eigenvalue type.
pub const MAX_DENOMINATOR: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Distinguished,
    NotDetermined,
}

/// Compact record of a flow run for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub status: FlowStatus,
    pub elapsed_flow_time: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub f_start: f64,
    pub f_end: f64,
    pub max_f_increase: f64,
    pub max_sphere_defect: f64,
}

impl From<&FlowResult> for FlowSummary {
    fn from(r: &FlowResult) -> Self {
        Self {
            status: r.status,
            elapsed_flow_time: r.elapsed_flow_time,
            accepted_steps: r.diagnostics.accepted_steps,
            rejected_steps: r.diagnostics.rejected_steps,
            f_start: r.f_history.first().copied().unwrap_or(f64::NAN),
            f_end: r.f_history.last().copied().unwrap_or(f64::NAN),
            max_f_increase: r.diagnostics.max_f_increase,
            max_sphere_defect: r.diagnostics.max_sphere_defect,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistinguishedVerdict {
    pub verdict: Verdict,
    pub certificate: Option<CriticalCertificate>,
    pub limit_bracket: Bracket<f64>,
    /// Invariants of the limit equal those of the start. Meaningless (and
    /// `false`) when `invariants_checked` is false.
    pub invariants_match_start: bool,
    pub invariants_checked: bool,
    pub start_invariants: Option<AlgebraInvariants>,
    pub limit_invariants: Option<AlgebraInvariants>,
    pub flow: FlowResult,
}

/// Runs the projective flow from `mu` under `GL_n(R)` and certifies the limit.
/// With `allow_non_lie` raw tensors are accepted and the invariant check is
/// skipped for them.
pub fn is_distinguished_with(mu: &Bracket<f64>, cfg: &FlowConfig, allow_non_lie: bool) -> Result<DistinguishedVerdict> {
    if mu.is_zero() {
        return Err(Error::ZeroVector("zero bracket"));
    }
    let start_invariants = match invariants(mu) {
        Ok(inv) => Some(inv),
        Err(e @ Error::NotLie { .. }) if !allow_non_lie => return Err(e),
        Err(_) => None,
    };
    let model = ActionModel::gl_real(mu.n());
    let flow = flow_projective(&model, &mu.to_vector(), cfg)?;
    let limit_bracket = Bracket::from_vector(mu.n(), &flow.limit_point)?;
    let limit_invariants = start_invariants.as_ref().and_then(|_| invariants(&limit_bracket).ok());
    let invariants_checked = start_invariants.is_some();
    let invariants_match_start = invariants_checked && start_invariants == limit_invariants;
    let certified = flow.status == FlowStatus::Converged
        && flow.certificate.as_ref().is_some_and(|c| c.residual < cfg.tol_residual);
    let verdict = if certified && (invariants_match_start || !invariants_checked) {
        Verdict::Distinguished
    } else {
        Verdict::NotDetermined
    };
    Ok(DistinguishedVerdict {
        verdict,
        certificate: flow.certificate.clone(),
        limit_bracket,
        invariants_match_start,
        invariants_checked,
        start_invariants,
        limit_invariants,
        flow,
    })
}

pub fn is_distinguished(mu: &Bracket<f64>, cfg: &FlowConfig) -> Result<DistinguishedVerdict> {
    is_distinguished_with(mu, cfg, false)
}

/// Verdicts for many starting brackets, in input order.
pub fn distinguished_batch(
    brackets: &[Bracket<f64>],
    cfg: &FlowConfig,
    exec: Execution,
) -> Vec<Result<DistinguishedVerdict>> {
    par::map(exec, brackets, |mu| is_distinguished(mu, cfg))
}

/// Flows from `g·mu` for each `g` in `perturbations`.
pub fn orbit_collapse(
    mu: &Bracket<f64>,
    perturbations: &[DMatrix<f64>],
    cfg: &FlowConfig,
    exec: Execution,
) -> Vec<Result<DistinguishedVerdict>> {
    par::map(exec, perturbations, |g| {
        let start = bracket::group_act(g, mu)?;
        is_distinguished(&start, cfg)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NilsolitonData {
    pub soliton_constant: f64,
    /// `D = m̃(μ) + λI`.
    pub derivation: DMatrix<f64>,
    /// Ascending eigenvalues of `D`.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues as coprime integers, when they are rational within
    /// [`RATIONAL_TOL`].
    pub eigenvalue_type: Option<Vec<u64>>,
    pub derivation_defect: f64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest-integer ratio of a positive spectrum, if one exists with
/// denominator at most [`MAX_DENOMINATOR`].
pub fn rationalize_type(eigenvalues: &[f64]) -> Option<Vec<u64>> {
    let min = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    // NaN or nonpositive
    if min.is_nan() || min <= 0.0 {
        return None;
    }
    let ratios: Vec<f64> = eigenvalues.iter().map(|d| d / min).collect();
    for q in 1..=MAX_DENOMINATOR {
        let scaled: Vec<f64> = ratios.iter().map(|r| r * q as f64).collect();
        if scaled.iter().all(|s| (s - s.round()).abs() < RATIONAL_TOL * q as f64) {
            let ints: Vec<u64> = scaled.iter().map(|s| s.round() as u64).collect();
            let g = ints.iter().fold(0, |acc, &x| gcd(acc, x));
            return Some(ints.iter().map(|x| x / g.max(1)).collect());
        }
    }
    None
}

/// Soliton constant and derivation of a critical nilpotent bracket.
pub fn nilsoliton_data(mu_crit: &Bracket<f64>, tol_residual: f64) -> Result<NilsolitonData> {
    if mu_crit.is_zero() {
        return Err(Error::ZeroVector("zero bracket"));
    }
    if !bracket::is_nilpotent(mu_crit) {
        return Err(Error::NotNilpotent);
    }
    let model = ActionModel::gl_real(mu_crit.n());
    let v = mu_crit.to_vector();
    let cert = critical_residual(&model, &v)?;
    if cert.residual >= tol_residual {
        return Err(Error::NotCritical {
            residual: cert.residual,
            tol: tol_residual,
        });
    }
    let mv = moment(&model, &v)?;
    let n = mu_crit.n();
    let d = &mv.matrix + DMatrix::identity(n, n) * cert.lambda;
    let defect = bracket::derivation_defect(&d, mu_crit)?;
    let scale = (d.norm() * mu_crit.norm()).max(1.0);
    if defect > 1e-8 * scale {
        return Err(Error::NotCritical {
            residual: defect / scale,
            tol: 1e-8,
        });
    }
    let eigenvalues = linalg::sym_eigenvalues(&d);
    Ok(NilsolitonData {
        soliton_constant: cert.lambda,
        eigenvalue_type: rationalize_type(&eigenvalues),
        eigenvalues,
        derivation: d,
        derivation_defect: defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KOrbitSignature {
    pub spectrum: Vec<f64>,
    pub f_value: f64,
    pub invariants: Option<AlgebraInvariants>,
}

/// Data invariant under the maximal compact subgroup: spectrum of `m[v]`,
/// `F(v)`, and algebra invariants when `v` is a real Lie bracket.
pub fn korbit_signature(v: &DVector<f64>, model: &ActionModel) -> Result<KOrbitSignature> {
    let mv = moment(model, v)?;
    let spectrum = mv.spectrum().ok_or(Error::ZeroVector("signature needs v != 0"))?;
    let invariants = if model.is_complex() {
        None
    } else {
        invariants(&Bracket::from_vector(model.n(), v)?).ok()
    };
    Ok(KOrbitSignature {
        spectrum,
        f_value: mv.f_value.expect("v != 0"),
        invariants,
    })
}

/// Componentwise equality: spectra and `F` within `tol`, invariants exactly.
pub fn signatures_equal(a: &KOrbitSignature, b: &KOrbitSignature, tol: f64) -> bool {
    a.spectrum.len() == b.spectrum.len()
        && a.spectrum.iter().zip(&b.spectrum).all(|(x, y)| (x - y).abs() <= tol)
        && (a.f_value - b.f_value).abs() <= tol
        && a.invariants == b.invariants
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexRun {
    pub status: FlowStatus,
    pub verdict: Verdict,
    pub f_limit: f64,
    pub residual: f64,
    /// Spectrum of the Hermitian `n[w]` at the limit.
    pub spectrum: Vec<f64>,
    pub summary: FlowSummary,
}

fn complex_run(model: &ActionModel, w: &DVector<f64>, cfg: &FlowConfig) -> Result<ComplexRun> {
    let res = flow_projective(model, w, cfg)?;
    let cert = res.certificate.clone();
    let certified = res.status == FlowStatus::Converged && cert.as_ref().is_some_and(|c| c.residual < cfg.tol_residual);
    Ok(ComplexRun {
        status: res.status,
        verdict: if certified {
            Verdict::Distinguished
        } else {
            Verdict::NotDetermined
        },
        f_limit: cert.as_ref().map_or(f64::NAN, |c| c.f_value),
        residual: cert.as_ref().map_or(f64::NAN, |c| c.residual),
        spectrum: cert.map(|c| c.spectrum).unwrap_or_default(),
        summary: FlowSummary::from(&res),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealComplexReport {
    /// Sup-norm of `n(μ) − m̃(μ)` on the real locus, over the full realified
    /// matrix (the imaginary blocks must vanish).
    pub real_locus_error: f64,
    pub real_verdict: Verdict,
    pub real_f_limit: f64,
    pub complex_embedded: ComplexRun,
    pub complex_perturbed: ComplexRun,
    /// `||μ*||² = 4·||n||²` at the complex limit of the perturbed run.
    pub mu_star_value: f64,
    /// `4 ×` the real limit value of `F`.
    pub mu_star_predicted: f64,
    pub verdicts_agree: bool,
}

/// Sup-norm distance between `n(μ)` of the embedded bracket and `m̃(μ)`
/// placed in the real block.
pub fn real_locus_error(mu: &Bracket<f64>) -> Result<f64> {
    let (c, cmodel) = complexify(mu);
    let n_val = moment(&cmodel, &c.to_realified())?;
    let m_val = moment(&ActionModel::gl_real(mu.n()), &mu.to_vector())?;
    let embedded = linalg::realify(&m_val.matrix, &DMatrix::zeros(mu.n(), mu.n()));
    Ok((n_val.matrix - embedded).amax())
}

/// Compares the real flow of `μ` with the flow of its complexification, from
/// the embedded point and from a random `GL_n(C)` perturbation of it.
pub fn compare_real_complex(mu: &Bracket<f64>, cfg: &FlowConfig, seed: u64) -> Result<RealComplexReport> {
    if mu.is_zero() {
        return Err(Error::ZeroVector("zero bracket"));
    }
    let real = is_distinguished_with(mu, cfg, true)?;
    let real_f_limit = real.certificate.as_ref().map_or(f64::NAN, |c| c.f_value);
    let (c, cmodel) = complexify(mu);
    let w = c.to_realified();
    let complex_embedded = complex_run(&cmodel, &w, cfg)?;
    let mut rng = random::seeded(seed);
    let g = random::well_conditioned_gl_complex(&mut rng, mu.n());
    let w_pert = cmodel.transport(&g, &w)?;
    let complex_perturbed = complex_run(&cmodel, &w_pert, cfg)?;
    let verdicts_agree = real.verdict == complex_embedded.verdict && real.verdict == complex_perturbed.verdict;
    Ok(RealComplexReport {
        real_locus_error: real_locus_error(mu)?,
        real_verdict: real.verdict,
        real_f_limit,
        mu_star_value: 4.0 * complex_perturbed.f_limit,
        mu_star_predicted: 4.0 * real_f_limit,
        complex_embedded,
        complex_perturbed,
        verdicts_agree,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClosedVerdict {
    Closed,
    NullConeSuspected,
    NotDetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedOrbitReport {
    pub verdict: ClosedVerdict,
    pub status: FlowStatus,
    /// `|m̃_sl(v)|/|v|²` at the start and at the end of the flow.
    pub moment_ratio_start: f64,
    pub moment_ratio_end: f64,
    pub norm_sq_start: f64,
    pub norm_sq_end: f64,
    /// `|v|²` never increased by more than integration noise.
    pub norm_monotone: bool,
    pub killing_start: (usize, usize, usize),
    pub killing_end: Option<(usize, usize, usize)>,
    pub elapsed_flow_time: f64,
    pub accepted_steps: usize,
}

/// Closed-orbit test under `SL_n(R)` via the Kempf–Ness flow.
pub fn is_closed_orbit_sl(mu: &Bracket<f64>, cfg: &FlowConfig) -> Result<ClosedOrbitReport> {
    closed_orbit_run(mu, cfg).map(|(report, _)| report)
}

/// [`is_closed_orbit_sl`] together with the underlying flow.
pub fn closed_orbit_run(mu: &Bracket<f64>, cfg: &FlowConfig) -> Result<(ClosedOrbitReport, FlowResult)> {
    if mu.is_zero() {
        return Err(Error::ZeroVector("zero bracket"));
    }
    let model = ActionModel::sl_real(mu.n());
    let res = flow_kempf_ness(&model, &mu.to_vector(), cfg)?;
    let verdict = match res.status {
        FlowStatus::Converged => ClosedVerdict::Closed,
        FlowStatus::Diverged if res.diagnostics.norm_collapse => ClosedVerdict::NullConeSuspected,
        _ => ClosedVerdict::NotDetermined,
    };
    let first = |h: &[f64]| h.first().copied().unwrap_or(f64::NAN);
    let last = |h: &[f64]| h.last().copied().unwrap_or(f64::NAN);
    let limit = Bracket::from_vector(mu.n(), &res.limit_point)?;
    let n0 = first(&res.norm_sq_history);
    let report = ClosedOrbitReport {
        verdict,
        status: res.status,
        moment_ratio_start: first(&res.gradnorm_history),
        moment_ratio_end: last(&res.gradnorm_history),
        norm_sq_start: n0,
        norm_sq_end: last(&res.norm_sq_history),
        norm_monotone: res.diagnostics.max_norm_sq_increase <= 1e-12 * n0.max(1.0),
        killing_start: bracket::killing_signature(mu),
        killing_end: (!limit.is_zero()).then(|| bracket::killing_signature(&limit)),
        elapsed_flow_time: res.elapsed_flow_time,
        accepted_steps: res.diagnostics.accepted_steps,
    };
    Ok((report, res))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComparisonMode {
    /// Both nilpotent: distinguished-orbit comparison under `GL_n(R)`.
    Distinguished,
    /// Otherwise: closed-orbit comparison under `SL_n(R)`.
    ClosedOrbit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealFormsReport {
    /// Complexified invariants agree. Necessary, not sufficient, for the two
    /// brackets to be real forms of one complex algebra.
    pub certified_real_forms: bool,
    pub warning: Option<String>,
    pub mode: ComparisonMode,
    pub complex_invariants: (ComplexInvariants, ComplexInvariants),
    pub verdicts: (String, String),
    pub verdicts_agree: bool,
}

/// Runs the same orbit test on two brackets and reports whether the
/// verdicts agree, as they must for real forms of one complex algebra.
pub fn compare_real_forms(mu1: &Bracket<f64>, mu2: &Bracket<f64>, cfg: &FlowConfig) -> Result<RealFormsReport> {
    if mu1.is_zero() || mu2.is_zero() {
        return Err(Error::ZeroVector("zero bracket"));
    }
    let inv1 = invariants(mu1)?;
    let inv2 = invariants(mu2)?;
    let c1 = inv1.complexified();
    let c2 = inv2.complexified();
    let certified = mu1.n() == mu2.n() && c1 == c2;
    let warning = (!certified)
        .then(|| "complexified invariants differ: not certified real forms of one complex algebra".to_string());
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let (mode, verdicts) = if inv1.nilpotent && inv2.nilpotent {
        let a = is_distinguished(mu1, cfg)?;
        let b = is_distinguished(mu2, cfg)?;
        (
            ComparisonMode::Distinguished,
            (format!("{:?}", a.verdict), format!("{:?}", b.verdict)),
        )
    } else {
        let a = is_closed_orbit_sl(mu1, cfg)?;
        let b = is_closed_orbit_sl(mu2, cfg)?;
        (
            ComparisonMode::ClosedOrbit,
            (format!("{:?}", a.verdict), format!("{:?}", b.verdict)),
        )
    };
    Ok(RealFormsReport {
        certified_real_forms: certified,
        warning,
        mode,
        complex_invariants: (c1, c2),
        verdicts_agree: verdicts.0 == verdicts.1,
        verdicts,
    })
}

/// Model for the given group over the bracket's dimension.
pub fn model_for(mu: &Bracket<f64>, group: GroupTag) -> ActionModel {
    ActionModel::for_group(group, mu.n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn rationalize() {
        assert_eq!(rationalize_type(&[4.0, 4.0, 8.0]), Some(vec![1, 1, 2]));
        assert_eq!(rationalize_type(&[2.0, 3.0, 5.0]), Some(vec![2, 3, 5]));
        assert_eq!(rationalize_type(&[1.0, 2f64.sqrt()]), None);
        assert_eq!(rationalize_type(&[-1.0, 1.0]), None);
    }

    #[test]
    fn heisenberg_nilsoliton() {
        let data = nilsoliton_data(&catalog::heisenberg3(), 1e-8).unwrap();
        assert!((data.soliton_constant - 6.0).abs() < 1e-12);
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 4.0, 8.0]));
        assert!((&data.derivation - expected).amax() < 1e-12);
        assert_eq!(data.eigenvalue_type, Some(vec![1, 1, 2]));
        assert!(data.derivation_defect < 1e-10);
    }

    #[test]
    fn scaled_heisenberg_nilsoliton() {
        let data = nilsoliton_data(&catalog::heisenberg3().scale(3.0), 1e-8).unwrap();
        assert!((data.soliton_constant - 54.0).abs() < 1e-10);
        assert_eq!(data.eigenvalue_type, Some(vec![1, 1, 2]));
    }

    #[test]
    fn nilsoliton_rejects_semisimple() {
        assert_eq!(nilsoliton_data(&catalog::so3(), 1e-8), Err(Error::NotNilpotent));
    }

    #[test]
    fn zero_bracket_errors() {
        let z = catalog::abelian(3);
        let cfg = FlowConfig::default();
        assert!(is_distinguished(&z, &cfg).is_err());
        assert!(compare_real_complex(&z, &cfg, 0).is_err());
        assert!(is_closed_orbit_sl(&z, &cfg).is_err());
    }

    #[test]
    fn heisenberg_vs_so3_signatures() {
        let model = ActionModel::gl_real(3);
        let a = korbit_signature(&catalog::heisenberg3().to_vector(), &model).unwrap();
        let b = korbit_signature(&catalog::so3().to_vector(), &model).unwrap();
        assert!((a.f_value - 3.0).abs() < 1e-12);
        assert!((b.f_value - 1.0 / 3.0).abs() < 1e-12);
        assert!(!signatures_equal(&a, &b, 1e-6));
        assert!(signatures_equal(&a, &a.clone(), 0.0));
    }

    #[test]
    fn closed_orbit_verdicts() {
        let cfg = FlowConfig::default();
        assert_eq!(
            is_closed_orbit_sl(&catalog::so3(), &cfg).unwrap().verdict,
            ClosedVerdict::Closed
        );
        let h = is_closed_orbit_sl(&catalog::heisenberg3(), &cfg).unwrap();
        assert_eq!(h.verdict, ClosedVerdict::NullConeSuspected);
        assert!(h.norm_monotone);
    }

    #[test]
    fn self_comparison_agrees() {
        let cfg = FlowConfig::default();
        let r = compare_real_forms(&catalog::heisenberg3(), &catalog::heisenberg3(), &cfg).unwrap();
        assert!(r.certified_real_forms);
        assert_eq!(r.mode, ComparisonMode::Distinguished);
        assert!(r.verdicts_agree);
    }
}
