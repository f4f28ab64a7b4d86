//! Negative gradient flows of the moment-map norm square.
//!
//! * [`flow_projective`] integrates `v' = −grad F(v)` on the unit sphere of
//!   `V`, which double-covers `PV`, renormalizing after every accepted step.
//! * [`flow_kempf_ness`] integrates `v' = −ρ(m̃(v))v` on `V` itself; `|v|²`
//!   decreases at rate `2||m̃(v)||²` and a limit with `m̃ = 0` is a minimal
//!   vector.
//!
//! Both use an adaptive Dormand–Prince 5(4) pair applied to the group
//! element that moves the start vector, not to the vector itself: the flows
//! are tangent to orbits, and integrating on the group keeps the numerical
//! trajectory in the orbit even where the limit is unstable in `V`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::moment::{self, critical_residual, ActionModel, CriticalCertificate, GroupTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Projective flow stops once `|grad F| < tol_grad`; the Kempf–Ness flow
    /// once `|m̃(v)| < tol_grad·|v|²`.
    pub tol_grad: f64,
    pub tol_residual: f64,
    pub max_flow_time: f64,
    pub rk_rel_tol: f64,
    pub rk_abs_tol: f64,
    pub max_steps: usize,
    /// Keep every `record_stride`-th accepted step in the histories.
    pub record_stride: usize,
    /// Accepted steps over which the gradient norm must drop by 1%.
    pub stall_window: usize,
    /// Kempf–Ness flow: `|v|²/|v0|²` below this is reported as norm collapse.
    pub null_cone_ratio: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tol_grad: 1e-10,
            tol_residual: 1e-8,
            max_flow_time: 1e4,
            rk_rel_tol: 1e-9,
            rk_abs_tol: 1e-12,
            max_steps: 1_000_000,
            record_stride: 1,
            stall_window: 10_000,
            null_cone_ratio: 1e-3,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_grad", self.tol_grad),
            ("tol_residual", self.tol_residual),
            ("max_flow_time", self.max_flow_time),
            ("rk_rel_tol", self.rk_rel_tol),
            ("rk_abs_tol", self.rk_abs_tol),
            ("null_cone_ratio", self.null_cone_ratio),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite")));
            }
        }
        if self.max_steps == 0 || self.record_stride == 0 || self.stall_window == 0 {
            return Err(Error::InvalidConfig(
                "max_steps, record_stride and stall_window must be nonzero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowStatus {
    Converged,
    MaxTime,
    Stalled,
    Diverged,
}

impl std::fmt::Display for FlowStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest `F(v_{k+1}) − F(v_k)` over accepted steps.
    pub max_f_increase: f64,
    /// Largest `||v| − 1|` after an accepted projective step.
    pub max_sphere_defect: f64,
    /// Largest `|v_{k+1}|² − |v_k|²` over accepted Kempf–Ness steps.
    pub max_norm_sq_increase: f64,
    /// Kempf–Ness only: the norm collapsed below `null_cone_ratio`.
    pub norm_collapse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub limit_point: DVector<f64>,
    pub status: FlowStatus,
    pub f_history: Vec<f64>,
    /// Projective flow: `|grad F|`. Kempf–Ness flow: `|m̃(v)|/|v|²`.
    pub gradnorm_history: Vec<f64>,
    /// `|v|²` (constant 1 for the projective flow).
    pub norm_sq_history: Vec<f64>,
    pub times: Vec<f64>,
    pub elapsed_flow_time: f64,
    pub certificate: Option<CriticalCertificate>,
    pub diagnostics: FlowDiagnostics,
}

// Dormand–Prince 5(4); the systems are autonomous so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// One trial step on the group. Solves `G' = X(G·v) G`, `G(0) = 1` with the
/// Dormand–Prince pair and returns the 5th-order `G` with the scaled error
/// norm. Working on `G` keeps every trial point exactly on the orbit of `v`.
fn dopri_group_step<F>(
    model: &ActionModel,
    gen: &F,
    v: &DVector<f64>,
    x1: &DMatrix<f64>,
    h: f64,
    rel: f64,
    abs: f64,
) -> Option<(DMatrix<f64>, f64)>
where
    F: Fn(&DVector<f64>) -> Option<DMatrix<f64>>,
{
    let d = x1.nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let mut k: Vec<DMatrix<f64>> = Vec::with_capacity(7);
    k.push(x1.clone());
    for row in &A[1..7] {
        let mut gs = id.clone();
        for (kj, &a) in k.iter().zip(row) {
            if a != 0.0 {
                gs += kj * (h * a);
            }
        }
        let ys = model.transport(&gs, v).ok()?;
        k.push(gen(&ys)? * gs);
    }
    let mut g5 = id.clone();
    let mut err = DMatrix::zeros(d, d);
    for s in 0..7 {
        if B5[s] != 0.0 {
            g5 += &k[s] * (h * B5[s]);
        }
        let e = B5[s] - B4[s];
        if e != 0.0 {
            err += &k[s] * (h * e);
        }
    }
    // Tolerance relative to the size of the increment rather than of G, so
    // the local error shrinks with the velocity and does not put a noise
    // floor under the convergence test.
    let increment = (&g5 - &id).amax();
    let sc = abs + rel * increment;
    Some((g5, err.amax() / sc))
}

/// Rebase the accumulated group element once it is this ill-conditioned.
const REBASE_COND: f64 = 1e6;

/// Current point kept as `g·anchor`. Recomputing from a fixed anchor means
/// rounding errors are never propagated off the orbit, which matters near
/// critical points that are saddles of `F` on the whole of `V`.
struct OrbitTrack {
    anchor: DVector<f64>,
    g: DMatrix<f64>,
    /// Projective flows may drop the scalar part of `g`.
    projective: bool,
}

impl OrbitTrack {
    fn new(model: &ActionModel, v: &DVector<f64>, projective: bool) -> Self {
        let d = model.matrix_dim();
        Self {
            anchor: v.clone(),
            g: DMatrix::identity(d, d),
            projective,
        }
    }

    /// Point reached after left-multiplying by `step`, or `None` if the
    /// product cannot be applied.
    fn advance(&self, model: &ActionModel, step: &DMatrix<f64>) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let mut g = step * &self.g;
        let s = g.amax();
        if !(s > 0.0 && s.is_finite()) {
            return None;
        }
        // scalars only rescale v; keep g near unit size
        if self.projective {
            g /= s;
        }
        let y = model.transport(&g, &self.anchor).ok()?;
        Some((g, y))
    }

    fn accept(&mut self, g: DMatrix<f64>, v: &DVector<f64>) {
        self.g = g;
        if linalg::condition_number(&self.g) > REBASE_COND {
            log::debug!("rebasing orbit track");
            self.anchor = v.clone();
            let d = self.g.nrows();
            self.g = DMatrix::identity(d, d);
        }
    }
}

fn next_step(h: f64, err: f64) -> f64 {
    let factor = if err == 0.0 {
        MAX_FACTOR
    } else {
        (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
    };
    h * factor
}

fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Function value, generator and velocity at a point of the sphere.
struct SphereEval {
    f: f64,
    velocity: DVector<f64>,
}

/// Minimum-norm `Y` in the algebra of `model` with `ρ(Y)y = target`.
///
/// Driving `g` with the naive generator (a multiple of `m̃`) lets it drift
/// along the stabilizer once the point stops moving, so `g` becomes
/// ill-conditioned and `g·anchor` loses accuracy. The minimum-norm solution
/// vanishes with the velocity.
fn min_norm_generator(model: &ActionModel, y: &DVector<f64>, target: &DVector<f64>) -> Option<DMatrix<f64>> {
    let d = model.matrix_dim();
    let m = moment::orbit_map_matrix(model, y).ok()?;
    let c = linalg::pinv_solve(&m, target, GENERATOR_RTOL);
    let x = model
        .algebra_basis()
        .iter()
        .zip(c.iter())
        .fold(DMatrix::zeros(d, d), |acc, (b, &ci)| acc + b * ci);
    all_finite_matrix(&x).then_some(x)
}

const GENERATOR_RTOL: f64 = 1e-10;

fn all_finite_matrix(x: &DMatrix<f64>) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Generator of the sphere flow at any nonzero `y`, solved in the full
/// `gl` (scalars act trivially on `PV`, so this also serves the SL model).
fn sphere_generator(model: &ActionModel, ambient: &ActionModel, y: &DVector<f64>, speed: f64) -> Option<DMatrix<f64>> {
    let u = y / model.norm_v(y);
    let vel = moment::sphere_gradient_unchecked(model, &u) * (-speed);
    min_norm_generator(ambient, &u, &vel)
}

fn sphere_eval(model: &ActionModel, v: &DVector<f64>, speed: f64) -> SphereEval {
    let mv = moment::moment(model, v).expect("checked length");
    let w = model.act(&mv.matrix, v).expect("checked shape");
    let c = model.inner_v(&w, v);
    let g = (w - v * c) * 4.0;
    SphereEval {
        f: mv.f_value.unwrap_or(f64::NAN),
        velocity: g * (-speed),
    }
}

fn normalized(model: &ActionModel, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != model.dim_v() {
        return Err(Error::DimensionMismatch {
            expected: model.dim_v(),
            got: v.len(),
        });
    }
    let nv = model.norm_v(v);
    if nv == 0.0 {
        return Err(Error::ZeroVector("flow start vector"));
    }
    Ok(v / nv)
}

/// Slack allowed for `F` to rise over one accepted step before the step is
/// rejected as integration noise.
const MONOTONE_SLACK: f64 = 1e-13;

struct Recorder {
    stride: usize,
    f: Vec<f64>,
    grad: Vec<f64>,
    norm_sq: Vec<f64>,
    times: Vec<f64>,
}

impl Recorder {
    fn new(stride: usize) -> Self {
        Self {
            stride,
            f: Vec::new(),
            grad: Vec::new(),
            norm_sq: Vec::new(),
            times: Vec::new(),
        }
    }

    fn push(&mut self, step: usize, force: bool, t: f64, f: f64, g: f64, ns: f64) {
        if force || step.is_multiple_of(self.stride) {
            if self.times.last() == Some(&t) {
                return;
            }
            self.f.push(f);
            self.grad.push(g);
            self.norm_sq.push(ns);
            self.times.push(t);
        }
    }
}

/// Negative gradient flow of `F` on the unit sphere, run until the gradient
/// vanishes or the budget is spent.
pub fn flow_projective(model: &ActionModel, v0: &DVector<f64>, cfg: &FlowConfig) -> Result<FlowResult> {
    cfg.validate()?;
    let v = normalized(model, v0)?;
    Ok(run_projective(model, v, cfg, 1.0, None))
}

/// Integrates the projective flow of `speed · F` from `v0` up to time
/// `t_end` exactly, without convergence stopping. Returns the point reached.
pub fn integrate_projective_to(
    model: &ActionModel,
    v0: &DVector<f64>,
    speed: f64,
    t_end: f64,
    cfg: &FlowConfig,
) -> Result<DVector<f64>> {
    cfg.validate()?;
    if !(speed > 0.0 && t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidConfig("speed must be positive and t_end finite".into()));
    }
    let v = normalized(model, v0)?;
    let res = run_projective(model, v, cfg, speed, Some(t_end));
    match res.status {
        FlowStatus::Diverged | FlowStatus::Stalled => Err(Error::NotConverged(res.status.to_string())),
        _ => Ok(res.limit_point),
    }
}

fn run_projective(
    model: &ActionModel,
    mut v: DVector<f64>,
    cfg: &FlowConfig,
    speed: f64,
    fixed_end: Option<f64>,
) -> FlowResult {
    let ambient = match model.group() {
        GroupTag::SlReal => ActionModel::gl_real(model.n()),
        _ => model.clone(),
    };
    let gen = |y: &DVector<f64>| sphere_generator(model, &ambient, y, speed);
    let mut track = OrbitTrack::new(model, &v, true);
    let t_max = fixed_end.unwrap_or(cfg.max_flow_time);
    let mut diag = FlowDiagnostics::default();
    let mut rec = Recorder::new(cfg.record_stride);

    let mut cur = sphere_eval(model, &v, speed);
    let mut t = 0.0;
    let mut h = initial_step(&cur.velocity, t_max);
    let mut window_start = (0usize, f64::INFINITY);

    let status = loop {
        let gn = model.norm_v(&cur.velocity) / speed;
        rec.push(diag.accepted_steps, false, t, cur.f, gn, 1.0);
        if !cur.f.is_finite() || !all_finite(&cur.velocity) {
            break FlowStatus::Diverged;
        }
        if fixed_end.is_some_and(|te| t >= te) {
            break FlowStatus::MaxTime;
        }
        if fixed_end.is_none() && gn < cfg.tol_grad {
            let cert = critical_residual(model, &v).expect("v is a unit vector");
            // |m̃| ≈ 0 is a minimal vector; there the residual ratio is noise
            if cert.residual < cfg.tol_residual || cur.f.sqrt() < cfg.tol_grad {
                break FlowStatus::Converged;
            }
        }
        if t >= t_max || diag.accepted_steps + diag.rejected_steps >= cfg.max_steps {
            break FlowStatus::MaxTime;
        }
        if fixed_end.is_none() {
            if diag.accepted_steps >= window_start.0 + cfg.stall_window {
                if gn > 0.99 * window_start.1 {
                    break FlowStatus::Stalled;
                }
                window_start = (diag.accepted_steps, gn);
            } else if window_start.1.is_infinite() {
                window_start = (diag.accepted_steps, gn);
            }
        }
        if h < 1e-14 * t.max(1.0) {
            break FlowStatus::Stalled;
        }

        let step = h.min(t_max - t);
        let trial = gen(&v)
            .and_then(|x1| dopri_group_step(model, &gen, &v, &x1, step, cfg.rk_rel_tol, cfg.rk_abs_tol))
            .and_then(|(gs, err)| Some((track.advance(model, &gs)?, err)))
            .filter(|((_, y), err)| err.is_finite() && all_finite(y) && model.norm_v(y) > 0.0);
        let Some(((g_new, y5), err)) = trial else {
            h = step * MIN_FACTOR;
            diag.rejected_steps += 1;
            continue;
        };
        if err > 1.0 {
            h = next_step(step, err);
            diag.rejected_steps += 1;
            continue;
        }
        let nv = model.norm_v(&y5);
        let y_new = &y5 / nv;
        let next = sphere_eval(model, &y_new, speed);
        if next.f > cur.f + MONOTONE_SLACK {
            h = step * 0.5;
            diag.rejected_steps += 1;
            continue;
        }
        diag.max_f_increase = diag.max_f_increase.max(next.f - cur.f);
        diag.max_sphere_defect = diag.max_sphere_defect.max((model.norm_v(&y_new) - 1.0).abs());
        diag.accepted_steps += 1;
        t += step;
        track.accept(g_new, &y_new);
        v = y_new;
        cur = next;
        h = next_step(step, err);
    };

    let gn = model.norm_v(&cur.velocity) / speed;
    rec.push(diag.accepted_steps, true, t, cur.f, gn, 1.0);
    let certificate = critical_residual(model, &v).ok().filter(|c| c.residual.is_finite());
    FlowResult {
        limit_point: v,
        status,
        f_history: rec.f,
        gradnorm_history: rec.grad,
        norm_sq_history: rec.norm_sq,
        times: rec.times,
        elapsed_flow_time: t,
        certificate,
        diagnostics: diag,
    }
}

fn initial_step(velocity: &DVector<f64>, t_max: f64) -> f64 {
    let vn = velocity.amax();
    let h = if vn > 0.0 { 1e-2 / vn } else { 1.0 };
    h.min(t_max.max(f64::MIN_POSITIVE))
}

/// Kempf–Ness flow `v' = −ρ(m̃(v))v` on `V`, searching the orbit for a
/// minimal vector. Only meaningful for `SL_n(R)`: under `GL` the trace of
/// `m̃(v)` is `−|v|²`, so `m̃` never vanishes away from 0.
pub fn flow_kempf_ness(model: &ActionModel, v0: &DVector<f64>, cfg: &FlowConfig) -> Result<FlowResult> {
    cfg.validate()?;
    if model.group() != GroupTag::SlReal {
        return Err(Error::UnsupportedModel(format!(
            "Kempf-Ness flow needs SL_n(R); under {} tr m̃(v) = -|v|^2 so m̃ never vanishes",
            model.group()
        )));
    }
    if v0.len() != model.dim_v() {
        return Err(Error::DimensionMismatch {
            expected: model.dim_v(),
            got: v0.len(),
        });
    }
    let n0 = model.inner_v(v0, v0);
    if n0 == 0.0 {
        return Err(Error::ZeroVector("flow start vector"));
    }

    let eval = |y: &DVector<f64>| moment::moment(model, y).expect("checked length");
    let gen = |y: &DVector<f64>| {
        let vel = -model.act(&eval(y).matrix, y).expect("checked shape");
        min_norm_generator(model, y, &vel)
    };

    let mut v = v0.clone();
    let mut track = OrbitTrack::new(model, &v, false);
    let mut diag = FlowDiagnostics::default();
    let mut rec = Recorder::new(cfg.record_stride);
    let mut mv = eval(&v);
    let mut t = 0.0;
    let mut h = initial_step(&model.act(&mv.matrix, &v)?, cfg.max_flow_time);
    let mut window_start = (0usize, f64::INFINITY);

    let status = loop {
        let ns = mv.vector_norm_sq;
        let ratio = if ns > 0.0 { mv.norm_sq.sqrt() / ns } else { f64::NAN };
        rec.push(diag.accepted_steps, false, t, mv.f_value.unwrap_or(f64::NAN), ratio, ns);
        if !all_finite(&v) || !ratio.is_finite() {
            break FlowStatus::Diverged;
        }
        if ratio < cfg.tol_grad {
            break FlowStatus::Converged;
        }
        if ns / n0 < cfg.null_cone_ratio {
            diag.norm_collapse = true;
            break FlowStatus::Diverged;
        }
        if t >= cfg.max_flow_time || diag.accepted_steps + diag.rejected_steps >= cfg.max_steps {
            break FlowStatus::MaxTime;
        }
        if diag.accepted_steps >= window_start.0 + cfg.stall_window {
            if ratio > 0.99 * window_start.1 && ns > 0.99 * n0 {
                break FlowStatus::Stalled;
            }
            window_start = (diag.accepted_steps, ratio);
        } else if window_start.1.is_infinite() {
            window_start = (diag.accepted_steps, ratio);
        }
        if h < 1e-14 * t.max(1.0) {
            break FlowStatus::Stalled;
        }

        let step = h.min(cfg.max_flow_time - t);
        let trial = gen(&v)
            .and_then(|x1| dopri_group_step(model, &gen, &v, &x1, step, cfg.rk_rel_tol, cfg.rk_abs_tol))
            .and_then(|(gs, err)| Some((track.advance(model, &gs)?, err)))
            .filter(|((_, y), err)| err.is_finite() && all_finite(y));
        let Some(((g_new, y5), err)) = trial else {
            h = step * MIN_FACTOR;
            diag.rejected_steps += 1;
            continue;
        };
        if err > 1.0 {
            h = next_step(step, err);
            diag.rejected_steps += 1;
            continue;
        }
        let mv_new = eval(&y5);
        if mv_new.vector_norm_sq > ns * (1.0 + MONOTONE_SLACK) {
            h = step * 0.5;
            diag.rejected_steps += 1;
            continue;
        }
        diag.max_norm_sq_increase = diag.max_norm_sq_increase.max(mv_new.vector_norm_sq - ns);
        diag.accepted_steps += 1;
        t += step;
        track.accept(g_new, &y5);
        v = y5;
        mv = mv_new;
        h = next_step(step, err);
    };

    let ns = mv.vector_norm_sq;
    let ratio = if ns > 0.0 { mv.norm_sq.sqrt() / ns } else { f64::NAN };
    rec.push(diag.accepted_steps, true, t, mv.f_value.unwrap_or(f64::NAN), ratio, ns);
    let certificate = critical_residual(model, &v).ok().filter(|c| c.residual.is_finite());
    Ok(FlowResult {
        limit_point: v,
        status,
        f_history: rec.f,
        gradnorm_history: rec.grad,
        norm_sq_history: rec.norm_sq,
        times: rec.times,
        elapsed_flow_time: t,
        certificate,
        diagnostics: diag,
    })
}

/// Re-certifies the limit of a converged flow as a critical point.
pub fn omega_limit_representative(
    result: &FlowResult,
    model: &ActionModel,
    tol_residual: f64,
) -> Result<CriticalCertificate> {
    if result.status != FlowStatus::Converged {
        return Err(Error::NotConverged(result.status.to_string()));
    }
    let cert = critical_residual(model, &result.limit_point)?;
    if cert.residual >= tol_residual {
        return Err(Error::NotCritical {
            residual: cert.residual,
            tol: tol_residual,
        });
    }
    Ok(cert)
}
