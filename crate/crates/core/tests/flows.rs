use std::time::Instant;

use momentflow_core::bracket::{group_act, invariants, killing_signature};
use momentflow_core::flow::{flow_kempf_ness, flow_projective, integrate_projective_to, omega_limit_representative};
use momentflow_core::moment::moment;
use momentflow_core::{catalog, random, ActionModel, Bracket, FlowConfig, FlowStatus};

#[test]
fn heisenberg_orbit_collapses() {
    let cfg = FlowConfig::default();
    let model = ActionModel::gl_real(3);
    let h = catalog::heisenberg3();
    let mut rng = random::seeded(2024);
    let started = Instant::now();
    for _ in 0..5 {
        let g = random::well_conditioned_gl(&mut rng, 3);
        let start = group_act(&g, &h).unwrap();
        let res = flow_projective(&model, &start.to_vector(), &cfg).unwrap();
        assert_eq!(res.status, FlowStatus::Converged);
        let cert = omega_limit_representative(&res, &model, cfg.tol_residual).unwrap();
        for (a, b) in cert.spectrum.iter().zip([-1.0, -1.0, 1.0]) {
            assert!((a - b).abs() < 1e-5);
        }
        assert!((cert.f_value - 3.0).abs() < 1e-5);
        assert!(res.diagnostics.max_f_increase <= 1e-12);
        assert!(res.diagnostics.max_sphere_defect < 1e-12);
        assert!(res.f_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let limit = Bracket::from_vector(3, &res.limit_point).unwrap();
        assert_eq!(invariants(&limit).unwrap(), invariants(&h).unwrap());
    }
    eprintln!("5 flows in {:?}", started.elapsed());
}

#[test]
fn flow_is_orthogonally_equivariant() {
    let cfg = FlowConfig::default();
    let model = ActionModel::gl_real(3);
    let mut rng = random::seeded(77);
    let v0 = group_act(&random::well_conditioned_gl(&mut rng, 3), &catalog::heisenberg3())
        .unwrap()
        .to_vector();
    let k = random::orthogonal(&mut rng, 3);
    let a = integrate_projective_to(&model, &model.transport(&k, &v0).unwrap(), 1.0, 1.0, &cfg).unwrap();
    let b = model
        .transport(&k, &integrate_projective_to(&model, &v0, 1.0, 1.0, &cfg).unwrap())
        .unwrap();
    assert!((a - b).amax() < 1e-6);
}

#[test]
fn time_rescaling() {
    let cfg = FlowConfig {
        rk_rel_tol: 1e-12,
        rk_abs_tol: 1e-14,
        ..FlowConfig::default()
    };
    let model = ActionModel::gl_real(3);
    let mut rng = random::seeded(5);
    let v0 = random::bracket(&mut rng, 3).to_vector();
    for t in [0.1, 1.0] {
        let fast = integrate_projective_to(&model, &v0, 4.0, t, &cfg).unwrap();
        let slow = integrate_projective_to(&model, &v0, 1.0, 4.0 * t, &cfg).unwrap();
        assert!((fast - slow).amax() < 1e-6, "t = {t}");
    }
}

#[test]
fn kempf_ness_sl2r_reaches_minimal_vector() {
    let cfg = FlowConfig::default();
    let model = ActionModel::sl_real(3);
    let mu = catalog::sl2r();
    let m0 = moment(&model, &mu.to_vector()).unwrap();
    assert!((m0.matrix[(0, 0)] + 8.0).abs() < 1e-12);
    let res = flow_kempf_ness(&model, &mu.to_vector(), &cfg).unwrap();
    assert_eq!(res.status, FlowStatus::Converged);
    let last = *res.gradnorm_history.last().unwrap();
    assert!(last < 1e-6);
    assert!(res.norm_sq_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    let limit = Bracket::from_vector(3, &res.limit_point).unwrap();
    assert_eq!(killing_signature(&limit), (2, 1, 0));
}

#[test]
fn kempf_ness_heisenberg_collapses() {
    let cfg = FlowConfig::default();
    let model = ActionModel::sl_real(3);
    let res = flow_kempf_ness(&model, &catalog::heisenberg3().to_vector(), &cfg).unwrap();
    assert_eq!(res.status, FlowStatus::Diverged);
    assert!(res.diagnostics.norm_collapse);
    assert!(res.norm_sq_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn kempf_ness_norm_rate() {
    // d|v|²/dt = −2||m̃||²: check along the recorded sl2r trajectory
    let cfg = FlowConfig::default();
    let model = ActionModel::sl_real(3);
    let v0 = catalog::sl2r().to_vector();
    let res = flow_kempf_ness(&model, &v0, &cfg).unwrap();
    let m0 = moment(&model, &v0).unwrap();
    let (t1, n1) = (res.times[1], res.norm_sq_history[1]);
    let rate = (n1 - res.norm_sq_history[0]) / t1;
    assert!((rate + 2.0 * m0.norm_sq).abs() < 0.05 * 2.0 * m0.norm_sq);
}

#[test]
fn sl_projective_flow_stationary_at_minimal_direction() {
    let cfg = FlowConfig::default();
    let model = ActionModel::sl_real(3);
    let res = flow_projective(&model, &catalog::so3().to_vector(), &cfg).unwrap();
    assert_eq!(res.status, FlowStatus::Converged);
    assert_eq!(res.diagnostics.accepted_steps, 0);
    assert!(res.certificate.unwrap().f_value < 1e-24);
}

#[test]
fn complexified_heisenberg_flow() {
    let cfg = FlowConfig::default();
    let (c, model) = momentflow_core::bracket::complexify(&catalog::heisenberg3());
    let mut rng = random::seeded(9);
    let g = random::well_conditioned_gl_complex(&mut rng, 3);
    let w = model.transport(&g, &c.to_realified()).unwrap();
    let res = flow_projective(&model, &w, &cfg).unwrap();
    assert_eq!(res.status, FlowStatus::Converged);
    let f = res.certificate.unwrap().f_value;
    assert!((4.0 * f - 12.0).abs() < 1e-4);
}

/// Flows from a random point of the orbit of a nilpotent catalog entry must
/// stay in the orbit and stop at its nilsoliton.
fn nilpotent_orbit_limit(mu: &Bracket<f64>, f_expected: f64, seed: u64) -> Bracket<f64> {
    let cfg = FlowConfig::default();
    let n = mu.n();
    let model = ActionModel::gl_real(n);
    let mut rng = random::seeded(seed);
    let start = group_act(&random::well_conditioned_gl(&mut rng, n), mu).unwrap();
    let res = flow_projective(&model, &start.to_vector(), &cfg).unwrap();
    assert_eq!(res.status, FlowStatus::Converged);
    assert!(res.diagnostics.accepted_steps > 0);
    assert!(res.diagnostics.max_f_increase <= 1e-12);
    let cert = omega_limit_representative(&res, &model, cfg.tol_residual).unwrap();
    assert!((cert.f_value - f_expected).abs() < 1e-8, "F = {}", cert.f_value);
    let limit = Bracket::from_vector(n, &res.limit_point).unwrap();
    assert_eq!(invariants(&limit).unwrap(), invariants(mu).unwrap());
    limit
}

#[test]
fn heisenberg5_flows_to_nilsoliton() {
    // saddle of F on the whole tensor space; a vector-space integrator drifts off
    let limit = nilpotent_orbit_limit(&catalog::heisenberg5(), 2.0, 31);
    let data = momentflow_core::orbit::nilsoliton_data(&limit, 1e-8).unwrap();
    assert_eq!(data.eigenvalue_type, Some(vec![1, 1, 1, 1, 2]));
    // λ = F·|v|² on the unit sphere
    assert!((data.soliton_constant - 2.0).abs() < 1e-8);
}

#[test]
fn free_two_step_flows_to_nilsoliton() {
    let limit = nilpotent_orbit_limit(&catalog::free_two_step3(), 5.0 / 3.0, 32);
    let data = momentflow_core::orbit::nilsoliton_data(&limit, 1e-8).unwrap();
    assert_eq!(data.eigenvalue_type, Some(vec![1, 1, 1, 2, 2, 2]));
}
