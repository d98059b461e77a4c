use lem_core::solvers::{
    cost_comparison, hmm_solve, linear_exact, micro_contraction, reference_stiff_solve, FastSlowSystem, HmmSettings,
};
use lem_core::Error;

#[test]
fn hmm_is_accurate_for_tiny_tau() {
    let tau = 1e-4;
    let sys = FastSlowSystem::linear(tau).unwrap();
    let s = HmmSettings { macro_dt: 0.01, micro_dt: 0.5, k: 20, n: 100 };
    let traj = hmm_solve(&sys, &[1.0], &[1.0], s).unwrap();
    let err = traj.max_psi_error(|t| vec![linear_exact(tau, 1.0, 1.0, t).1]);
    assert!(err < 1e-2, "{err}");
    assert_eq!(traj.evaluations, s.evaluations());
    assert!(micro_contraction(0.5, 20) < 1e-6);
}

#[test]
fn closed_form_solves_the_linear_system() {
    // check d/dt against the right-hand side with a central difference
    let tau = 0.05;
    let h = 1e-6;
    for t in [0.1, 0.5, 2.0] {
        let (phi, psi) = linear_exact(tau, 0.3, -1.0, t);
        let (pp, sp) = linear_exact(tau, 0.3, -1.0, t + h);
        let (pm, sm) = linear_exact(tau, 0.3, -1.0, t - h);
        assert!(((pp - pm) / (2.0 * h) - (psi - phi) / tau).abs() < 1e-5);
        assert!(((sp - sm) / (2.0 * h) + phi).abs() < 1e-5);
    }
}

#[test]
fn reference_blows_up_with_coarse_steps() {
    let sys = FastSlowSystem::linear(1e-3).unwrap();
    assert!(reference_stiff_solve(&sys, &[1.0], &[1.0], 1.0, 5e-4).is_ok());
    assert!(matches!(reference_stiff_solve(&sys, &[1.0], &[1.0], 1.0, 1e-2), Err(Error::Divergence { .. })));
}

#[test]
fn hmm_cost_is_flat_while_reference_grows() {
    let table = cost_comparison(&FastSlowSystem::linear(1.0).unwrap(), &[1e-2, 1e-3], 1e-2).unwrap();
    assert!(table.hmm_spread().unwrap() < 2.0);
    assert!(table.reference_ratios()[0].unwrap() >= 5.0);
}
