//! Solver, similarity sampling and identity suites exercised together.

use std::sync::Arc;

use blowup_core::functionals::{e0, g_eps, EPS0};
use blowup_core::model::{ball_volume, kappa, Exponents, RadialGrid};
use blowup_core::quadrature::{Angular, RuleSet};
use blowup_core::similarity::snapshot_at;
use blowup_core::solver::{run_until_blowup, InitialData, RunStatus, SolverConfig};
use blowup_core::verify::identities::random_identity_suite;

fn plateau_run(p: f64) -> blowup_core::solver::Trajectory {
    let e = Exponents::new(p, 3).unwrap();
    let grid = RadialGrid::new(4.0, 1024).unwrap();
    let cfg = SolverConfig::new(e, grid, InitialData::OdePlateau { t_blowup: 1.0, radius: 2.5, taper: 0.5 });
    run_until_blowup(&cfg).unwrap()
}

#[test]
fn plateau_data_blow_up_at_the_ode_time_and_rate() {
    for p in [3.5, 4.0, 4.5] {
        let traj = plateau_run(p);
        assert_eq!(traj.status, RunStatus::Blowup);
        let fit = traj.fit.expect("blow-up fit");
        assert!((fit.t_est - 1.0).abs() < 1e-3, "p = {p}: T = {}", fit.t_est);
        assert!((fit.exponent_est + 2.0 / (p - 1.0)).abs() < 1e-2, "p = {p}: exponent {}", fit.exponent_est);
    }
}

#[test]
fn similarity_field_of_the_ode_branch_is_the_constant_solution() {
    let p = 4.0;
    let traj = plateau_run(p);
    let e = traj.exponents;
    let rules = Arc::new(RuleSet::for_functionals(3, 16, Angular::Radial, &[EPS0]).unwrap());
    let k = kappa(&e);
    for s in [1.0, 2.0, 3.0] {
        let snap = snapshot_at(&traj, [0.0; 3], 1.0, s, rules.clone()).unwrap();
        let energy = e0(&snap).unwrap();
        let want = k * k / (p - 1.0) * ball_volume(3);
        assert!((energy - want).abs() < 1e-3 * want, "s = {s}: E0 = {energy}, want {want}");
        assert!(g_eps(&snap, EPS0).unwrap().abs() < 1e-3 * want);
    }
}

#[test]
fn identity_suites_hold_and_are_reproducible() {
    for (n, eps) in [(2, 0.6), (3, 1.1)] {
        let a = random_identity_suite(n, eps, 6, 42).unwrap();
        let b = random_identity_suite(n, eps, 6, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        for r in &a {
            assert!(r.pass, "N = {n}: {}", r.summary());
            assert!(r.rel_residual < 1e-10);
        }
    }
}
