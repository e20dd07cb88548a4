//! Property tests of the numerical building blocks against closed-form oracles.

use std::sync::Arc;

use blowup_core::functionals::{e0, e_and_f0, Functional, EPS0};
use blowup_core::model::{ball_volume, kappa, sphere_area, Exponents};
use blowup_core::numerics::{linear_fit, pairwise_sum};
use blowup_core::ode::{fit_blowup, ode_exact, time_to_blowup_estimate};
use blowup_core::quadrature::{Angular, BallQuadrature, RuleSet, SphereRule};
use blowup_core::similarity::{ConstantField, Poly, SimilaritySnapshot};
use proptest::prelude::*;
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

/// Superconformal, Sobolev-subcritical `(p, N)` from a unit parameter.
fn admissible() -> impl Strategy<Value = (f64, usize)> {
    (2usize..=5, 0.02f64..0.98).prop_map(|(n, t)| {
        let nf = n as f64;
        let lo = 1.0 + 4.0 / (nf - 1.0);
        let hi = if n == 2 { lo + 6.0 } else { 1.0 + 4.0 / (nf - 2.0) };
        (lo + t * (hi - lo), n)
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn constant_snapshot(e: Exponents, value: f64, s: f64) -> SimilaritySnapshot {
    let rules = Arc::new(RuleSet::for_functionals(e.n(), 12, Angular::Radial, &[EPS0]).unwrap());
    SimilaritySnapshot::sample(&ConstantField(value), e, rules, s, [0.0; 3], 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponents_accept_exactly_the_admissible_range(p in 1.01f64..12.0, n in 2usize..=6) {
        let nf = n as f64;
        let superconformal = p > (nf + 3.0) / (nf - 1.0);
        let subcritical = n == 2 || p < (nf + 2.0) / (nf - 2.0);
        prop_assert_eq!(Exponents::new(p, n).is_ok(), superconformal && subcritical);
    }

    #[test]
    fn kappa_is_the_positive_root_of_the_constant_equation((p, n) in admissible()) {
        let e = Exponents::new(p, n).unwrap();
        let k = kappa(&e);
        let c = 2.0 * (p + 1.0) / ((p - 1.0) * (p - 1.0));
        prop_assert!(k > 0.0);
        prop_assert!(rel(k.powf(p - 1.0), c) < 1e-13);
        prop_assert!(rel(e.alpha(), 2.0 / (p - 1.0) - (n as f64 - 1.0) / 2.0) < 1e-15);
    }

    #[test]
    fn ball_rule_integrates_radial_moments_exactly(n in 2usize..=5, beta_exp in -0.9f64..2.5, m in 0i32..6) {
        let rule = BallQuadrature::new(n, beta_exp, 12, Angular::Radial).unwrap();
        let got = rule.integrate(|y| (y[0] * y[0]).powi(m)).unwrap();
        // In polar coordinates with x = r², the integral is |S^{N-1}| B(m + N/2, β + 1) / 2.
        let want = 0.5 * sphere_area(n) * beta(m as f64 + n as f64 / 2.0, beta_exp + 1.0);
        prop_assert!(rel(got, want) < 1e-12, "got {got}, want {want}");
    }

    #[test]
    fn tensor_sphere_rule_integrates_even_monomials(a in 0i32..4, b in 0i32..4, c in 0i32..4) {
        let rule = SphereRule::new(3, Angular::Tensor(10)).unwrap();
        let values: Vec<f64> = rule.nodes().iter().map(|y| y[0].powi(2 * a) * y[1].powi(2 * b) * y[2].powi(2 * c)).collect();
        let got = rule.integrate_values(&values).unwrap();
        let (ha, hb, hc) = (a as f64 + 0.5, b as f64 + 0.5, c as f64 + 0.5);
        let want = 2.0 * gamma(ha) * gamma(hb) * gamma(hc) / gamma(ha + hb + hc);
        prop_assert!(rel(got, want) < 1e-12, "got {got}, want {want}");
    }

    #[test]
    fn polynomial_gradient_matches_central_differences(
        coefs in proptest::collection::vec(-2.0f64..2.0, 10),
        y in proptest::array::uniform3(-0.6f64..0.6),
    ) {
        let exps = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [2, 0, 0], [1, 1, 0], [0, 1, 2], [3, 0, 1], [1, 2, 1], [0, 0, 4]];
        let poly = Poly::new(exps.iter().copied().zip(coefs.iter().copied()).collect());
        let (_, grad, hess) = poly.eval_all(&y);
        let h = 1e-5;
        for i in 0..3 {
            let mut yp = y;
            let mut ym = y;
            yp[i] += h;
            ym[i] -= h;
            let (vp, gp, _) = poly.eval_all(&yp);
            let (vm, gm, _) = poly.eval_all(&ym);
            prop_assert!((grad[i] - (vp - vm) / (2.0 * h)).abs() < 1e-7 * (1.0 + grad[i].abs()));
            for j in 0..3 {
                prop_assert!((hess[j][i] - (gp[j] - gm[j]) / (2.0 * h)).abs() < 1e-6 * (1.0 + hess[j][i].abs()));
                prop_assert_eq!(hess[i][j], hess[j][i]);
            }
        }
    }

    #[test]
    fn energy_of_a_constant_field_follows_its_definition((p, n) in admissible(), lambda in 0.1f64..2.0) {
        let e = Exponents::new(p, n).unwrap();
        let w = lambda * kappa(&e);
        let got = e0(&constant_snapshot(e, w, 0.0)).unwrap();
        let want = ball_volume(n) * ((p + 1.0) / ((p - 1.0) * (p - 1.0)) * w * w - w.powf(p + 1.0) / (p + 1.0));
        prop_assert!((got - want).abs() < 1e-11 * want.abs().max(1.0), "got {got}, want {want}");
    }

    #[test]
    fn weighted_energy_carries_the_exponential_time_factor((p, n) in admissible(), s1 in 0.0f64..3.0, ds in 0.1f64..2.0) {
        let e = Exponents::new(p, n).unwrap();
        let snap = constant_snapshot(e, 0.7 * kappa(&e), s1);
        let (energy, f1) = e_and_f0(&snap).unwrap();
        let f2 = Functional::F0.eval(&snap.with_s(s1 + ds)).unwrap();
        prop_assert!(rel(f1, (2.0 * e.alpha() * s1).exp() * energy) < 1e-13);
        prop_assert!(rel(f2 / f1, (2.0 * e.alpha() * ds).exp()) < 1e-12);
    }

    #[test]
    fn exact_ode_branch_solves_the_ode((p, n) in admissible(), t_blowup in 0.5f64..3.0, frac in 0.0f64..0.9) {
        let e = Exponents::new(p, n).unwrap();
        let t = frac * t_blowup;
        let (u, _) = ode_exact(&e, t_blowup, t).unwrap();
        prop_assert!(rel(time_to_blowup_estimate(&e, u), t_blowup - t) < 1e-12);
        let h = 1e-4 * (t_blowup - t);
        let (_, vp) = ode_exact(&e, t_blowup, t + h).unwrap();
        let (_, vm) = ode_exact(&e, t_blowup, t - h).unwrap();
        prop_assert!(rel((vp - vm) / (2.0 * h), u.powf(p)) < 1e-6);
        prop_assert!(ode_exact(&e, t_blowup, t_blowup).is_err());
    }

    #[test]
    fn blowup_fit_recovers_time_and_rate_of_the_exact_branch((p, n) in admissible(), t_blowup in 0.5f64..2.0) {
        let e = Exponents::new(p, n).unwrap();
        let times: Vec<f64> = (0..60).map(|i| t_blowup * (1.0 - 0.5 * 0.85f64.powi(i))).collect();
        let series: Vec<(f64, f64)> = times.iter().map(|&t| (t, ode_exact(&e, t_blowup, t).unwrap().0)).collect();
        let fit = fit_blowup(&series, 0.0).unwrap();
        prop_assert!(rel(fit.t_est, t_blowup) < 1e-6, "T {} vs {t_blowup}", fit.t_est);
        prop_assert!(rel(fit.exponent_est, -2.0 / (p - 1.0)) < 1e-4);
    }

    #[test]
    fn least_squares_reproduces_an_exact_line(a in -5.0f64..5.0, b in -5.0f64..5.0, xs in proptest::collection::vec(-10.0f64..10.0, 3..40)) {
        prop_assume!(xs.iter().any(|x| (x - xs[0]).abs() > 1e-3));
        let ys: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
        let (fa, fb, ssr, r2) = linear_fit(&xs, &ys);
        prop_assert!((fa - a).abs() < 1e-9 && (fb - b).abs() < 1e-9);
        prop_assert!(ssr < 1e-18 * xs.len() as f64 * (1.0 + a * a + b * b) * 100.0);
        prop_assert!(b.abs() < 1e-6 || r2 > 1.0 - 1e-9);
    }

    #[test]
    fn pairwise_sum_agrees_with_an_exact_integer_sum(v in proptest::collection::vec(-1_000_000i64..1_000_000, 0..500)) {
        let exact: i64 = v.iter().sum();
        let f: Vec<f64> = v.iter().map(|x| *x as f64).collect();
        prop_assert_eq!(pairwise_sum(&f), exact as f64);
    }
}
