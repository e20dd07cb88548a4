//! The `d/ds` identities of the weighted functionals, stored as data (lists of coefficient and
//! integrand terms) so that the same statement can be checked instantaneously on test fields
//! and in integrated form along a trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{self, bulk, boundary, m_coef, Functional, Integrand};
use crate::model::Exponents;
use crate::numerics::trapezoid;
use crate::quadrature::RuleSet;
use crate::similarity::{SimilaritySnapshot, TestFieldPair};
use crate::verify::{convergence_order, IdentityReport};

/// The derivative identities covered by the verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaKind {
    /// `d/ds E_ε`.
    DEEps,
    /// `d/ds J_ε`.
    DJEps,
    /// `d/ds N_ε`.
    DNEps,
    /// `d/ds I_ε`.
    DIEps,
    /// `d/ds 𝓛_ε`.
    DLEps,
    /// `d/ds 𝓜`.
    DM,
    /// `d/ds F₀`.
    DF0,
    /// `d/ds F₁`.
    DF1,
    /// `d/ds J₀`.
    DJ0,
}

impl LemmaKind {
    /// All identities in a fixed order.
    pub const ALL: [LemmaKind; 9] = [
        LemmaKind::DEEps,
        LemmaKind::DJEps,
        LemmaKind::DNEps,
        LemmaKind::DIEps,
        LemmaKind::DLEps,
        LemmaKind::DM,
        LemmaKind::DF0,
        LemmaKind::DF1,
        LemmaKind::DJ0,
    ];

    /// Short name.
    pub fn name(self) -> &'static str {
        match self {
            Self::DEEps => "dE_eps",
            Self::DJEps => "dJ_eps",
            Self::DNEps => "dN_eps",
            Self::DIEps => "dI_eps",
            Self::DLEps => "dL_eps",
            Self::DM => "dM",
            Self::DF0 => "dF0",
            Self::DF1 => "dF1",
            Self::DJ0 => "dJ0",
        }
    }

    /// Inverse of [`LemmaKind::name`].
    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or(Error::UnknownName { kind: "lemma", name: name.to_string() })
    }
}

/// One ingredient of a right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Quantity {
    /// `∫_B g ρ_β dy`.
    Bulk(Integrand, f64),
    /// `∫_{∂B} g dσ`.
    Boundary(Integrand),
    /// A functional value.
    Value(Functional),
}

impl Quantity {
    /// Value on one snapshot.
    pub fn eval(&self, snap: &SimilaritySnapshot) -> Result<f64> {
        match *self {
            Quantity::Bulk(g, beta) => bulk(snap, g, beta),
            Quantity::Boundary(g) => boundary(snap, g),
            Quantity::Value(f) => f.eval(snap),
        }
    }
}

/// `coef · quantity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    /// Coefficient.
    pub coef: f64,
    /// Quantity.
    pub quantity: Quantity,
}

impl Term {
    /// `coef · quantity` on one snapshot.
    pub fn eval(&self, snap: &SimilaritySnapshot) -> Result<f64> {
        Ok(self.coef * self.quantity.eval(snap)?)
    }
}

fn b(coef: f64, g: Integrand, beta: f64) -> Term {
    Term { coef, quantity: Quantity::Bulk(g, beta) }
}

fn v(coef: f64, f: Functional) -> Term {
    Term { coef, quantity: Quantity::Value(f) }
}

fn bd(coef: f64, g: Integrand) -> Term {
    Term { coef, quantity: Quantity::Boundary(g) }
}

/// Time factor multiplying the right-hand side: `τ^power · e^{2α τ · exp2a}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWeight {
    /// Power of `τ`.
    pub power: f64,
    /// Whether `e^{2ατ}` is present.
    pub exp2a: bool,
}

impl TimeWeight {
    const ONE: TimeWeight = TimeWeight { power: 0.0, exp2a: false };

    fn at(&self, e: &Exponents, s: f64) -> f64 {
        let p = if self.power == 0.0 { 1.0 } else { s.powf(self.power) };
        if self.exp2a {
            p * (2.0 * e.alpha() * s).exp()
        } else {
            p
        }
    }
}

/// What the left-hand side differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Lhs {
    /// A functional of one snapshot.
    Functional(Functional),
    /// `F₁(s) = s^{1/18}F₀(s) + (1/18)∫_s^∞ τ^{-17/18}F₀`.
    F1,
}

/// A derivative identity `d/ds (lhs) = weight(s) Σ coef·quantity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma {
    /// Which identity.
    pub kind: LemmaKind,
    /// Weight exponent (`ε₀` for `𝓜`, unused for the unweighted ones).
    pub eps: f64,
    /// Differentiated quantity.
    pub lhs: Lhs,
    /// Right-hand side terms.
    pub terms: Vec<Term>,
    /// Time factor of the right-hand side.
    pub weight: TimeWeight,
}

/// Terms of `Σ` in the derivative of `𝓜` (weights at `ε₀`).
pub fn sigma_terms(e: &Exponents, eps0: f64) -> Vec<Term> {
    let (p, n, a) = (e.p(), e.nf(), e.alpha());
    let c = e.c_lin();
    let k = m_coef(e);
    let pm1 = p - 1.0;
    let em1 = eps0 - 1.0;
    use Integrand::*;
    let s3_w2 = (n * n * p.powi(3) + 2.0 * n * n * p * p - 7.0 * n * n * p + 4.0 * n * n - 3.0 * n * p.powi(3)
        - 23.0 * n * p * p
        - 15.0 * n * p
        + 41.0 * n
        + 2.0 * p.powi(3)
        + 21.0 * p * p
        + 66.0 * p
        + 71.0)
        / (5.0 * pm1.powi(3));
    vec![
        // Σ1
        b(-0.6, Ws2R2, em1),
        b(0.6, Ydw2, eps0),
        b(1.2, WsYdw, eps0),
        // Σ2
        b(-0.1, Ws2, eps0),
        b(-0.1, Ydw2, eps0),
        b(-0.2, WsYdw, eps0),
        // Σ3
        b(-(c + k * (2.0 * a - 1.2)), WYdw, eps0),
        b(s3_w2, W2, eps0),
        // Σ4
        b(-12.0 * (p + 4.0) * (n * p - n - p - 3.0) / (25.0 * pm1 * pm1), W2R2, em1),
        // Σ5
        b(4.0 * (p + 3.0) * (p + 4.0) / (5.0 * pm1 * pm1), WWs, eps0),
        b(3.0 * (3.0 * p - 5.0) / (10.0 * (p + 1.0)), Wp1, eps0),
    ]
}

impl Lemma {
    /// The identity of `kind` at weight exponent `eps` (ignored by the unweighted identities).
    pub fn new(kind: LemmaKind, e: &Exponents, eps: f64) -> Self {
        use Integrand::*;
        let (p, n, a) = (e.p(), e.nf(), e.alpha());
        let c = e.c_lin();
        let p1 = p + 1.0;
        let em1 = eps - 1.0;
        let bs = eps - 0.5;
        let b2 = eps + 0.5;
        let (lhs, terms, weight) = match kind {
            LemmaKind::DEEps => (
                Lhs::Functional(Functional::EEps { eps }),
                vec![b(-2.0 * eps, Ws2R2, em1), b(-2.0 * a, Ws2, eps), b(2.0 * eps - 2.0 * a, WsYdw, eps)],
                TimeWeight::ONE,
            ),
            LemmaKind::DJEps => (
                Lhs::Functional(Functional::JEps { eps }),
                vec![
                    v(1.0, Functional::GEps { eps }),
                    b(4.0 * eps, WWsR2, em1),
                    b(2.0 * a - 2.0 * eps, WYdw, eps),
                    b(-2.0 * n, WWs, eps),
                ],
                TimeWeight::ONE,
            ),
            LemmaKind::DNEps => (
                Lhs::Functional(Functional::NEps { eps }),
                vec![
                    v(-2.0 * a, Functional::NEps { eps }),
                    b(-eps, GradTheta2R2, em1),
                    b(2.0 * eps / p1, Wp1, em1),
                    b(-0.5 * n, Ws2, eps),
                    b(eps, Ws2R2, em1),
                    b(0.5 * n, GradTan2, eps),
                    b(-1.0, Grad2, eps),
                    b(-c, WYdw, eps),
                    b(-(n + 2.0 * eps) / p1, Wp1, eps),
                    b(-n, WsYdw, eps),
                    b(eps, Ydw2, eps),
                ],
                TimeWeight::ONE,
            ),
            LemmaKind::DIEps => (
                Lhs::Functional(Functional::IEps { eps }),
                vec![
                    v(-2.0 * a, Functional::IEps { eps }),
                    b(-1.0, Wp1, bs),
                    b(1.0, GradTheta2, bs),
                    b(-1.0, Ws2, bs),
                    b(1.0 - 2.0 * eps - 2.0 * a, WYdw, bs),
                    b(c - a * n, W2, bs),
                    b(-2.0, WsYdw, bs),
                    b(1.0, GradR2, b2),
                ],
                TimeWeight::ONE,
            ),
            LemmaKind::DLEps => (
                Lhs::Functional(Functional::LEps { eps }),
                vec![
                    v(-2.0 * a, Functional::LEps { eps }),
                    b(-(1.0 + 2.0 * eps) * (p - 1.0) / (2.0 * p1), Wp1, bs),
                    b(0.5 * n, GradTan2, b2),
                    b(-(0.5 - eps), Grad2, b2),
                    b(-c, WYdw, b2),
                    b(-(n + 1.0 + 2.0 * eps) / p1, Wp1, b2),
                    b(-n, WsYdw, b2),
                    b(b2, Ydw2, b2),
                    b(-(0.5 * (n + 1.0) + eps), Ws2, b2),
                    b((1.0 - 2.0 * eps - 2.0 * a) * b2, WYdw, bs),
                    b((c - a * n) * b2, W2, bs),
                    b(-(1.0 + 2.0 * eps), WsYdw, bs),
                ],
                TimeWeight::ONE,
            ),
            LemmaKind::DM => {
                let mut t = vec![
                    v(-2.0 * a, Functional::M { eps0: eps }),
                    b(-0.6, GradTheta2R2, em1),
                    b(-0.9, Grad2, eps),
                    b(6.0 / (5.0 * p + 5.0), Wp1, em1),
                    b((17.0 - 5.0 * p) / (10.0 * p + 10.0), Wp1, eps),
                ];
                t.extend(sigma_terms(e, eps));
                (Lhs::Functional(Functional::M { eps0: eps }), t, TimeWeight::ONE)
            }
            LemmaKind::DF0 | LemmaKind::DF1 => {
                let t = vec![bd(-1.0, WsPlusAlphaW2), b(a * (p - 1.0) / p1, Wp1, 0.0)];
                if kind == LemmaKind::DF0 {
                    (Lhs::Functional(Functional::F0), t, TimeWeight { power: 0.0, exp2a: true })
                } else {
                    (Lhs::F1, t, TimeWeight { power: 1.0 / 18.0, exp2a: true })
                }
            }
            LemmaKind::DJ0 => (
                Lhs::Functional(Functional::J0),
                vec![
                    b(a, Ws2, 0.0),
                    b(-a, GradTan2, 0.0),
                    b(a, Wp1, 0.0),
                    bd(-a * a, W2),
                    b(a * a * n - a * c, W2, 0.0),
                    bd(-2.0 * a, WWs),
                    b(2.0 * a, WsYdw, 0.0),
                    b(-a * ((p + 3.0) / (p - 1.0) - n), WWs, 0.0),
                ],
                TimeWeight::ONE,
            ),
        };
        Self { kind, eps, lhs, terms, weight }
    }

    /// Right-hand side `weight(s) Σ coef·quantity` on one snapshot.
    pub fn rhs(&self, snap: &SimilaritySnapshot) -> Result<f64> {
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.eval(snap)?;
        }
        Ok(self.weight.at(snap.exponents(), snap.s) * acc)
    }

    /// Instantaneous part of the left-hand side: the functional itself, or `s^{1/18}F₀` for `F₁`.
    fn lhs_local(&self, snap: &SimilaritySnapshot) -> Result<f64> {
        match self.lhs {
            Lhs::Functional(f) => f.eval(snap),
            Lhs::F1 => Ok(snap.s.powf(1.0 / 18.0) * functionals::e_and_f0(snap)?.1),
        }
    }
}

/// Instantaneous check on a test-field pair `(w, ∂_s w)`: the derivative of the left-hand side
/// along the flow of the similarity equation (fourth-order central differences in the flow
/// parameter) against the right-hand side evaluated on the unperturbed fields.
pub fn check_lemma_static(
    lemma: &Lemma,
    pair: &TestFieldPair,
    e: Exponents,
    rules: std::sync::Arc<RuleSet>,
    s: f64,
    tolerance: f64,
) -> Result<IdentityReport> {
    let h = 1e-3;
    let at = |k: f64| -> Result<f64> {
        let src = pair.flow(e, k * h);
        let snap = SimilaritySnapshot::sample(&src, e, rules.clone(), s + k * h, [0.0; 3], 0.0)?;
        lemma.lhs_local(&snap)
    };
    let mut lhs = (-at(2.0)? + 8.0 * at(1.0)? - 8.0 * at(-1.0)? + at(-2.0)?) / (12.0 * h);
    let snap = SimilaritySnapshot::sample(pair, e, rules.clone(), s, [0.0; 3], 0.0)?;
    if lemma.lhs == Lhs::F1 {
        // d/ds of the tail term (1/18)∫_s^∞ τ^{-17/18}F₀ is -(1/18)s^{-17/18}F₀(s).
        lhs -= s.powf(-17.0 / 18.0) / 18.0 * functionals::e_and_f0(&snap)?.1;
    }
    let rhs = lemma.rhs(&snap)?;
    Ok(IdentityReport::equality(
        lemma.kind.name(),
        lhs,
        rhs,
        tolerance,
        format!("static N={} a={} eps={}", pair.w.n_dim, pair.w.a, lemma.eps),
    ))
}

/// Relative tolerance of an integrated check at sample spacing `ds`, scaled to the
/// second-order error of the trapezoid rule in `s`.
pub fn trajectory_tolerance(ds: f64) -> f64 {
    10.0 * ds * ds
}

/// Integrated check on snapshots sampled on a uniform `s`-grid: the change of the left-hand
/// side over `[s_a, s_b]` against the trapezoid rule in `s` of the right-hand side.
pub fn check_derivative_lemma(
    lemma: &Lemma,
    snaps: &[SimilaritySnapshot],
    window: (f64, f64),
    tolerance: f64,
    context: &str,
) -> Result<IdentityReport> {
    let (i0, i1) = window_indices(snaps, window)?;
    let part = &snaps[i0..=i1];
    let s: Vec<f64> = part.iter().map(|sn| sn.s).collect();
    let lhs = match lemma.lhs {
        Lhs::Functional(f) => f.eval(&part[part.len() - 1])? - f.eval(&part[0])?,
        Lhs::F1 => {
            let f0 = part.iter().map(|sn| Ok(functionals::e_and_f0(sn)?.1)).collect::<Result<Vec<_>>>()?;
            let kern: Vec<f64> = s.iter().zip(&f0).map(|(t, f)| t.powf(-17.0 / 18.0) * f).collect();
            let last = s.len() - 1;
            s[last].powf(1.0 / 18.0) * f0[last] - s[0].powf(1.0 / 18.0) * f0[0] - trapezoid(&s, &kern) / 18.0
        }
    };
    let dens = part.iter().map(|sn| lemma.rhs(sn)).collect::<Result<Vec<_>>>()?;
    let rhs = trapezoid(&s, &dens);
    Ok(IdentityReport::equality(lemma.kind.name(), lhs, rhs, tolerance, context.to_string()))
}

fn window_indices(snaps: &[SimilaritySnapshot], window: (f64, f64)) -> Result<(usize, usize)> {
    let tol = 1e-9;
    let find = |t: f64| snaps.iter().position(|sn| (sn.s - t).abs() < tol);
    let lo = snaps.first().map_or(f64::NAN, |sn| sn.s);
    let hi = snaps.last().map_or(f64::NAN, |sn| sn.s);
    match (find(window.0), find(window.1)) {
        (Some(a), Some(b)) if b > a => Ok((a, b)),
        _ => Err(Error::OutOfCoverage { what: "window", value: if find(window.0).is_none() { window.0 } else { window.1 }, lo, hi }),
    }
}

/// Residuals of one identity at successive resolutions and the observed convergence order of
/// the last step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    /// Identity name.
    pub name: String,
    /// Reports at each resolution, coarse to fine.
    pub reports: Vec<IdentityReport>,
    /// `log2` of the ratio of the last two absolute residuals.
    pub order: f64,
    /// Required minimal order.
    pub min_order: f64,
    /// Verdict.
    pub pass: bool,
}

impl RefinementStudy {
    /// Builds the study from reports at resolutions refined by a factor 2 each.
    pub fn new(name: &str, reports: Vec<IdentityReport>, min_order: f64) -> Self {
        let n = reports.len();
        let order = if n >= 2 {
            convergence_order(reports[n - 2].abs_residual, reports[n - 1].abs_residual, 2.0)
        } else {
            f64::NAN
        };
        Self { name: name.to_string(), reports, order, min_order, pass: order >= min_order }
    }
}

/// Runs every identity of `kinds` on each snapshot series (ordered coarse to fine, each level
/// refining both the grid and the sample spacing by 2) and measures the convergence order.
pub fn lemma_refinement_study(
    kinds: &[LemmaKind],
    e: &Exponents,
    eps: f64,
    levels: &[(Vec<SimilaritySnapshot>, f64, String)],
    window: (f64, f64),
    min_order: f64,
) -> Result<Vec<RefinementStudy>> {
    kinds
        .iter()
        .map(|&kind| {
            let lemma = Lemma::new(kind, e, eps);
            let reports = levels
                .iter()
                .map(|(snaps, ds, ctx)| check_derivative_lemma(&lemma, snaps, window, trajectory_tolerance(*ds), ctx))
                .collect::<Result<Vec<_>>>()?;
            Ok(RefinementStudy::new(kind.name(), reports, min_order))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ball_volume, kappa};
    use crate::quadrature::Angular;
    use crate::similarity::{Poly, TestField};
    use std::sync::Arc;

    fn pair(n: usize) -> TestFieldPair {
        let mut rng = TestField::rng(11);
        let q = TestField::random(n, 0.0, 2, if n == 2 { Some(1) } else { None }, &mut rng).unwrap();
        // A small perturbation of a constant keeps w positive, so |w|^{p+1} is a polynomial.
        let w = TestField::new(n, 0.0, Poly::constant(1.0).add(&q.poly.mul(&Poly::constant(0.08))), None).unwrap();
        let ws = TestField::random(n, 0.0, 2, None, &mut rng).unwrap();
        TestFieldPair { w, ws: Some(ws) }
    }

    #[test]
    fn every_lemma_holds_on_test_fields() {
        for (n, p) in [(2, 7.0), (3, 4.0)] {
            let e = Exponents::new(p, n).unwrap();
            let angular = if n == 2 { Angular::Periodic(32) } else { Angular::Tensor(12) };
            let rules = Arc::new(RuleSet::for_functionals(n, 16, angular, &[0.6, 1.0]).unwrap());
            let pr = pair(n);
            for kind in LemmaKind::ALL {
                for eps in [0.6, 1.0] {
                    if kind == LemmaKind::DM && eps != 0.6 {
                        continue;
                    }
                    let lemma = Lemma::new(kind, &e, eps);
                    let r = check_lemma_static(&lemma, &pr, e, rules.clone(), 1.3, 1e-7).unwrap();
                    assert!(r.pass, "N={n} {}", r.summary());
                }
            }
        }
    }

    #[test]
    fn mutated_coefficient_is_detected() {
        let e = Exponents::new(4.0, 3).unwrap();
        let rules = Arc::new(RuleSet::for_functionals(3, 16, Angular::Tensor(12), &[0.6]).unwrap());
        let pr = pair(3);
        for kind in LemmaKind::ALL {
            let mut lemma = Lemma::new(kind, &e, 0.6);
            for i in 0..lemma.terms.len() {
                let saved = lemma.terms[i].coef;
                lemma.terms[i].coef = saved + 0.01 * (1.0 + saved.abs());
                let r = check_lemma_static(&lemma, &pr, e, rules.clone(), 1.3, 1e-7).unwrap();
                assert!(!r.pass, "mutation of term {i} in {} went undetected", kind.name());
                lemma.terms[i].coef = saved;
            }
        }
    }

    #[test]
    fn constant_solution_dissipation_closed_form() {
        let e = Exponents::new(4.0, 3).unwrap();
        let k = kappa(&e);
        let f = TestField::new(3, 0.0, Poly::constant(k), None).unwrap();
        let pr = TestFieldPair { w: f, ws: None };
        let rules = Arc::new(RuleSet::for_functionals(3, 8, Angular::Radial, &[0.6]).unwrap());
        let lemma = Lemma::new(LemmaKind::DF0, &e, 0.6);
        let s = 0.7;
        let snap = SimilaritySnapshot::sample(&pr, e, rules, s, [0.0; 3], 0.0).unwrap();
        let a = e.alpha();
        let vol = ball_volume(3);
        let closed = (2.0 * a * s).exp() * (-a * a * k * k * 3.0 * vol + a * 3.0 / 5.0 * k.powi(5) * vol);
        assert!((lemma.rhs(&snap).unwrap() - closed).abs() < 1e-12 * closed.abs());
    }

    #[test]
    fn names_round_trip() {
        for k in LemmaKind::ALL {
            assert_eq!(LemmaKind::from_name(k.name()).unwrap(), k);
        }
        assert!(LemmaKind::from_name("dX").is_err());
    }
}
