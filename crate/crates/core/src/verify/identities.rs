//! Integration-by-parts identities for the Pohozaev multiplier on static test fields.

use crate::error::Result;
use crate::quadrature::{grad_decompose, Angular, BallQuadrature, RuleSet};
use crate::similarity::TestField;
use crate::verify::IdentityReport;

/// Relative tolerance of the static identity checks.
pub const IDENTITY_TOL: f64 = 1e-8;

/// Rule set sized for test fields of polynomial degree up to 6 with boundary exponent up to 2.
pub fn identity_rules(n_dim: usize, eps: f64) -> Result<RuleSet> {
    let angular = if n_dim == 2 { Angular::Periodic(64) } else { Angular::Tensor(12) };
    RuleSet::for_functionals(n_dim, 32, angular, &[eps])
}

struct Pieces {
    r2: f64,
    ydw: f64,
    g2: f64,
    gth2: f64,
    gr2: f64,
}

fn pieces(f: &TestField, y: &[f64; 3]) -> (Pieces, f64) {
    let j = f.jet(y);
    let (gr, gth) = grad_decompose(y, &j.g);
    let sq = |v: [f64; 3]| v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let pc = Pieces {
        r2: y[0] * y[0] + y[1] * y[1] + y[2] * y[2],
        ydw: y[0] * j.g[0] + y[1] * j.g[1] + y[2] * j.g[2],
        g2: sq(j.g),
        gth2: sq(gth),
        gr2: sq(gr),
    };
    (pc, j.v)
}

fn int(rule: &BallQuadrature, g: impl Fn(&[f64; 3]) -> f64) -> Result<f64> {
    rule.integrate(g)
}

fn describe(f: &TestField, eps: f64) -> String {
    format!("N={} a={} deg={} eps={eps}", f.n_dim, f.a, f.poly.degree())
}

/// `∫ y·∇w div(ρ_ε∇w - ρ_ε(y·∇w)y) dy` against
/// `-ε∫|∇_θw|²|y|²ρ_ε/(1-|y|²) - ε∫(y·∇w)²ρ_ε + (N/2)∫(|∇w|²-(y·∇w)²)ρ_ε - ∫|∇w|²ρ_ε`.
pub fn check_pohozaev_a(field: &TestField, eps: f64, rules: &RuleSet) -> Result<IdentityReport> {
    let re = rules.rule(eps)?;
    let rem1 = rules.rule(eps - 1.0)?;
    let lhs = int(re, |y| {
        let (pc, _) = pieces(field, y);
        pc.ydw * field.divergence_over_rho(y, eps)
    })?;
    let nf = field.n_dim as f64;
    let t1 = int(rem1, |y| {
        let (pc, _) = pieces(field, y);
        pc.gth2 * pc.r2
    })?;
    let t234 = int(re, |y| {
        let (pc, _) = pieces(field, y);
        -eps * pc.ydw * pc.ydw + 0.5 * nf * (pc.g2 - pc.ydw * pc.ydw) - pc.g2
    })?;
    let rhs = -eps * t1 + t234;
    Ok(IdentityReport::equality("pohozaev_A", lhs, rhs, IDENTITY_TOL, describe(field, eps)))
}

/// `-∫ div(ρ_ε∇w - ρ_ε(y·∇w)y) w /√(1-|y|²) dy` against
/// `∫|∇_θw|²ρ_ε/√(1-|y|²) + ∫|∇_r w|²ρ_{ε+1/2} + ∫w (y·∇w)ρ_ε/√(1-|y|²)`.
pub fn check_pohozaev_e(field: &TestField, eps: f64, rules: &RuleSet) -> Result<IdentityReport> {
    let rs = rules.rule(eps - 0.5)?;
    let rp = rules.rule(eps + 0.5)?;
    let lhs = -int(rs, |y| {
        let (_, w) = pieces(field, y);
        field.divergence_over_rho(y, eps) * w
    })?;
    let a = int(rs, |y| {
        let (pc, w) = pieces(field, y);
        pc.gth2 + w * pc.ydw
    })?;
    let b = int(rp, |y| pieces(field, y).0.gr2)?;
    Ok(IdentityReport::equality("pohozaev_E", lhs, a + b, IDENTITY_TOL, describe(field, eps)))
}

/// Runs both identities on `count` seeded random fields with boundary exponents cycling
/// through `{0, 1, 2}`, degree up to 6, and (for `N = 2`) angular modes `m = 0..3`.
pub fn random_identity_suite(n_dim: usize, eps: f64, count: usize, seed: u64) -> Result<Vec<IdentityReport>> {
    let rules = identity_rules(n_dim, eps)?;
    let mut rng = TestField::rng(seed);
    let mut out = Vec::with_capacity(2 * count);
    for i in 0..count {
        let a = (i % 3) as f64;
        let (deg, mode) = if n_dim == 2 { (4, Some((i % 4) as u32)) } else { (6, None) };
        let f = TestField::random(n_dim, a, deg, mode, &mut rng)?;
        out.push(check_pohozaev_a(&f, eps, &rules)?);
        out.push(check_pohozaev_e(&f, eps, &rules)?);
    }
    Ok(out)
}
