//! Quadrature on the unit ball against `(1-|y|^2)^β`, including singular `β ∈ (-1, 0)`,
//! and the radial/angular splitting of gradients.
//!
//! Radial rules are Gauss-Jacobi rules in `u = r^2`, so the weight `(1-r^2)^β r^{N-1} dr`
//! becomes `½ (1-u)^β u^{(N-2)/2} du` and is carried by the rule rather than sampled.
//! Angular rules are either a single direction (radial fields, any `N`), a periodic trapezoid
//! in `θ` (`N = 2`), or Gauss-Legendre in `cos φ` times a uniform azimuth (`N = 3`).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::sphere_area;
use crate::numerics::pairwise_sum;

/// A one-dimensional Gauss rule: nodes in ascending order with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    /// Nodes.
    pub nodes: Vec<f64>,
    /// Weights.
    pub weights: Vec<f64>,
}

/// Gauss rule for a weight with monic three-term recurrence `p_{k+1} = (x - a_k) p_k - b_k p_{k-1}`
/// and total mass `mu0`, computed by Golub-Welsch and polished by Newton steps on the
/// orthonormal recurrence, with weights from the Christoffel function.
fn gauss_from_recurrence(a: &[f64], b: &[f64], mu0: f64) -> GaussRule {
    let n = a.len();
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jm[(i, i)] = a[i];
        if i + 1 < n {
            let off = b[i + 1].sqrt();
            jm[(i, i + 1)] = off;
            jm[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));

    // Orthonormal polynomials q_0..q_n and q_n' at x.
    let eval = |x: f64| -> (f64, f64, f64) {
        let mut q_prev = 0.0;
        let mut q = 1.0 / mu0.sqrt();
        let mut dq_prev = 0.0;
        let mut dq = 0.0;
        let mut sumsq = q * q;
        for k in 0..n {
            let bk1 = b[k + 1].sqrt();
            let bk = if k == 0 { 0.0 } else { b[k].sqrt() };
            let q_next = ((x - a[k]) * q - bk * q_prev) / bk1;
            let dq_next = (q + (x - a[k]) * dq - bk * dq_prev) / bk1;
            q_prev = q;
            q = q_next;
            dq_prev = dq;
            dq = dq_next;
            if k + 1 < n {
                sumsq += q * q;
            }
        }
        (q, dq, sumsq)
    };

    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (q, dq, _) = eval(*x);
            if dq != 0.0 {
                let step = q / dq;
                *x -= step;
                if step.abs() < 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
        }
        let (_, _, sumsq) = eval(*x);
        weights.push(1.0 / sumsq);
    }
    GaussRule { nodes, weights }
}

/// Gauss-Jacobi rule for `∫_{-1}^{1} f(x) (1-x)^a (1+x)^b dx` with `a, b > -1`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<GaussRule> {
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::InvalidParameter { name: "beta", reason: format!("Jacobi exponents ({a}, {b}) must exceed -1") });
    }
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n_radial", reason: "need at least one node".into() });
    }
    let ab = a + b;
    let mut ak = vec![0.0; n];
    // bk[k] multiplies p_{k-1} in the recurrence for p_{k+1}; bk[n] is needed for q_n.
    let mut bk = vec![0.0; n + 1];
    for (k, akk) in ak.iter_mut().enumerate() {
        let kf = k as f64;
        *akk = if k == 0 { (b - a) / (ab + 2.0) } else { (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0)) };
    }
    for (k, bkk) in bk.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        *bkk = if k == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            let t = 2.0 * kf + ab;
            4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (t * t * (t + 1.0) * (t - 1.0))
        };
    }
    let mu0 = ((ab + 1.0) * 2.0_f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(ab + 2.0)).exp();
    Ok(gauss_from_recurrence(&ak, &bk, mu0))
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> GaussRule {
    gauss_jacobi(n, 0.0, 0.0).expect("Legendre parameters are valid")
}

/// Generalised Gauss-Laguerre rule for `∫_0^∞ f(x) x^a e^{-x} dx` with `a > -1`.
pub fn gauss_laguerre(n: usize, a: f64) -> Result<GaussRule> {
    if !(a > -1.0) || n == 0 {
        return Err(Error::InvalidParameter { name: "laguerre", reason: format!("n = {n}, a = {a}") });
    }
    let ak: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + a + 1.0).collect();
    let bk: Vec<f64> = (0..=n).map(|k| if k == 0 { 0.0 } else { k as f64 * (k as f64 + a) }).collect();
    Ok(gauss_from_recurrence(&ak, &bk, ln_gamma(a + 1.0).exp()))
}

/// Angular part of a ball rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Angular {
    /// One direction `e_1` carrying the full sphere area; exact for radial integrands, any `N`.
    Radial,
    /// `N = 2`: `n` equispaced angles.
    Periodic(usize),
    /// `N = 3`: `n` Gauss-Legendre nodes in `cos φ` times `2n` equispaced azimuths.
    Tensor(usize),
}

impl Angular {
    /// Unit directions and weights (summing to `|S^{N-1}|`).
    pub fn directions(&self, n_dim: usize) -> Result<Vec<([f64; 3], f64)>> {
        match *self {
            Angular::Radial => Ok(vec![([1.0, 0.0, 0.0], sphere_area(n_dim))]),
            Angular::Periodic(m) => {
                if n_dim != 2 || m == 0 {
                    return Err(Error::InvalidParameter { name: "angular", reason: format!("periodic grid needs N = 2 and n > 0 (N = {n_dim}, n = {m})") });
                }
                Ok((0..m)
                    .map(|j| {
                        let th = 2.0 * PI * j as f64 / m as f64;
                        ([th.cos(), th.sin(), 0.0], 2.0 * PI / m as f64)
                    })
                    .collect())
            }
            Angular::Tensor(m) => {
                if n_dim != 3 || m == 0 {
                    return Err(Error::InvalidParameter { name: "angular", reason: format!("tensor grid needs N = 3 and n > 0 (N = {n_dim}, n = {m})") });
                }
                let gl = gauss_legendre(m);
                let naz = 2 * m;
                let mut out = Vec::with_capacity(m * naz);
                for (z, wz) in gl.nodes.iter().zip(&gl.weights) {
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    for k in 0..naz {
                        let ph = 2.0 * PI * k as f64 / naz as f64;
                        out.push(([rho * ph.cos(), rho * ph.sin(), *z], wz * 2.0 * PI / naz as f64));
                    }
                }
                Ok(out)
            }
        }
    }

    /// Angular grid from the `(N, n_angular)` convention: `0` selects the radial mode.
    pub fn from_count(n_dim: usize, n_angular: usize) -> Result<Self> {
        match (n_dim, n_angular) {
            (_, 0) => Ok(Angular::Radial),
            (2, m) => Ok(Angular::Periodic(m)),
            (3, m) => Ok(Angular::Tensor(m)),
            (d, _) => Err(Error::InvalidParameter { name: "n_angular", reason: format!("angular grids exist only for N = 2, 3 (got N = {d})") }),
        }
    }
}

/// Nodes and weights for `∫_B f(y) (1-|y|^2)^β dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallQuadrature {
    n_dim: usize,
    beta: f64,
    angular: Angular,
    radial_nodes: Vec<f64>,
    radial_weights: Vec<f64>,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl BallQuadrature {
    /// Builds the tensor rule for weight exponent `beta`.
    pub fn new(n_dim: usize, beta: f64, n_radial: usize, angular: Angular) -> Result<Self> {
        if !(beta > -1.0) {
            return Err(Error::InvalidParameter { name: "beta", reason: format!("{beta} makes the weight non-integrable") });
        }
        if n_radial < 4 {
            return Err(Error::InvalidParameter { name: "n_radial", reason: format!("{n_radial} is fewer than 4") });
        }
        if n_dim < 2 {
            return Err(Error::InvalidParameter { name: "N", reason: format!("{n_dim} is below 2") });
        }
        let bj = (n_dim as f64 - 2.0) / 2.0;
        let gj = gauss_jacobi(n_radial, beta, bj)?;
        let scale = 0.5 * 2.0_f64.powf(-beta - bj - 1.0);
        let radial_nodes: Vec<f64> = gj.nodes.iter().map(|x| (0.5 * (1.0 + x)).sqrt()).collect();
        let radial_weights: Vec<f64> = gj.weights.iter().map(|w| w * scale).collect();
        let dirs = angular.directions(n_dim)?;
        let mut nodes = Vec::with_capacity(radial_nodes.len() * dirs.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for (r, wr) in radial_nodes.iter().zip(&radial_weights) {
            for (d, wd) in &dirs {
                nodes.push([r * d[0], r * d[1], r * d[2]]);
                weights.push(wr * wd);
            }
        }
        Ok(Self { n_dim, beta, angular, radial_nodes, radial_weights, nodes, weights })
    }

    /// Dimension.
    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    /// Weight exponent.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Angular grid.
    pub fn angular(&self) -> Angular {
        self.angular
    }

    /// Radial nodes in `(0, 1)`.
    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial_nodes
    }

    /// Radial weights for `(1-r^2)^β r^{N-1} dr`.
    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    /// Ball nodes.
    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    /// Ball weights (positive).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_i v_i` for values sampled at [`Self::nodes`], summed pairwise.
    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        debug_assert_eq!(values.len(), self.weights.len());
        let mut terms = Vec::with_capacity(values.len());
        for (i, (v, w)) in values.iter().zip(&self.weights).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteNode { index: i, y: self.nodes[i] });
            }
            terms.push(v * w);
        }
        Ok(pairwise_sum(&terms))
    }

    /// `∫_B f(y) (1-|y|^2)^β dy` for a closed-form integrand.
    pub fn integrate<F: Fn(&[f64; 3]) -> f64>(&self, f: F) -> Result<f64> {
        let values: Vec<f64> = self.nodes.iter().map(f).collect();
        self.integrate_values(&values)
    }
}

/// Builds a ball rule; `n_angular = 0` selects the radial mode.
pub fn build_rule(n_dim: usize, beta: f64, n_radial: usize, n_angular: usize) -> Result<BallQuadrature> {
    BallQuadrature::new(n_dim, beta, n_radial, Angular::from_count(n_dim, n_angular)?)
}

/// Nodes and weights on the unit sphere `∂B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl SphereRule {
    /// Sphere rule matching an angular grid.
    pub fn new(n_dim: usize, angular: Angular) -> Result<Self> {
        let (nodes, weights) = angular.directions(n_dim)?.into_iter().unzip();
        Ok(Self { nodes, weights })
    }

    /// Nodes on `|y| = 1`.
    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    /// Weights summing to `|∂B|`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_i v_i`, summed pairwise.
    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        let mut terms = Vec::with_capacity(values.len());
        for (i, (v, w)) in values.iter().zip(&self.weights).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteNode { index: i, y: self.nodes[i] });
            }
            terms.push(v * w);
        }
        Ok(pairwise_sum(&terms))
    }
}

/// A family of ball rules sharing dimension, radial order and angular grid, one per weight
/// exponent, plus the matching sphere rule.
#[derive(Debug, Clone)]
pub struct RuleSet {
    n_dim: usize,
    n_radial: usize,
    angular: Angular,
    rules: Vec<Arc<BallQuadrature>>,
    sphere: Arc<SphereRule>,
}

/// Tolerance used to identify weight exponents that were computed by different arithmetic.
const BETA_MATCH: f64 = 1e-12;

impl RuleSet {
    /// Builds rules for every exponent in `betas` (duplicates removed).
    pub fn new(n_dim: usize, n_radial: usize, angular: Angular, betas: &[f64]) -> Result<Self> {
        let mut uniq: Vec<f64> = Vec::new();
        for &b in betas {
            if !uniq.iter().any(|u| (u - b).abs() < BETA_MATCH) {
                uniq.push(b);
            }
        }
        uniq.sort_by(|a, b| a.partial_cmp(b).expect("finite beta"));
        let rules = uniq
            .into_iter()
            .map(|b| BallQuadrature::new(n_dim, b, n_radial, angular).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        let sphere = Arc::new(SphereRule::new(n_dim, angular)?);
        Ok(Self { n_dim, n_radial, angular, rules, sphere })
    }

    /// Rules covering every weight exponent used by the functionals and lemmas at the given
    /// `eps` values (and at `eps0` for the `M`/`U` family).
    pub fn for_functionals(n_dim: usize, n_radial: usize, angular: Angular, eps_list: &[f64]) -> Result<Self> {
        let mut betas = vec![0.0];
        for &e in eps_list {
            betas.extend_from_slice(&[e, e - 1.0, e - 0.5, e + 0.5, e + 1.0]);
        }
        Self::new(n_dim, n_radial, angular, &betas)
    }

    /// Dimension.
    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    /// Radial order.
    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    /// Angular grid.
    pub fn angular(&self) -> Angular {
        self.angular
    }

    /// All rules, sorted by weight exponent.
    pub fn rules(&self) -> &[Arc<BallQuadrature>] {
        &self.rules
    }

    /// Index of the rule for `beta`.
    pub fn index_of(&self, beta: f64) -> Result<usize> {
        self.rules.iter().position(|r| (r.beta() - beta).abs() < BETA_MATCH).ok_or(Error::MissingRule(beta))
    }

    /// The rule for `beta`.
    pub fn rule(&self, beta: f64) -> Result<&BallQuadrature> {
        Ok(&self.rules[self.index_of(beta)?])
    }

    /// Sphere rule.
    pub fn sphere(&self) -> &SphereRule {
        &self.sphere
    }
}

/// Splits `grad` at `y` into its radial part `(y·grad/|y|^2) y` and the orthogonal remainder.
/// At `y = 0` the radial part is defined as zero.
pub fn grad_decompose(y: &[f64; 3], grad: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    if r2 == 0.0 {
        return ([0.0; 3], *grad);
    }
    let c = (y[0] * grad[0] + y[1] * grad[1] + y[2] * grad[2]) / r2;
    let gr = [c * y[0], c * y[1], c * y[2]];
    (gr, [grad[0] - gr[0], grad[1] - gr[1], grad[2] - gr[2]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let g = gauss_legendre(5);
        for k in 0..10 {
            let q: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "k = {k}: {q} vs {exact}");
        }
    }

    #[test]
    fn jacobi_mass_and_first_moment() {
        let (a, b) = (-0.4, 0.5);
        let g = gauss_jacobi(12, a, b).unwrap();
        let mu0 = (2.0_f64.powf(a + b + 1.0) * (ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0)).exp()) as f64;
        let m0: f64 = g.weights.iter().sum();
        let m1: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| x * w).sum();
        assert!((m0 - mu0).abs() < 1e-13 * mu0);
        assert!((m1 - mu0 * (b - a) / (a + b + 2.0)).abs() < 1e-13 * mu0);
    }

    #[test]
    fn jacobi_handles_a_plus_b_minus_one() {
        let g = gauss_jacobi(6, -0.5, -0.5).unwrap();
        let m0: f64 = g.weights.iter().sum();
        assert!((m0 - PI).abs() < 1e-13);
    }

    #[test]
    fn laguerre_moments() {
        let g = gauss_laguerre(10, 0.0).unwrap();
        for k in 0..8 {
            let q: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(k)).sum();
            let exact: f64 = (1..=k).map(|i| i as f64).product();
            assert!((q - exact).abs() < 1e-11 * exact.max(1.0));
        }
    }

    #[test]
    fn ball_volumes() {
        let r = build_rule(2, 0.0, 8, 0).unwrap();
        assert!((r.integrate(|_| 1.0).unwrap() - PI).abs() < 1e-14);
        let r = build_rule(3, 1.0, 8, 0).unwrap();
        assert!((r.integrate(|_| 1.0).unwrap() - 8.0 * PI / 15.0).abs() < 1e-14);
        let r = build_rule(3, -0.5, 8, 0).unwrap();
        assert!((r.integrate(|_| 1.0).unwrap() - PI * PI).abs() < 1e-13);
        let r = build_rule(3, 0.0, 8, 0).unwrap();
        let v = r.integrate(|y| y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).unwrap();
        assert!((v - 4.0 * PI / 5.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonintegrable_weight() {
        assert!(build_rule(3, -1.0, 8, 0).is_err());
        assert!(build_rule(3, 0.0, 3, 0).is_err());
    }

    #[test]
    fn nonfinite_node_is_reported() {
        let r = build_rule(2, 0.0, 4, 4).unwrap();
        let err = r.integrate(|y| if y[0] > 0.5 { f64::NAN } else { 1.0 }).unwrap_err();
        assert!(matches!(err, Error::NonFiniteNode { .. }));
    }

    #[test]
    fn decompose_examples() {
        let (gr, gt) = grad_decompose(&[0.5, 0.0, 0.0], &[3.0, 0.0, 0.0]);
        assert_eq!((gr, gt), ([3.0, 0.0, 0.0], [0.0, 0.0, 0.0]));
        let (gr, gt) = grad_decompose(&[0.5, 0.0, 0.0], &[0.0, 2.0, 0.0]);
        assert_eq!((gr, gt), ([0.0, 0.0, 0.0], [0.0, 2.0, 0.0]));
        let (gr, gt) = grad_decompose(&[0.0; 3], &[1.0, 2.0, 3.0]);
        assert_eq!((gr, gt), ([0.0; 3], [1.0, 2.0, 3.0]));
    }

    #[test]
    fn ruleset_lookup() {
        let rs = RuleSet::for_functionals(3, 8, Angular::Radial, &[0.6, 1.0]).unwrap();
        assert!(rs.rule(0.6 - 1.0).is_ok());
        assert!(rs.rule(0.0).is_ok());
        assert!(matches!(rs.rule(0.3), Err(Error::MissingRule(_))));
    }
}
