//! Self-similar variables `y = (x-x0)/(T0-t)`, `s = -log(T0-t)`, `w = (T0-t)^{2/(p-1)} u`,
//! and closed-form test fields on the unit ball.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Exponents, PhysicalState, RadialGrid};
use crate::numerics::{cubic_equispaced, lagrange_weights};
use crate::quadrature::{grad_decompose, RuleSet};
use crate::solver::Trajectory;

/// Field data at one node of the ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeValue {
    /// Node position.
    pub y: [f64; 3],
    /// `w`.
    pub w: f64,
    /// `∂_s w`.
    pub ws: f64,
    /// `∇w`.
    pub grad: [f64; 3],
    /// Radial part of `∇w`.
    pub grad_r: [f64; 3],
    /// Angular part of `∇w`.
    pub grad_theta: [f64; 3],
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl NodeValue {
    /// Builds the node value and splits the gradient.
    pub fn new(y: [f64; 3], w: f64, ws: f64, grad: [f64; 3]) -> Self {
        let (grad_r, grad_theta) = grad_decompose(&y, &grad);
        Self { y, w, ws, grad, grad_r, grad_theta }
    }

    /// `|y|^2`.
    pub fn r2(&self) -> f64 {
        dot(&self.y, &self.y)
    }

    /// `y·∇w`.
    pub fn ydw(&self) -> f64 {
        dot(&self.y, &self.grad)
    }

    /// `|∇w|^2`.
    pub fn grad_sq(&self) -> f64 {
        dot(&self.grad, &self.grad)
    }

    /// `|∇_r w|^2`.
    pub fn grad_r_sq(&self) -> f64 {
        dot(&self.grad_r, &self.grad_r)
    }

    /// `|∇_θ w|^2`.
    pub fn grad_theta_sq(&self) -> f64 {
        dot(&self.grad_theta, &self.grad_theta)
    }

    /// Node value scaled by `λ` in `w`, `∂_s w` and `∇w`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let g = self.grad;
        Self::new(self.y, lambda * self.w, lambda * self.ws, [lambda * g[0], lambda * g[1], lambda * g[2]])
    }
}

/// Anything that can produce `(w, ∂_s w, ∇w)` at a point of the closed unit ball.
pub trait FieldSource {
    /// Field data at `y`.
    fn eval(&self, y: &[f64; 3]) -> Result<NodeValue>;
}

/// Samples of a field on every rule of a [`RuleSet`] and on the unit sphere.
#[derive(Debug, Clone)]
pub struct SimilaritySnapshot {
    /// Similarity time.
    pub s: f64,
    /// Centre of the backward cone.
    pub x0: [f64; 3],
    /// Blow-up time candidate.
    pub t0: f64,
    exponents: Exponents,
    rules: Arc<RuleSet>,
    values: Vec<Vec<NodeValue>>,
    boundary: Vec<NodeValue>,
}

impl SimilaritySnapshot {
    /// Samples `src` at all nodes.
    pub fn sample(src: &dyn FieldSource, exponents: Exponents, rules: Arc<RuleSet>, s: f64, x0: [f64; 3], t0: f64) -> Result<Self> {
        let values = rules
            .rules()
            .iter()
            .map(|r| r.nodes().iter().map(|y| src.eval(y)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let boundary = rules.sphere().nodes().iter().map(|y| src.eval(y)).collect::<Result<Vec<_>>>()?;
        Ok(Self { s, x0, t0, exponents, rules, values, boundary })
    }

    /// Exponents of the underlying equation.
    pub fn exponents(&self) -> &Exponents {
        &self.exponents
    }

    /// Rule set the snapshot was sampled on.
    pub fn rules(&self) -> &Arc<RuleSet> {
        &self.rules
    }

    /// Node values for the rule with weight exponent `beta`.
    pub fn values(&self, beta: f64) -> Result<&[NodeValue]> {
        Ok(&self.values[self.rules.index_of(beta)?])
    }

    /// Node values on the unit sphere.
    pub fn boundary(&self) -> &[NodeValue] {
        &self.boundary
    }

    /// `∫_B g(node) (1-|y|^2)^β dy`.
    pub fn integrate<F: Fn(&NodeValue) -> f64>(&self, beta: f64, g: F) -> Result<f64> {
        let idx = self.rules.index_of(beta)?;
        let vals: Vec<f64> = self.values[idx].iter().map(g).collect();
        self.rules.rules()[idx].integrate_values(&vals)
    }

    /// `∫_{∂B} g(node) dσ`.
    pub fn integrate_boundary<F: Fn(&NodeValue) -> f64>(&self, g: F) -> Result<f64> {
        let vals: Vec<f64> = self.boundary.iter().map(g).collect();
        self.rules.sphere().integrate_values(&vals)
    }

    /// Copy with every node value mapped by `f`.
    pub fn map_nodes<F: Fn(&NodeValue) -> NodeValue>(&self, f: F) -> Self {
        let values = self.values.iter().map(|v| v.iter().map(&f).collect()).collect();
        let boundary = self.boundary.iter().map(&f).collect();
        Self { values, boundary, rules: self.rules.clone(), ..*self }
    }

    /// Copy at a different similarity time (same field data).
    pub fn with_s(&self, s: f64) -> Self {
        Self { s, values: self.values.clone(), boundary: self.boundary.clone(), rules: self.rules.clone(), ..*self }
    }
}

/// A field that is constant in `y` with `∂_s w = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField(pub f64);

impl FieldSource for ConstantField {
    fn eval(&self, y: &[f64; 3]) -> Result<NodeValue> {
        Ok(NodeValue::new(*y, self.0, 0.0, [0.0; 3]))
    }
}

/// Radial profile `u(r)` and `u_r(r)` from a cubic through four grid values, using the even
/// extension `u(-r) = u(r)` across the origin.
fn interp_radial(u: &[f64], dr: f64, r: f64) -> Option<(f64, f64)> {
    let x = r / dr;
    let i = x.floor() as isize;
    let xi = x - i as f64;
    if i + 2 >= u.len() as isize {
        return None;
    }
    let (wv, wd) = cubic_equispaced(xi);
    let mut val = 0.0;
    let mut der = 0.0;
    for k in 0..4 {
        let j = (i - 1 + k as isize).unsigned_abs();
        val += wv[k] * u[j];
        der += wd[k] * u[j];
    }
    Some((val, der / dr))
}

/// Physical data at one time level restricted to a prefix of the grid.
struct Level<'a> {
    u: &'a [f64],
    ut: &'a [f64],
    weight: f64,
}

/// The similarity transform of physical data, possibly interpolated between stored levels.
struct PhysicalSource<'a> {
    e: Exponents,
    dr: f64,
    levels: Vec<Level<'a>>,
    x0: [f64; 3],
    tau: f64,
}

impl FieldSource for PhysicalSource<'_> {
    fn eval(&self, y: &[f64; 3]) -> Result<NodeValue> {
        let x = [self.x0[0] + self.tau * y[0], self.x0[1] + self.tau * y[1], self.x0[2] + self.tau * y[2]];
        let r = dot(&x, &x).sqrt();
        let (mut u, mut ur, mut ut) = (0.0, 0.0, 0.0);
        for lv in &self.levels {
            let (a, b) = interp_radial(lv.u, self.dr, r)
                .ok_or(Error::BallExitsGrid { radius: r, r_max: (lv.u.len() - 1) as f64 * self.dr })?;
            let (c, _) = interp_radial(lv.ut, self.dr, r)
                .ok_or(Error::BallExitsGrid { radius: r, r_max: (lv.ut.len() - 1) as f64 * self.dr })?;
            u += lv.weight * a;
            ur += lv.weight * b;
            ut += lv.weight * c;
        }
        let dir = if r > 0.0 { [x[0] / r, x[1] / r, x[2] / r] } else { [0.0; 3] };
        let b = self.e.beta_scale();
        let sw = self.tau.powf(b);
        let sg = sw * self.tau;
        let grad_x = [ur * dir[0], ur * dir[1], ur * dir[2]];
        let w = sw * u;
        let ws = -b * w + sg * (ut - dot(y, &grad_x));
        Ok(NodeValue::new(*y, w, ws, [sg * grad_x[0], sg * grad_x[1], sg * grad_x[2]]))
    }
}

/// Transforms a single physical state into similarity variables around `x0` with blow-up time
/// candidate `t0`.
pub fn to_similarity(
    state: &PhysicalState,
    grid: &RadialGrid,
    e: Exponents,
    x0: [f64; 3],
    t0: f64,
    rules: Arc<RuleSet>,
) -> Result<SimilaritySnapshot> {
    if !(state.t < t0) {
        return Err(Error::PastBlowup { t: state.t, t_blowup: t0 });
    }
    let tau = t0 - state.t;
    let reach = dot(&x0, &x0).sqrt() + tau;
    if reach > grid.r_max() - 2.0 * grid.dr() {
        return Err(Error::BallExitsGrid { radius: reach, r_max: grid.r_max() });
    }
    let src = PhysicalSource { e, dr: grid.dr(), levels: vec![Level { u: &state.u, ut: &state.ut, weight: 1.0 }], x0, tau };
    SimilaritySnapshot::sample(&src, e, rules, -tau.ln(), x0, t0)
}

/// Resamples a stored trajectory at the similarity times `s_grid`, interpolating cubically in
/// time between stored states.
pub fn trajectory_to_w(traj: &Trajectory, x0: [f64; 3], t0: f64, s_grid: &[f64], rules: Arc<RuleSet>) -> Result<Vec<SimilaritySnapshot>> {
    s_grid.iter().map(|&s| snapshot_at(traj, x0, t0, s, rules.clone())).collect()
}

/// One resampled snapshot at similarity time `s`.
pub fn snapshot_at(traj: &Trajectory, x0: [f64; 3], t0: f64, s: f64, rules: Arc<RuleSet>) -> Result<SimilaritySnapshot> {
    let states = &traj.states;
    let tau = (-s).exp();
    let offset = t0 - traj.t_final;
    // Target in gap coordinates: gap = tau - (T0 - t_final).
    let g = tau - offset;
    let n = states.len();
    let (g_first, g_last) = (states[0].gap, states[n - 1].gap);
    if n < 4 || g > g_first || g < g_last {
        return Err(Error::OutOfCoverage { what: "s", value: s, lo: -(offset + g_first).ln(), hi: -(offset + g_last).max(0.0).ln() });
    }
    // First index whose gap is <= g.
    let j = states.partition_point(|st| st.gap > g);
    let start = j.saturating_sub(2).min(n - 4);
    let nodes = [states[start].gap, states[start + 1].gap, states[start + 2].gap, states[start + 3].gap];
    let lw = lagrange_weights(&nodes, g);
    let levels =
        (0..4).map(|k| Level { u: &states[start + k].u, ut: &states[start + k].ut, weight: lw[k] }).collect::<Vec<_>>();
    let src = PhysicalSource { e: traj.exponents, dr: traj.grid.dr(), levels, x0, tau };
    SimilaritySnapshot::sample(&src, traj.exponents, rules, s, x0, t0)
}

/// Blow-up time candidate `T*(x) = T0 - δ0 |x - x0|` of the uniform family.
pub fn t_star(t0: f64, delta0: f64, x: &[f64; 3], x0: &[f64; 3]) -> f64 {
    let d = [x[0] - x0[0], x[1] - x0[1], x[2] - x0[2]];
    t0 - delta0 * dot(&d, &d).sqrt()
}

/// Multivariate polynomial `Σ c_k y^{e_k}` in up to three variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    terms: Vec<([u32; 3], f64)>,
}

impl Poly {
    /// Polynomial from explicit `(exponents, coefficient)` terms.
    pub fn new(terms: Vec<([u32; 3], f64)>) -> Self {
        let mut p = Self { terms: Vec::new() };
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// Constant polynomial.
    pub fn constant(c: f64) -> Self {
        Self::new(vec![([0, 0, 0], c)])
    }

    fn add_term(&mut self, e: [u32; 3], c: f64) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.0 == e) {
            t.1 += c;
        } else {
            self.terms.push((e, c));
        }
    }

    /// Total degree.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e[0] + e[1] + e[2]).max().unwrap_or(0)
    }

    /// Sum of two polynomials.
    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, *c);
        }
        out
    }

    /// Product of two polynomials.
    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]], ca * cb);
            }
        }
        out
    }

    /// `Re((y1 + i y2)^m) = r^m cos(mθ)` in the `(y1, y2)` plane.
    pub fn angular_mode(m: u32) -> Poly {
        let mut terms = Vec::new();
        // Re((a+ib)^m) = Σ_{k even} C(m,k) a^{m-k} (ib)^k.
        let mut binom = 1.0;
        for k in 0..=m {
            if k % 2 == 0 {
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                terms.push(([m - k, k, 0], sign * binom));
            }
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
        Poly::new(terms)
    }

    /// Value, gradient and Hessian at `y`.
    pub fn eval_all(&self, y: &[f64; 3]) -> (f64, [f64; 3], [[f64; 3]; 3]) {
        let deg = self.terms.iter().map(|(e, _)| e[0].max(e[1]).max(e[2])).max().unwrap_or(0) as usize;
        // pw[k][i] = y_i^k, d1[k][i] = k y_i^{k-1}, d2[k][i] = k(k-1) y_i^{k-2}.
        let mut pw = vec![[0.0; 3]; deg + 1];
        let mut d1 = vec![[0.0; 3]; deg + 1];
        let mut d2 = vec![[0.0; 3]; deg + 1];
        for i in 0..3 {
            pw[0][i] = 1.0;
            for k in 1..=deg {
                pw[k][i] = pw[k - 1][i] * y[i];
                d1[k][i] = k as f64 * pw[k - 1][i];
                if k >= 2 {
                    d2[k][i] = (k * (k - 1)) as f64 * pw[k - 2][i];
                }
            }
        }
        let mut v = 0.0;
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for (e, c) in &self.terms {
            let (a, b, z) = (e[0] as usize, e[1] as usize, e[2] as usize);
            let (p0, p1, p2) = (pw[a][0], pw[b][1], pw[z][2]);
            let (g0, g1, g2) = (d1[a][0], d1[b][1], d1[z][2]);
            v += c * p0 * p1 * p2;
            g[0] += c * g0 * p1 * p2;
            g[1] += c * p0 * g1 * p2;
            g[2] += c * p0 * p1 * g2;
            h[0][0] += c * d2[a][0] * p1 * p2;
            h[1][1] += c * p0 * d2[b][1] * p2;
            h[2][2] += c * p0 * p1 * d2[z][2];
            h[0][1] += c * g0 * g1 * p2;
            h[0][2] += c * g0 * p1 * g2;
            h[1][2] += c * p0 * g1 * g2;
        }
        h[1][0] = h[0][1];
        h[2][0] = h[0][2];
        h[2][1] = h[1][2];
        (v, g, h)
    }
}

/// Closed-form test field `w = (1-|y|^2)^a q(y)` on the unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct TestField {
    /// Dimension (2 or 3).
    pub n_dim: usize,
    /// Boundary exponent `a ≥ 0`.
    pub a: f64,
    /// Polynomial factor (already including any angular mode).
    pub poly: Poly,
}

/// Value, gradient and Hessian of a test field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    /// Value.
    pub v: f64,
    /// Gradient.
    pub g: [f64; 3],
    /// Hessian.
    pub h: [[f64; 3]; 3],
}

impl TestField {
    /// Field `(1-|y|^2)^a q(y)`, optionally multiplied by the angular mode `r^m cos(mθ)`.
    pub fn new(n_dim: usize, a: f64, poly: Poly, mode: Option<u32>) -> Result<Self> {
        if !(n_dim == 2 || n_dim == 3) {
            return Err(Error::InvalidParameter { name: "N", reason: format!("test fields exist for N = 2, 3 (got {n_dim})") });
        }
        if !(a >= 0.0) {
            return Err(Error::InvalidParameter { name: "a", reason: format!("{a} must be non-negative") });
        }
        let poly = match mode {
            Some(m) => poly.mul(&Poly::angular_mode(m)),
            None => poly,
        };
        Ok(Self { n_dim, a, poly })
    }

    /// Random field with coefficients uniform in `[-1, 1]` for all monomials up to `degree`.
    pub fn random(n_dim: usize, a: f64, degree: u32, mode: Option<u32>, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut terms = Vec::new();
        let max3 = if n_dim == 3 { degree } else { 0 };
        for i in 0..=degree {
            for j in 0..=(degree - i) {
                for k in 0..=max3.min(degree - i - j) {
                    terms.push(([i, j, k], rng.gen_range(-1.0..1.0)));
                }
            }
        }
        Self::new(n_dim, a, Poly::new(terms), mode)
    }

    /// Seeded generator for reproducible suites.
    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Value, gradient and Hessian at `y` (with `|y| < 1` when `a` is not an integer).
    pub fn jet(&self, y: &[f64; 3]) -> Jet {
        let (q, gq, hq) = self.poly.eval_all(y);
        let a = self.a;
        let om = 1.0 - dot(y, y);
        let (b, gb_c, hb_i, hb_yy) = if a == 0.0 {
            (1.0, 0.0, 0.0, 0.0)
        } else {
            // b = om^a, ∇b = -2a om^{a-1} y, ∇²b = -2a om^{a-1} I + 4a(a-1) om^{a-2} y yᵀ.
            let am1 = if a == 1.0 { 1.0 } else { om.powf(a - 1.0) };
            let am2 = if a == 1.0 { 0.0 } else { om.powf(a - 2.0) };
            (om.powf(a), -2.0 * a * am1, -2.0 * a * am1, 4.0 * a * (a - 1.0) * am2)
        };
        let gb = [gb_c * y[0], gb_c * y[1], gb_c * y[2]];
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for i in 0..3 {
            g[i] = q * gb[i] + b * gq[i];
            for j in 0..3 {
                let hb = if i == j && i < self.n_dim { hb_i } else { 0.0 } + hb_yy * y[i] * y[j];
                h[i][j] = q * hb + gb[i] * gq[j] + gq[i] * gb[j] + b * hq[i][j];
            }
        }
        Jet { v: b * q, g, h }
    }

    /// `div(ρ_ε ∇w - ρ_ε (y·∇w) y) / ρ_ε`, from the expansion
    /// `ρ_ε Δw - ρ_ε div((y·∇w) y) + ∇ρ_ε·(∇w - (y·∇w) y)` with `∇ρ_ε/ρ_ε = -2ε y/(1-|y|^2)`.
    pub fn divergence_over_rho(&self, y: &[f64; 3], eps: f64) -> f64 {
        let j = self.jet(y);
        let nf = self.n_dim as f64;
        let lap = j.h[0][0] + j.h[1][1] + j.h[2][2];
        let ydw = dot(y, &j.g);
        let mut yhy = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                yhy += y[i] * j.h[i][k] * y[k];
            }
        }
        // div((y·∇w) y) = N (y·∇w) + y·∇(y·∇w) = (N+1)(y·∇w) + yᵀ∇²w y.
        let div_flux = (nf + 1.0) * ydw + yhy;
        let om = 1.0 - dot(y, y);
        let grad_rho_over_rho = [-2.0 * eps * y[0] / om, -2.0 * eps * y[1] / om, -2.0 * eps * y[2] / om];
        let tang = [j.g[0] - ydw * y[0], j.g[1] - ydw * y[1], j.g[2] - ydw * y[2]];
        lap - div_flux + dot(&grad_rho_over_rho, &tang)
    }
}

/// Source built from a test field for `w` and an optional test field for `∂_s w`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFieldPair {
    /// Field for `w`.
    pub w: TestField,
    /// Field for `∂_s w` (zero when absent).
    pub ws: Option<TestField>,
}

impl FieldSource for TestFieldPair {
    fn eval(&self, y: &[f64; 3]) -> Result<NodeValue> {
        let j = self.w.jet(y);
        let ws = self.ws.as_ref().map_or(0.0, |f| f.jet(y).v);
        Ok(NodeValue::new(*y, j.v, ws, j.g))
    }
}

impl TestFieldPair {
    /// `∂_s² w` implied by the similarity equation
    /// `w_ss = Δw - yᵀ∇²w y - (N+1+2α) y·∇w - 2(p+1)/(p-1)² w + |w|^{p-1}w - (p+3)/(p-1) w_s - 2 y·∇w_s`.
    pub fn wss(&self, e: &Exponents, y: &[f64; 3]) -> f64 {
        let j = self.w.jet(y);
        let (ws, gws) = self.ws.as_ref().map_or((0.0, [0.0; 3]), |f| {
            let k = f.jet(y);
            (k.v, k.g)
        });
        let lap = j.h[0][0] + j.h[1][1] + j.h[2][2];
        let mut yhy = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                yhy += y[i] * j.h[i][k] * y[k];
            }
        }
        let p = e.p();
        lap - yhy - (e.nf() + 1.0 + 2.0 * e.alpha()) * dot(y, &j.g) - e.c_lin() * j.v + e.nonlinearity(j.v)
            - (p + 3.0) / (p - 1.0) * ws
            - 2.0 * dot(y, &gws)
    }

    /// Source for the state advanced by `h` along the flow to first order:
    /// `(w + h w_s, w_s + h w_ss)`, so that `d/dh F(source_h)` at `h = 0` is `dF/ds`.
    pub fn flow(&self, e: Exponents, h: f64) -> FlowSource<'_> {
        FlowSource { pair: self, e, h }
    }
}

/// See [`TestFieldPair::flow`].
#[derive(Debug, Clone, Copy)]
pub struct FlowSource<'a> {
    pair: &'a TestFieldPair,
    e: Exponents,
    h: f64,
}

impl FieldSource for FlowSource<'_> {
    fn eval(&self, y: &[f64; 3]) -> Result<NodeValue> {
        let j = self.pair.w.jet(y);
        let (ws, gws) = self.pair.ws.as_ref().map_or((0.0, [0.0; 3]), |f| {
            let k = f.jet(y);
            (k.v, k.g)
        });
        let h = self.h;
        let g = [j.g[0] + h * gws[0], j.g[1] + h * gws[1], j.g[2] + h * gws[2]];
        Ok(NodeValue::new(*y, j.v + h * ws, ws + h * self.pair.wss(&self.e, y), g))
    }
}

/// Snapshot of a closed-form test field pair at similarity time `s`.
pub fn make_test_field(pair: &TestFieldPair, e: Exponents, rules: Arc<RuleSet>, s: f64) -> Result<SimilaritySnapshot> {
    SimilaritySnapshot::sample(pair, e, rules, s, [0.0; 3], 0.0)
}
