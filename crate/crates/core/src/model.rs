//! Parameter space, grids and field containers shared by every other module.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Validated exponent data for `u_tt = Δu + |u|^{p-1} u` in dimension `N`.
///
/// Construction only succeeds strictly inside the superconformal window
/// `p_c < p < p_S`, which forces `alpha < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    p: f64,
    n: usize,
    p_c: f64,
    p_s: f64,
    alpha: f64,
}

impl Exponents {
    /// Validates `(p, N)` and derives `p_c`, `p_S` and `alpha`.
    pub fn new(p: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidExponents(format!("dimension N = {n} must be at least 2")));
        }
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::InvalidExponents(format!("p = {p} must be a finite number above 1")));
        }
        let nf = n as f64;
        let p_c = 1.0 + 4.0 / (nf - 1.0);
        let p_s = if n == 2 { f64::INFINITY } else { 1.0 + 4.0 / (nf - 2.0) };
        if p <= p_c {
            return Err(Error::InvalidExponents(format!(
                "p = {p} is not superconformal for N = {n} (need p > p_c = {p_c})"
            )));
        }
        if p >= p_s {
            return Err(Error::InvalidExponents(format!(
                "p = {p} is Sobolev-critical or beyond for N = {n} (need p < p_S = {p_s})"
            )));
        }
        let alpha = 2.0 / (p - 1.0) - (nf - 1.0) / 2.0;
        Ok(Self { p, n, p_c, p_s, alpha })
    }

    /// Nonlinearity power `p`.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Space dimension `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Space dimension as a float.
    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Conformal exponent `1 + 4/(N-1)`.
    pub fn p_c(&self) -> f64 {
        self.p_c
    }

    /// Sobolev exponent `1 + 4/(N-2)`, infinite when `N = 2`.
    pub fn p_s(&self) -> f64 {
        self.p_s
    }

    /// Superconformal defect `2/(p-1) - (N-1)/2`, always negative.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Scaling exponent `2/(p-1)` of `u = (T-t)^{-2/(p-1)} w`.
    pub fn beta_scale(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    /// Coefficient `2(p+1)/(p-1)^2` of the linear term of the similarity equation.
    pub fn c_lin(&self) -> f64 {
        2.0 * (self.p + 1.0) / ((self.p - 1.0) * (self.p - 1.0))
    }

    /// `|w|^{p-1} w`.
    pub fn nonlinearity(&self, w: f64) -> f64 {
        w.abs().powf(self.p - 1.0) * w
    }

    /// `|w|^{p+1}`.
    pub fn pow_p1(&self, w: f64) -> f64 {
        w.abs().powf(self.p + 1.0)
    }
}

/// Positive constant stationary solution of the similarity equation,
/// `kappa = (2(p+1)/(p-1)^2)^{1/(p-1)}`.
pub fn kappa(e: &Exponents) -> f64 {
    kappa_of_p(e.p())
}

/// `κ` as a function of `p > 1` alone (no superconformal check).
pub fn kappa_of_p(p: f64) -> f64 {
    (2.0 * (p + 1.0) / ((p - 1.0) * (p - 1.0))).powf(1.0 / (p - 1.0))
}

/// Area `|S^{N-1}| = 2 pi^{N/2} / Gamma(N/2)` of the unit sphere, which equals `|∂B|`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * (h * std::f64::consts::PI.ln() - ln_gamma(h)).exp()
}

/// Volume `|B| = |S^{N-1}| / N` of the unit ball.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

/// Uniform radial grid `r_i = i·dr`, `i = 0..nr`, with `r_0 = 0` and `r_{nr-1} = r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_max: f64,
    nr: usize,
}

impl RadialGrid {
    /// Builds a grid with `nr >= 5` nodes on `[0, r_max]`.
    pub fn new(r_max: f64, nr: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidParameter { name: "r_max", reason: format!("{r_max} must be positive") });
        }
        if nr < 5 {
            return Err(Error::InvalidParameter { name: "nr", reason: format!("{nr} nodes is fewer than 5") });
        }
        Ok(Self { r_max, nr })
    }

    /// Outer radius.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Number of nodes.
    pub fn nr(&self) -> usize {
        self.nr
    }

    /// Node spacing.
    pub fn dr(&self) -> f64 {
        self.r_max / (self.nr - 1) as f64
    }

    /// Radius of node `i`.
    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr()
    }

    /// All node radii.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nr).map(|i| self.r(i)).collect()
    }
}

/// Physical state `(t, u, u_t)` on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalState {
    /// Time.
    pub t: f64,
    /// Field values at the grid nodes.
    pub u: Vec<f64>,
    /// Time derivative at the grid nodes.
    pub ut: Vec<f64>,
}

impl PhysicalState {
    /// Zero field at time `t` on `nr` nodes.
    pub fn zeros(t: f64, nr: usize) -> Self {
        Self { t, u: vec![0.0; nr], ut: vec![0.0; nr] }
    }

    /// Largest `|u|` over the nodes.
    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// True when every stored value is finite.
    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.ut.iter()).all(|v| v.is_finite())
    }
}

/// Truncation metadata for series whose definition contains `∫_s^∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailMeta {
    /// Horizon where sampled data ends.
    pub s_max: f64,
    /// Estimated contribution of `∫_{s_max}^∞`, already added to the values.
    pub tail_bound: f64,
}

/// Named time series `(s_i, value_i)` with strictly increasing `s_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSeries {
    name: String,
    s: Vec<f64>,
    values: Vec<f64>,
    tail: Option<TailMeta>,
}

impl FunctionalSeries {
    /// Builds a series, rejecting unsorted or mismatched samples.
    pub fn new(name: impl Into<String>, s: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if s.len() != values.len() {
            return Err(Error::InvalidParameter {
                name: "series",
                reason: format!("{} times but {} values", s.len(), values.len()),
            });
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter { name: "series", reason: "times are not strictly increasing".into() });
        }
        Ok(Self { name: name.into(), s, values, tail: None })
    }

    /// Attaches tail-truncation metadata.
    pub fn with_tail(mut self, tail: TailMeta) -> Self {
        self.tail = Some(tail);
        self
    }

    /// Series name.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Sample times.
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// Sample values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Tail metadata, if any.
    pub fn tail(&self) -> Option<TailMeta> {
        self.tail
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.s.len()
    }

    /// True for an empty series.
    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Iterator over `(s, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s.iter().copied().zip(self.values.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_p4_n3() {
        let e = Exponents::new(4.0, 3).unwrap();
        assert!((e.alpha() + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.p_c(), 3.0);
        assert_eq!(e.p_s(), 5.0);
    }

    #[test]
    fn exponents_p25_n4() {
        let e = Exponents::new(2.5, 4).unwrap();
        assert!((e.alpha() + 1.0 / 6.0).abs() < 1e-15);
        assert!((e.p_c() - 7.0 / 3.0).abs() < 1e-15);
        assert!((e.p_s() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn conformal_and_sobolev_rejected() {
        assert!(matches!(Exponents::new(3.0, 3), Err(Error::InvalidExponents(_))));
        assert!(matches!(Exponents::new(5.0, 3), Err(Error::InvalidExponents(_))));
        assert!(Exponents::new(1.0, 3).is_err());
        assert!(Exponents::new(4.0, 1).is_err());
    }

    #[test]
    fn n2_has_no_upper_bound() {
        let e = Exponents::new(1e3, 2).unwrap();
        assert!(e.p_s().is_infinite());
        assert!(e.alpha() < 0.0);
    }

    #[test]
    fn kappa_values() {
        let e = Exponents::new(4.0, 3).unwrap();
        assert!((kappa(&e) - (10.0_f64 / 9.0).cbrt()).abs() < 1e-15);
        assert!((kappa(&e) - 1.035744).abs() < 1e-6);
        let e = Exponents::new(3.5, 3).unwrap();
        let k = kappa(&e);
        assert!((k.powf(2.5) * 2.5 * 2.5 / (2.0 * 4.5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kappa_p3_is_sqrt2() {
        assert!((kappa_of_p(3.0) - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ball_and_sphere() {
        use std::f64::consts::PI;
        assert!((ball_volume(2) - PI).abs() < 1e-14);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn grid_nodes() {
        let g = RadialGrid::new(2.0, 5).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(RadialGrid::new(2.0, 4).is_err());
    }

    #[test]
    fn series_rejects_unsorted() {
        assert!(FunctionalSeries::new("x", vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(FunctionalSeries::new("x", vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(FunctionalSeries::new("x", vec![0.0, 1.0], vec![1.0, 2.0]).is_ok());
    }
}
