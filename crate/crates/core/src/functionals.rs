//! Weighted energy and Lyapunov functionals of a similarity snapshot, their time-integrated
//! variants, and the physical quantities controlled by the blow-up rate theorem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Exponents, FunctionalSeries, TailMeta};
use crate::numerics::cumulative_tail;
use crate::quadrature::gauss_laguerre;
use crate::similarity::{NodeValue, SimilaritySnapshot};

/// Default weight exponent `ε₀` of `𝓜` and the `𝓤`, `𝓕` families.
pub const EPS0: f64 = 0.6;

/// Pointwise integrands used by functionals and by the right-hand sides of the derivative
/// identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    /// `1`.
    One,
    /// `w²`.
    W2,
    /// `w² |y|²`.
    W2R2,
    /// `w ∂_s w`.
    WWs,
    /// `w ∂_s w |y|²`.
    WWsR2,
    /// `w (y·∇w)`.
    WYdw,
    /// `(∂_s w)²`.
    Ws2,
    /// `(∂_s w)² |y|²`.
    Ws2R2,
    /// `∂_s w (y·∇w)`.
    WsYdw,
    /// `(y·∇w)²`.
    Ydw2,
    /// `|∇w|²`.
    Grad2,
    /// `|∇w|² (1-|y|²)`.
    Grad2Om,
    /// `|∇w|² - (y·∇w)²`.
    GradTan2,
    /// `|∇_θ w|²`.
    GradTheta2,
    /// `|∇_θ w|² |y|²`.
    GradTheta2R2,
    /// `|∇_r w|²`.
    GradR2,
    /// `|w|^{p+1}`.
    Wp1,
    /// `|w|^{(p+3)/2}`.
    WHalfP3,
    /// `(∂_s w + y·∇w)²`.
    WsPlusYdw2,
    /// `(∂_s w + α w)²`.
    WsPlusAlphaW2,
    /// `(∂_s w + (2/(p-1)) w + y·∇w)²`, the similarity form of `(∂_t u)²`.
    TimeDerivative2,
}

impl Integrand {
    /// Value at one node.
    pub fn eval(self, nv: &NodeValue, e: &Exponents) -> f64 {
        match self {
            Self::One => 1.0,
            Self::W2 => nv.w * nv.w,
            Self::W2R2 => nv.w * nv.w * nv.r2(),
            Self::WWs => nv.w * nv.ws,
            Self::WWsR2 => nv.w * nv.ws * nv.r2(),
            Self::WYdw => nv.w * nv.ydw(),
            Self::Ws2 => nv.ws * nv.ws,
            Self::Ws2R2 => nv.ws * nv.ws * nv.r2(),
            Self::WsYdw => nv.ws * nv.ydw(),
            Self::Ydw2 => nv.ydw() * nv.ydw(),
            Self::Grad2 => nv.grad_sq(),
            Self::Grad2Om => nv.grad_sq() * (1.0 - nv.r2()),
            Self::GradTan2 => nv.grad_sq() - nv.ydw() * nv.ydw(),
            Self::GradTheta2 => nv.grad_theta_sq(),
            Self::GradTheta2R2 => nv.grad_theta_sq() * nv.r2(),
            Self::GradR2 => nv.grad_r_sq(),
            Self::Wp1 => e.pow_p1(nv.w),
            Self::WHalfP3 => nv.w.abs().powf(0.5 * (e.p() + 3.0)),
            Self::WsPlusYdw2 => (nv.ws + nv.ydw()).powi(2),
            Self::WsPlusAlphaW2 => (nv.ws + e.alpha() * nv.w).powi(2),
            Self::TimeDerivative2 => (nv.ws + e.beta_scale() * nv.w + nv.ydw()).powi(2),
        }
    }
}

/// `∫_B g ρ_β dy` for a named integrand.
pub fn bulk(snap: &SimilaritySnapshot, g: Integrand, beta: f64) -> Result<f64> {
    let e = *snap.exponents();
    snap.integrate(beta, |nv| g.eval(nv, &e))
}

/// `∫_{∂B} g dσ` for a named integrand.
pub fn boundary(snap: &SimilaritySnapshot, g: Integrand) -> Result<f64> {
    let e = *snap.exponents();
    snap.integrate_boundary(|nv| g.eval(nv, &e))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "eps", reason: format!("{eps} must be positive") })
    }
}

/// Energy density integrated against `ρ_β`:
/// `½ws² + ½(|∇w|²-(y·∇w)²) + (p+1)/(p-1)² w² - |w|^{p+1}/(p+1)`.
fn energy_density(snap: &SimilaritySnapshot, beta: f64) -> Result<f64> {
    let e = *snap.exponents();
    let lin = 0.5 * e.c_lin();
    let p1 = e.p() + 1.0;
    snap.integrate(beta, |nv| {
        0.5 * nv.ws * nv.ws + 0.5 * (nv.grad_sq() - nv.ydw() * nv.ydw()) + lin * nv.w * nv.w - e.pow_p1(nv.w) / p1
    })
}

/// Unweighted energy `E₀`.
pub fn e0(snap: &SimilaritySnapshot) -> Result<f64> {
    energy_density(snap, 0.0)
}

/// `J₀ = α∫w ∂_s w - (αN/2)∫w²`, the correction turning `E₀` into `E`.
pub fn j0(snap: &SimilaritySnapshot) -> Result<f64> {
    let e = *snap.exponents();
    let a = e.alpha();
    let half_n = 0.5 * e.nf();
    snap.integrate(0.0, |nv| a * nv.w * nv.ws - a * half_n * nv.w * nv.w)
}

/// `(E, F₀)` with `E = E₀ + J₀` and `F₀ = e^{2αs} E`.
pub fn e_and_f0(snap: &SimilaritySnapshot) -> Result<(f64, f64)> {
    let e = e0(snap)? + j0(snap)?;
    Ok((e, (2.0 * snap.exponents().alpha() * snap.s).exp() * e))
}

/// Weighted energy `E_ε`.
pub fn e_eps(snap: &SimilaritySnapshot, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    energy_density(snap, eps)
}

/// `J_ε = -∫(w ∂_s w + (N/2+α) w²) ρ_ε`.
pub fn j_eps(snap: &SimilaritySnapshot, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let e = *snap.exponents();
    let k = 0.5 * e.nf() + e.alpha();
    snap.integrate(eps, |nv| -nv.w * nv.ws - k * nv.w * nv.w)
}

/// `G_ε = ∫(|∇w|² - |w|^{p+1} - (∂_s w + y·∇w)² + 2(p+1)/(p-1)² w²) ρ_ε`.
pub fn g_eps(snap: &SimilaritySnapshot, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let e = *snap.exponents();
    let c = e.c_lin();
    snap.integrate(eps, |nv| nv.grad_sq() - e.pow_p1(nv.w) - (nv.ws + nv.ydw()).powi(2) + c * nv.w * nv.w)
}

/// `N_ε = ∫((y·∇w) ∂_s w + (y·∇w)²) ρ_ε`.
pub fn n_eps(snap: &SimilaritySnapshot, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    snap.integrate(eps, |nv| nv.ydw() * nv.ws + nv.ydw() * nv.ydw())
}

/// `I_ε = -∫(w(∂_s w + 2 y·∇w) + (N/2) w²) ρ_ε/√(1-|y|²)`.
pub fn i_eps(snap: &SimilaritySnapshot, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let half_n = 0.5 * snap.exponents().nf();
    snap.integrate(eps - 0.5, |nv| -nv.w * (nv.ws + 2.0 * nv.ydw()) - half_n * nv.w * nv.w)
}

/// `𝓛_ε = N_{1/2+ε} + (1/2+ε) I_ε`.
pub fn l_eps(snap: &SimilaritySnapshot, eps: f64) -> Result<f64> {
    Ok(n_eps(snap, eps + 0.5)? + (eps + 0.5) * i_eps(snap, eps)?)
}

/// Coefficient `2/(p-1) + 2/5` used throughout `𝓜`.
pub fn m_coef(e: &Exponents) -> f64 {
    e.beta_scale() + 0.4
}

/// `𝓜 = E_{ε₀} + N_{ε₀} - k J_{ε₀} + (6/5)k ∫w²|y|²ρ/(1-|y|²) + kα∫w²ρ` with
/// `k = 2/(p-1) + 2/5`.
pub fn m_func(snap: &SimilaritySnapshot, eps0: f64) -> Result<f64> {
    let e = *snap.exponents();
    let k = m_coef(&e);
    Ok(e_eps(snap, eps0)? + n_eps(snap, eps0)? - k * j_eps(snap, eps0)?
        + 1.2 * k * bulk(snap, Integrand::W2R2, eps0 - 1.0)?
        + k * e.alpha() * bulk(snap, Integrand::W2, eps0)?)
}

/// `∫_B |w|^{p+1} ρ_ε/√(1-|y|²) dy`.
pub fn singular_lp1(snap: &SimilaritySnapshot, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    bulk(snap, Integrand::Wp1, eps - 0.5)
}

/// Ratio of the two sides of the weighted Hardy inequality with unit constant,
/// `∫w²ρ_ε/(1-|y|²) / (∫|∇w|²(1-|y|²)ρ_ε + ∫w²ρ_ε)`, defined as 0 when the denominator vanishes.
pub fn hardy_ratio(snap: &SimilaritySnapshot, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let lhs = bulk(snap, Integrand::W2, eps - 1.0)?;
    let rhs = bulk(snap, Integrand::Grad2Om, eps)? + bulk(snap, Integrand::W2, eps)?;
    Ok(if rhs > 0.0 { lhs / rhs } else { 0.0 })
}

/// Right-hand side density of the bound on `|𝓜|`: `∫((∂_s w)² + |∇w|² + w² + |w|^{p+1}) ρ_{ε₀}`.
pub fn m_bound_density(snap: &SimilaritySnapshot, eps0: f64) -> Result<f64> {
    let e = *snap.exponents();
    snap.integrate(eps0, |nv| nv.ws * nv.ws + nv.grad_sq() + nv.w * nv.w + e.pow_p1(nv.w))
}

/// Named functional of a single snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Functional {
    /// `E₀`.
    E0,
    /// `J₀`.
    J0,
    /// `E`.
    E,
    /// `F₀ = e^{2αs}E`.
    F0,
    /// `E_ε`.
    EEps { eps: f64 },
    /// `J_ε`.
    JEps { eps: f64 },
    /// `G_ε`.
    GEps { eps: f64 },
    /// `N_ε`.
    NEps { eps: f64 },
    /// `I_ε`.
    IEps { eps: f64 },
    /// `𝓛_ε`.
    LEps { eps: f64 },
    /// `𝓜` at `ε₀`.
    M { eps0: f64 },
    /// `∫|w|^{p+1}ρ_ε/√(1-|y|²)`.
    SingularLp1 { eps: f64 },
}

impl Functional {
    /// Parses names such as `E0`, `F0`, `E_eps`, `M`; `eps` applies where meaningful.
    pub fn from_name(name: &str, eps: f64) -> Result<Self> {
        Ok(match name {
            "E0" => Self::E0,
            "J0" => Self::J0,
            "E" => Self::E,
            "F0" => Self::F0,
            "E_eps" => Self::EEps { eps },
            "J_eps" => Self::JEps { eps },
            "G_eps" => Self::GEps { eps },
            "N_eps" => Self::NEps { eps },
            "I_eps" => Self::IEps { eps },
            "L_eps" => Self::LEps { eps },
            "M" => Self::M { eps0: eps },
            "singularLp1" => Self::SingularLp1 { eps },
            _ => return Err(Error::UnknownName { kind: "functional", name: name.to_string() }),
        })
    }

    /// Stable label for file names and reports.
    pub fn label(&self) -> String {
        match self {
            Self::E0 => "E0".into(),
            Self::J0 => "J0".into(),
            Self::E => "E".into(),
            Self::F0 => "F0".into(),
            Self::EEps { eps } => format!("E_eps{eps}"),
            Self::JEps { eps } => format!("J_eps{eps}"),
            Self::GEps { eps } => format!("G_eps{eps}"),
            Self::NEps { eps } => format!("N_eps{eps}"),
            Self::IEps { eps } => format!("I_eps{eps}"),
            Self::LEps { eps } => format!("L_eps{eps}"),
            Self::M { eps0 } => format!("M_eps{eps0}"),
            Self::SingularLp1 { eps } => format!("singularLp1_eps{eps}"),
        }
    }

    /// Value on one snapshot.
    pub fn eval(&self, snap: &SimilaritySnapshot) -> Result<f64> {
        match *self {
            Self::E0 => e0(snap),
            Self::J0 => j0(snap),
            Self::E => e_and_f0(snap).map(|v| v.0),
            Self::F0 => e_and_f0(snap).map(|v| v.1),
            Self::EEps { eps } => e_eps(snap, eps),
            Self::JEps { eps } => j_eps(snap, eps),
            Self::GEps { eps } => g_eps(snap, eps),
            Self::NEps { eps } => n_eps(snap, eps),
            Self::IEps { eps } => i_eps(snap, eps),
            Self::LEps { eps } => l_eps(snap, eps),
            Self::M { eps0 } => m_func(snap, eps0),
            Self::SingularLp1 { eps } => singular_lp1(snap, eps),
        }
    }

    /// Series of values over a list of snapshots.
    pub fn series(&self, snaps: &[SimilaritySnapshot]) -> Result<FunctionalSeries> {
        let s = snaps.iter().map(|sn| sn.s).collect();
        let v = snaps.iter().map(|sn| self.eval(sn)).collect::<Result<Vec<_>>>()?;
        FunctionalSeries::new(self.label(), s, v)
    }
}

/// `∫_{s_max}^∞ τ^γ e^{2α(τ - s_max)} dτ` by Gauss-Laguerre in `x = 2|α|(τ - s_max)`.
pub fn tail_kernel(gamma: f64, alpha: f64, s_max: f64) -> Result<f64> {
    let lam = -2.0 * alpha;
    if !(lam > 0.0) {
        return Err(Error::InvalidParameter { name: "alpha", reason: format!("{alpha} must be negative") });
    }
    let rule = gauss_laguerre(40, 0.0)?;
    let sum: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * (s_max + x / lam).powf(gamma)).sum();
    Ok(sum / lam)
}

/// Minimal horizon `s_max - s` for the tail of a time-integrated functional, `5/(2|α|)`.
pub fn required_horizon(e: &Exponents) -> f64 {
    2.5 / e.alpha().abs()
}

fn check_coverage(name: &str, e: &Exponents, s: &[f64]) -> Result<()> {
    let need = required_horizon(e);
    let have = s.last().copied().unwrap_or(0.0) - s.first().copied().unwrap_or(0.0);
    if s.len() < 2 || have < need {
        return Err(Error::InsufficientCoverage { name: name.to_string(), have, need });
    }
    Ok(())
}

/// `F_k(s) = s^{k/18} F₀(s) + (k/18) ∫_s^∞ τ^{(k-18)/18} F₀(τ) dτ` for `k ≥ 1` (and `F₀` itself
/// for `k = 0`), from a sampled `F₀` series. The integral is truncated at the last sample and the
/// remainder bound `|F₀(s_max)| ∫_{s_max}^∞ τ^{(k-18)/18} e^{2α(τ-s_max)} dτ` is added and recorded.
pub fn f_family(f0: &FunctionalSeries, e: &Exponents, k: u32) -> Result<FunctionalSeries> {
    let s = f0.s().to_vec();
    let name = format!("F{k}");
    if k == 0 {
        return FunctionalSeries::new(name, s, f0.values().to_vec());
    }
    check_coverage(&name, e, &s)?;
    if s[0] <= 0.0 {
        return Err(Error::InvalidParameter { name: "s", reason: "the F_k family needs s > 0".into() });
    }
    let kf = k as f64 / 18.0;
    let gamma = kf - 1.0;
    let integrand: Vec<f64> = s.iter().zip(f0.values()).map(|(t, v)| t.powf(gamma) * v).collect();
    let tail = cumulative_tail(&s, &integrand);
    let s_max = *s.last().unwrap_or(&0.0);
    let f_last = *f0.values().last().unwrap_or(&0.0);
    let bound = f_last.abs() * tail_kernel(gamma, e.alpha(), s_max)?;
    let values = s
        .iter()
        .zip(f0.values())
        .zip(&tail)
        .map(|((t, v), tl)| t.powf(kf) * v + kf * (tl + bound))
        .collect();
    Ok(FunctionalSeries::new(name, s, values)?.with_tail(TailMeta { s_max, tail_bound: kf * bound }))
}

/// `𝓤_k(s) = ∫_s^∞ τ^{(k-1)/18 - 17/18} e^{2ατ} ∫(w²ρ + |w|^{p+1}ρ/(1-|y|²)) dy dτ` for `k ≥ 1`.
pub fn u_family(snaps: &[SimilaritySnapshot], k: u32, eps0: f64) -> Result<FunctionalSeries> {
    let e = *first(snaps)?.exponents();
    let s: Vec<f64> = snaps.iter().map(|sn| sn.s).collect();
    let name = format!("U{k}");
    check_coverage(&name, &e, &s)?;
    let gamma = (k as f64 - 1.0) / 18.0 - 17.0 / 18.0;
    let dens = snaps
        .iter()
        .map(|sn| Ok(bulk(sn, Integrand::W2, eps0)? + bulk(sn, Integrand::Wp1, eps0 - 1.0)?))
        .collect::<Result<Vec<_>>>()?;
    let integrand: Vec<f64> =
        s.iter().zip(&dens).map(|(t, d)| t.powf(gamma) * (2.0 * e.alpha() * t).exp() * d).collect();
    let tail = cumulative_tail(&s, &integrand);
    let s_max = *s.last().unwrap_or(&0.0);
    let bound = dens.last().copied().unwrap_or(0.0).abs()
        * (2.0 * e.alpha() * s_max).exp()
        * tail_kernel(gamma, e.alpha(), s_max)?;
    let values = tail.iter().map(|t| t + bound).collect();
    Ok(FunctionalSeries::new(name, s, values)?.with_tail(TailMeta { s_max, tail_bound: bound }))
}

/// `𝓕_k(s) = s^{(k-1)/18 - 17/18} e^{2αs} 𝓜(s) + σ_k 𝓤_k(s)` for `k ≥ 1`.
pub fn cal_f_family(snaps: &[SimilaritySnapshot], k: u32, sigma: f64, eps0: f64) -> Result<FunctionalSeries> {
    let u = u_family(snaps, k, eps0)?;
    let e = *first(snaps)?.exponents();
    let gamma = (k as f64 - 1.0) / 18.0 - 17.0 / 18.0;
    let values = snaps
        .iter()
        .zip(u.values())
        .map(|(sn, uv)| Ok(sn.s.powf(gamma) * (2.0 * e.alpha() * sn.s).exp() * m_func(sn, eps0)? + sigma * uv))
        .collect::<Result<Vec<_>>>()?;
    let tail = u.tail().map(|t| TailMeta { tail_bound: sigma * t.tail_bound, ..t });
    let mut out = FunctionalSeries::new(format!("calF{k}"), u.s().to_vec(), values)?;
    if let Some(t) = tail {
        out = out.with_tail(t);
    }
    Ok(out)
}

fn first(snaps: &[SimilaritySnapshot]) -> Result<&SimilaritySnapshot> {
    snaps.first().ok_or(Error::InsufficientCoverage { name: "snapshots".into(), have: 0.0, need: 1.0 })
}

/// Physical quantities of the blow-up rate theorem at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremSample {
    /// Similarity time `s = -log(T0 - t)`.
    pub s: f64,
    /// `T0 - t`.
    pub tau: f64,
    /// `|log τ|^q ∫_t^{(t+T0)/2} ∫_{B(x0,T0-t')} (|∇u|² + u_t²) dx dt'`.
    pub cone_integral: f64,
    /// `|log τ|^q (τ/2) ∫_{B(x0,τ)} (|∇u|² - ((x-x0)/τ·∇u)² + u_t² - |u|^{p+1}/(p+1)) dx`.
    pub boundary_energy: f64,
    /// `|log τ|^q τ^{-(p-1)N/(p+3)} ∫_{B(x0,τ)} u² dx`.
    pub scaled_l2: f64,
    /// `τ^{2/(p-1)-N/2}(‖u‖ + τ‖u_t‖ + τ‖∇u‖)` with `L²(B(x0,τ))` norms.
    pub lower_bound: f64,
}

/// Time series of [`TheoremSample`]s with their suprema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    /// Log weight exponent `q`.
    pub q: f64,
    /// Samples in increasing `s`.
    pub samples: Vec<TheoremSample>,
    /// Supremum of the cone integral.
    pub sup_cone_integral: f64,
    /// Supremum of the boundary-energy expression.
    pub sup_boundary_energy: f64,
    /// Supremum of the scaled `L²` quantity.
    pub sup_scaled_l2: f64,
    /// Infimum of the lower-bound quantity.
    pub inf_lower_bound: f64,
}

/// Evaluates the theorem quantities on snapshots sampled on a uniform `s`-grid.
///
/// The cone integral over `t' ∈ [t, (t+T0)/2]` equals `∫_s^{s+log 2} e^{2ασ} ∫_B (|∇w|² +
/// (∂_s w + 2w/(p-1) + y·∇w)²) dy dσ`; samples whose window leaves the grid are dropped.
pub fn theorem_quantities(snaps: &[SimilaritySnapshot], q: f64) -> Result<TheoremReport> {
    if !(q >= 0.0) {
        return Err(Error::InvalidParameter { name: "q", reason: format!("{q} must be non-negative") });
    }
    let e = *first(snaps)?.exponents();
    let nf = e.nf();
    let b = e.beta_scale();
    let s: Vec<f64> = snaps.iter().map(|sn| sn.s).collect();
    let cone_dens = snaps
        .iter()
        .map(|sn| {
            Ok((2.0 * e.alpha() * sn.s).exp()
                * (bulk(sn, Integrand::Grad2, 0.0)? + bulk(sn, Integrand::TimeDerivative2, 0.0)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let tail = cumulative_tail(&s, &cone_dens);
    let s_last = *s.last().unwrap_or(&0.0);
    let ln2 = std::f64::consts::LN_2;
    let mut samples = Vec::new();
    for (i, sn) in snaps.iter().enumerate() {
        let tau = (-sn.s).exp();
        let lw = tau.ln().abs().powf(q);
        let cone = if sn.s + ln2 <= s_last + 1e-12 {
            let target = sn.s + ln2;
            let j = s.partition_point(|v| *v < target - 1e-12);
            // Linear interpolation of the tail at s + log 2 between grid points.
            let tail_at = if j == 0 {
                tail[0]
            } else if j >= s.len() {
                tail[s.len() - 1]
            } else {
                let th = (target - s[j - 1]) / (s[j] - s[j - 1]);
                tail[j - 1] + th * (tail[j] - tail[j - 1])
            };
            lw * (tail[i] - tail_at)
        } else {
            f64::NAN
        };
        let ex2a = (2.0 * e.alpha() * sn.s).exp();
        let p1 = e.p() + 1.0;
        let ebound = sn.integrate(0.0, |nv| {
            nv.grad_sq() - nv.ydw() * nv.ydw() + Integrand::TimeDerivative2.eval(nv, &e) - e.pow_p1(nv.w) / p1
        })?;
        let w2 = bulk(sn, Integrand::W2, 0.0)?;
        let scaled = lw * tau.powf(-(e.p() - 1.0) * nf / (e.p() + 3.0) + nf - 2.0 * b) * w2;
        let lower = w2.sqrt() + bulk(sn, Integrand::TimeDerivative2, 0.0)?.sqrt() + bulk(sn, Integrand::Grad2, 0.0)?.sqrt();
        samples.push(TheoremSample {
            s: sn.s,
            tau,
            cone_integral: cone,
            boundary_energy: lw * 0.5 * ex2a * ebound,
            scaled_l2: scaled,
            lower_bound: lower,
        });
    }
    let sup = |f: fn(&TheoremSample) -> f64| samples.iter().map(f).filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let inf_lower = samples.iter().map(|v| v.lower_bound).fold(f64::INFINITY, f64::min);
    Ok(TheoremReport {
        q,
        sup_cone_integral: sup(|v| v.cone_integral),
        sup_boundary_energy: sup(|v| v.boundary_energy),
        sup_scaled_l2: sup(|v| v.scaled_l2),
        inf_lower_bound: inf_lower,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ball_volume, kappa};
    use crate::quadrature::{Angular, RuleSet};
    use crate::similarity::ConstantField;
    use std::sync::Arc;

    fn constant_snap(p: f64, n: usize, value: f64, s: f64) -> SimilaritySnapshot {
        let e = Exponents::new(p, n).unwrap();
        let rules = Arc::new(RuleSet::for_functionals(n, 16, Angular::Radial, &[EPS0, 1.0]).unwrap());
        SimilaritySnapshot::sample(&ConstantField(value), e, rules, s, [0.0; 3], 0.0).unwrap()
    }

    #[test]
    fn zero_field_gives_zero() {
        let sn = constant_snap(4.0, 3, 0.0, 1.0);
        for f in [Functional::E0, Functional::F0, Functional::M { eps0: EPS0 }, Functional::IEps { eps: 1.0 }] {
            assert_eq!(f.eval(&sn).unwrap(), 0.0);
        }
        assert_eq!(hardy_ratio(&sn, EPS0).unwrap(), 0.0);
    }

    #[test]
    fn constant_e0_closed_form() {
        let e = Exponents::new(4.0, 3).unwrap();
        let k = kappa(&e);
        let sn = constant_snap(4.0, 3, k, 0.0);
        let want = k * k / 3.0 * ball_volume(3);
        assert!((e0(&sn).unwrap() - want).abs() < 1e-12 * want);
        assert!((want - 1.4977).abs() < 5e-4);
    }

    #[test]
    fn tail_kernel_matches_exponential_integral() {
        // γ = 0: ∫_{s}^∞ e^{2α(τ-s)} dτ = 1/(2|α|).
        let v = tail_kernel(0.0, -0.25, 3.0).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }
}
