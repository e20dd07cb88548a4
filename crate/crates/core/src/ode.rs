//! Exact and integrated blow-up solutions of `u'' = |u|^{p-1} u`, and the blow-up time fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{kappa, Exponents};
use crate::numerics::{golden_section, linear_fit};

/// Exact blow-up branch `u = κ (T-t)^{-2/(p-1)}` and its time derivative.
pub fn ode_exact(e: &Exponents, t_blowup: f64, t: f64) -> Result<(f64, f64)> {
    if !(t < t_blowup) {
        return Err(Error::PastBlowup { t, t_blowup });
    }
    let tau = t_blowup - t;
    let b = e.beta_scale();
    let u = kappa(e) * tau.powf(-b);
    Ok((u, b * u / tau))
}

/// Remaining time to blow-up implied by an amplitude on the exact branch,
/// `(κ/|u|)^{(p-1)/2}`.
pub fn time_to_blowup_estimate(e: &Exponents, amplitude: f64) -> f64 {
    (kappa(e) / amplitude.abs()).powf(0.5 * (e.p() - 1.0))
}

/// Outcome of an ODE integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OdeStatus {
    /// `|u|` reached the cap.
    Blowup,
    /// The step budget ran out first.
    NoBlowup,
}

/// Samples `(t, u, u')` of an ODE solution.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    /// Nonlinearity power.
    pub p: f64,
    /// Known blow-up time (exact branches) or `None`.
    pub t_blowup: Option<f64>,
    /// Samples in increasing time.
    pub samples: Vec<(f64, f64, f64)>,
    /// How the integration ended.
    pub status: OdeStatus,
}

impl OdeTrajectory {
    /// Samples of the exact branch at the given times.
    pub fn exact(e: &Exponents, t_blowup: f64, times: &[f64]) -> Result<Self> {
        let samples = times
            .iter()
            .map(|&t| ode_exact(e, t_blowup, t).map(|(u, ut)| (t, u, ut)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { p: e.p(), t_blowup: Some(t_blowup), samples, status: OdeStatus::Blowup })
    }

    /// `(t, u)` pairs.
    pub fn amplitude_series(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|&(t, u, _)| (t, u)).collect()
    }
}

/// Settings for [`ode_integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSettings {
    /// Base time step.
    pub dt: f64,
    /// Amplitude that ends the run.
    pub u_cap: f64,
    /// Step budget.
    pub max_steps: usize,
    /// Minimum number of steps per e-fold of the estimated time to blow-up.
    pub steps_per_efold: f64,
}

impl OdeSettings {
    /// Defaults with the given base step and cap.
    pub fn new(dt: f64, u_cap: f64) -> Self {
        Self { dt, u_cap, max_steps: 2_000_000, steps_per_efold: 100.0 }
    }
}

/// RK4 integration of `u'' = |u|^{p-1} u` from `(u0, u1)` at `t = 0` until `|u| ≥ u_cap`.
///
/// The step is `min(dt, τ/steps_per_efold)` with `τ` the time to blow-up implied by the
/// current amplitude, so the run resolves the singular approach at a fixed number of steps
/// per e-fold of `T - t`.
pub fn ode_integrate(u0: f64, u1: f64, e: &Exponents, settings: OdeSettings) -> Result<OdeTrajectory> {
    if !(settings.dt > 0.0) {
        return Err(Error::InvalidParameter { name: "dt", reason: format!("{} must be positive", settings.dt) });
    }
    if !(settings.u_cap > u0.abs().max(1.0)) {
        return Err(Error::InvalidParameter { name: "u_cap", reason: format!("{} must exceed max(|u0|, 1)", settings.u_cap) });
    }
    let f = |u: f64| e.nonlinearity(u);
    let (mut t, mut u, mut v) = (0.0, u0, u1);
    let mut samples = vec![(t, u, v)];
    for _ in 0..settings.max_steps {
        let tau = if u == 0.0 { f64::INFINITY } else { time_to_blowup_estimate(e, u) };
        let h = settings.dt.min(tau / settings.steps_per_efold);
        let (k1u, k1v) = (v, f(u));
        let (k2u, k2v) = (v + 0.5 * h * k1v, f(u + 0.5 * h * k1u));
        let (k3u, k3v) = (v + 0.5 * h * k2v, f(u + 0.5 * h * k2u));
        let (k4u, k4v) = (v + h * k3v, f(u + h * k3u));
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        t += h;
        if !(u.is_finite() && v.is_finite()) {
            return Err(Error::Overflow { t });
        }
        samples.push((t, u, v));
        if u.abs() >= settings.u_cap {
            return Ok(OdeTrajectory { p: e.p(), t_blowup: None, samples, status: OdeStatus::Blowup });
        }
    }
    Ok(OdeTrajectory { p: e.p(), t_blowup: None, samples, status: OdeStatus::NoBlowup })
}

/// Result of the blow-up fit `log|u| ≈ c + b log(T - t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    /// Estimated blow-up time.
    pub t_est: f64,
    /// Estimated `T - t_last`, where `t_last` is the last sample used; kept separately because
    /// it can lie below the resolution of `t_est` itself.
    pub gap_est: f64,
    /// Fitted exponent `b`, expected to be `-2/(p-1)`.
    pub exponent_est: f64,
    /// Coefficient of determination of the inner linear fit.
    pub r2: f64,
    /// Number of samples used.
    pub n_samples: usize,
}

/// Fits `T` and the rate exponent from `(t, u)` samples whose amplitude lies in
/// `[threshold, ∞)`.
pub fn fit_blowup(series: &[(f64, f64)], threshold: f64) -> Result<BlowupFit> {
    let t_last = series.last().map_or(0.0, |s| s.0);
    let gaps: Vec<f64> = series.iter().map(|&(t, _)| t_last - t).collect();
    let amps: Vec<f64> = series.iter().map(|&(_, u)| u).collect();
    fit_blowup_gaps(t_last, &gaps, &amps, threshold)
}

/// Fit on samples given as `gap_i = t_last - t_i` (non-increasing, ending at 0) and amplitudes.
///
/// `T` enters nonlinearly: an outer golden-section search over `log(T - t_last)` minimises the
/// residual of the inner linear least-squares fit of `log|u|` against `log(T - t)`.
pub fn fit_blowup_gaps(t_last: f64, gaps: &[f64], amps: &[f64], threshold: f64) -> Result<BlowupFit> {
    let pts: Vec<(f64, f64)> =
        gaps.iter().zip(amps).filter(|&(_, u)| u.abs() >= threshold && u.is_finite()).map(|(&g, &u)| (g, u)).collect();
    if pts.len() < 8 {
        return Err(Error::FitFailed(format!("{} samples above |u| = {threshold}, need at least 8", pts.len())));
    }
    if pts.windows(2).any(|w| !(w[1].0 < w[0].0) || !(w[1].1.abs() > w[0].1.abs())) {
        return Err(Error::FitFailed("amplitude tail is not strictly increasing".into()));
    }
    let g_last = pts[pts.len() - 1].0;
    let span = pts[0].0 - g_last;
    let logu: Vec<f64> = pts.iter().map(|&(_, u)| u.abs().ln()).collect();
    let ssr = |z: f64| -> f64 {
        let extra = z.exp();
        let x: Vec<f64> = pts.iter().map(|&(g, _)| (g - g_last + extra).ln()).collect();
        let r = linear_fit(&x, &logu).2;
        if r.is_finite() {
            r
        } else {
            f64::INFINITY
        }
    };
    let (lo, hi) = ((span * 1e-13).ln(), (span * 1e2).ln());
    // Coarse scan guards the golden search against a poor bracket.
    let n_scan = 200;
    let zs: Vec<f64> = (0..=n_scan).map(|i| lo + (hi - lo) * i as f64 / n_scan as f64).collect();
    let vals: Vec<f64> = zs.iter().map(|&z| ssr(z)).collect();
    let imin = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    let a = zs[imin.saturating_sub(1)];
    let b = zs[(imin + 1).min(n_scan)];
    let z = golden_section(ssr, a, b, 1e-13, 400);
    let extra = z.exp();
    let x: Vec<f64> = pts.iter().map(|&(g, _)| (g - g_last + extra).ln()).collect();
    let (_, slope, _, r2) = linear_fit(&x, &logu);
    // Samples after the last one above threshold are not used, so the gap is relative to the
    // final entry of the input.
    let gap_est = extra - g_last;
    Ok(BlowupFit { t_est: t_last + gap_est, gap_est, exponent_est: slope, r2, n_samples: pts.len() })
}
