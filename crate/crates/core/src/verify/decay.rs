//! Decay and boundedness trends of the weighted quantities along a trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{boundary, bulk, e_and_f0, tail_kernel, Integrand};
use crate::model::FunctionalSeries;
use crate::numerics::{cumulative_tail, linear_fit, window_integrals};
use crate::similarity::SimilaritySnapshot;
use crate::verify::monotone::{monitor_monotone, Direction};

/// What the quantity is expected to do as `s → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// Tends to zero.
    Vanishing,
    /// Stays bounded.
    Bounded,
}

/// A named series with its expected behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayQuantity {
    /// Expected behaviour.
    pub claim: Claim,
    /// Sampled values.
    pub series: FunctionalSeries,
}

/// Thresholds of the decay suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    /// Minimal sampled window length in `s`.
    pub min_window: f64,
    /// Largest admissible `final / initial` ratio of a vanishing quantity.
    pub max_ratio: f64,
    /// Monotonicity slack relative to the local value.
    pub slack: f64,
    /// A series whose supremum stays below `floor_rel · max(1, sup ∫w²)` counts as identically zero.
    pub floor_rel: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { min_window: 6.0, max_ratio: 0.1, slack: 1e-6, floor_rel: 1e-8 }
    }
}

/// Verdict for one quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayOutcome {
    /// Quantity name.
    pub name: String,
    /// Expected behaviour.
    pub claim: Claim,
    /// First sampled value.
    pub initial: f64,
    /// Last sampled value.
    pub final_value: f64,
    /// `final / initial` (zero for series below the floor).
    pub ratio: f64,
    /// Exponential rate `d log v / ds` fitted on the last half of the window.
    pub fitted_rate: f64,
    /// Supremum of `|v|` over the window.
    pub sup: f64,
    /// Number of monotonicity violations on the last half.
    pub violations: usize,
    /// Whether the series never rose above the zero floor.
    pub below_floor: bool,
    /// Verdict.
    pub pass: bool,
}

impl DecayOutcome {
    /// One-line human summary.
    pub fn summary(&self) -> String {
        format!(
            "{:<6} {:<14} {:?} initial={:.4e} final={:.4e} ratio={:.3e} rate={:+.4} sup={:.4e} violations={}{}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.claim,
            self.initial,
            self.final_value,
            self.ratio,
            self.fitted_rate,
            self.sup,
            self.violations,
            if self.below_floor { " (identically zero)" } else { "" }
        )
    }
}

/// Outcomes of the whole suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// Thresholds used.
    pub config: DecayConfig,
    /// Absolute zero floor used.
    pub floor: f64,
    /// One outcome per quantity.
    pub outcomes: Vec<DecayOutcome>,
    /// Conjunction of the verdicts.
    pub pass: bool,
}

impl DecayReport {
    /// Outcome by name.
    pub fn get(&self, name: &str) -> Option<&DecayOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }
}

fn series_of(snaps: &[SimilaritySnapshot], f: impl Fn(&SimilaritySnapshot) -> Result<f64>) -> Result<Vec<f64>> {
    snaps.iter().map(f).collect()
}

/// `∫_{s_i}^{s_i+1} f`, for the samples whose window stays inside the grid.
fn unit_window(s: &[f64], f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    window_integrals(s, f, 0.0, 1.0).into_iter().map(|(i, v)| (s[i], v)).unzip()
}

/// The quantities of the suite for ladder levels `k = 0..=k_max`, on snapshots sampled on a
/// uniform `s`-grid with `s > 0`.
pub fn decay_bundle(snaps: &[SimilaritySnapshot], k_max: u32) -> Result<Vec<DecayQuantity>> {
    let first = snaps.first().ok_or(Error::InsufficientCoverage { name: "decay suite".into(), have: 0.0, need: 1.0 })?;
    let e = *first.exponents();
    let (p, a) = (e.p(), e.alpha());
    let s: Vec<f64> = snaps.iter().map(|sn| sn.s).collect();
    let s_max = *s.last().unwrap_or(&0.0);
    let ex = |t: f64, rate: f64| (rate * t).exp();
    let w2 = series_of(snaps, |sn| bulk(sn, Integrand::W2, 0.0))?;
    let wp1 = series_of(snaps, |sn| bulk(sn, Integrand::Wp1, 0.0))?;
    let whalf = series_of(snaps, |sn| bulk(sn, Integrand::WHalfP3, 0.0))?;
    let grad2 = series_of(snaps, |sn| bulk(sn, Integrand::Grad2, 0.0))?;
    let ws2 = series_of(snaps, |sn| bulk(sn, Integrand::Ws2, 0.0))?;
    let bnd = series_of(snaps, |sn| boundary(sn, Integrand::WsPlusAlphaW2))?;
    let f0 = series_of(snaps, |sn| Ok(e_and_f0(sn)?.1))?;
    let r8 = 8.0 * a / (p + 3.0);

    let mut out = Vec::new();
    let mut push = |claim, name: String, ss: Vec<f64>, vs: Vec<f64>| -> Result<()> {
        out.push(DecayQuantity { claim, series: FunctionalSeries::new(name, ss, vs)? });
        Ok(())
    };
    let map = |g: &dyn Fn(usize) -> f64| (0..s.len()).map(g).collect::<Vec<f64>>();

    push(Claim::Vanishing, "cor3".into(), s.clone(), map(&|i| ex(s[i], r8) * w2[i]))?;
    push(Claim::Bounded, "cor3_bounded".into(), s.clone(), map(&|i| ex(s[i], r8) * w2[i]))?;

    // ∫_s^∞ e^{2ατ}∫|w|^{p+1}, with the remainder beyond the last sample bounded by the kernel.
    let dens = map(&|i| ex(s[i], 2.0 * a) * wp1[i]);
    let rem = wp1.last().copied().unwrap_or(0.0).abs() * ex(s_max, 2.0 * a) * tail_kernel(0.0, a, s_max)?;
    let tail = cumulative_tail(&s, &dens);
    push(Claim::Vanishing, "F0_tail".into(), s.clone(), tail.iter().map(|t| t + rem).collect())?;

    let dyn_dens = map(&|i| ws2[i] + grad2[i]);
    let (sw, win) = unit_window(&s, &dyn_dens);
    push(Claim::Vanishing, "FF1".into(), sw.clone(), sw.iter().zip(&win).map(|(t, v)| ex(*t, 2.0 * a) * v).collect())?;
    let (_, win_ws) = unit_window(&s, &ws2);
    push(
        Claim::Vanishing,
        "corcor".into(),
        sw.clone(),
        sw.iter().zip(&win_ws).map(|(t, v)| t.powf(1.0 / 18.0) * ex(*t, 2.0 * a) * v).collect(),
    )?;
    let (_, win_g) = unit_window(&s, &grad2);

    for k in 0..=k_max {
        let kf = k as f64;
        let lw = (kf + 1.0) / 18.0;
        let sfx = if k == 0 { String::new() } else { format!("_k{k}") };
        push(Claim::Vanishing, format!("cor2{sfx}"), s.clone(), map(&|i| s[i].powf(lw) * ex(s[i], 2.0 * a) * whalf[i]))?;
        let lb = (2.0 * kf + 2.0) / (9.0 * (p + 3.0));
        push(Claim::Vanishing, format!("cor3bis{sfx}"), s.clone(), map(&|i| s[i].powf(lb) * ex(s[i], r8) * w2[i]))?;
        push(
            Claim::Vanishing,
            format!("grad_window{sfx}"),
            sw.clone(),
            sw.iter().zip(&win_g).map(|(t, v)| t.powf(lw) * ex(*t, 2.0 * a) * v).collect(),
        )?;
        push(Claim::Vanishing, format!("F0_ladder{sfx}"), s.clone(), map(&|i| s[i].powf(lw) * f0[i]))?;
        push(
            Claim::Vanishing,
            format!("A{k}"),
            sw.clone(),
            sw.iter().zip(&win).map(|(t, v)| t.powf(kf / 18.0) * ex(*t, 2.0 * a) * v).collect(),
        )?;
    }

    // Bounded tails: ∫_s^∞ s^{1/18}e^{2ατ}(…) and the cumulative ∫_{s_0}^{s} τ^{-17/18}e^{2ατ}(…).
    let dens2 = map(&|i| s[i].powf(1.0 / 18.0) * ex(s[i], 2.0 * a) * wp1[i]);
    push(Claim::Bounded, "F2_tail".into(), s.clone(), cumulative_tail(&s, &dens2))?;
    let dens3 = map(&|i| s[i].powf(1.0 / 18.0) * ex(s[i], 2.0 * a) * bnd[i]);
    push(Claim::Bounded, "F3_tail".into(), s.clone(), cumulative_tail(&s, &dens3))?;
    let dens4 = map(&|i| s[i].powf(-17.0 / 18.0) * ex(s[i], 2.0 * a) * dyn_dens[i]);
    let t4 = cumulative_tail(&s, &dens4);
    let total = t4.first().copied().unwrap_or(0.0);
    push(Claim::Bounded, "imp1".into(), s.clone(), t4.iter().map(|t| total - t).collect())?;
    Ok(out)
}

/// Checks every quantity of `bundle`: vanishing ones must be nonincreasing on the last half of
/// their window and end below `max_ratio` times their first value (or stay below the zero
/// floor throughout); bounded ones must have a finite supremum.
pub fn check_decay_suite(bundle: &[DecayQuantity], w2_scale: f64, cfg: DecayConfig) -> Result<DecayReport> {
    let floor = cfg.floor_rel * w2_scale.max(1.0);
    let mut outcomes = Vec::with_capacity(bundle.len());
    for q in bundle {
        let s = q.series.s();
        let v = q.series.values();
        let span = s.last().copied().unwrap_or(0.0) - s.first().copied().unwrap_or(0.0);
        if v.len() < 3 || span < cfg.min_window - 1.0 - 1e-9 {
            return Err(Error::InsufficientCoverage { name: q.series.name().to_string(), have: span, need: cfg.min_window });
        }
        let sup = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let initial = v[0];
        let final_value = v[v.len() - 1];
        let mid = 0.5 * (s[0] + s[s.len() - 1]);
        let below_floor = sup < floor;
        let half: Vec<(f64, f64)> = s.iter().zip(v).filter(|(t, x)| **t >= mid && **x > 0.0).map(|(t, x)| (*t, x.ln())).collect();
        let fitted_rate = if half.len() >= 2 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = half.into_iter().unzip();
            linear_fit(&xs, &ys).1
        } else {
            f64::NAN
        };
        let (ratio, violations, pass) = match q.claim {
            Claim::Vanishing if below_floor => (0.0, 0, true),
            Claim::Vanishing => {
                let violations = monitor_monotone(&q.series, Direction::Nonincreasing, cfg.slack, mid).len();
                let ratio = final_value / initial;
                (ratio, violations, violations == 0 && initial > 0.0 && ratio.abs() <= cfg.max_ratio)
            }
            Claim::Bounded => (final_value / initial, 0, sup.is_finite()),
        };
        outcomes.push(DecayOutcome {
            name: q.series.name().to_string(),
            claim: q.claim,
            initial,
            final_value,
            ratio,
            fitted_rate,
            sup,
            violations,
            below_floor,
            pass,
        });
    }
    let pass = outcomes.iter().all(|o| o.pass);
    Ok(DecayReport { config: cfg, floor, outcomes, pass })
}

/// `sup_s ∫_B w²` over the snapshots, the scale of the zero floor.
pub fn w2_scale(snaps: &[SimilaritySnapshot]) -> Result<f64> {
    snaps.iter().try_fold(0.0_f64, |m, sn| Ok(m.max(bulk(sn, Integrand::W2, 0.0)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{kappa, Exponents};
    use crate::numerics::uniform_grid;
    use crate::quadrature::{Angular, RuleSet};
    use crate::similarity::ConstantField;
    use std::sync::Arc;

    fn constant_snaps(value: f64) -> Vec<SimilaritySnapshot> {
        let e = Exponents::new(4.0, 3).unwrap();
        let rules = Arc::new(RuleSet::for_functionals(3, 8, Angular::Radial, &[0.6]).unwrap());
        let field = ConstantField(if value.is_nan() { kappa(&e) } else { value });
        uniform_grid(1.0, 8.0, 0.05)
            .into_iter()
            .map(|s| SimilaritySnapshot::sample(&field, e, rules.clone(), s, [0.0; 3], 0.0).unwrap())
            .collect()
    }

    #[test]
    fn zero_trajectory_reads_zero() {
        let snaps = constant_snaps(0.0);
        let bundle = decay_bundle(&snaps, 2).unwrap();
        for q in &bundle {
            assert!(q.series.values().iter().all(|v| *v == 0.0), "{}", q.series.name());
        }
        let rep = check_decay_suite(&bundle, 0.0, DecayConfig::default()).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn constant_solution_rate_is_exact() {
        let snaps = constant_snaps(f64::NAN);
        let e = *snaps[0].exponents();
        let bundle = decay_bundle(&snaps, 2).unwrap();
        let rep = check_decay_suite(&bundle, w2_scale(&snaps).unwrap(), DecayConfig::default()).unwrap();
        let expect = 8.0 * e.alpha() / (e.p() + 3.0);
        let cor3 = rep.get("cor3").unwrap();
        assert!((cor3.fitted_rate - expect).abs() < 1e-10 * expect.abs());
        assert!(rep.get("FF1").unwrap().below_floor);
        for o in &rep.outcomes {
            assert!(o.pass, "{}", o.summary());
        }
    }

    #[test]
    fn short_window_is_rejected() {
        let snaps = constant_snaps(1.0);
        let bundle = decay_bundle(&snaps[..40], 0).unwrap();
        assert!(check_decay_suite(&bundle, 1.0, DecayConfig::default()).is_err());
    }
}
