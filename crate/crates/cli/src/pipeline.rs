//! The experiment stages shared by the commands: simulation, resampling in similarity
//! variables, functional series and the verification suites.

use std::sync::Arc;

use blowup_core::functionals::{cal_f_family, f_family, required_horizon, theorem_quantities, u_family, Functional, TheoremReport, EPS0};
use blowup_core::model::{FunctionalSeries, TailMeta};
use blowup_core::numerics::linear_fit;
use blowup_core::quadrature::{Angular, RuleSet};
use blowup_core::similarity::{trajectory_to_w, SimilaritySnapshot};
use blowup_core::solver::{run_until_blowup, Trajectory};
use blowup_core::verify::decay::{check_decay_suite, decay_bundle, w2_scale, DecayConfig, DecayReport};
use blowup_core::verify::identities::random_identity_suite;
use blowup_core::verify::lemmas::{lemma_refinement_study, LemmaKind, RefinementStudy};
use blowup_core::verify::monotone::{monitor_monotone, negative_samples, Direction, Violation};
use blowup_core::verify::IdentityReport;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Runs the physical solver.
pub fn simulate(cfg: &RunConfig) -> Result<Trajectory> {
    Ok(run_until_blowup(&cfg.solver_config()?)?)
}

/// Cone vertex time: the configured `t0`, else the fitted blow-up time.
pub fn vertex_time(cfg: &RunConfig, traj: &Trajectory) -> Result<f64> {
    match cfg.similarity.t0 {
        Some(t0) => Ok(t0),
        None => traj.require_t_est().map_err(|e| CliError::NoBlowup(e.to_string())),
    }
}

/// Quadrature rules covering the configured weight exponents and `ε₀`.
pub fn rules(cfg: &RunConfig) -> Result<Arc<RuleSet>> {
    let mut eps = cfg.functionals.eps.clone();
    if !eps.iter().any(|e| (e - EPS0).abs() < 1e-12) {
        eps.push(EPS0);
    }
    let sim = &cfg.similarity;
    let angular = Angular::from_count(cfg.model.n, sim.n_angular)?;
    Ok(Arc::new(RuleSet::for_functionals(cfg.model.n, sim.n_radial, angular, &eps)?))
}

/// The multiples `k·ds` inside `[lo, hi]`.
pub fn s_grid(ds: f64, lo: f64, hi: f64) -> Vec<f64> {
    let k0 = (lo / ds - 1e-9).ceil() as i64;
    let k1 = (hi / ds + 1e-9).floor() as i64;
    (k0..=k1).map(|k| k as f64 * ds).collect()
}

/// Sampling range in `s`: configured bounds, else the first time whose backward ball fits in
/// the stored data and the last time whose ball still spans `resolved_cells` grid cells.
pub fn s_range(cfg: &RunConfig, traj: &Trajectory, t0: f64) -> Result<(f64, f64)> {
    let sim = &cfg.similarity;
    let first = traj.states.first().ok_or_else(|| CliError::MissingInput("trajectory has no stored states".into()))?;
    let last = traj.states.last().unwrap_or(first);
    let dr = traj.grid.dr();
    let offset = t0 - traj.t_final;
    let x0 = sim.x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let reach = (first.u.len() as f64 - 4.0) * dr - x0;
    let lo_cov = -(offset + first.gap).min(reach).ln();
    let hi_cov = -(offset + last.gap).ln();
    let lo = sim.s_start.unwrap_or(lo_cov + 1e-9);
    let hi = sim.s_end.unwrap_or_else(|| hi_cov.min(-(sim.resolved_cells * dr).ln()));
    if !(hi > lo) {
        return Err(CliError::Usage(format!("empty similarity window [{lo:.4}, {hi:.4}] (covered: [{lo_cov:.4}, {hi_cov:.4}])")));
    }
    Ok((lo, hi))
}

/// Resampled snapshots of one run.
#[derive(Debug, Clone)]
pub struct Resampled {
    /// Cone vertex time.
    pub t0: f64,
    /// Snapshots on the `s`-grid.
    pub snaps: Vec<SimilaritySnapshot>,
}

impl Resampled {
    /// Sample times.
    pub fn s(&self) -> Vec<f64> {
        self.snaps.iter().map(|sn| sn.s).collect()
    }
}

/// Resamples `traj` on the configured `s`-grid.
pub fn resample(cfg: &RunConfig, traj: &Trajectory) -> Result<Resampled> {
    let t0 = vertex_time(cfg, traj)?;
    let (lo, hi) = s_range(cfg, traj, t0)?;
    resample_on(cfg, traj, t0, &s_grid(cfg.similarity.ds, lo, hi))
}

/// Resamples `traj` at the given similarity times.
pub fn resample_on(cfg: &RunConfig, traj: &Trajectory, t0: f64, s: &[f64]) -> Result<Resampled> {
    if s.len() < 3 {
        return Err(CliError::Usage(format!("the similarity window holds only {} samples", s.len())));
    }
    let snaps = trajectory_to_w(traj, cfg.similarity.x0, t0, s, rules(cfg)?)?;
    Ok(Resampled { t0, snaps })
}

/// Functional series selected by the configuration.
#[derive(Debug, Clone)]
pub struct SeriesSet {
    /// Series in output order.
    pub series: Vec<FunctionalSeries>,
    /// Families skipped for lack of coverage, with the reason.
    pub skipped: Vec<(String, String)>,
}

fn eps_dependent(name: &str) -> bool {
    name.ends_with("_eps") || name == "singularLp1"
}

/// Evaluates every configured functional, the `F_k` ladder and, when the sampled window is long
/// enough for their tails, the `𝓤_k` and `𝓕_k` families.
pub fn functional_series(cfg: &RunConfig, snaps: &[SimilaritySnapshot]) -> Result<SeriesSet> {
    let f = &cfg.functionals;
    let mut series = Vec::new();
    for name in &f.names {
        if eps_dependent(name) {
            for &eps in &f.eps {
                series.push(Functional::from_name(name, eps)?.series(snaps)?);
            }
        } else {
            let eps = if name == "M" { EPS0 } else { f.eps.first().copied().unwrap_or(EPS0) };
            series.push(Functional::from_name(name, eps)?.series(snaps)?);
        }
    }
    let e = cfg.exponents()?;
    let f0 = Functional::F0.series(snaps)?;
    let mut skipped = Vec::new();
    for k in 1..=f.k_max {
        match f_family(&f0, &e, k) {
            Ok(v) => series.push(v),
            Err(err) => skipped.push((format!("F{k}"), err.to_string())),
        }
    }
    let span = snaps.last().map_or(0.0, |l| l.s) - snaps.first().map_or(0.0, |f| f.s);
    for k in 1..=f.k_max {
        if span < required_horizon(&e) {
            let why = format!("window {span:.3} shorter than the tail horizon {:.3}", required_horizon(&e));
            skipped.push((format!("U{k}"), why.clone()));
            skipped.push((format!("calF{k}"), why));
            continue;
        }
        series.push(u_family(snaps, k, EPS0)?);
        series.push(cal_f_family(snaps, k, f.sigma_for(k), EPS0)?);
    }
    Ok(SeriesSet { series, skipped })
}

/// Index entry of one written series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    /// Series name.
    pub name: String,
    /// File relative to the run directory.
    pub file: String,
    /// Number of samples.
    pub samples: usize,
    /// Truncation metadata of tail-integrated series.
    pub tail: Option<TailMeta>,
}

/// One monotonicity or sign check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    /// Series name.
    pub name: String,
    /// Expected behaviour.
    pub claim: String,
    /// First sample time considered.
    pub s_from: f64,
    /// Offending steps.
    pub violations: Vec<Violation>,
    /// Offending sample indices of a sign check.
    pub negative: Vec<usize>,
    /// Verdict.
    pub pass: bool,
}

/// The Lyapunov ladder: `F₀` and `s^{k/18}F₀`, `k = 1..=k_max`, nonincreasing after the transient,
/// and `F₀ ≥ -1e-8·max|F₀|` throughout.
pub fn monotone_checks(cfg: &RunConfig, snaps: &[SimilaritySnapshot]) -> Result<Vec<MonotoneCheck>> {
    let f0 = Functional::F0.series(snaps)?;
    let s_from = f0.s().first().copied().unwrap_or(0.0) + cfg.verify.transient;
    let slack = cfg.verify.slack;
    let mut out = Vec::new();
    for k in 0..=cfg.functionals.k_max {
        let kf = k as f64 / 18.0;
        let values = f0.iter().map(|(s, v)| s.powf(kf) * v).collect();
        let name = if k == 0 { "F0".to_string() } else { format!("s^({k}/18)F0") };
        let series = FunctionalSeries::new(name.clone(), f0.s().to_vec(), values)?;
        let violations = monitor_monotone(&series, Direction::Nonincreasing, slack, s_from);
        out.push(MonotoneCheck {
            name,
            claim: "nonincreasing".into(),
            s_from,
            pass: violations.is_empty(),
            violations,
            negative: Vec::new(),
        });
    }
    let s0 = f0.s().first().copied().unwrap_or(0.0);
    let negative = negative_samples(&f0, 1e-8, s0);
    out.push(MonotoneCheck {
        name: "F0".into(),
        claim: "nonnegative".into(),
        s_from: s0,
        violations: Vec::new(),
        pass: negative.is_empty(),
        negative,
    });
    Ok(out)
}

/// The decay suite up to ladder level 2.
pub fn decay_checks(cfg: &RunConfig, snaps: &[SimilaritySnapshot]) -> Result<DecayReport> {
    let bundle = decay_bundle(snaps, 2)?;
    let dc = DecayConfig { max_ratio: cfg.verify.decay_ratio, slack: cfg.verify.slack, ..DecayConfig::default() };
    Ok(check_decay_suite(&bundle, w2_scale(snaps)?, dc)?)
}

/// Both Pohozaev-type integral identities on seeded random test fields for `N ∈ {2, 3}` and every
/// configured `ε`.
pub fn identity_checks(cfg: &RunConfig) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    for (i, n) in [2usize, 3].into_iter().enumerate() {
        for (j, &eps) in cfg.verify.identity_eps.iter().enumerate() {
            let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((10 * i + j) as u64);
            for mut r in random_identity_suite(n, eps, cfg.verify.static_fields, seed)? {
                r.context = format!("N={n} eps={eps} {}", r.context);
                out.push(r);
            }
        }
    }
    Ok(out)
}

/// The configuration of the refined companion run: twice the grid nodes and half the `s`-step.
pub fn refined_config(cfg: &RunConfig) -> RunConfig {
    let mut fine = cfg.clone();
    fine.solver.nr = 2 * cfg.solver.nr - 1;
    fine.similarity.ds = 0.5 * cfg.similarity.ds;
    fine
}

/// Derivative-lemma refinement study on a coarse and a refined run, over the window of length
/// `verify.window` that starts `verify.transient` after the first common sample.
pub fn lemma_checks(cfg: &RunConfig, coarse: &Trajectory, fine: &Trajectory) -> Result<Vec<RefinementStudy>> {
    let fine_cfg = refined_config(cfg);
    let (t0c, t0f) = (vertex_time(cfg, coarse)?, vertex_time(&fine_cfg, fine)?);
    let (lo_c, hi_c) = s_range(cfg, coarse, t0c)?;
    let (lo_f, hi_f) = s_range(&fine_cfg, fine, t0f)?;
    let ds = cfg.similarity.ds;
    let a = s_grid(ds, lo_c.max(lo_f) + cfg.verify.transient, hi_c)
        .first()
        .copied()
        .ok_or_else(|| CliError::Usage("no common similarity window for the refinement study".into()))?;
    let b = a + (cfg.verify.window / ds).round() * ds;
    if b > hi_c.min(hi_f) + 1e-9 {
        return Err(CliError::Usage(format!("lemma window [{a:.4}, {b:.4}] exceeds the sampled range (ends {:.4})", hi_c.min(hi_f))));
    }
    let coarse_s = s_grid(ds, a, b);
    let fine_s = s_grid(0.5 * ds, a, b);
    let levels = vec![
        (resample_on(cfg, coarse, t0c, &coarse_s)?.snaps, ds, format!("nr={} ds={ds}", cfg.solver.nr)),
        (resample_on(&fine_cfg, fine, t0f, &fine_s)?.snaps, 0.5 * ds, format!("nr={} ds={}", fine_cfg.solver.nr, 0.5 * ds)),
    ];
    let e = cfg.exponents()?;
    let window = (coarse_s[0], coarse_s[coarse_s.len() - 1]);
    let mut out = Vec::new();
    for kind in LemmaKind::ALL {
        let per_eps = matches!(kind, LemmaKind::DEEps | LemmaKind::DJEps | LemmaKind::DNEps | LemmaKind::DIEps | LemmaKind::DLEps);
        let eps_list = if per_eps { cfg.functionals.eps.clone() } else { vec![EPS0] };
        for eps in eps_list {
            for mut st in lemma_refinement_study(&[kind], &e, eps, &levels, window, cfg.verify.min_order)? {
                if per_eps {
                    st.name = format!("{} eps={eps}", st.name);
                }
                out.push(st);
            }
        }
    }
    Ok(out)
}

/// Rate-theorem report with the slope verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Sampled quantities.
    pub theorem: TheoremReport,
    /// Expected exponent `4(N/(p+3) - 1/(p-1))` of `τ` in the scaled `L²` quantity.
    pub expected_slope: f64,
    /// Slope of `log(scaled_l2) - q·log|log τ|` against `log τ` on the final half of the window.
    pub fitted_slope: f64,
    /// Coefficient of determination of that fit.
    pub r2: f64,
    /// Relative tolerance of the slope comparison.
    pub slope_tolerance: f64,
    /// Slope verdict.
    pub slope_pass: bool,
    /// Supremum of the cone integral on the first and on the second half of the window.
    pub cone_sup_halves: (f64, f64),
    /// Boundedness verdict: finite, and not growing from the first to the second half.
    pub cone_bounded: bool,
    /// Conjunction of the verdicts.
    pub pass: bool,
}

/// Relative tolerance of the rate slope.
pub const SLOPE_TOL: f64 = 0.1;

/// Evaluates the rate-theorem quantities with log weight `q` and fits the decay exponent.
pub fn rate_report(cfg: &RunConfig, snaps: &[SimilaritySnapshot], q: f64) -> Result<RateReport> {
    let theorem = theorem_quantities(snaps, q)?;
    let e = cfg.exponents()?;
    let (p, nf) = (e.p(), e.nf());
    let expected_slope = 4.0 * (nf / (p + 3.0) - 1.0 / (p - 1.0));
    let samples = &theorem.samples;
    let mid = 0.5 * (samples.first().map_or(0.0, |v| v.s) + samples.last().map_or(0.0, |v| v.s));
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|v| v.s >= mid && v.scaled_l2 > 0.0)
        .map(|v| (v.tau.ln(), v.scaled_l2.ln() - q * v.tau.ln().abs().ln()))
        .unzip();
    let (fitted_slope, r2) = if xs.len() >= 2 {
        let (_, b, _, r2) = linear_fit(&xs, &ys);
        (b, r2)
    } else {
        (f64::NAN, f64::NAN)
    };
    let slope_pass = (fitted_slope - expected_slope).abs() <= SLOPE_TOL * fitted_slope.abs();
    let sup = |it: &mut dyn Iterator<Item = f64>| it.filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let first = sup(&mut samples.iter().filter(|v| v.s < mid).map(|v| v.cone_integral));
    let second = sup(&mut samples.iter().filter(|v| v.s >= mid).map(|v| v.cone_integral));
    let cone_bounded = first.is_finite() && (second <= first || second == f64::NEG_INFINITY);
    Ok(RateReport {
        theorem,
        expected_slope,
        fitted_slope,
        r2,
        slope_tolerance: SLOPE_TOL,
        slope_pass,
        cone_sup_halves: (first, second),
        cone_bounded,
        pass: slope_pass && cone_bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_multiples_are_shared_by_refinement() {
        let coarse = s_grid(0.025, 1.2, 2.2);
        let fine = s_grid(0.0125, 1.2, 2.2);
        assert_eq!(fine.len(), 2 * coarse.len() - 1);
        for (i, s) in coarse.iter().enumerate() {
            assert_eq!(fine[2 * i], *s);
        }
        assert!(coarse[0] >= 1.2 && coarse[0] - 1.2 < 0.025);
    }

    #[test]
    fn grid_includes_exact_endpoints() {
        let g = s_grid(0.25, 1.0, 2.0);
        assert_eq!(g, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
    }
}
