//! Empirical calibration of the unnamed constants of the inequality lemmas, and the checks of
//! those inequalities against the calibrated constants.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{bulk, hardy_ratio, m_bound_density, m_func, singular_lp1, Integrand};
use crate::model::Exponents;
use crate::numerics::window_integrals;
use crate::quadrature::RuleSet;
use crate::similarity::{SimilaritySnapshot, TestField, TestFieldPair};
use crate::verify::lemmas::sigma_terms;
use crate::verify::IdentityReport;

/// Which inequality a constant belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    /// `∫w²ρ_ε/(1-|y|²) ≤ C(∫|∇w|²(1-|y|²)ρ_ε + ∫w²ρ_ε)`.
    Hardy,
    /// Time average of the singular `|w|^{p+1}` integral over a unit window against the energy
    /// density over the enlarged window `[s-2, s+3]`.
    W1,
    /// `|𝓜| ≤ C₃∫((∂_s w)² + |∇w|² + w² + |w|^{p+1})ρ`.
    MBound,
    /// `∫Σ + (1/20)∫∫(∂_s w)²ρ ≤ (4/5)∫∫|∇w|²ρ + C₁∫∫w²ρ` over unit windows.
    Sigma,
}

impl InequalityKind {
    /// All inequalities in a fixed order.
    pub const ALL: [InequalityKind; 4] = [Self::Hardy, Self::W1, Self::MBound, Self::Sigma];

    /// Short name.
    pub fn name(self) -> &'static str {
        match self {
            Self::Hardy => "hardy",
            Self::W1 => "w1",
            Self::MBound => "m_bound",
            Self::Sigma => "sigma",
        }
    }
}

/// One instance of an inequality `lhs ≤ C · rhs` with the constant left open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitySample {
    /// Left side (for [`InequalityKind::Sigma`], already reduced by the `(4/5)∫∫|∇w|²ρ` term).
    pub lhs: f64,
    /// Quantity multiplying the constant.
    pub rhs: f64,
    /// Where the sample came from.
    pub context: String,
}

impl InequalitySample {
    /// `lhs / rhs`, or 0 when `rhs` vanishes and `lhs ≤ 0`, or `+∞` when it vanishes and `lhs > 0`.
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else if self.lhs <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Smallest admissible constant over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Inequality.
    pub kind: InequalityKind,
    /// Dimension.
    pub n: usize,
    /// Nonlinearity exponent.
    pub p: f64,
    /// Weight exponent.
    pub eps: f64,
    /// Maximal observed ratio `lhs / rhs`, possibly negative.
    pub max_ratio: f64,
    /// Smallest admissible non-negative constant, `max(max_ratio, 0)`.
    pub constant: f64,
    /// Number of samples.
    pub samples: usize,
    /// Context of the sample attaining the maximum.
    pub attained_at: String,
    /// Free-form resolution label.
    pub resolution: String,
}

impl Calibration {
    /// Calibrates `kind` from `samples`; fails on an empty set or a sample with `rhs = 0 < lhs`.
    pub fn from_samples(
        kind: InequalityKind,
        e: &Exponents,
        eps: f64,
        samples: &[InequalitySample],
        resolution: &str,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientCoverage { name: format!("{} calibration", kind.name()), have: 0.0, need: 1.0 });
        }
        let mut best = (f64::NEG_INFINITY, String::new());
        for smp in samples {
            let r = smp.ratio();
            if !r.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "calibration",
                    reason: format!("{} sample `{}` has lhs {} > 0 with zero rhs", kind.name(), smp.context, smp.lhs),
                });
            }
            if r > best.0 {
                best = (r, smp.context.clone());
            }
        }
        Ok(Self {
            kind,
            n: e.n(),
            p: e.p(),
            eps,
            max_ratio: best.0,
            constant: best.0.max(0.0),
            samples: samples.len(),
            attained_at: best.1,
            resolution: resolution.to_string(),
        })
    }

    /// Checks `lhs ≤ constant · rhs` on each sample with relative slack `tolerance`.
    pub fn check(&self, samples: &[InequalitySample], tolerance: f64) -> Vec<IdentityReport> {
        samples
            .iter()
            .map(|smp| IdentityReport::inequality(self.kind.name(), smp.lhs, self.constant * smp.rhs, tolerance, smp.context.clone()))
            .collect()
    }

    /// `|r_a - r_b| ≤ rel · max(|r_a|, |r_b|)` for the maximal ratios of the same inequality
    /// calibrated at two resolutions.
    pub fn stability(&self, other: &Calibration, rel: f64) -> IdentityReport {
        IdentityReport::equality(
            format!("{}_stability", self.kind.name()),
            self.max_ratio,
            other.max_ratio,
            rel,
            format!("{} vs {}", self.resolution, other.resolution),
        )
    }
}

/// The persisted set of calibrated constants.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    /// Entries in insertion order.
    pub entries: Vec<Calibration>,
}

impl CalibrationSet {
    /// Entry for `(kind, resolution)` if present.
    pub fn get(&self, kind: InequalityKind, resolution: &str) -> Option<&Calibration> {
        self.entries.iter().find(|c| c.kind == kind && c.resolution == resolution)
    }

    /// Writes pretty JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        let fail = |reason: String| Error::Persist { path: path.display().to_string(), reason };
        let text = serde_json::to_string_pretty(self).map_err(|e| fail(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| fail(e.to_string()))
    }

    /// Reads a file written by [`CalibrationSet::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let fail = |reason: String| Error::Persist { path: path.display().to_string(), reason };
        let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| fail(e.to_string()))
    }
}

fn ctx(label: &str, s: f64) -> String {
    format!("{label} s={s:.4}")
}

/// Hardy samples, one per snapshot.
pub fn hardy_samples(snaps: &[SimilaritySnapshot], eps: f64, label: &str) -> Result<Vec<InequalitySample>> {
    snaps
        .iter()
        .map(|sn| {
            let lhs = bulk(sn, Integrand::W2, eps - 1.0)?;
            let rhs = bulk(sn, Integrand::Grad2Om, eps)? + bulk(sn, Integrand::W2, eps)?;
            Ok(InequalitySample { lhs, rhs, context: ctx(label, sn.s) })
        })
        .collect()
}

/// Hardy samples on the closed-form family `(1-|y|²)^a`, `a ∈ {1/2, 1, 2}`.
pub fn hardy_family(e: Exponents, eps: f64, rules: std::sync::Arc<RuleSet>) -> Result<Vec<InequalitySample>> {
    [0.5, 1.0, 2.0]
        .iter()
        .map(|&a| {
            let w = TestField::new(e.n(), a, crate::similarity::Poly::constant(1.0), None)?;
            let snap = SimilaritySnapshot::sample(&TestFieldPair { w, ws: None }, e, rules.clone(), 0.0, [0.0; 3], 0.0)?;
            let r = hardy_ratio(&snap, eps)?;
            Ok(InequalitySample { lhs: r, rhs: 1.0, context: format!("(1-|y|^2)^{a}") })
        })
        .collect()
}

/// Samples of the singular `|w|^{p+1}` bound: `∫_s^{s+1} singular` against
/// `∫_{s-2}^{s+3}∫(|∇w|² + (∂_s w)² + w² + |w|^{p+1})ρ_ε`, for every sample `s` whose enlarged
/// window is covered.
pub fn w1_samples(snaps: &[SimilaritySnapshot], eps: f64, label: &str) -> Result<Vec<InequalitySample>> {
    let s: Vec<f64> = snaps.iter().map(|sn| sn.s).collect();
    let sing = snaps.iter().map(|sn| singular_lp1(sn, eps)).collect::<Result<Vec<_>>>()?;
    let dens = snaps.iter().map(|sn| m_bound_density(sn, eps)).collect::<Result<Vec<_>>>()?;
    let num = window_integrals(&s, &sing, 0.0, 1.0);
    let den = window_integrals(&s, &dens, -2.0, 3.0);
    Ok(den
        .into_iter()
        .filter_map(|(i, d)| num.iter().find(|(j, _)| *j == i).map(|(_, n)| InequalitySample { lhs: *n, rhs: d, context: ctx(label, s[i]) }))
        .collect())
}

/// Samples of the `|𝓜|` bound, one per snapshot.
pub fn m_bound_samples(snaps: &[SimilaritySnapshot], eps0: f64, label: &str) -> Result<Vec<InequalitySample>> {
    snaps
        .iter()
        .map(|sn| Ok(InequalitySample { lhs: m_func(sn, eps0)?.abs(), rhs: m_bound_density(sn, eps0)?, context: ctx(label, sn.s) }))
        .collect()
}

/// Time densities of the three parts of the Σ inequality at one snapshot:
/// `(Σ + (1/20)∫(∂_s w)²ρ - (4/5)∫|∇w|²ρ, ∫w²ρ)`.
fn sigma_density(sn: &SimilaritySnapshot, eps0: f64) -> Result<(f64, f64)> {
    let e = *sn.exponents();
    let mut sigma = 0.0;
    for t in sigma_terms(&e, eps0) {
        sigma += t.eval(sn)?;
    }
    let lhs = sigma + bulk(sn, Integrand::Ws2, eps0)? / 20.0 - 0.8 * bulk(sn, Integrand::Grad2, eps0)?;
    Ok((lhs, bulk(sn, Integrand::W2, eps0)?))
}

/// Σ samples over the unit windows `[s, s+1]` covered by the snapshots.
pub fn sigma_samples(snaps: &[SimilaritySnapshot], eps0: f64, label: &str) -> Result<Vec<InequalitySample>> {
    let s: Vec<f64> = snaps.iter().map(|sn| sn.s).collect();
    let (l, r): (Vec<f64>, Vec<f64>) = snaps.iter().map(|sn| sigma_density(sn, eps0)).collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let li = window_integrals(&s, &l, 0.0, 1.0);
    let ri = window_integrals(&s, &r, 0.0, 1.0);
    Ok(li.into_iter().zip(ri).map(|((i, a), (_, b))| InequalitySample { lhs: a, rhs: b, context: ctx(label, s[i]) }).collect())
}

/// The Σ inequality over `window` with constant `c1`: the left side is
/// `∫Σ + (1/20)∫∫(∂_s w)²ρ`, the right side `(4/5)∫∫|∇w|²ρ + C₁∫∫w²ρ`.
pub fn check_sigma_bound(snaps: &[SimilaritySnapshot], window: (f64, f64), c1: f64, eps0: f64, tolerance: f64) -> Result<IdentityReport> {
    let s: Vec<f64> = snaps.iter().map(|sn| sn.s).collect();
    let lo = s.first().copied().unwrap_or(f64::NAN);
    let hi = s.last().copied().unwrap_or(f64::NAN);
    if !(window.0 >= lo - 1e-9 && window.1 <= hi + 1e-9 && window.1 > window.0) {
        return Err(Error::OutOfCoverage { what: "window", value: if window.0 < lo { window.0 } else { window.1 }, lo, hi });
    }
    let mut lhs_d = Vec::with_capacity(s.len());
    let mut grad_d = Vec::with_capacity(s.len());
    let mut w2_d = Vec::with_capacity(s.len());
    for sn in snaps {
        let e = *sn.exponents();
        let mut sigma = 0.0;
        for t in sigma_terms(&e, eps0) {
            sigma += t.eval(sn)?;
        }
        lhs_d.push(sigma + bulk(sn, Integrand::Ws2, eps0)? / 20.0);
        grad_d.push(bulk(sn, Integrand::Grad2, eps0)?);
        w2_d.push(bulk(sn, Integrand::W2, eps0)?);
    }
    let i0 = s.partition_point(|v| *v < window.0 - 1e-9);
    let len = window.1 - window.0;
    let pick = |f: &[f64]| window_integrals(&s, f, 0.0, len).into_iter().find(|(i, _)| *i == i0).map(|(_, v)| v).unwrap_or(f64::NAN);
    let lhs = pick(&lhs_d);
    let rhs = 0.8 * pick(&grad_d) + c1 * pick(&w2_d);
    Ok(IdentityReport::inequality("sigma", lhs, rhs, tolerance, format!("[{:.4}, {:.4}] C1={c1:.6}", window.0, window.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::kappa;
    use crate::numerics::uniform_grid;
    use crate::quadrature::Angular;
    use crate::similarity::ConstantField;
    use crate::verify::lemmas::Quantity;
    use std::sync::Arc;

    fn snaps(value: f64) -> Vec<SimilaritySnapshot> {
        let e = Exponents::new(4.0, 3).unwrap();
        let rules = Arc::new(RuleSet::for_functionals(3, 8, Angular::Radial, &[0.6]).unwrap());
        uniform_grid(1.0, 4.0, 0.05)
            .into_iter()
            .map(|s| SimilaritySnapshot::sample(&ConstantField(value), e, rules.clone(), s, [0.0; 3], 0.0).unwrap())
            .collect()
    }

    #[test]
    fn zero_series_sigma_reads_zero() {
        let r = check_sigma_bound(&snaps(0.0), (1.0, 2.0), 1.0, 0.6, 0.0).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.pass);
    }

    #[test]
    fn constant_solution_sigma_margin_closed_form() {
        let e = Exponents::new(4.0, 3).unwrap();
        let k = kappa(&e);
        let sn = snaps(k);
        // On a constant field only the w², |y|²w² and |w|^{p+1} parts of Σ survive.
        let mut per_unit = 0.0;
        for t in sigma_terms(&e, 0.6) {
            if let Quantity::Bulk(g, beta) = t.quantity {
                let unit = match g {
                    Integrand::W2 => k * k * crate::quadrature::BallQuadrature::new(3, beta, 8, Angular::Radial).unwrap().integrate(|_| 1.0).unwrap(),
                    Integrand::W2R2 => k * k * crate::quadrature::BallQuadrature::new(3, beta, 8, Angular::Radial).unwrap().integrate(|y| y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).unwrap(),
                    Integrand::Wp1 => k.powi(5) * crate::quadrature::BallQuadrature::new(3, beta, 8, Angular::Radial).unwrap().integrate(|_| 1.0).unwrap(),
                    _ => 0.0,
                };
                per_unit += t.coef * unit;
            }
        }
        let w2 = k * k * crate::quadrature::BallQuadrature::new(3, 0.6, 8, Angular::Radial).unwrap().integrate(|_| 1.0).unwrap();
        let c1 = per_unit / w2;
        let r = check_sigma_bound(&sn, (1.0, 2.0), c1, 0.6, 1e-10).unwrap();
        assert!((r.lhs - per_unit).abs() < 1e-10 * per_unit.abs());
        assert!(r.pass, "{}", r.summary());
        let cal = Calibration::from_samples(InequalityKind::Sigma, &e, 0.6, &sigma_samples(&sn, 0.6, "const").unwrap(), "r8").unwrap();
        assert!((cal.max_ratio - c1).abs() < 1e-10 * c1.abs().max(1.0));
        assert_eq!(cal.constant, c1.max(0.0));
    }

    #[test]
    fn hardy_family_ratios_are_finite_and_positive() {
        let e = Exponents::new(4.0, 3).unwrap();
        let rules = Arc::new(RuleSet::for_functionals(3, 24, Angular::Radial, &[0.6]).unwrap());
        let fam = hardy_family(e, 0.6, rules).unwrap();
        assert_eq!(fam.len(), 3);
        for f in &fam {
            assert!(f.lhs > 0.0 && f.lhs.is_finite(), "{f:?}");
        }
        let cal = Calibration::from_samples(InequalityKind::Hardy, &e, 0.6, &fam, "family").unwrap();
        assert!(cal.check(&fam, 0.0).iter().all(|r| r.pass));
    }

    #[test]
    fn hardy_family_half_power_closed_form() {
        // w = (1-r²)^{1/2}, N = 3, ε = 3/5: the left side is ∫ρ_ε = |B_ε|, the gradient term is
        // ∫r²ρ_ε, and ∫w²ρ_ε = ∫ρ_{ε+1}; each is a Beta-function integral.
        let e = Exponents::new(4.0, 3).unwrap();
        let rules = Arc::new(RuleSet::for_functionals(3, 24, Angular::Radial, &[0.6]).unwrap());
        let fam = hardy_family(e, 0.6, rules).unwrap();
        let beta = |a: f64, b: f64| statrs::function::beta::beta(a, b);
        let area = 4.0 * std::f64::consts::PI;
        // ∫_B r^{2j}(1-r²)^β dy = area/2 · B(j + 3/2, β + 1).
        let m = |j: f64, b: f64| 0.5 * area * beta(j + 1.5, b + 1.0);
        let want = m(0.0, 0.6) / (m(1.0, 0.6) + m(0.0, 1.6));
        assert!((fam[0].lhs - want).abs() < 1e-12 * want, "{} vs {want}", fam[0].lhs);
    }

    #[test]
    fn calibration_round_trips_through_json() {
        let e = Exponents::new(4.0, 3).unwrap();
        let smp = vec![InequalitySample { lhs: 2.0, rhs: 4.0, context: "a".into() }, InequalitySample { lhs: -1.0, rhs: 1.0, context: "b".into() }];
        let cal = Calibration::from_samples(InequalityKind::MBound, &e, 0.6, &smp, "x").unwrap();
        assert_eq!(cal.constant, 0.5);
        assert_eq!(cal.max_ratio, 0.5);
        assert_eq!(cal.attained_at, "a");
        let set = CalibrationSet { entries: vec![cal] };
        let dir = std::env::temp_dir().join(format!("cal-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("calibration.json");
        set.save(&path).unwrap();
        assert_eq!(CalibrationSet::load(&path).unwrap(), set);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn positive_lhs_with_zero_rhs_is_rejected() {
        let e = Exponents::new(4.0, 3).unwrap();
        let smp = vec![InequalitySample { lhs: 1.0, rhs: 0.0, context: "z".into() }];
        assert!(Calibration::from_samples(InequalityKind::W1, &e, 0.6, &smp, "x").is_err());
    }
}
