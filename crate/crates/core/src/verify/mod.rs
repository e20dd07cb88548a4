//! Numerical certification of identities, dissipation laws, monotonicity and decay claims.
//!
//! Every check produces an immutable [`IdentityReport`] (or a report type built from them).
//! The two sides of an identity are always computed by separate code paths: functional values
//! and their differences on one side, integrand quadrature on the other.

pub mod calibrate;
pub mod decay;
pub mod identities;
pub mod lemmas;
pub mod monotone;

use serde::{Deserialize, Serialize};

/// Floor of the denominator in relative residuals.
pub const REL_FLOOR: f64 = 1e-14;

/// Outcome of comparing two computed sides of an identity or inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// Identity name.
    pub name: String,
    /// Left side.
    pub lhs: f64,
    /// Right side.
    pub rhs: f64,
    /// `|lhs - rhs|`.
    pub abs_residual: f64,
    /// `|lhs - rhs| / max(|lhs|, |rhs|, 1e-14)`.
    pub rel_residual: f64,
    /// Tolerance the residual was compared against.
    pub tolerance: f64,
    /// Verdict.
    pub pass: bool,
    /// Field or trajectory descriptor.
    pub context: String,
}

impl IdentityReport {
    /// Equality report: passes when the relative residual is at most `tolerance`.
    pub fn equality(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, context: impl Into<String>) -> Self {
        let abs_residual = (lhs - rhs).abs();
        let rel_residual = abs_residual / lhs.abs().max(rhs.abs()).max(REL_FLOOR);
        Self {
            name: name.into(),
            lhs,
            rhs,
            abs_residual,
            rel_residual,
            tolerance,
            pass: rel_residual <= tolerance,
            context: context.into(),
        }
    }

    /// Inequality report `lhs ≤ rhs + tolerance·max(|lhs|, |rhs|)`.
    pub fn inequality(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, context: impl Into<String>) -> Self {
        let mut r = Self::equality(name, lhs, rhs, tolerance, context);
        r.pass = lhs <= rhs + tolerance * lhs.abs().max(rhs.abs()).max(REL_FLOOR);
        r
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        format!(
            "{:<6} {:<28} lhs={:+.6e} rhs={:+.6e} rel={:.2e} tol={:.1e}  {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.lhs,
            self.rhs,
            self.rel_residual,
            self.tolerance,
            self.context
        )
    }
}

/// Observed order `log(|e_coarse| / |e_fine|) / log(ratio)` of a refinement step.
pub fn convergence_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse.abs() / fine.abs()).ln() / ratio.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_equals_zero() {
        let r = IdentityReport::equality("z", 0.0, 0.0, 1e-8, "");
        assert!(r.pass);
        assert_eq!(r.rel_residual, 0.0);
    }

    #[test]
    fn relative_residual_uses_larger_side() {
        let r = IdentityReport::equality("x", 1.0, 1.1, 0.05, "");
        assert!((r.rel_residual - 0.1 / 1.1).abs() < 1e-15);
        assert!(!r.pass);
    }

    #[test]
    fn inequality_direction() {
        assert!(IdentityReport::inequality("i", 1.0, 2.0, 0.0, "").pass);
        assert!(!IdentityReport::inequality("i", 2.0, 1.0, 0.0, "").pass);
    }

    #[test]
    fn order_of_quadratic_error() {
        assert!((convergence_order(4e-4, 1e-4, 2.0) - 2.0).abs() < 1e-12);
    }
}
