//! Run configuration: a sectioned TOML file in which every field has a default.
//!
//! ```toml
//! seed = 0
//!
//! [model]
//! p = 4.0
//! n = 3
//!
//! [solver]
//! r_max = 3.0
//! nr = 2048
//! initial = { family = "gaussian", amplitude = 3.0, width = 1.0 }
//!
//! [similarity]
//! ds = 0.025
//! # t0 = 0.3065      # omit to use the fitted blow-up time
//! # s_end = 6.0      # omit to stop where the cone still spans `resolved_cells` grid cells
//!
//! [functionals]
//! names = ["E0", "F0", "E_eps", "M"]
//! eps = [0.6]
//! k_max = 6
//! ```

use std::path::Path;

use blowup_core::model::{Exponents, RadialGrid};
use blowup_core::solver::{InitialData, SnapshotPolicy, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Complete configuration of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed of every randomized suite.
    pub seed: u64,
    /// Equation exponents.
    pub model: ModelSection,
    /// Physical solver.
    pub solver: SolverSection,
    /// Similarity-variable sampling.
    pub similarity: SimilaritySection,
    /// Functional selection.
    pub functionals: FunctionalSection,
    /// Verification thresholds.
    pub verify: VerifySection,
}

/// `[model]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Nonlinearity exponent.
    pub p: f64,
    /// Space dimension.
    pub n: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { p: 4.0, n: 3 }
    }
}

/// `[solver]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Outer radius of the grid.
    pub r_max: f64,
    /// Number of grid nodes.
    pub nr: usize,
    /// Courant number.
    pub cfl: f64,
    /// Amplitude that ends the run.
    pub u_cap: f64,
    /// Steps per e-fold of the time to blow-up.
    pub steps_per_efold: f64,
    /// Step budget.
    pub max_steps: usize,
    /// Amplitude threshold of the blow-up fit.
    pub fit_threshold: f64,
    /// Initial data.
    pub initial: InitialData,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            r_max: 3.0,
            nr: 2048,
            cfl: 0.5,
            u_cap: 1e8,
            steps_per_efold: 200.0,
            max_steps: 2_000_000,
            fit_threshold: 1e3,
            initial: InitialData::Gaussian { amplitude: 3.0, width: 1.0 },
        }
    }
}

/// `[similarity]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilaritySection {
    /// Cone vertex position.
    pub x0: [f64; 3],
    /// Cone vertex time; the fitted blow-up time when absent.
    pub t0: Option<f64>,
    /// First similarity time; the first grid multiple inside the stored data when absent.
    pub s_start: Option<f64>,
    /// Last similarity time; where the cone radius falls to `resolved_cells` cells when absent.
    pub s_end: Option<f64>,
    /// Sample spacing in `s`.
    pub ds: f64,
    /// Slope of the non-characteristic cone.
    pub delta0: f64,
    /// Radial quadrature nodes.
    pub n_radial: usize,
    /// Angular quadrature size (0 for the radial rule).
    pub n_angular: usize,
    /// Minimal cone radius in grid cells for the automatic `s_end`.
    pub resolved_cells: f64,
}

impl Default for SimilaritySection {
    fn default() -> Self {
        Self {
            x0: [0.0; 3],
            t0: None,
            s_start: None,
            s_end: None,
            ds: 0.025,
            delta0: 0.5,
            n_radial: 32,
            n_angular: 0,
            resolved_cells: 16.0,
        }
    }
}

/// `[functionals]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionalSection {
    /// Functional names (see `Functional::from_name`).
    pub names: Vec<String>,
    /// Weight exponents applied to the `ε`-dependent names.
    pub eps: Vec<f64>,
    /// Highest ladder level of the `F_k`, `𝓤_k` and `𝓕_k` families.
    pub k_max: u32,
    /// `σ_k` per ladder level; the last entry is reused for higher levels.
    pub sigma: Vec<f64>,
    /// Log-weight exponent of the rate theorem.
    pub q: f64,
}

impl Default for FunctionalSection {
    fn default() -> Self {
        Self {
            names: ["E0", "J0", "E", "F0", "E_eps", "J_eps", "G_eps", "N_eps", "I_eps", "L_eps", "M"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            eps: vec![0.6],
            k_max: 6,
            sigma: vec![1.0],
            q: 1.0,
        }
    }
}

impl FunctionalSection {
    /// `σ_k` for ladder level `k ≥ 1`.
    pub fn sigma_for(&self, k: u32) -> f64 {
        let i = (k as usize).saturating_sub(1);
        self.sigma.get(i).or(self.sigma.last()).copied().unwrap_or(1.0)
    }
}

/// `[verify]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Random test fields per `(N, ε)` in the static identity suite.
    pub static_fields: usize,
    /// Weight exponents of the static identity suite.
    pub identity_eps: Vec<f64>,
    /// Length of the window of the derivative-lemma checks, placed right after the transient.
    pub window: f64,
    /// Minimal convergence order of the derivative-lemma refinement study.
    pub min_order: f64,
    /// Length of the initial transient excluded from monotonicity checks.
    pub transient: f64,
    /// Monotonicity slack relative to the local value.
    pub slack: f64,
    /// Largest admissible `final / initial` ratio of the decay suite.
    pub decay_ratio: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            static_fields: 50,
            identity_eps: vec![0.6, 1.0, 1.1],
            window: 1.0,
            min_order: 1.7,
            transient: 0.5,
            slack: 1e-6,
            decay_ratio: 0.1,
        }
    }
}

impl RunConfig {
    /// Parses TOML text; `origin` names the source in diagnostics.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config { origin: origin.to_string(), message: e.to_string() })?;
        cfg.validate().map_err(|message| CliError::Config { origin: origin.to_string(), message })?;
        Ok(cfg)
    }

    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// The fully resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    /// Validated exponents.
    pub fn exponents(&self) -> Result<Exponents> {
        Ok(Exponents::new(self.model.p, self.model.n)?)
    }

    /// Solver configuration.
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(self.exponents()?, RadialGrid::new(s.r_max, s.nr)?, s.initial);
        cfg.cfl = s.cfl;
        cfg.u_cap = s.u_cap;
        cfg.steps_per_efold = s.steps_per_efold;
        cfg.max_steps = s.max_steps;
        cfg.fit_threshold = s.fit_threshold;
        cfg.snapshots = SnapshotPolicy::default();
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        Exponents::new(self.model.p, self.model.n).map_err(|e| format!("[model]: {e}"))?;
        let sim = &self.similarity;
        if !(sim.ds > 0.0 && sim.ds <= 0.5) {
            return Err(format!("[similarity] ds = {} must lie in (0, 0.5]", sim.ds));
        }
        if !(sim.delta0 > 0.0 && sim.delta0 < 1.0) {
            return Err(format!("[similarity] delta0 = {} must lie in (0, 1)", sim.delta0));
        }
        if sim.x0 != [0.0; 3] && sim.n_angular == 0 {
            return Err("[similarity] an off-centre x0 needs n_angular > 0".into());
        }
        if let (Some(a), Some(b)) = (sim.s_start, sim.s_end) {
            if !(b > a) {
                return Err(format!("[similarity] s_end = {b} must exceed s_start = {a}"));
            }
        }
        let f = &self.functionals;
        if f.eps.iter().any(|e| !(*e > 0.5 && *e < 1.5)) {
            return Err(format!("[functionals] eps values {:?} must lie in (1/2, 3/2)", f.eps));
        }
        if f.sigma.iter().any(|v| !(*v > 0.0)) {
            return Err(format!("[functionals] sigma values {:?} must be positive", f.sigma));
        }
        if !(f.q >= 0.0) {
            return Err(format!("[functionals] q = {} must be non-negative", f.q));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("", "x").unwrap(), RunConfig::default());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.similarity.t0 = Some(0.25);
        cfg.solver.initial = InitialData::OdePlateau { t_blowup: 1.0, radius: 2.5, taper: 0.5 };
        let back = RunConfig::from_toml(&cfg.to_toml(), "echo").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_field_reports_location() {
        let err = RunConfig::from_toml("[solver]\nnr = 64\nbogus = 1\n", "bad.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.toml") && msg.contains("bogus") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn subconformal_pair_is_rejected() {
        assert!(RunConfig::from_toml("[model]\np = 3.0\nn = 3\n", "x").is_err());
    }
}
