//! `simulate`: evolve the initial data and persist the trajectory and the blow-up fit.

use blowup_core::solver::{RunStatus, Trajectory};
use serde::{Deserialize, Serialize};

use super::TRAJECTORY_JSON;
use crate::config::RunConfig;
use crate::error::Result;
use crate::pipeline;
use crate::rundir::RunDir;

/// Contents of `t_est.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    /// How the run ended.
    pub status: RunStatus,
    /// Fitted blow-up time at the centre.
    pub t_est: Option<f64>,
    /// Fitted `T - t_final`.
    pub gap_est: Option<f64>,
    /// Fitted exponent of `u(0, t) ~ (T - t)^exponent`.
    pub exponent_est: Option<f64>,
    /// The ODE exponent `-2/(p-1)`.
    pub expected_exponent: f64,
    /// Coefficient of determination of the fit.
    pub r2: Option<f64>,
    /// Samples used by the fit.
    pub fit_samples: Option<usize>,
    /// Time steps taken.
    pub steps: usize,
    /// Time of the last step.
    pub t_final: f64,
    /// Stored states.
    pub stored_states: usize,
}

impl SimulationSummary {
    fn new(traj: &Trajectory) -> Self {
        let fit = traj.fit;
        Self {
            status: traj.status,
            t_est: fit.map(|f| f.t_est),
            gap_est: fit.map(|f| f.gap_est),
            exponent_est: fit.map(|f| f.exponent_est),
            expected_exponent: -traj.exponents.beta_scale(),
            r2: fit.map(|f| f.r2),
            fit_samples: fit.map(|f| f.n_samples),
            steps: traj.steps,
            t_final: traj.t_final,
            stored_states: traj.states.len(),
        }
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        match (self.status, self.t_est, self.exponent_est) {
            (RunStatus::Blowup, Some(t), Some(x)) => {
                format!("blow-up at T = {t:.10} (exponent {x:.5}, ODE {:.5}) after {} steps", self.expected_exponent, self.steps)
            }
            _ => format!("no blow-up within {} steps (t = {:.6})", self.steps, self.t_final),
        }
    }

    /// `0` for a fitted blow-up, `3` otherwise.
    pub fn exit_code(&self) -> u8 {
        match (self.status, self.t_est) {
            (RunStatus::Blowup, Some(_)) => crate::exit::OK,
            _ => crate::exit::NO_BLOWUP,
        }
    }
}

/// Runs the solver and writes `trajectory.csv` (centre values), `trajectory.json`, `t_est.json`
/// and, with `dump_raw`, `raw.csv`.
pub fn simulate_into(rd: &mut RunDir, cfg: &RunConfig, dump_raw: bool) -> Result<SimulationSummary> {
    let traj = pipeline::simulate(cfg)?;
    let center: Vec<Vec<f64>> = traj.center.iter().map(|c| vec![c.t, c.gap, c.u, c.ut]).collect();
    rd.write_csv("trajectory.csv", &["t", "gap", "u", "ut"], &center)?;
    rd.write_json(TRAJECTORY_JSON, &traj)?;
    if dump_raw {
        let dr = traj.grid.dr();
        let rows: Vec<Vec<f64>> = traj
            .states
            .iter()
            .flat_map(|st| st.u.iter().zip(&st.ut).enumerate().map(move |(i, (u, ut))| vec![st.t, i as f64 * dr, *u, *ut]))
            .collect();
        rd.write_csv("raw.csv", &["t", "r", "u", "ut"], &rows)?;
    }
    let summary = SimulationSummary::new(&traj);
    rd.write_json("t_est.json", &summary)?;
    rd.save_manifest()?;
    Ok(summary)
}
