//! `rate`: the blow-up rate quantities along the stored trajectory.

use super::load_trajectory;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::pipeline::{self, RateReport};
use crate::rundir::RunDir;

/// Writes `theorem.csv` and `theorem.json` for log weight `q`.
pub fn rate_into(rd: &mut RunDir, cfg: &RunConfig, q: f64) -> Result<RateReport> {
    if !(q >= 0.0) {
        return Err(CliError::Usage(format!("--q {q} must be non-negative")));
    }
    let traj = load_trajectory(rd)?;
    traj.require_t_est().map_err(|e| CliError::NoBlowup(e.to_string()))?;
    let res = pipeline::resample(cfg, &traj)?;
    let report = pipeline::rate_report(cfg, &res.snaps, q)?;
    let rows: Vec<Vec<f64>> = report
        .theorem
        .samples
        .iter()
        .map(|v| vec![v.s, v.tau, v.cone_integral, v.boundary_energy, v.scaled_l2, v.lower_bound])
        .collect();
    rd.write_csv("theorem.csv", &["s", "tau", "cone_integral", "boundary_energy", "scaled_l2", "lower_bound"], &rows)?;
    rd.write_json("theorem.json", &report)?;
    rd.save_manifest()?;
    Ok(report)
}
