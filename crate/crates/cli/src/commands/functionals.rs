//! `functionals`: resample the stored trajectory in similarity variables and write one
//! two-column series per functional.

use serde::{Deserialize, Serialize};

use super::load_trajectory;
use crate::config::RunConfig;
use crate::error::Result;
use crate::pipeline::{self, SeriesEntry};
use crate::rundir::RunDir;

/// Contents of `functionals.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalsIndex {
    /// Cone vertex time.
    pub t0: f64,
    /// First sample time.
    pub s_first: f64,
    /// Last sample time.
    pub s_last: f64,
    /// Sample spacing.
    pub ds: f64,
    /// Selected names.
    pub names: Vec<String>,
    /// Selected weight exponents.
    pub eps: Vec<f64>,
    /// Written series.
    pub series: Vec<SeriesEntry>,
    /// Families that could not be evaluated, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Writes `series/<name>.csv` for every series, `functionals.json` and, with
/// `export_snapshots`, `snapshots.csv`.
pub fn functionals_into(rd: &mut RunDir, cfg: &RunConfig, export_snapshots: bool) -> Result<FunctionalsIndex> {
    let traj = load_trajectory(rd)?;
    let res = pipeline::resample(cfg, &traj)?;
    let set = pipeline::functional_series(cfg, &res.snaps)?;
    let mut entries = Vec::with_capacity(set.series.len());
    for series in &set.series {
        let file = format!("series/{}.csv", series.name());
        let rows: Vec<Vec<f64>> = series.iter().map(|(s, v)| vec![s, v]).collect();
        rd.write_csv(&file, &["s", series.name()], &rows)?;
        entries.push(SeriesEntry { name: series.name().to_string(), file, samples: series.len(), tail: series.tail() });
    }
    if export_snapshots {
        let mut rows = Vec::new();
        for sn in &res.snaps {
            for nv in sn.values(0.0)? {
                rows.push(vec![sn.s, nv.y[0], nv.y[1], nv.y[2], nv.w, nv.ws, nv.grad_sq().sqrt(), nv.grad_r_sq().sqrt(), nv.grad_theta_sq().sqrt()]);
            }
        }
        rd.write_csv("snapshots.csv", &["s", "y1", "y2", "y3", "w", "ws", "grad", "grad_r", "grad_theta"], &rows)?;
    }
    let s = res.s();
    let index = FunctionalsIndex {
        t0: res.t0,
        s_first: s[0],
        s_last: s[s.len() - 1],
        ds: cfg.similarity.ds,
        names: cfg.functionals.names.clone(),
        eps: cfg.functionals.eps.clone(),
        series: entries,
        skipped: set.skipped,
    };
    rd.write_json("functionals.json", &index)?;
    rd.save_manifest()?;
    Ok(index)
}
