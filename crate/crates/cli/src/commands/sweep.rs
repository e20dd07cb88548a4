//! `sweep`: one run per `(p, N)` pair, executed concurrently, summarised in `sweep.csv`.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use blowup_core::model::Exponents;
use serde::{Deserialize, Serialize};

use super::{flag, functionals_into, simulate_into};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::pipeline;
use crate::rundir::{csv_bytes, sha256_hex};
use crate::rundir::RunDir;

/// Name of the aggregate table.
pub const SWEEP_CSV: &str = "sweep.csv";

/// Aggregate row of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Nonlinearity exponent.
    pub p: f64,
    /// Space dimension.
    pub n: usize,
    /// Fitted blow-up time (`NaN` without blow-up).
    pub t_est: f64,
    /// Fitted rate exponent (`NaN` without blow-up).
    pub exponent: f64,
    /// `F₀` nonincreasing and nonnegative.
    pub f0_monotone: bool,
    /// `s^{k/18}F₀` nonincreasing, `k = 1..=k_max`.
    pub ladder: Vec<bool>,
}

impl SweepRow {
    /// Whether the run blew up and every monotonicity verdict holds.
    pub fn pass(&self) -> bool {
        self.t_est.is_finite() && self.f0_monotone && self.ladder.iter().all(|v| *v)
    }
}

fn run_one(cfg: &RunConfig, dir: &Path) -> Result<SweepRow> {
    let mut rd = RunDir::create(dir, cfg)?;
    let summary = simulate_into(&mut rd, cfg, false)?;
    let (p, n) = (cfg.model.p, cfg.model.n);
    let (Some(t_est), Some(exponent)) = (summary.t_est, summary.exponent_est) else {
        return Ok(SweepRow { p, n, t_est: f64::NAN, exponent: f64::NAN, f0_monotone: false, ladder: vec![false; cfg.functionals.k_max as usize] });
    };
    functionals_into(&mut rd, cfg, false)?;
    let traj = super::load_trajectory(&rd)?;
    let res = pipeline::resample(cfg, &traj)?;
    let checks = pipeline::monotone_checks(cfg, &res.snaps)?;
    let k_max = cfg.functionals.k_max as usize;
    let f0_monotone = checks[0].pass && checks[k_max + 1].pass;
    let ladder = checks[1..=k_max].iter().map(|c| c.pass).collect();
    Ok(SweepRow { p, n, t_est, exponent, f0_monotone, ladder })
}

/// Validates every pair, runs them with at most `jobs` concurrent workers under `root` and
/// writes the aggregate table. Rows follow the order `p` outer, `N` inner.
pub fn sweep(template: &RunConfig, root: &Path, ps: &[f64], ns: &[usize], jobs: usize, verbose: bool) -> Result<Vec<SweepRow>> {
    let mut pairs = Vec::new();
    for &p in ps {
        for &n in ns {
            Exponents::new(p, n).map_err(|e| CliError::Usage(format!("invalid pair (p = {p}, N = {n}): {e}")))?;
            pairs.push((p, n));
        }
    }
    if pairs.is_empty() {
        return Err(CliError::Usage("the sweep needs at least one p and one N".into()));
    }
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SweepRow>>>> = Mutex::new((0..pairs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(pairs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(p, n)) = pairs.get(i) else { break };
                let mut cfg = template.clone();
                cfg.model.p = p;
                cfg.model.n = n;
                let row = run_one(&cfg, &root.join(format!("p{p}-N{n}")));
                if verbose {
                    match &row {
                        Ok(r) => eprintln!("p = {p}, N = {n}: T = {:.8}, exponent {:.5}", r.t_est, r.exponent),
                        Err(e) => eprintln!("p = {p}, N = {n}: {e}"),
                    }
                }
                results.lock().expect("no worker panics while holding the lock")[i] = Some(row);
            });
        }
    });
    let rows = results
        .into_inner()
        .expect("workers have finished")
        .into_iter()
        .map(|r| r.expect("every pair was claimed by a worker"))
        .collect::<Result<Vec<_>>>()?;
    let k_max = template.functionals.k_max as usize;
    let mut header = vec!["p".to_string(), "N".into(), "T_est".into(), "exponent".into(), "f0_monotone".into()];
    header.extend((1..=k_max).map(|k| format!("ladder_k{k}")));
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.p, r.n as f64, r.t_est, r.exponent, flag(r.f0_monotone)];
            v.extend(r.ladder.iter().map(|b| flag(*b)));
            v
        })
        .collect();
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let bytes = csv_bytes(&refs, &table).map_err(|message| CliError::Format { path: SWEEP_CSV.into(), message })?;
    let path = root.join(SWEEP_CSV);
    std::fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
    let sum_path = root.join("sweep.sha256");
    std::fs::write(&sum_path, format!("{}  {SWEEP_CSV}\n", sha256_hex(&bytes))).map_err(|e| CliError::io(&sum_path, e))?;
    Ok(rows)
}
