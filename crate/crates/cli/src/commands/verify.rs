//! `verify`: run the verification suites and write `verify/<suite>.json` and `.txt`.

use serde::{Deserialize, Serialize};

use super::load_trajectory;
use crate::config::RunConfig;
use crate::error::Result;
use crate::pipeline;
use crate::rundir::RunDir;
use crate::Suite;

/// Verdict of one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    /// Suite name.
    pub suite: String,
    /// Number of checks.
    pub checks: usize,
    /// Number of failed checks.
    pub failures: usize,
    /// Whether every check passed.
    pub pass: bool,
    /// One line per check.
    pub lines: Vec<String>,
}

impl SuiteOutcome {
    fn new(suite: &str, lines: Vec<(bool, String)>) -> Self {
        let failures = lines.iter().filter(|(ok, _)| !ok).count();
        Self {
            suite: suite.to_string(),
            checks: lines.len(),
            failures,
            pass: failures == 0,
            lines: lines.into_iter().map(|(_, l)| l).collect(),
        }
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        format!(
            "{} {}: {}/{} checks passed",
            if self.pass { "PASS" } else { "FAIL" },
            self.suite,
            self.checks - self.failures,
            self.checks
        )
    }
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Identities => "identities",
        Suite::Lemmas => "lemmas",
        Suite::Monotone => "monotone",
        Suite::Decay => "decay",
        Suite::All => "all",
    }
}

fn write_outcome<T: Serialize>(rd: &mut RunDir, outcome: &SuiteOutcome, detail: &T) -> Result<()> {
    let base = format!("verify/{}", outcome.suite);
    rd.write_json(&format!("{base}.json"), detail)?;
    let mut text = outcome.lines.join("\n");
    text.push('\n');
    text.push_str(&outcome.line());
    text.push('\n');
    rd.write_bytes(&format!("{base}.txt"), text.as_bytes())
}

/// Runs `suite` (every suite for [`Suite::All`]) and persists the reports.
pub fn verify_into(rd: &mut RunDir, cfg: &RunConfig, suite: Suite) -> Result<Vec<SuiteOutcome>> {
    let suites = match suite {
        Suite::All => vec![Suite::Identities, Suite::Lemmas, Suite::Monotone, Suite::Decay],
        s => vec![s],
    };
    let needs_run = suites.iter().any(|s| *s != Suite::Identities);
    let traj = if needs_run { Some(load_trajectory(rd)?) } else { None };
    let snaps = match (&traj, suites.iter().any(|s| matches!(s, Suite::Monotone | Suite::Decay))) {
        (Some(t), true) => Some(pipeline::resample(cfg, t)?.snaps),
        _ => None,
    };
    let mut out = Vec::new();
    for s in suites {
        let name = suite_name(s);
        let outcome = match s {
            Suite::Identities => {
                let reports = pipeline::identity_checks(cfg)?;
                let o = SuiteOutcome::new(name, reports.iter().map(|r| (r.pass, r.summary())).collect());
                write_outcome(rd, &o, &reports)?;
                o
            }
            Suite::Lemmas => {
                let coarse = traj.as_ref().expect("loaded above");
                let fine = pipeline::simulate(&pipeline::refined_config(cfg))?;
                let studies = pipeline::lemma_checks(cfg, coarse, &fine)?;
                let lines = studies
                    .iter()
                    .map(|st| {
                        let res: Vec<String> = st.reports.iter().map(|r| format!("{:.3e}", r.abs_residual)).collect();
                        (st.pass, format!("{:<6} {:<16} order={:.3} (min {:.2}) residuals [{}]", if st.pass { "PASS" } else { "FAIL" }, st.name, st.order, st.min_order, res.join(", ")))
                    })
                    .collect();
                let o = SuiteOutcome::new(name, lines);
                write_outcome(rd, &o, &studies)?;
                o
            }
            Suite::Monotone => {
                let checks = pipeline::monotone_checks(cfg, snaps.as_deref().unwrap_or_default())?;
                let lines = checks
                    .iter()
                    .map(|c| {
                        let n = c.violations.len() + c.negative.len();
                        (c.pass, format!("{:<6} {:<14} {} from s={:.4}: {n} offending samples", if c.pass { "PASS" } else { "FAIL" }, c.name, c.claim, c.s_from))
                    })
                    .collect();
                let o = SuiteOutcome::new(name, lines);
                write_outcome(rd, &o, &checks)?;
                o
            }
            Suite::Decay => {
                let report = pipeline::decay_checks(cfg, snaps.as_deref().unwrap_or_default())?;
                let o = SuiteOutcome::new(name, report.outcomes.iter().map(|d| (d.pass, d.summary())).collect());
                write_outcome(rd, &o, &report)?;
                o
            }
            Suite::All => unreachable!("expanded above"),
        };
        out.push(outcome);
    }
    rd.write_json(&format!("verify/summary_{}.json", suite_name(suite)), &out)?;
    rd.save_manifest()?;
    Ok(out)
}
