//! End-to-end tests of the command-line front end through `blowup_cli::run`.

use std::path::{Path, PathBuf};

use blowup_cli::commands::{FunctionalsIndex, SimulationSummary, SuiteOutcome, SWEEP_CSV};
use blowup_cli::config::RunConfig;
use blowup_cli::exit;
use blowup_cli::rundir::{read_csv, RunDir, MANIFEST};
use blowup_core::solver::InitialData;
use tempfile::TempDir;

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.solver.nr = 1024;
    cfg.verify.static_fields = 4;
    cfg.functionals.k_max = 2;
    cfg
}

fn write_config(dir: &Path, cfg: &RunConfig) -> PathBuf {
    let path = dir.join("config.in.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path
}

fn blowup(args: &[&str]) -> u8 {
    let mut all = vec!["blowup"];
    all.extend_from_slice(args);
    blowup_cli::run(all)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Simulates `cfg` into `<tmp>/run` and returns that directory.
fn simulated(tmp: &TempDir, cfg: &RunConfig) -> PathBuf {
    let config = write_config(tmp.path(), cfg);
    let out = tmp.path().join("run");
    assert_eq!(blowup(&["simulate", "--config", s(&config), "--out", s(&out)]), exit::OK);
    out
}

#[test]
fn simulate_writes_trajectory_and_estimate() {
    let tmp = TempDir::new().unwrap();
    let out = simulated(&tmp, &small_config());
    let rd = RunDir::open(&out).unwrap();
    let summary: SimulationSummary = rd.read_json("t_est.json").unwrap();
    let t = summary.t_est.expect("Gaussian data blows up");
    assert!(t > 0.2 && t < 0.4, "T = {t}");
    let (header, rows) = read_csv(&out.join("trajectory.csv")).unwrap();
    assert_eq!(header, ["t", "gap", "u", "ut"]);
    assert!(rows.len() > 10);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]), "times increase");
    assert!(rd.verify_checksums().unwrap().is_empty());
}

#[test]
fn zero_data_exits_with_no_blowup() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config();
    cfg.solver.initial = InitialData::Zero;
    cfg.solver.max_steps = 2000;
    let config = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("run");
    assert_eq!(blowup(&["simulate", "--config", s(&config), "--out", s(&out)]), exit::NO_BLOWUP);
    // Downstream commands that need a blow-up time report the same condition.
    assert_eq!(blowup(&["rate", "--out", s(&out)]), exit::NO_BLOWUP);
}

#[test]
fn malformed_or_out_of_range_config_exits_with_usage() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    for (name, text) in [
        ("syntax.toml", "[model\np = 4"),
        ("unknown.toml", "[model]\nfoo = 1"),
        ("subcritical.toml", "[model]\np = 1.5\nn = 3"),
        ("eps.toml", "[functionals]\neps = [0.4]"),
    ] {
        let path = tmp.path().join(name);
        std::fs::write(&path, text).unwrap();
        assert_eq!(blowup(&["simulate", "--config", s(&path), "--out", s(&out)]), exit::USAGE, "{name}");
    }
    assert_eq!(blowup(&["simulate", "--config", s(&tmp.path().join("missing.toml"))]), exit::USAGE);
    assert_eq!(blowup(&["simulate", "--bogus-flag"]), exit::USAGE);
    assert_eq!(blowup(&["--help"]), exit::OK);
}

#[test]
fn functionals_needs_a_run_directory() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("nothing-here");
    assert_eq!(blowup(&["functionals", "--out", s(&out)]), exit::USAGE);
    std::fs::create_dir_all(&out).unwrap();
    assert_eq!(blowup(&["functionals", "--out", s(&out)]), exit::USAGE);
}

#[test]
fn functionals_writes_selected_series() {
    let tmp = TempDir::new().unwrap();
    let out = simulated(&tmp, &small_config());
    assert_eq!(blowup(&["functionals", "--out", s(&out), "--names", "E0,F0,J_eps", "--eps", "0.7,1.2", "--export-snapshots"]), exit::OK);
    let rd = RunDir::open(&out).unwrap();
    let index: FunctionalsIndex = rd.read_json("functionals.json").unwrap();
    assert_eq!(index.names, ["E0", "F0", "J_eps"]);
    assert_eq!(index.eps, [0.7, 1.2]);
    let files: Vec<&str> = index.series.iter().map(|e| e.file.as_str()).collect();
    assert_eq!(files.len(), 4, "{files:?}");
    let (header, rows) = read_csv(&out.join(index.series[1].file.as_str())).unwrap();
    assert_eq!(header[0], "s");
    // F0 is nonincreasing after the initial transient.
    let tail: Vec<f64> = rows.iter().filter(|r| r[0] >= index.s_first + 0.5).map(|r| r[1]).collect();
    assert!(tail.windows(2).all(|w| w[1] <= w[0] + 1e-6));
    assert!(out.join("snapshots.csv").is_file());
    assert!(rd.verify_checksums().unwrap().is_empty());
}

#[test]
fn verify_identities_creates_a_fresh_run_directory() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &small_config());
    let out = tmp.path().join("static");
    assert_eq!(blowup(&["verify", "--suite", "identities", "--config", s(&config), "--out", s(&out)]), exit::OK);
    assert!(out.join(MANIFEST).is_file());
    let rd = RunDir::open(&out).unwrap();
    let outcomes: Vec<SuiteOutcome> = rd.read_json("verify/summary_identities.json").unwrap();
    assert_eq!(outcomes.len(), 1);
    assert_eq!(outcomes[0].checks, 4 * 3 * 2 * 2);
    assert!(outcomes[0].pass);
    assert!(out.join("verify/identities.txt").is_file());
}

#[test]
fn verify_reports_pass_and_fail_through_the_exit_code() {
    let tmp = TempDir::new().unwrap();
    let out = simulated(&tmp, &small_config());
    assert_eq!(blowup(&["verify", "--suite", "monotone", "--out", s(&out)]), exit::OK);
    // The same run judged against an unreachable convergence order fails.
    let mut strict = small_config();
    strict.verify.min_order = 10.0;
    std::fs::write(out.join("config.toml"), strict.to_toml()).unwrap();
    assert_eq!(blowup(&["verify", "--suite", "lemmas", "--out", s(&out)]), exit::CHECK_FAILED);
    let rd = RunDir::open(&out).unwrap();
    let outcomes: Vec<SuiteOutcome> = rd.read_json("verify/summary_lemmas.json").unwrap();
    assert!(!outcomes[0].pass && outcomes[0].failures > 0);
}

#[test]
fn verify_suites_other_than_identities_need_a_run() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("absent");
    assert_eq!(blowup(&["verify", "--suite", "monotone", "--out", s(&out)]), exit::USAGE);
}

#[test]
fn rate_with_unweighted_log_and_negative_weight() {
    let tmp = TempDir::new().unwrap();
    let out = simulated(&tmp, &small_config());
    let code = blowup(&["rate", "--out", s(&out), "--q", "0"]);
    assert!(code == exit::OK || code == exit::CHECK_FAILED);
    let (header, rows) = read_csv(&out.join("theorem.csv")).unwrap();
    assert_eq!(header, ["s", "tau", "cone_integral", "boundary_energy", "scaled_l2", "lower_bound"]);
    // The cone integral looks ahead by log 2 in s and is undefined for the final samples.
    let s_last = rows[rows.len() - 1][0];
    for r in &rows {
        assert_eq!(r[2].is_finite(), r[0] + std::f64::consts::LN_2 <= s_last + 1e-9, "s = {}", r[0]);
        assert!(r[3..].iter().all(|v| v.is_finite()));
    }
    assert!(rows.iter().all(|r| (r[1] - (-r[0]).exp()).abs() <= 1e-12 * r[1]));
    assert_eq!(blowup(&["rate", "--out", s(&out), "--q=-1"]), exit::USAGE);
}

#[test]
fn sweep_tabulates_each_pair_deterministically() {
    // The superconformal, Sobolev-subcritical ranges of different dimensions are disjoint, so
    // the grid varies p only.
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &small_config());
    let mut tables = Vec::new();
    for (jobs, name) in [("1", "serial"), ("4", "parallel")] {
        let root = tmp.path().join(name);
        assert_eq!(blowup(&["sweep", "--config", s(&config), "--out", s(&root), "--p", "3.5,4.5", "--n", "3", "--jobs", jobs]), exit::OK);
        let (header, rows) = read_csv(&root.join(SWEEP_CSV)).unwrap();
        assert_eq!(header[..5], ["p", "N", "T_est", "exponent", "f0_monotone"]);
        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
        assert_eq!(pairs, [(3.5, 3.0), (4.5, 3.0)]);
        for r in &rows {
            let want = -2.0 / (r[0] - 1.0);
            assert!((r[3] - want).abs() < 0.02 * want.abs(), "exponent {} for p = {}", r[3], r[0]);
        }
        assert!(root.join("p3.5-N3").join(MANIFEST).is_file());
        tables.push(std::fs::read(root.join(SWEEP_CSV)).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn sweep_rejects_invalid_pairs_before_running() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("sweep");
    // p = 3 is conformal for N = 3, below the superconformal range.
    assert_eq!(blowup(&["sweep", "--out", s(&root), "--p", "3", "--n", "3"]), exit::USAGE);
    assert!(!root.join(SWEEP_CSV).exists());
    assert_eq!(blowup(&["sweep", "--out", s(&root), "--p", "4", "--n", "3", "--jobs", "0"]), exit::USAGE);
}

#[test]
fn manifest_detects_modified_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = simulated(&tmp, &small_config());
    let rd = RunDir::open(&out).unwrap();
    for name in ["config.toml", "trajectory.csv", "trajectory.json", "t_est.json"] {
        assert!(rd.manifest().files.contains_key(name), "{name} recorded");
    }
    let mut bytes = std::fs::read(out.join("trajectory.csv")).unwrap();
    bytes.push(b'\n');
    std::fs::write(out.join("trajectory.csv"), bytes).unwrap();
    assert_eq!(rd.verify_checksums().unwrap(), ["trajectory.csv"]);
}

#[test]
fn seed_override_changes_the_run_directory_hash_only_through_the_config() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &small_config());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(blowup(&["simulate", "--config", s(&config), "--out", s(&a), "--seed", "1"]), exit::OK);
    assert_eq!(blowup(&["simulate", "--config", s(&config), "--out", s(&b), "--seed", "2"]), exit::OK);
    let ma = RunDir::open(&a).unwrap().manifest().clone();
    let mb = RunDir::open(&b).unwrap().manifest().clone();
    assert_ne!(ma.config_hash, mb.config_hash);
    assert_eq!(ma.files["trajectory.csv"], mb.files["trajectory.csv"]);
}
