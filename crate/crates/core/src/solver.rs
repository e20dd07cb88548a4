//! Radial leapfrog solver for `u_tt = u_rr + (N-1)/r u_r + |u|^{p-1} u` with blow-up detection.
//!
//! The scheme is the velocity form of the leapfrog (kick-drift-kick), which coincides with the
//! three-level leapfrog at fixed `dt` and admits a variable step. Away from blow-up the step is
//! `cfl·dr`; once the amplitude implies a time to blow-up `τ` with `τ/steps_per_efold < cfl·dr`
//! the step follows `τ/steps_per_efold`, so the singular approach is resolved in `log(T-t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{kappa, Exponents, PhysicalState, RadialGrid};
use crate::ode::{fit_blowup_gaps, ode_exact, time_to_blowup_estimate, BlowupFit};

/// Initial data families (all radial).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialData {
    /// `u0 = u1 = 0`.
    Zero,
    /// `u0 = amplitude`, `u1 = velocity` for `r ≤ radius`, smoothly tapered to zero over `taper`.
    Plateau { amplitude: f64, velocity: f64, radius: f64, taper: f64 },
    /// Plateau seeded on the exact ODE branch with blow-up time `t_blowup`.
    OdePlateau { t_blowup: f64, radius: f64, taper: f64 },
    /// `u0 = amplitude·exp(-(r/width)^2)`, `u1 = 0`.
    Gaussian { amplitude: f64, width: f64 },
}

/// `C²` cut-off equal to 1 on `[0, radius]` and 0 beyond `radius + taper`.
fn cutoff(r: f64, radius: f64, taper: f64) -> f64 {
    if r <= radius {
        1.0
    } else if taper <= 0.0 || r >= radius + taper {
        0.0
    } else {
        let x = 1.0 - (r - radius) / taper;
        x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

impl InitialData {
    /// Samples `(u0, u1)` on the grid.
    pub fn sample(&self, e: &Exponents, grid: &RadialGrid) -> Result<PhysicalState> {
        let mut st = PhysicalState::zeros(0.0, grid.nr());
        match *self {
            InitialData::Zero => {}
            InitialData::Plateau { amplitude, velocity, radius, taper } => {
                for i in 0..grid.nr() {
                    let c = cutoff(grid.r(i), radius, taper);
                    st.u[i] = amplitude * c;
                    st.ut[i] = velocity * c;
                }
            }
            InitialData::OdePlateau { t_blowup, radius, taper } => {
                let (u0, u1) = ode_exact(e, t_blowup, 0.0)?;
                for i in 0..grid.nr() {
                    let c = cutoff(grid.r(i), radius, taper);
                    st.u[i] = u0 * c;
                    st.ut[i] = u1 * c;
                }
            }
            InitialData::Gaussian { amplitude, width } => {
                if !(width > 0.0) {
                    return Err(Error::InvalidParameter { name: "width", reason: format!("{width} must be positive") });
                }
                for i in 0..grid.nr() {
                    st.u[i] = amplitude * (-(grid.r(i) / width).powi(2)).exp();
                }
            }
        }
        let last = grid.nr() - 1;
        st.u[last] = 0.0;
        st.ut[last] = 0.0;
        Ok(st)
    }
}

/// When to keep a copy of the state for later resampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPolicy {
    /// Largest time gap between stored states.
    pub max_dt: f64,
    /// Stored states per e-fold of the estimated time to blow-up.
    pub per_efold: f64,
    /// Stored radius as a multiple of the estimated time to blow-up (full grid when larger).
    pub keep_factor: f64,
}

impl Default for SnapshotPolicy {
    fn default() -> Self {
        Self { max_dt: 5e-3, per_efold: 80.0, keep_factor: 4.0 }
    }
}

/// Everything needed to run the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Exponents.
    pub exponents: Exponents,
    /// Spatial grid.
    pub grid: RadialGrid,
    /// Courant number `dt/dr` away from blow-up.
    pub cfl: f64,
    /// Amplitude that ends the run.
    pub u_cap: f64,
    /// Initial data.
    pub initial_data: InitialData,
    /// Steps per e-fold of the time to blow-up near the singularity.
    pub steps_per_efold: f64,
    /// Step budget.
    pub max_steps: usize,
    /// Lower amplitude threshold for the blow-up fit.
    pub fit_threshold: f64,
    /// Storage policy.
    pub snapshots: SnapshotPolicy,
}

impl SolverConfig {
    /// Configuration with default numerical settings.
    pub fn new(exponents: Exponents, grid: RadialGrid, initial_data: InitialData) -> Self {
        Self {
            exponents,
            grid,
            cfl: 0.5,
            u_cap: 1e8,
            initial_data,
            steps_per_efold: 200.0,
            max_steps: 2_000_000,
            fit_threshold: 1e3,
            snapshots: SnapshotPolicy::default(),
        }
    }

    /// Checks ranges of the numerical settings.
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::InvalidParameter { name: "cfl", reason: format!("{} must lie in (0, 1)", self.cfl) });
        }
        if !(self.u_cap > self.fit_threshold && self.fit_threshold > 0.0) {
            return Err(Error::InvalidParameter { name: "u_cap", reason: format!("{} must exceed fit_threshold {}", self.u_cap, self.fit_threshold) });
        }
        if !(self.steps_per_efold >= 4.0) {
            return Err(Error::InvalidParameter { name: "steps_per_efold", reason: format!("{} is below 4", self.steps_per_efold) });
        }
        if !(self.snapshots.max_dt > 0.0 && self.snapshots.per_efold > 0.0 && self.snapshots.keep_factor >= 2.0) {
            return Err(Error::InvalidParameter { name: "snapshots", reason: format!("{:?}", self.snapshots) });
        }
        Ok(())
    }

    /// Base step `cfl·dr`.
    pub fn base_dt(&self) -> f64 {
        self.cfl * self.grid.dr()
    }
}

/// Writes `u_rr + (N-1)/r u_r + |u|^{p-1}u` into `acc`; the outer node is held at zero.
fn acceleration(e: &Exponents, grid: &RadialGrid, u: &[f64], acc: &mut [f64]) {
    let n = grid.nr();
    let dr = grid.dr();
    let inv_dr2 = 1.0 / (dr * dr);
    let nm1 = e.nf() - 1.0;
    acc[0] = e.nf() * 2.0 * (u[1] - u[0]) * inv_dr2 + e.nonlinearity(u[0]);
    for i in 1..n - 1 {
        let lap = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dr2 + nm1 / (i as f64) * (u[i + 1] - u[i - 1]) * 0.5 * inv_dr2;
        acc[i] = lap + e.nonlinearity(u[i]);
    }
    acc[n - 1] = 0.0;
}

/// One kick-drift-kick step of size `dt`, with `acc` holding the acceleration of `state` on
/// entry and of the new state on exit.
fn kdk(e: &Exponents, grid: &RadialGrid, state: &mut PhysicalState, acc: &mut [f64], dt: f64) {
    let h = 0.5 * dt;
    for ((u, v), a) in state.u.iter_mut().zip(state.ut.iter_mut()).zip(acc.iter()) {
        *v += h * a;
        *u += dt * *v;
    }
    acceleration(e, grid, &state.u, acc);
    for (v, a) in state.ut.iter_mut().zip(acc.iter()) {
        *v += h * a;
    }
    state.t += dt;
}

/// One leapfrog step with `dt = cfl·dr`.
pub fn step(state: &PhysicalState, cfg: &SolverConfig) -> Result<PhysicalState> {
    step_with_dt(state, cfg, cfg.base_dt())
}

/// One leapfrog step with an explicit `dt`.
pub fn step_with_dt(state: &PhysicalState, cfg: &SolverConfig, dt: f64) -> Result<PhysicalState> {
    let n = cfg.grid.nr();
    if state.u.len() != n || state.ut.len() != n {
        return Err(Error::InvalidParameter { name: "state", reason: format!("{} nodes, grid has {n}", state.u.len()) });
    }
    let mut acc = vec![0.0; n];
    acceleration(&cfg.exponents, &cfg.grid, &state.u, &mut acc);
    let mut next = state.clone();
    kdk(&cfg.exponents, &cfg.grid, &mut next, &mut acc, dt);
    if !next.is_finite() {
        return Err(Error::Overflow { t: next.t });
    }
    Ok(next)
}

/// A stored state restricted to the first `u.len()` grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredState {
    /// Time.
    pub t: f64,
    /// `t_final - t`, accumulated from the step sizes so that it keeps full relative precision
    /// close to blow-up.
    pub gap: f64,
    /// Field on nodes `0..len`.
    pub u: Vec<f64>,
    /// Time derivative on nodes `0..len`.
    pub ut: Vec<f64>,
}

impl StoredState {
    fn from_state(st: &PhysicalState, len: usize) -> Self {
        Self { t: st.t, gap: 0.0, u: st.u[..len].to_vec(), ut: st.ut[..len].to_vec() }
    }
}

/// Centre values after one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterSample {
    /// Time.
    pub t: f64,
    /// `t_final - t` (see [`StoredState::gap`]).
    pub gap: f64,
    /// `u(0, t)`.
    pub u: f64,
    /// `u_t(0, t)`.
    pub ut: f64,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// `max|u|` reached the cap.
    Blowup,
    /// The step budget ran out first.
    NoBlowup,
}

/// Output of [`run_until_blowup`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Exponents of the run.
    pub exponents: Exponents,
    /// Grid of the run.
    pub grid: RadialGrid,
    /// Stored states in increasing time.
    pub states: Vec<StoredState>,
    /// Centre values after every step.
    pub center: Vec<CenterSample>,
    /// Time of the final step.
    pub t_final: f64,
    /// How the run ended.
    pub status: RunStatus,
    /// Blow-up fit at the centre (present for blow-up runs).
    pub fit: Option<BlowupFit>,
    /// Number of steps taken.
    pub steps: usize,
    /// The centre of the diagnostic cone (the origin).
    pub blowup_center: [f64; 3],
}

impl Trajectory {
    /// Estimated blow-up time at the centre.
    pub fn t_est(&self) -> Option<f64> {
        self.fit.map(|f| f.t_est)
    }

    /// Estimated blow-up time, or an error for runs that did not blow up.
    pub fn require_t_est(&self) -> Result<f64> {
        match (self.status, self.fit) {
            (RunStatus::Blowup, Some(f)) => Ok(f.t_est),
            _ => {
                let last = self.center.last();
                Err(Error::NoBlowup { steps: self.steps, t: last.map_or(0.0, |c| c.t), max_u: last.map_or(0.0, |c| c.u.abs()) })
            }
        }
    }

    /// `T0 - t` for stored state `i`, accurate even when it is far below the resolution of `t`.
    pub fn tau(&self, i: usize, t0: f64) -> f64 {
        (t0 - self.t_final) + self.states[i].gap
    }

    /// `T_est - t_final` from the fit, or `None` for runs without blow-up.
    pub fn final_gap(&self) -> Option<f64> {
        self.fit.map(|f| f.gap_est)
    }

    /// Time range covered by stored states.
    pub fn time_range(&self) -> (f64, f64) {
        (self.states.first().map_or(0.0, |s| s.t), self.states.last().map_or(0.0, |s| s.t))
    }
}

/// Evolves the configured data until `max|u| ≥ u_cap` or the step budget is spent, then fits
/// the blow-up time from the centre values with `|u| ∈ [fit_threshold, u_cap]`.
pub fn run_until_blowup(cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let e = cfg.exponents;
    let grid = cfg.grid;
    let n = grid.nr();
    let mut state = cfg.initial_data.sample(&e, &grid)?;
    let mut acc = vec![0.0; n];
    acceleration(&e, &grid, &state.u, &mut acc);
    let base_dt = cfg.base_dt();
    let pol = cfg.snapshots;
    let dr = grid.dr();
    let kappa_e = kappa(&e);

    let keep_len = |tau: f64| -> usize {
        let r_keep = pol.keep_factor * tau + 8.0 * dr;
        if r_keep >= grid.r_max() {
            n
        } else {
            ((r_keep / dr).ceil() as usize + 1).min(n)
        }
    };
    let tau_of = |amp: f64| if amp > kappa_e { time_to_blowup_estimate(&e, amp) } else { f64::INFINITY };

    let mut max_u = state.max_abs_u();
    let mut states = vec![StoredState::from_state(&state, keep_len(tau_of(max_u)))];
    let mut center = vec![CenterSample { t: state.t, gap: 0.0, u: state.u[0], ut: state.ut[0] }];
    let mut dts: Vec<f64> = Vec::new();
    let mut stored_at = vec![0_usize];
    let mut last_store = state.t;
    let mut status = RunStatus::NoBlowup;
    let mut steps = 0;
    while steps < cfg.max_steps {
        let tau = tau_of(max_u);
        let dt = base_dt.min(tau / cfg.steps_per_efold);
        kdk(&e, &grid, &mut state, &mut acc, dt);
        dts.push(dt);
        steps += 1;
        if !state.is_finite() {
            return Err(Error::Overflow { t: state.t });
        }
        max_u = state.max_abs_u();
        center.push(CenterSample { t: state.t, gap: 0.0, u: state.u[0], ut: state.ut[0] });
        let capped = max_u >= cfg.u_cap;
        let tau_now = tau_of(max_u);
        if capped || state.t - last_store >= pol.max_dt.min(tau_now / pol.per_efold) {
            states.push(StoredState::from_state(&state, keep_len(tau_now)));
            stored_at.push(steps);
            last_store = state.t;
        }
        if capped {
            status = RunStatus::Blowup;
            break;
        }
    }
    // Backward accumulation of the step sizes gives t_final - t at full relative precision.
    let mut gap = 0.0;
    for k in (0..center.len()).rev() {
        center[k].gap = gap;
        if k > 0 {
            gap += dts[k - 1];
        }
    }
    for (st, &k) in states.iter_mut().zip(&stored_at) {
        st.gap = center[k].gap;
    }
    let t_final = state.t;
    let fit = match status {
        RunStatus::Blowup => {
            let gaps: Vec<f64> = center.iter().map(|c| c.gap).collect();
            let amps: Vec<f64> = center.iter().map(|c| c.u).collect();
            Some(fit_blowup_gaps(t_final, &gaps, &amps, cfg.fit_threshold)?)
        }
        RunStatus::NoBlowup => None,
    };
    Ok(Trajectory { exponents: e, grid, states, center, t_final, status, fit, steps, blowup_center: [0.0; 3] })
}

/// `∫_0^R (u_t^2 + u_r^2) r^{N-1} dr` by the trapezoid rule on grid nodes with `r ≤ R`.
pub fn radial_energy(e: &Exponents, grid: &RadialGrid, st: &PhysicalState, radius: f64) -> f64 {
    let dr = grid.dr();
    let m = ((radius / dr).floor() as usize).min(grid.nr() - 2);
    let dens = |i: usize| {
        let ur = if i == 0 { 0.0 } else { (st.u[i + 1] - st.u[i - 1]) / (2.0 * dr) };
        (st.ut[i] * st.ut[i] + ur * ur) * grid.r(i).powi(e.n() as i32 - 1)
    };
    let mut acc = 0.5 * (dens(0) + dens(m));
    for i in 1..m {
        acc += dens(i);
    }
    acc * dr
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(data: InitialData, nr: usize, r_max: f64) -> SolverConfig {
        SolverConfig::new(Exponents::new(4.0, 3).unwrap(), RadialGrid::new(r_max, nr).unwrap(), data)
    }

    #[test]
    fn zero_stays_zero() {
        let c = cfg(InitialData::Zero, 65, 2.0);
        let mut st = c.initial_data.sample(&c.exponents, &c.grid).unwrap();
        for _ in 0..50 {
            st = step(&st, &c).unwrap();
        }
        assert!(st.u.iter().chain(&st.ut).all(|v| *v == 0.0));
    }

    #[test]
    fn zero_data_reports_no_blowup() {
        let mut c = cfg(InitialData::Zero, 65, 2.0);
        c.max_steps = 200;
        let tr = run_until_blowup(&c).unwrap();
        assert_eq!(tr.status, RunStatus::NoBlowup);
        assert!(matches!(tr.require_t_est(), Err(Error::NoBlowup { .. })));
    }

    #[test]
    fn cutoff_is_smooth_step() {
        assert_eq!(cutoff(0.5, 1.0, 0.5), 1.0);
        assert_eq!(cutoff(1.6, 1.0, 0.5), 0.0);
        assert!((cutoff(1.25, 1.0, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn overflow_is_an_error() {
        let c = cfg(InitialData::Plateau { amplitude: 1e100, velocity: 0.0, radius: 1.0, taper: 0.5 }, 65, 2.0);
        let st = c.initial_data.sample(&c.exponents, &c.grid).unwrap();
        assert!(matches!(step(&st, &c), Err(Error::Overflow { .. })));
    }

    #[test]
    fn invalid_cfl_rejected() {
        let mut c = cfg(InitialData::Zero, 65, 2.0);
        c.cfl = 1.0;
        assert!(run_until_blowup(&c).is_err());
    }
}
