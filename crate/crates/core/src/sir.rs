//! SIR compartmental model: state, parameters and fixed-step integration.
//!
//! The model moves people from Susceptible to Infectious at rate
//! `beta * S * I / N` and from Infectious to Recovered at rate `gamma * I`.
//! States are stored as reals; the ODE is a continuous approximation of the
//! underlying counts.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default cap on the number of solver steps in a single integration.
pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

/// Relative tolerance for matching `t_end / dt` to a whole number of steps.
const STEP_GRID_TOL: f64 = 1e-9;

/// Negative values down to `-UNDERSHOOT_TOL * N` are clamped to zero.
const UNDERSHOOT_TOL: f64 = 1e-9;

/// Transmission and recovery rates, both per day.
///
/// Fields are public so that a random-walk proposal can step outside the
/// positive quadrant; use [`SirParams::new`] for validated construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub beta: f64,
    pub gamma: f64,
}

impl SirParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid(format!("beta must be finite and positive, got {beta}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid(format!("gamma must be finite and positive, got {gamma}")));
        }
        Ok(Self { beta, gamma })
    }

    /// Basic reproduction number `beta / gamma`.
    pub fn r0(&self) -> Result<f64> {
        r0(self)
    }
}

/// Compartment sizes at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SirState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

impl SirState {
    pub fn new(s: f64, i: f64, r: f64) -> Self {
        Self { s, i, r }
    }

    pub fn total(&self) -> f64 {
        self.s + self.i + self.r
    }

    fn is_finite(&self) -> bool {
        self.s.is_finite() && self.i.is_finite() && self.r.is_finite()
    }

    fn axpy(&self, h: f64, d: &Derivatives) -> SirState {
        SirState {
            s: self.s + h * d.ds,
            i: self.i + h * d.di,
            r: self.r + h * d.dr,
        }
    }
}

/// Time derivatives of the three compartments, persons per day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub ds: f64,
    pub di: f64,
    pub dr: f64,
}

/// Integration scheme for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Euler => f.write_str("euler"),
            Method::Rk4 => f.write_str("rk4"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            other => Err(invalid(format!("unknown integration method `{other}`"))),
        }
    }
}

/// Population, initial condition and solver grid of one outbreak.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    population: f64,
    initial: SirState,
    t_end: f64,
    dt: f64,
    obs_stride: usize,
    n_steps: u64,
    max_steps: u64,
}

impl Scenario {
    /// Validates the scenario.
    ///
    /// `t_end / dt` must be within `1e-9` (relative) of an integer step count,
    /// and that count must be a multiple of `obs_stride` so the last recorded
    /// output lands on `t_end`.
    pub fn new(
        population: f64,
        initial: SirState,
        t_end: f64,
        dt: f64,
        obs_stride: usize,
    ) -> Result<Self> {
        if !(population.is_finite() && population > 0.0) {
            return Err(invalid(format!("population must be positive, got {population}")));
        }
        if !initial.is_finite() || initial.s < 0.0 || initial.i < 0.0 || initial.r < 0.0 {
            return Err(invalid(format!(
                "initial compartments must be finite and non-negative, got {initial:?}"
            )));
        }
        // Exact up to a few ulps, so that S = N - I0 - R0 computed by callers passes.
        if (initial.total() - population).abs() > 4.0 * f64::EPSILON * population {
            return Err(invalid(format!(
                "initial compartments sum to {}, expected population {population}",
                initial.total()
            )));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(invalid(format!("t_end must be positive, got {t_end}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        if dt > t_end {
            return Err(invalid(format!("dt ({dt}) exceeds t_end ({t_end})")));
        }
        if obs_stride == 0 {
            return Err(invalid("obs_stride must be at least 1"));
        }
        let ratio = t_end / dt;
        let n_steps = ratio.round();
        if ((n_steps - ratio) / ratio).abs() > STEP_GRID_TOL {
            return Err(invalid(format!(
                "t_end ({t_end}) is not a whole number of dt ({dt}) steps"
            )));
        }
        if n_steps >= u64::MAX as f64 {
            return Err(invalid(format!("step count {n_steps} is not representable")));
        }
        let n_steps = n_steps as u64;
        if !n_steps.is_multiple_of(obs_stride as u64) {
            return Err(invalid(format!(
                "step count {n_steps} is not a multiple of obs_stride {obs_stride}"
            )));
        }
        Ok(Self {
            population,
            initial,
            t_end,
            dt,
            obs_stride,
            n_steps,
            max_steps: DEFAULT_MAX_STEPS,
        })
    }

    /// Scenario starting from `initial_infected` cases in an otherwise fully
    /// susceptible population.
    pub fn outbreak(
        population: f64,
        initial_infected: f64,
        t_end: f64,
        dt: f64,
        obs_stride: usize,
    ) -> Result<Self> {
        let initial = SirState::new(population - initial_infected, initial_infected, 0.0);
        Self::new(population, initial, t_end, dt, obs_stride)
    }

    /// Same scenario with a different cap on the step count.
    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    /// Same population and initial state on a different solver grid.
    pub fn with_grid(&self, t_end: f64, dt: f64, obs_stride: usize) -> Result<Self> {
        Ok(Self::new(self.population, self.initial, t_end, dt, obs_stride)?
            .with_max_steps(self.max_steps))
    }

    pub fn population(&self) -> f64 {
        self.population
    }

    pub fn initial(&self) -> SirState {
        self.initial
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn obs_stride(&self) -> usize {
        self.obs_stride
    }

    pub fn n_steps(&self) -> u64 {
        self.n_steps
    }

    pub fn max_steps(&self) -> u64 {
        self.max_steps
    }

    /// Number of recorded outputs, including `t = 0`.
    pub fn n_records(&self) -> usize {
        (self.n_steps / self.obs_stride as u64) as usize + 1
    }

    /// Time of the `k`-th recorded output.
    pub fn record_time(&self, k: usize) -> f64 {
        let step = (k * self.obs_stride) as f64;
        self.t_end * step / self.n_steps as f64
    }

    /// All recorded output times, `0` through `t_end`.
    pub fn record_times(&self) -> Vec<f64> {
        (0..self.n_records()).map(|k| self.record_time(k)).collect()
    }

    /// Index of the recorded output at time `t`, if `t` lies on the output
    /// grid within `tol` days.
    pub fn record_index(&self, t: f64, tol: f64) -> Option<usize> {
        if !t.is_finite() {
            return None;
        }
        let spacing = self.t_end * self.obs_stride as f64 / self.n_steps as f64;
        let k = (t / spacing).round();
        if k < 0.0 || k >= self.n_records() as f64 {
            return None;
        }
        let k = k as usize;
        ((self.record_time(k) - t).abs() <= tol).then_some(k)
    }
}

impl Default for Scenario {
    /// 1000 people, 10 initially infectious, 60 days at `dt = 0.1` with daily
    /// outputs.
    fn default() -> Self {
        Self::outbreak(1000.0, 10.0, 60.0, 0.1, 10).expect("default scenario is valid")
    }
}

/// Numerical solution on the recorded output grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<SirState>,
}

impl Trajectory {
    /// Builds a trajectory from matching time and state lists.
    pub fn new(times: Vec<f64>, states: Vec<SirState>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(invalid(format!(
                "trajectory needs equal, non-zero numbers of times and states (got {} and {})",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("trajectory times must be strictly increasing"));
        }
        Ok(Self { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SirState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &SirState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn susceptible(&self) -> Vec<f64> {
        self.states.iter().map(|x| x.s).collect()
    }

    pub fn infected(&self) -> Vec<f64> {
        self.states.iter().map(|x| x.i).collect()
    }

    pub fn recovered(&self) -> Vec<f64> {
        self.states.iter().map(|x| x.r).collect()
    }

    /// Index of the largest infectious count (first one on ties).
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (k, st) in self.states.iter().enumerate() {
            if st.i > self.states[best].i {
                best = k;
            }
        }
        best
    }
}

fn check_finite_state(state: &SirState, population: f64) -> Result<()> {
    if !state.is_finite() {
        return Err(invalid(format!("state must be finite, got {state:?}")));
    }
    if !(population.is_finite() && population > 0.0) {
        return Err(invalid(format!("population must be positive, got {population}")));
    }
    Ok(())
}

/// Right-hand side of the SIR system.
pub fn derivatives(state: &SirState, params: &SirParams, population: f64) -> Result<Derivatives> {
    check_finite_state(state, population)?;
    if !(params.beta.is_finite() && params.gamma.is_finite()) {
        return Err(invalid(format!("parameters must be finite, got {params:?}")));
    }
    let infection = params.beta * state.s * state.i / population;
    let recovery = params.gamma * state.i;
    Ok(Derivatives {
        ds: -infection,
        di: infection - recovery,
        dr: recovery,
    })
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(invalid(format!("dt must be finite and non-negative, got {dt}")));
    }
    Ok(())
}

/// One forward Euler step.
pub fn step_euler(state: &SirState, params: &SirParams, population: f64, dt: f64) -> Result<SirState> {
    check_dt(dt)?;
    let d = derivatives(state, params, population)?;
    Ok(state.axpy(dt, &d))
}

/// One classical fourth-order Runge-Kutta step.
pub fn step_rk4(state: &SirState, params: &SirParams, population: f64, dt: f64) -> Result<SirState> {
    check_dt(dt)?;
    let k1 = derivatives(state, params, population)?;
    let k2 = derivatives(&state.axpy(0.5 * dt, &k1), params, population)?;
    let k3 = derivatives(&state.axpy(0.5 * dt, &k2), params, population)?;
    let k4 = derivatives(&state.axpy(dt, &k3), params, population)?;
    let w = dt / 6.0;
    Ok(SirState {
        s: state.s + w * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds),
        i: state.i + w * (k1.di + 2.0 * k2.di + 2.0 * k3.di + k4.di),
        r: state.r + w * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr),
    })
}

/// Clamps tiny negative undershoot to zero; anything larger means the step
/// size is too coarse for these parameters.
fn settle(mut state: SirState, population: f64, t: f64) -> Result<SirState> {
    if !state.is_finite() {
        return Err(Error::Numerical(format!("non-finite state {state:?} at t = {t}")));
    }
    let floor = -UNDERSHOOT_TOL * population;
    for (name, x) in [("S", &mut state.s), ("I", &mut state.i), ("R", &mut state.r)] {
        if *x < 0.0 {
            if *x < floor {
                return Err(Error::Numerical(format!(
                    "{name} fell to {x} at t = {t}; reduce dt"
                )));
            }
            warn!("clamping {name} = {x} to zero at t = {t}");
            *x = 0.0;
        }
    }
    Ok(state)
}

/// Integrates the scenario and records every `obs_stride`-th state.
pub fn integrate(scenario: &Scenario, params: &SirParams, method: Method) -> Result<Trajectory> {
    if scenario.n_steps > scenario.max_steps {
        return Err(Error::TooManySteps {
            steps: scenario.n_steps,
            limit: scenario.max_steps,
        });
    }
    let step = match method {
        Method::Euler => step_euler,
        Method::Rk4 => step_rk4,
    };
    let n = scenario.population;
    let stride = scenario.obs_stride as u64;
    let mut times = Vec::with_capacity(scenario.n_records());
    let mut states = Vec::with_capacity(scenario.n_records());
    let mut state = scenario.initial;
    times.push(0.0);
    states.push(state);
    for k in 1..=scenario.n_steps {
        state = step(&state, params, n, scenario.dt)?;
        let t = scenario.t_end * k as f64 / scenario.n_steps as f64;
        state = settle(state, n, t)?;
        if k % stride == 0 {
            times.push(t);
            states.push(state);
        }
    }
    Ok(Trajectory { times, states })
}

/// Basic reproduction number `beta / gamma`.
pub fn r0(params: &SirParams) -> Result<f64> {
    if !(params.gamma.is_finite() && params.gamma > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {}", params.gamma)));
    }
    Ok(params.beta / params.gamma)
}

/// Susceptible count `N * gamma / beta` at which the infectious curve peaks.
pub fn peak_susceptibles(params: &SirParams, population: f64) -> Result<f64> {
    if !(params.beta.is_finite() && params.beta > 0.0) {
        return Err(invalid(format!("beta must be positive, got {}", params.beta)));
    }
    Ok(population * params.gamma / params.beta)
}

/// Fraction of the population recovered by the end of the trajectory.
pub fn final_size(traj: &Trajectory, population: f64) -> Result<f64> {
    if !(population.is_finite() && population > 0.0) {
        return Err(invalid(format!("population must be positive, got {population}")));
    }
    Ok(traj.last().r / population)
}
