//! Observation model, prior and unnormalized log-posterior.
//!
//! Observations are the model's infectious curve plus i.i.d. Gaussian noise
//! with a known standard deviation. The log-likelihood drops the
//! `-T * ln(sigma * sqrt(2 pi))` term, which does not depend on the
//! parameters.

use std::sync::atomic::{AtomicU64, Ordering};

use log::warn;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{stream_rng, NOISE_STREAM};
use crate::sir::{integrate, Method, Scenario, SirParams};

/// Observation times must sit on the solver output grid within this many days.
pub const GRID_TOL: f64 = 1e-9;

/// Noisy infectious counts at a set of observation days.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    times: Vec<f64>,
    observed_i: Vec<f64>,
    sigma: f64,
}

impl Dataset {
    pub fn new(times: Vec<f64>, observed_i: Vec<f64>, sigma: f64) -> Result<Self> {
        let data = Self::unchecked_sigma(times, observed_i, sigma)?;
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(data)
    }

    fn unchecked_sigma(times: Vec<f64>, observed_i: Vec<f64>, sigma: f64) -> Result<Self> {
        if times.len() != observed_i.len() {
            return Err(invalid(format!(
                "{} observation times but {} counts",
                times.len(),
                observed_i.len()
            )));
        }
        if times.len() < 2 {
            return Err(invalid("a dataset needs at least two observations"));
        }
        if times.iter().chain(&observed_i).any(|x| !x.is_finite()) {
            return Err(invalid("observation times and counts must be finite"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("observation times must be strictly increasing"));
        }
        Ok(Self {
            times,
            observed_i,
            sigma,
        })
    }

    /// Same observations scored with a different noise scale.
    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        Self::new(self.times, self.observed_i, sigma)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn observed_i(&self) -> &[f64] {
        &self.observed_i
    }

    /// Noise standard deviation. Zero only for noiseless simulated data.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Independent uniform priors on `beta` and `gamma`, closed bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformPrior {
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
}

impl UniformPrior {
    pub fn new(beta_lo: f64, beta_hi: f64, gamma_lo: f64, gamma_hi: f64) -> Result<Self> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi;
        if !ok(beta_lo, beta_hi) {
            return Err(invalid(format!(
                "beta bounds must satisfy 0 < lo < hi, got [{beta_lo}, {beta_hi}]"
            )));
        }
        if !ok(gamma_lo, gamma_hi) {
            return Err(invalid(format!(
                "gamma bounds must satisfy 0 < lo < hi, got [{gamma_lo}, {gamma_hi}]"
            )));
        }
        Ok(Self {
            beta_lo,
            beta_hi,
            gamma_lo,
            gamma_hi,
        })
    }

    pub fn contains(&self, params: &SirParams) -> bool {
        (self.beta_lo..=self.beta_hi).contains(&params.beta)
            && (self.gamma_lo..=self.gamma_hi).contains(&params.gamma)
    }

    /// Center of the prior box.
    pub fn midpoint(&self) -> SirParams {
        SirParams {
            beta: 0.5 * (self.beta_lo + self.beta_hi),
            gamma: 0.5 * (self.gamma_lo + self.gamma_hi),
        }
    }
}

impl Default for UniformPrior {
    /// `beta ~ U(0.05, 1.0)`, `gamma ~ U(0.01, 0.5)`.
    fn default() -> Self {
        Self {
            beta_lo: 0.05,
            beta_hi: 1.0,
            gamma_lo: 0.01,
            gamma_hi: 0.5,
        }
    }
}

/// Recorded output times strictly before `t_end`: `t_end = 60` with daily
/// outputs yields days `0..=59`.
fn observation_records(scenario: &Scenario) -> Vec<usize> {
    (0..scenario.n_records())
        .filter(|&k| scenario.record_time(k) < scenario.t_end() - GRID_TOL)
        .collect()
}

/// Simulates noisy infectious counts from the RK4 solution.
///
/// Observations cover every recorded output before `t_end`. `sigma = 0`
/// returns the noiseless model curve; such a dataset must be given a positive
/// sigma with [`Dataset::with_sigma`] before it can be scored.
pub fn simulate_observations(
    scenario: &Scenario,
    params: &SirParams,
    sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(invalid(format!("sigma must be non-negative, got {sigma}")));
    }
    let traj = integrate(scenario, params, Method::Rk4)?;
    let mut rng = stream_rng(seed, NOISE_STREAM);
    let records = observation_records(scenario);
    let mut times = Vec::with_capacity(records.len());
    let mut observed = Vec::with_capacity(records.len());
    for k in records {
        let z: f64 = StandardNormal.sample(&mut rng);
        let model = traj.states()[k].i;
        times.push(traj.times()[k]);
        observed.push(if sigma == 0.0 { model } else { model + sigma * z });
    }
    Dataset::unchecked_sigma(times, observed, sigma)
}

/// Maps each observation time to its index on the scenario's output grid.
pub fn align_to_grid(data: &Dataset, scenario: &Scenario) -> Result<Vec<usize>> {
    data.times()
        .iter()
        .map(|&t| {
            scenario.record_index(t, GRID_TOL).ok_or_else(|| {
                invalid(format!(
                    "observation time {t} is not on the solver output grid"
                ))
            })
        })
        .collect()
}

fn check_sigma(data: &Dataset) -> Result<()> {
    if !(data.sigma.is_finite() && data.sigma > 0.0) {
        return Err(invalid(format!(
            "likelihood needs a positive sigma, dataset has {}",
            data.sigma
        )));
    }
    Ok(())
}

fn sum_sq_residuals(
    data: &Dataset,
    params: &SirParams,
    scenario: &Scenario,
    records: &[usize],
) -> Result<f64> {
    let traj = integrate(scenario, params, Method::Rk4)?;
    let states = traj.states();
    Ok(records
        .iter()
        .zip(data.observed_i())
        .map(|(&k, obs)| {
            let r = (obs - states[k].i) / data.sigma;
            r * r
        })
        .sum())
}

/// Gaussian log-likelihood up to a parameter-free constant.
///
/// Off-grid observation times are an error. A failed integration returns
/// `-inf` so a sampler can simply reject the proposal.
pub fn log_likelihood(data: &Dataset, params: &SirParams, scenario: &Scenario) -> Result<f64> {
    check_sigma(data)?;
    let records = align_to_grid(data, scenario)?;
    match sum_sq_residuals(data, params, scenario, &records) {
        Ok(ss) => Ok(-0.5 * ss),
        Err(e) => {
            warn!("likelihood at {params:?} set to -inf: {e}");
            Ok(f64::NEG_INFINITY)
        }
    }
}

/// Zero inside the prior box, `-inf` outside.
pub fn log_prior(params: &SirParams, prior: &UniformPrior) -> f64 {
    if prior.contains(params) {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

/// `log_prior + log_likelihood`; out-of-support parameters return `-inf`
/// without solving the ODE.
pub fn log_posterior(
    params: &SirParams,
    data: &Dataset,
    scenario: &Scenario,
    prior: &UniformPrior,
) -> Result<f64> {
    let lp = log_prior(params, prior);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(lp + log_likelihood(data, params, scenario)?)
}

/// Log-posterior bound to one dataset, with counters for ODE solves and
/// failed integrations.
///
/// Grid alignment is checked once at construction. The counters are atomic so
/// one posterior can serve several chains at once.
#[derive(Debug)]
pub struct SirPosterior {
    data: Dataset,
    scenario: Scenario,
    prior: UniformPrior,
    records: Vec<usize>,
    solves: AtomicU64,
    failures: AtomicU64,
}

impl SirPosterior {
    pub fn new(data: Dataset, scenario: Scenario, prior: UniformPrior) -> Result<Self> {
        check_sigma(&data)?;
        let records = align_to_grid(&data, &scenario)?;
        Ok(Self {
            data,
            scenario,
            prior,
            records,
            solves: AtomicU64::new(0),
            failures: AtomicU64::new(0),
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn prior(&self) -> &UniformPrior {
        &self.prior
    }

    /// Number of ODE integrations performed so far.
    pub fn solves(&self) -> u64 {
        self.solves.load(Ordering::Relaxed)
    }

    /// Number of integrations that failed and were scored as `-inf`.
    pub fn failures(&self) -> u64 {
        self.failures.load(Ordering::Relaxed)
    }

    pub fn log_likelihood(&self, params: &SirParams) -> f64 {
        self.solves.fetch_add(1, Ordering::Relaxed);
        match sum_sq_residuals(&self.data, params, &self.scenario, &self.records) {
            Ok(ss) => -0.5 * ss,
            Err(e) => {
                self.failures.fetch_add(1, Ordering::Relaxed);
                warn!("likelihood at {params:?} set to -inf: {e}");
                f64::NEG_INFINITY
            }
        }
    }

    pub fn log_posterior(&self, params: &SirParams) -> f64 {
        let lp = log_prior(params, &self.prior);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + self.log_likelihood(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use approx::assert_abs_diff_eq;

    fn truth() -> SirParams {
        SirParams {
            beta: 0.3,
            gamma: 0.1,
        }
    }

    #[test]
    fn noiseless_data_follows_model() {
        let sc = Scenario::default();
        let data = simulate_observations(&sc, &truth(), 0.0, 7).unwrap();
        let traj = integrate(&sc, &truth(), Method::Rk4).unwrap();
        assert_eq!(data.len(), 60);
        assert_eq!(data.times()[0], 0.0);
        assert_eq!(data.times()[59], 59.0);
        assert_eq!(data.observed_i(), &traj.infected()[..60]);
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let sc = Scenario::default();
        let a = simulate_observations(&sc, &truth(), 15.0, 42).unwrap();
        let b = simulate_observations(&sc, &truth(), 15.0, 42).unwrap();
        let c = simulate_observations(&sc, &truth(), 15.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.sigma(), 15.0);
    }

    #[test]
    fn perfect_fit_scores_zero() {
        let sc = Scenario::default();
        let data = simulate_observations(&sc, &truth(), 0.0, 1)
            .unwrap()
            .with_sigma(15.0)
            .unwrap();
        assert_eq!(log_likelihood(&data, &truth(), &sc).unwrap(), 0.0);
        let prior = UniformPrior::default();
        assert_eq!(log_posterior(&truth(), &data, &sc, &prior).unwrap(), 0.0);
    }

    #[test]
    fn one_sigma_residual_scores_minus_half() {
        // Disease-free scenario: the model curve is identically zero, so the
        // residuals are the observations themselves.
        let sc = Scenario::new(
            1000.0,
            crate::sir::SirState::new(1000.0, 0.0, 0.0),
            60.0,
            0.1,
            10,
        )
        .unwrap();
        let data = Dataset::new(vec![3.0, 4.0], vec![15.0, 0.0], 15.0).unwrap();
        assert_abs_diff_eq!(log_likelihood(&data, &truth(), &sc).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn off_grid_observation_is_rejected() {
        let sc = Scenario::default();
        let data = Dataset::new(vec![0.0, 1.5], vec![10.0, 12.0], 15.0).unwrap();
        assert!(matches!(
            log_likelihood(&data, &truth(), &sc),
            Err(Error::InvalidInput(_))
        ));
        assert!(SirPosterior::new(data, sc, UniformPrior::default()).is_err());
    }

    #[test]
    fn noiseless_dataset_cannot_be_scored() {
        let sc = Scenario::default();
        let data = simulate_observations(&sc, &truth(), 0.0, 1).unwrap();
        assert!(log_likelihood(&data, &truth(), &sc).is_err());
    }

    #[test]
    fn failed_integration_scores_minus_infinity() {
        // Sixty days at dt = 60 with gamma = 0.5 overshoots I below zero.
        let sc = Scenario::outbreak(1000.0, 10.0, 60.0, 60.0, 1).unwrap();
        let data = Dataset::new(vec![0.0, 60.0], vec![10.0, 0.0], 15.0).unwrap();
        let params = SirParams {
            beta: 0.06,
            gamma: 0.5,
        };
        assert_eq!(log_likelihood(&data, &params, &sc).unwrap(), f64::NEG_INFINITY);
        let post = SirPosterior::new(data, sc, UniformPrior::default()).unwrap();
        assert_eq!(post.log_posterior(&params), f64::NEG_INFINITY);
        assert_eq!(post.failures(), 1);
    }

    #[test]
    fn prior_support() {
        let prior = UniformPrior::default();
        assert_eq!(log_prior(&truth(), &prior), 0.0);
        let outside = SirParams { beta: 1.5, gamma: 0.1 };
        assert_eq!(log_prior(&outside, &prior), f64::NEG_INFINITY);
        let edge = SirParams { beta: 0.05, gamma: 0.1 };
        assert_eq!(log_prior(&edge, &prior), 0.0);
        let edge = SirParams { beta: 1.0, gamma: 0.5 };
        assert_eq!(log_prior(&edge, &prior), 0.0);
        let nan = SirParams { beta: f64::NAN, gamma: 0.1 };
        assert_eq!(log_prior(&nan, &prior), f64::NEG_INFINITY);
    }

    #[test]
    fn prior_validation() {
        assert!(UniformPrior::new(0.0, 1.0, 0.01, 0.5).is_err());
        assert!(UniformPrior::new(0.5, 0.5, 0.01, 0.5).is_err());
        assert!(UniformPrior::new(0.05, 1.0, 0.5, 0.01).is_err());
        let p = UniformPrior::new(0.05, 1.0, 0.01, 0.5).unwrap();
        assert_eq!(p, UniformPrior::default());
        let mid = p.midpoint();
        assert_abs_diff_eq!(mid.beta, 0.525, epsilon = 1e-15);
        assert_abs_diff_eq!(mid.gamma, 0.255, epsilon = 1e-15);
    }

    #[test]
    fn out_of_support_skips_the_solver() {
        let sc = Scenario::default();
        let data = simulate_observations(&sc, &truth(), 15.0, 42).unwrap();
        let post = SirPosterior::new(data.clone(), sc.clone(), UniformPrior::default()).unwrap();
        let outside = SirParams { beta: -0.2, gamma: 0.1 };
        assert_eq!(post.log_posterior(&outside), f64::NEG_INFINITY);
        assert_eq!(post.solves(), 0);
        let lp = post.log_posterior(&truth());
        assert_eq!(post.solves(), 1);
        assert_eq!(lp, log_likelihood(&data, &truth(), &sc).unwrap());
        assert_eq!(lp, log_posterior(&truth(), &data, &sc, post.prior()).unwrap());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![0.0], vec![1.0], 1.0).is_err());
        assert!(Dataset::new(vec![0.0, 1.0], vec![1.0], 1.0).is_err());
        assert!(Dataset::new(vec![1.0, 0.0], vec![1.0, 2.0], 1.0).is_err());
        assert!(Dataset::new(vec![0.0, 1.0], vec![1.0, 2.0], 0.0).is_err());
        assert!(Dataset::new(vec![0.0, 1.0], vec![-4.0, 2.0], 1.0).is_ok());
    }
}
