//! Posterior summaries and posterior predictive checks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::inference::{Dataset, GRID_TOL};
use crate::rng::{stream_rng, PREDICTIVE_STREAM};
use crate::sir::{integrate, r0, Method, Scenario, SirParams};

/// Default number of posterior predictive trajectories.
pub const DEFAULT_DRAWS: usize = 100;

/// Default credible level.
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Sample mean and standard deviation, dividing by `M` rather than `M - 1`.
pub fn posterior_mean_std(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(invalid(format!(
            "mean and std need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m;
    Ok((mean, var.sqrt()))
}

/// Linearly interpolated quantile of sorted data (`h = (n - 1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Equal-tailed credible interval from interpolated empirical quantiles.
pub fn credible_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 10 {
        return Err(invalid(format!(
            "credible interval needs at least 10 samples, got {}",
            samples.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("level must lie in (0, 1), got {level}")));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(invalid("samples must be finite"));
    }
    let sorted = sorted_copy(samples);
    let tail = 0.5 * (1.0 - level);
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}

/// Per-sample reproduction numbers `beta / gamma`.
pub fn derived_r0_samples(samples: &[SirParams]) -> Result<Vec<f64>> {
    samples.iter().map(r0).collect()
}

/// Mean, std and credible interval of one scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub mean: f64,
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
}

impl ParameterSummary {
    pub fn from_samples(samples: &[f64], level: f64) -> Result<Self> {
        let (mean, std) = posterior_mean_std(samples)?;
        let (ci_low, ci_high) = credible_interval(samples, level)?;
        Ok(Self {
            mean,
            std,
            ci_low,
            ci_high,
            level,
        })
    }
}

/// Summaries of `beta`, `gamma` and the derived `R0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub beta: ParameterSummary,
    pub gamma: ParameterSummary,
    pub r0: ParameterSummary,
}

impl PosteriorSummary {
    pub fn from_params(samples: &[SirParams], level: f64) -> Result<Self> {
        let betas: Vec<f64> = samples.iter().map(|p| p.beta).collect();
        let gammas: Vec<f64> = samples.iter().map(|p| p.gamma).collect();
        let r0s = derived_r0_samples(samples)?;
        Ok(Self {
            beta: ParameterSummary::from_samples(&betas, level)?,
            gamma: ParameterSummary::from_samples(&gammas, level)?,
            r0: ParameterSummary::from_samples(&r0s, level)?,
        })
    }
}

/// Envelope and quantile band of the predicted infectious count at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub t: f64,
    pub q_min: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub q_max: f64,
}

/// Result of a posterior predictive check.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveCheck {
    /// Parameter pairs drawn from the posterior, in draw order.
    pub drawn: Vec<SirParams>,
    /// Output times shared by every trajectory.
    pub times: Vec<f64>,
    /// Infectious curve of each draw.
    pub curves: Vec<Vec<f64>>,
    pub band: Vec<BandPoint>,
}

impl PredictiveCheck {
    /// Fraction of observations inside `[q_min - margin, q_max + margin]` at
    /// their time. Observations off the band's time grid count as outside.
    pub fn fraction_inside(&self, data: &Dataset, margin: f64) -> f64 {
        let inside = data
            .times()
            .iter()
            .zip(data.observed_i())
            .filter(|(&t, &y)| {
                self.band
                    .iter()
                    .find(|b| (b.t - t).abs() <= GRID_TOL)
                    .is_some_and(|b| y >= b.q_min - margin && y <= b.q_max + margin)
            })
            .count();
        inside as f64 / data.len() as f64
    }
}

/// Draws `n_draws` posterior samples uniformly with replacement, integrates
/// each with RK4, and summarizes the infectious curves pointwise.
pub fn posterior_predictive(
    samples: &[SirParams],
    n_draws: usize,
    scenario: &Scenario,
    seed: u64,
) -> Result<PredictiveCheck> {
    if samples.is_empty() {
        return Err(invalid("posterior predictive check needs at least one sample"));
    }
    if n_draws == 0 {
        return Err(invalid("n_draws must be at least 1"));
    }
    let mut rng = stream_rng(seed, PREDICTIVE_STREAM);
    let drawn: Vec<SirParams> = (0..n_draws)
        .map(|_| samples[rng.random_range(0..samples.len())])
        .collect();
    let trajectories = drawn
        .iter()
        .map(|p| integrate(scenario, p, Method::Rk4))
        .collect::<Result<Vec<_>>>()?;
    let times = scenario.record_times();
    let curves: Vec<Vec<f64>> = trajectories.iter().map(|t| t.infected()).collect();
    let band = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let column = sorted_copy(&curves.iter().map(|c| c[k]).collect::<Vec<_>>());
            BandPoint {
                t,
                q_min: column[0],
                q025: quantile_sorted(&column, 0.025),
                q50: quantile_sorted(&column, 0.5),
                q975: quantile_sorted(&column, 0.975),
                q_max: column[column.len() - 1],
            }
        })
        .collect();
    Ok(PredictiveCheck {
        drawn,
        times,
        curves,
        band,
    })
}
