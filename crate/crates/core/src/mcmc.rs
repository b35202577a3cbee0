//! Random-walk Metropolis-Hastings over `(beta, gamma)`.
//!
//! Each iteration draws a Gaussian random-walk proposal, scores it once, and
//! accepts it iff `ln(u) < min(0, lp_new - lp_old)` for `u ~ U(0, 1)`. The
//! uniform is drawn on every iteration, uphill moves included, so the
//! generator stream advances by the same amount regardless of the target.
//! The current state's log-posterior is cached between iterations.

use std::thread;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};
use crate::sir::SirParams;

/// Unnormalized log density over the parameter pair.
pub trait LogTarget {
    fn log_target(&self, params: &SirParams) -> f64;
}

impl<F> LogTarget for F
where
    F: Fn(&SirParams) -> f64,
{
    fn log_target(&self, params: &SirParams) -> f64 {
        self(params)
    }
}

impl LogTarget for crate::inference::SirPosterior {
    fn log_target(&self, params: &SirParams) -> f64 {
        self.log_posterior(params)
    }
}

/// Sampler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Number of iterations after the initial state.
    pub n_iter: usize,
    /// Proposal standard deviation.
    pub step_delta: f64,
    /// Separate proposal standard deviation for `gamma`; `None` reuses
    /// `step_delta`. Zero pins `gamma` at its initial value.
    pub gamma_step: Option<f64>,
    /// Leading iterations discarded before summarizing.
    pub burn_in: usize,
    pub seed: u64,
    pub init: SirParams,
    /// Independent chains, one generator stream each.
    pub n_chains: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_iter: 8000,
            step_delta: 0.015,
            gamma_step: None,
            burn_in: 2000,
            seed: 43,
            init: SirParams {
                beta: 0.525,
                gamma: 0.255,
            },
            n_chains: 1,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_iter == 0 {
            problems.push("n_iter must be positive".to_string());
        }
        if !(self.step_delta.is_finite() && self.step_delta > 0.0) {
            problems.push(format!("step_delta must be positive, got {}", self.step_delta));
        }
        if let Some(g) = self.gamma_step {
            if !(g.is_finite() && g >= 0.0) {
                problems.push(format!("gamma_step must be non-negative, got {g}"));
            }
        }
        if self.burn_in >= self.n_iter {
            problems.push(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            ));
        }
        if !(self.init.beta.is_finite() && self.init.gamma.is_finite()) {
            problems.push(format!("init must be finite, got {:?}", self.init));
        }
        if self.n_chains == 0 {
            problems.push("n_chains must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    fn steps(&self) -> (f64, f64) {
        (self.step_delta, self.gamma_step.unwrap_or(self.step_delta))
    }
}

/// One stored chain state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub params: SirParams,
    pub log_post: f64,
    /// Whether this iteration's proposal was accepted. Always false for the
    /// initial state.
    pub accepted: bool,
}

/// Which iterations an acceptance rate covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateRange {
    All,
    PostBurnIn,
}

/// An MCMC run: the initial state followed by `n_iter` iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    samples: Vec<ChainSample>,
    config: McmcConfig,
}

impl Chain {
    /// Rebuilds a chain from stored samples, checking the chain invariants.
    /// `config.n_iter` must equal `samples.len() - 1`.
    pub fn from_samples(samples: Vec<ChainSample>, config: McmcConfig) -> Result<Self> {
        config.validate()?;
        if samples.len() != config.n_iter + 1 {
            return Err(Error::InvalidInput(format!(
                "chain has {} samples, expected n_iter + 1 = {}",
                samples.len(),
                config.n_iter + 1
            )));
        }
        if samples[0].params != config.init {
            return Err(Error::InvalidInput(
                "first chain sample differs from the initial state".into(),
            ));
        }
        for (k, w) in samples.windows(2).enumerate() {
            if !w[1].accepted && w[1].params != w[0].params {
                return Err(Error::InvalidInput(format!(
                    "iteration {} is marked rejected but moved",
                    k + 1
                )));
            }
        }
        if let Some(k) = samples.iter().position(|s| !s.log_post.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "iteration {k} has a non-finite log-posterior"
            )));
        }
        Ok(Self { samples, config })
    }

    pub fn samples(&self) -> &[ChainSample] {
        &self.samples
    }

    pub fn config(&self) -> &McmcConfig {
        &self.config
    }

    pub fn n_iter(&self) -> usize {
        self.config.n_iter
    }

    pub fn post_burn_in(&self) -> &[ChainSample] {
        split_burn_in(&self.samples, self.config.burn_in)
    }

    pub fn acceptance_rate(&self, range: RateRange) -> f64 {
        match range {
            RateRange::All => acceptance_rate(&self.samples[1..]),
            RateRange::PostBurnIn => acceptance_rate(self.post_burn_in()),
        }
    }
}

/// Drops the initial state and the first `burn_in` iterates.
pub fn split_burn_in(samples: &[ChainSample], burn_in: usize) -> &[ChainSample] {
    samples.get(burn_in + 1..).unwrap_or(&[])
}

/// Fraction of accepted proposals among `iterates`; zero for an empty slice.
pub fn acceptance_rate(iterates: &[ChainSample]) -> f64 {
    if iterates.is_empty() {
        return 0.0;
    }
    let n = iterates.iter().filter(|s| s.accepted).count();
    n as f64 / iterates.len() as f64
}

/// Gaussian random-walk proposal with standard deviation `step_delta` on both
/// coordinates.
pub fn propose<R: Rng + ?Sized>(current: &SirParams, step_delta: f64, rng: &mut R) -> SirParams {
    propose_scaled(current, step_delta, step_delta, rng)
}

fn propose_scaled<R: Rng + ?Sized>(
    current: &SirParams,
    beta_step: f64,
    gamma_step: f64,
    rng: &mut R,
) -> SirParams {
    let eb: f64 = StandardNormal.sample(rng);
    let eg: f64 = StandardNormal.sample(rng);
    SirParams {
        beta: current.beta + beta_step * eb,
        gamma: current.gamma + gamma_step * eg,
    }
}

/// `min(0, new - old)`; a non-finite or NaN proposal score yields `-inf`.
pub fn acceptance_log_ratio(log_post_new: f64, log_post_old: f64) -> f64 {
    if log_post_new.is_nan() || log_post_new == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    (log_post_new - log_post_old).min(0.0)
}

/// Draws `u ~ U(0, 1)` and accepts iff `ln(u) < log_alpha`.
pub fn accept<R: Rng + ?Sized>(log_alpha: f64, rng: &mut R) -> bool {
    let u: f64 = rng.sample(Open01);
    u.ln() < log_alpha
}

fn run_stream<T: LogTarget + ?Sized>(
    config: &McmcConfig,
    target: &T,
    mut rng: StreamRng,
) -> Result<Chain> {
    let init_lp = target.log_target(&config.init);
    if !init_lp.is_finite() {
        return Err(Error::Config(format!(
            "initial state {:?} has log-posterior {init_lp}; it must lie inside the prior support",
            config.init
        )));
    }
    let (beta_step, gamma_step) = config.steps();
    let mut samples = Vec::with_capacity(config.n_iter + 1);
    let mut current = ChainSample {
        params: config.init,
        log_post: init_lp,
        accepted: false,
    };
    samples.push(current);
    for _ in 0..config.n_iter {
        let candidate = propose_scaled(&current.params, beta_step, gamma_step, &mut rng);
        let lp = target.log_target(&candidate);
        let log_alpha = acceptance_log_ratio(lp, current.log_post);
        current = if accept(log_alpha, &mut rng) {
            ChainSample {
                params: candidate,
                log_post: lp,
                accepted: true,
            }
        } else {
            ChainSample {
                accepted: false,
                ..current
            }
        };
        samples.push(current);
    }
    Ok(Chain {
        samples,
        config: config.clone(),
    })
}

/// Runs one chain on generator stream 0.
pub fn run_chain<T: LogTarget + ?Sized>(config: &McmcConfig, target: &T) -> Result<Chain> {
    config.validate()?;
    run_stream(config, target, stream_rng(config.seed, 0))
}

/// Runs `config.n_chains` independent chains in parallel, chain `k` on stream
/// `k`. Results come back in stream order.
pub fn run_chains<T: LogTarget + Sync + ?Sized>(
    config: &McmcConfig,
    target: &T,
) -> Result<Vec<Chain>> {
    config.validate()?;
    thread::scope(|scope| {
        let handles: Vec<_> = (0..config.n_chains as u64)
            .map(|k| scope.spawn(move || run_stream(config, target, stream_rng(config.seed, k))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn center() -> SirParams {
        SirParams {
            beta: 0.525,
            gamma: 0.255,
        }
    }

    fn in_box(p: &SirParams) -> f64 {
        if (0.05..=1.0).contains(&p.beta) && (0.01..=0.5).contains(&p.gamma) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    #[test]
    fn log_ratio_cases() {
        assert_eq!(acceptance_log_ratio(-3.0, -3.0), 0.0);
        assert_eq!(acceptance_log_ratio(-1.0, -5.0), 0.0);
        assert_abs_diff_eq!(
            acceptance_log_ratio(-5.0 + 0.5f64.ln(), -5.0),
            0.5f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(acceptance_log_ratio(f64::NEG_INFINITY, -5.0), f64::NEG_INFINITY);
        assert_eq!(acceptance_log_ratio(f64::NAN, -5.0), f64::NEG_INFINITY);
    }

    #[test]
    fn minus_infinity_is_never_accepted() {
        let mut rng = stream_rng(1, 0);
        assert!((0..10_000).all(|_| !accept(f64::NEG_INFINITY, &mut rng)));
        assert!((0..10_000).all(|_| accept(0.0, &mut rng)));
    }

    #[test]
    fn half_acceptance() {
        let mut rng = stream_rng(2, 0);
        let n = 100_000;
        let hits = (0..n).filter(|_| accept(0.5f64.ln(), &mut rng)).count();
        assert!((hits as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn zero_step_proposal_stays_put() {
        let mut rng = stream_rng(3, 0);
        assert_eq!(propose(&center(), 0.0, &mut rng), center());
    }

    #[test]
    fn proposals_are_deterministic() {
        let mut a = stream_rng(9, 0);
        let mut b = stream_rng(9, 0);
        for _ in 0..100 {
            assert_eq!(propose(&center(), 0.015, &mut a), propose(&center(), 0.015, &mut b));
        }
    }

    #[test]
    fn proposal_spread_matches_step() {
        let mut rng = stream_rng(11, 0);
        let n = 100_000;
        let delta = 0.015;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let d = propose(&center(), delta, &mut rng).beta - center().beta;
            sum += d;
            sum_sq += d * d;
        }
        let mean = sum / n as f64;
        let sd = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!((sd / delta - 1.0).abs() < 0.02, "sd = {sd}");
    }

    #[test]
    fn flat_target_accepts_nearly_everything() {
        let config = McmcConfig {
            n_iter: 5000,
            step_delta: 1e-3,
            burn_in: 0,
            ..McmcConfig::default()
        };
        let chain = run_chain(&config, &in_box).unwrap();
        assert!(chain.acceptance_rate(RateRange::All) > 0.99);
    }

    #[test]
    fn chain_structure() {
        let config = McmcConfig {
            n_iter: 500,
            step_delta: 0.2,
            burn_in: 100,
            ..McmcConfig::default()
        };
        let chain = run_chain(&config, &in_box).unwrap();
        let s = chain.samples();
        assert_eq!(s.len(), 501);
        assert_eq!(s[0].params, config.init);
        assert!(!s[0].accepted);
        for w in s.windows(2) {
            if !w[1].accepted {
                assert_eq!(w[1].params.beta.to_bits(), w[0].params.beta.to_bits());
                assert_eq!(w[1].params.gamma.to_bits(), w[0].params.gamma.to_bits());
            }
        }
        assert!(s.iter().all(|x| x.log_post.is_finite()));
        assert_eq!(chain.post_burn_in().len(), 400);
        let rate = chain.acceptance_rate(RateRange::All);
        assert!(rate > 0.0 && rate < 1.0);
        assert_eq!(Chain::from_samples(s.to_vec(), config).unwrap(), chain);
    }

    #[test]
    fn rejected_chain_has_zero_rate() {
        let config = McmcConfig {
            n_iter: 50,
            burn_in: 0,
            ..McmcConfig::default()
        };
        let pinned = config.init;
        let point = move |p: &SirParams| if *p == pinned { 0.0 } else { f64::NEG_INFINITY };
        let chain = run_chain(&config, &point).unwrap();
        assert_eq!(chain.acceptance_rate(RateRange::All), 0.0);
        assert_eq!(chain.acceptance_rate(RateRange::PostBurnIn), 0.0);
    }

    #[test]
    fn burn_in_split_lengths() {
        let samples = vec![
            ChainSample {
                params: center(),
                log_post: 0.0,
                accepted: false
            };
            8001
        ];
        assert_eq!(split_burn_in(&samples, 0).len(), 8000);
        assert_eq!(split_burn_in(&samples, 2000).len(), 6000);
        assert_eq!(split_burn_in(&samples, 7999).len(), 1);
    }

    #[test]
    fn invalid_init_is_a_config_error() {
        let config = McmcConfig {
            init: SirParams {
                beta: 2.0,
                gamma: 0.1,
            },
            ..McmcConfig::default()
        };
        assert!(matches!(run_chain(&config, &in_box), Err(Error::Config(_))));
    }

    #[test]
    fn config_validation() {
        let bad = McmcConfig {
            n_iter: 10,
            burn_in: 10,
            step_delta: -1.0,
            ..McmcConfig::default()
        };
        let Err(Error::Config(msg)) = bad.validate() else {
            panic!("expected config error");
        };
        assert!(msg.contains("burn_in") && msg.contains("step_delta"));
        assert!(McmcConfig::default().validate().is_ok());
    }

    #[test]
    fn parallel_chains_use_distinct_streams() {
        let config = McmcConfig {
            n_iter: 200,
            burn_in: 0,
            step_delta: 0.05,
            n_chains: 3,
            ..McmcConfig::default()
        };
        let chains = run_chains(&config, &in_box).unwrap();
        assert_eq!(chains.len(), 3);
        assert_eq!(chains[0], run_chain(&config, &in_box).unwrap());
        assert_ne!(chains[0].samples(), chains[1].samples());
        assert_ne!(chains[1].samples(), chains[2].samples());
    }
}
