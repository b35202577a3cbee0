//! The four pipeline steps: simulate, fit, summarize, ppc.

use std::fmt;
use std::path::Path;

use sirfit_core::inference::simulate_observations;
use sirfit_core::mcmc::{run_chain, RateRange};
use sirfit_core::summary::{derived_r0_samples, posterior_predictive};
use sirfit_core::{
    Chain, ChainSample, Dataset, McmcConfig, PosteriorSummary, PredictiveCheck, SirParams,
    SirPosterior,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::formats::{self, SummaryReport};

/// Acceptance-rate band considered healthy for a random-walk sampler.
pub const HEALTHY_ACCEPTANCE: (f64, f64) = (0.20, 0.40);

/// Predictive envelope margin, in noise standard deviations.
pub const ENVELOPE_SIGMAS: f64 = 2.0;

/// Simulates a noisy outbreak and writes it as a dataset CSV.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Dataset> {
    cfg.validate()?;
    let data = simulate_observations(&cfg.scenario()?, &cfg.true_params()?, cfg.sigma, cfg.seed_data)?;
    formats::write_dataset(out, &data)?;
    Ok(data)
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub chain: Chain,
    pub acceptance_rate: f64,
    /// Likelihood evaluations scored `-inf` because integration failed.
    pub failed_solves: u64,
    pub solves: u64,
}

impl FitReport {
    pub fn healthy(&self) -> bool {
        (HEALTHY_ACCEPTANCE.0..=HEALTHY_ACCEPTANCE.1).contains(&self.acceptance_rate)
    }
}

impl fmt::Display for FitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "iterations: {}", self.chain.n_iter())?;
        writeln!(
            f,
            "acceptance rate: {:.4} (healthy band [{:.2}, {:.2}]: {})",
            self.acceptance_rate,
            HEALTHY_ACCEPTANCE.0,
            HEALTHY_ACCEPTANCE.1,
            if self.healthy() { "inside" } else { "outside" }
        )?;
        writeln!(f, "ODE solves: {}", self.solves)?;
        write!(f, "-inf likelihood events: {}", self.failed_solves)
    }
}

fn posterior(cfg: &RunConfig, data: Dataset) -> Result<SirPosterior> {
    if !(cfg.sigma > 0.0) {
        return Err(CliError::config("fitting needs sigma > 0"));
    }
    let data = data.with_sigma(cfg.sigma)?;
    Ok(SirPosterior::new(data, cfg.scenario()?, cfg.prior()?)?)
}

/// Runs the sampler on a dataset CSV and writes the chain CSV.
pub fn fit(cfg: &RunConfig, data_path: &Path, chain_out: &Path) -> Result<FitReport> {
    cfg.validate()?;
    let sigma = if cfg.sigma > 0.0 { cfg.sigma } else { 1.0 };
    let data = formats::read_dataset(data_path, sigma)?;
    let target = posterior(cfg, data)?;
    let chain = run_chain(&cfg.mcmc()?, &target)?;
    formats::write_chain(chain_out, chain.samples())?;
    Ok(FitReport {
        acceptance_rate: chain.acceptance_rate(RateRange::All),
        failed_solves: target.failures(),
        solves: target.solves(),
        chain,
    })
}

/// Rebuilds a chain read from disk, taking `burn_in` from the caller.
pub fn chain_from_samples(
    cfg: &RunConfig,
    samples: Vec<ChainSample>,
    burn_in: usize,
    path: &Path,
) -> Result<Chain> {
    let n_iter = samples.len() - 1;
    if burn_in >= n_iter {
        return Err(CliError::config(format!(
            "burn_in ({burn_in}) must be smaller than the chain's {n_iter} iterations"
        )));
    }
    let config = McmcConfig {
        n_iter,
        burn_in,
        init: samples[0].params,
        ..cfg.mcmc()?
    };
    Chain::from_samples(samples, config).map_err(|e| CliError::data(path, e.to_string()))
}

/// Summary statistics of a chain's post-burn-in samples.
pub fn summarize_chain(chain: &Chain, level: f64) -> Result<(SummaryReport, Vec<SirParams>, Vec<f64>)> {
    let params: Vec<SirParams> = chain.post_burn_in().iter().map(|s| s.params).collect();
    let summary = PosteriorSummary::from_params(&params, level)?;
    let r0 = derived_r0_samples(&params)?;
    let report = SummaryReport {
        beta: summary.beta,
        gamma: summary.gamma,
        r0: summary.r0,
        acceptance_rate: chain.acceptance_rate(RateRange::All),
        n_samples: params.len(),
    };
    Ok((report, params, r0))
}

/// Reads a chain CSV, writes the summary JSON and the raw sample CSV.
pub fn summarize(
    cfg: &RunConfig,
    chain_path: &Path,
    summary_out: &Path,
    samples_out: &Path,
) -> Result<SummaryReport> {
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(CliError::config(format!("level must lie in (0, 1), got {}", cfg.level)));
    }
    let samples = formats::read_chain(chain_path)?;
    let chain = chain_from_samples(cfg, samples, cfg.burn_in, chain_path)?;
    let (report, params, r0) = summarize_chain(&chain, cfg.level)?;
    formats::write_summary(summary_out, &report)?;
    formats::write_samples(samples_out, &params, &r0)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct PpcReport {
    pub check: PredictiveCheck,
    /// Share of observations within the envelope widened by `2 sigma`.
    pub fraction_inside: f64,
    pub n_observations: usize,
}

impl fmt::Display for PpcReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "predictive draws: {}", self.check.drawn.len())?;
        write!(
            f,
            "observations inside envelope +/- {ENVELOPE_SIGMAS} sigma: {:.4} ({} points)",
            self.fraction_inside, self.n_observations
        )
    }
}

/// Posterior predictive band from a chain CSV, compared against a dataset.
pub fn ppc(
    cfg: &RunConfig,
    chain_path: &Path,
    data_path: &Path,
    band_out: &Path,
    draws_out: Option<&Path>,
) -> Result<PpcReport> {
    cfg.validate()?;
    let samples = formats::read_chain(chain_path)?;
    let chain = chain_from_samples(cfg, samples, cfg.burn_in, chain_path)?;
    let params: Vec<SirParams> = chain.post_burn_in().iter().map(|s| s.params).collect();
    let check = posterior_predictive(&params, cfg.n_draws, &cfg.scenario()?, cfg.seed_chain)?;
    let sigma = if cfg.sigma > 0.0 { cfg.sigma } else { 1.0 };
    let data = formats::read_dataset(data_path, sigma)?;
    let fraction_inside = check.fraction_inside(&data, ENVELOPE_SIGMAS * cfg.sigma);
    formats::write_band(band_out, &check)?;
    if let Some(path) = draws_out {
        formats::write_draws(path, &check)?;
    }
    Ok(PpcReport {
        check,
        fraction_inside,
        n_observations: data.len(),
    })
}
