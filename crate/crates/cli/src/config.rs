//! Run configuration.
//!
//! Values come from three layers, later ones winning: built-in defaults, a
//! config file, and command-line flags. The file format is one `key = value`
//! pair per line; `#` starts a comment and blank lines are ignored. Keys are
//! the snake_case names in [`KEYS`]; each has a `--kebab-case` flag. Unknown
//! or repeated keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use sirfit_core::rng::ALGORITHM;
use sirfit_core::{McmcConfig, Scenario, SirParams, UniformPrior};

use crate::error::{CliError, Result};

/// Every configuration key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("population", "total population N"),
    ("i0", "initially infectious count"),
    ("t_end", "simulated days"),
    ("dt", "solver step in days"),
    ("obs_stride", "solver steps between recorded outputs"),
    ("beta_true", "transmission rate used to simulate data"),
    ("gamma_true", "recovery rate used to simulate data"),
    ("sigma", "observation noise standard deviation"),
    ("beta_lo", "lower prior bound on beta"),
    ("beta_hi", "upper prior bound on beta"),
    ("gamma_lo", "lower prior bound on gamma"),
    ("gamma_hi", "upper prior bound on gamma"),
    ("n_iter", "MCMC iterations after the initial state"),
    ("step_delta", "random-walk proposal standard deviation"),
    ("burn_in", "iterations discarded before summarizing"),
    ("seed_data", "seed for observation noise"),
    ("seed_chain", "seed for the chain and predictive draws"),
    ("init_beta", "initial beta (default: prior midpoint)"),
    ("init_gamma", "initial gamma (default: prior midpoint)"),
    ("n_draws", "posterior predictive trajectories"),
    ("level", "credible interval level"),
    ("rng", "generator algorithm; only `chacha8` is supported"),
    ("data_path", "dataset CSV"),
    ("chain_path", "chain CSV"),
    ("summary_path", "summary JSON"),
    ("samples_path", "post-burn-in sample CSV"),
    ("ppc_path", "predictive band CSV"),
    ("draws_path", "per-draw predictive CSV (empty: not written)"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub population: f64,
    pub i0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub obs_stride: usize,
    pub beta_true: f64,
    pub gamma_true: f64,
    pub sigma: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub n_iter: usize,
    pub step_delta: f64,
    pub burn_in: usize,
    pub seed_data: u64,
    pub seed_chain: u64,
    pub init_beta: Option<f64>,
    pub init_gamma: Option<f64>,
    pub n_draws: usize,
    pub level: f64,
    pub rng: String,
    pub data_path: PathBuf,
    pub chain_path: PathBuf,
    pub summary_path: PathBuf,
    pub samples_path: PathBuf,
    pub ppc_path: PathBuf,
    pub draws_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            population: 1000.0,
            i0: 10.0,
            t_end: 60.0,
            dt: 0.1,
            obs_stride: 10,
            beta_true: 0.3,
            gamma_true: 0.1,
            sigma: 15.0,
            beta_lo: 0.05,
            beta_hi: 1.0,
            gamma_lo: 0.01,
            gamma_hi: 0.5,
            n_iter: 8000,
            step_delta: 0.015,
            burn_in: 2000,
            seed_data: 42,
            seed_chain: 43,
            init_beta: None,
            init_gamma: None,
            n_draws: sirfit_core::summary::DEFAULT_DRAWS,
            level: sirfit_core::summary::DEFAULT_LEVEL,
            rng: ALGORITHM.to_string(),
            data_path: "data.csv".into(),
            chain_path: "chain.csv".into(),
            summary_path: "summary.json".into(),
            samples_path: "samples.csv".into(),
            ppc_path: "ppc.csv".into(),
            draws_path: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse `{value}`"))
}

fn parse_f64(key: &str, value: &str) -> std::result::Result<f64, String> {
    // Rust float parsing is locale-independent; reject a comma decimal early
    // with a clearer message.
    if value.contains(',') {
        return Err(format!("{key}: `{value}` uses a comma; use `.` as the decimal separator"));
    }
    parse(key, value)
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        match key {
            "population" => self.population = parse_f64(key, value)?,
            "i0" => self.i0 = parse_f64(key, value)?,
            "t_end" => self.t_end = parse_f64(key, value)?,
            "dt" => self.dt = parse_f64(key, value)?,
            "obs_stride" => self.obs_stride = parse(key, value)?,
            "beta_true" => self.beta_true = parse_f64(key, value)?,
            "gamma_true" => self.gamma_true = parse_f64(key, value)?,
            "sigma" => self.sigma = parse_f64(key, value)?,
            "beta_lo" => self.beta_lo = parse_f64(key, value)?,
            "beta_hi" => self.beta_hi = parse_f64(key, value)?,
            "gamma_lo" => self.gamma_lo = parse_f64(key, value)?,
            "gamma_hi" => self.gamma_hi = parse_f64(key, value)?,
            "n_iter" => self.n_iter = parse(key, value)?,
            "step_delta" => self.step_delta = parse_f64(key, value)?,
            "burn_in" => self.burn_in = parse(key, value)?,
            "seed_data" => self.seed_data = parse(key, value)?,
            "seed_chain" => self.seed_chain = parse(key, value)?,
            "init_beta" => self.init_beta = Some(parse_f64(key, value)?),
            "init_gamma" => self.init_gamma = Some(parse_f64(key, value)?),
            "n_draws" => self.n_draws = parse(key, value)?,
            "level" => self.level = parse_f64(key, value)?,
            "rng" => self.rng = value.to_string(),
            "data_path" => self.data_path = value.into(),
            "chain_path" => self.chain_path = value.into(),
            "summary_path" => self.summary_path = value.into(),
            "samples_path" => self.samples_path = value.into(),
            "ppc_path" => self.ppc_path = value.into(),
            "draws_path" => self.draws_path = opt_path(value),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies a config file's contents. Errors name the offending line.
    pub fn apply_text(&mut self, text: &str) -> std::result::Result<(), Vec<String>> {
        let mut seen = std::collections::HashSet::new();
        let mut errors = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = n + 1;
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {lineno}: expected `key = value`"));
                continue;
            };
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                errors.push(format!("line {lineno}: duplicate key `{key}`"));
                continue;
            }
            if let Err(e) = self.set(key, value) {
                errors.push(format!("line {lineno}: {e}"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_text(&text).map_err(|errs| {
            CliError::Config(
                errs.into_iter()
                    .map(|e| format!("{}: {e}", path.display()))
                    .collect(),
            )
        })
    }

    /// Defaults, then the optional file, then flag overrides.
    pub fn load(file: Option<&Path>, flags: &ConfigArgs) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            cfg.apply_file(path)?;
        }
        let mut errors = Vec::new();
        for (key, value) in flags.overrides() {
            if let Err(e) = cfg.set(key, &value) {
                errors.push(format!("--{}: {e}", key.replace('_', "-")));
            }
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(CliError::Config(errors))
        }
    }

    /// Renders every key in config-file syntax.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let path = |p: &Path| p.display().to_string();
        let values: Vec<String> = vec![
            self.population.to_string(),
            self.i0.to_string(),
            self.t_end.to_string(),
            self.dt.to_string(),
            self.obs_stride.to_string(),
            self.beta_true.to_string(),
            self.gamma_true.to_string(),
            self.sigma.to_string(),
            self.beta_lo.to_string(),
            self.beta_hi.to_string(),
            self.gamma_lo.to_string(),
            self.gamma_hi.to_string(),
            self.n_iter.to_string(),
            self.step_delta.to_string(),
            self.burn_in.to_string(),
            self.seed_data.to_string(),
            self.seed_chain.to_string(),
            opt(self.init_beta),
            opt(self.init_gamma),
            self.n_draws.to_string(),
            self.level.to_string(),
            self.rng.clone(),
            path(&self.data_path),
            path(&self.chain_path),
            path(&self.summary_path),
            path(&self.samples_path),
            path(&self.ppc_path),
            self.draws_path.as_deref().map(path).unwrap_or_default(),
        ];
        let mut out = String::new();
        for ((key, help), value) in KEYS.iter().zip(values) {
            if value.is_empty() {
                let _ = writeln!(out, "# {help}\n# {key} =");
            } else {
                let _ = writeln!(out, "# {help}\n{key} = {value}");
            }
        }
        out
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario::outbreak(
            self.population,
            self.i0,
            self.t_end,
            self.dt,
            self.obs_stride,
        )?)
    }

    pub fn prior(&self) -> Result<UniformPrior> {
        Ok(UniformPrior::new(
            self.beta_lo,
            self.beta_hi,
            self.gamma_lo,
            self.gamma_hi,
        )?)
    }

    pub fn true_params(&self) -> Result<SirParams> {
        Ok(SirParams::new(self.beta_true, self.gamma_true)?)
    }

    /// Initial chain state, defaulting to the prior midpoint.
    pub fn init(&self) -> Result<SirParams> {
        let mid = self.prior()?.midpoint();
        Ok(SirParams {
            beta: self.init_beta.unwrap_or(mid.beta),
            gamma: self.init_gamma.unwrap_or(mid.gamma),
        })
    }

    pub fn mcmc(&self) -> Result<McmcConfig> {
        Ok(McmcConfig {
            n_iter: self.n_iter,
            step_delta: self.step_delta,
            gamma_step: None,
            burn_in: self.burn_in,
            seed: self.seed_chain,
            init: self.init()?,
            n_chains: 1,
        })
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut check = |r: Result<()>| {
            if let Err(CliError::Config(m)) = r {
                problems.extend(m);
            } else if let Err(e) = r {
                problems.push(e.to_string());
            }
        };
        check(self.scenario().map(drop));
        check(self.prior().map(drop));
        check(self.true_params().map(drop));
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            problems.push(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if self.rng != ALGORITHM {
            problems.push(format!(
                "rng `{}` is not supported; use `{ALGORITHM}`",
                self.rng
            ));
        }
        if self.n_draws == 0 {
            problems.push("n_draws must be at least 1".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            problems.push(format!("level must lie in (0, 1), got {}", self.level));
        }
        if let (Ok(prior), Ok(mcmc)) = (self.prior(), self.mcmc()) {
            if let Err(sirfit_core::Error::Config(m)) = mcmc.validate() {
                problems.extend(m.split("; ").map(String::from));
            }
            if !prior.contains(&mcmc.init) {
                problems.push(format!(
                    "initial state ({}, {}) lies outside the prior support",
                    mcmc.init.beta, mcmc.init.gamma
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems))
        }
    }
}

/// Flag mirror of every config key. Unset flags leave lower layers intact.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Total population N.
    #[arg(long, global = true, help_heading = "Model")]
    pub population: Option<f64>,
    /// Initially infectious count.
    #[arg(long, global = true, help_heading = "Model")]
    pub i0: Option<f64>,
    /// Simulated days.
    #[arg(long, global = true, help_heading = "Model")]
    pub t_end: Option<f64>,
    /// Solver step in days.
    #[arg(long, global = true, help_heading = "Model")]
    pub dt: Option<f64>,
    /// Solver steps between recorded outputs.
    #[arg(long, global = true, help_heading = "Model")]
    pub obs_stride: Option<usize>,
    /// Transmission rate used to simulate data.
    #[arg(long, global = true, help_heading = "Data")]
    pub beta_true: Option<f64>,
    /// Recovery rate used to simulate data.
    #[arg(long, global = true, help_heading = "Data")]
    pub gamma_true: Option<f64>,
    /// Observation noise standard deviation.
    #[arg(long, global = true, help_heading = "Data")]
    pub sigma: Option<f64>,
    /// Lower prior bound on beta.
    #[arg(long, global = true, help_heading = "Prior")]
    pub beta_lo: Option<f64>,
    /// Upper prior bound on beta.
    #[arg(long, global = true, help_heading = "Prior")]
    pub beta_hi: Option<f64>,
    /// Lower prior bound on gamma.
    #[arg(long, global = true, help_heading = "Prior")]
    pub gamma_lo: Option<f64>,
    /// Upper prior bound on gamma.
    #[arg(long, global = true, help_heading = "Prior")]
    pub gamma_hi: Option<f64>,
    /// MCMC iterations after the initial state.
    #[arg(long, global = true, help_heading = "Sampler")]
    pub n_iter: Option<usize>,
    /// Random-walk proposal standard deviation.
    #[arg(long, global = true, help_heading = "Sampler")]
    pub step_delta: Option<f64>,
    /// Iterations discarded before summarizing.
    #[arg(long, global = true, help_heading = "Sampler")]
    pub burn_in: Option<usize>,
    /// Seed for observation noise.
    #[arg(long, global = true, help_heading = "Sampler")]
    pub seed_data: Option<u64>,
    /// Seed for the chain and predictive draws.
    #[arg(long, global = true, help_heading = "Sampler")]
    pub seed_chain: Option<u64>,
    /// Initial beta (default: prior midpoint).
    #[arg(long, global = true, help_heading = "Sampler")]
    pub init_beta: Option<f64>,
    /// Initial gamma (default: prior midpoint).
    #[arg(long, global = true, help_heading = "Sampler")]
    pub init_gamma: Option<f64>,
    /// Posterior predictive trajectories.
    #[arg(long, global = true, help_heading = "Summary")]
    pub n_draws: Option<usize>,
    /// Credible interval level.
    #[arg(long, global = true, help_heading = "Summary")]
    pub level: Option<f64>,
    /// Generator algorithm; only `chacha8` is supported.
    #[arg(long, global = true, help_heading = "Sampler")]
    pub rng: Option<String>,
    /// Dataset CSV.
    #[arg(long, global = true, help_heading = "Files")]
    pub data_path: Option<PathBuf>,
    /// Chain CSV.
    #[arg(long, global = true, help_heading = "Files")]
    pub chain_path: Option<PathBuf>,
    /// Summary JSON.
    #[arg(long, global = true, help_heading = "Files")]
    pub summary_path: Option<PathBuf>,
    /// Post-burn-in sample CSV.
    #[arg(long, global = true, help_heading = "Files")]
    pub samples_path: Option<PathBuf>,
    /// Predictive band CSV.
    #[arg(long, global = true, help_heading = "Files")]
    pub ppc_path: Option<PathBuf>,
    /// Per-draw predictive CSV (empty: not written).
    #[arg(long, global = true, help_heading = "Files")]
    pub draws_path: Option<PathBuf>,
}

impl ConfigArgs {
    /// Set flags as `(key, value)` pairs in key order.
    pub fn overrides(&self) -> Vec<(&'static str, String)> {
        fn s<T: ToString>(v: &Option<T>) -> Option<String> {
            v.as_ref().map(T::to_string)
        }
        fn p(v: &Option<PathBuf>) -> Option<String> {
            v.as_ref().map(|x| x.display().to_string())
        }
        let values = [
            s(&self.population),
            s(&self.i0),
            s(&self.t_end),
            s(&self.dt),
            s(&self.obs_stride),
            s(&self.beta_true),
            s(&self.gamma_true),
            s(&self.sigma),
            s(&self.beta_lo),
            s(&self.beta_hi),
            s(&self.gamma_lo),
            s(&self.gamma_hi),
            s(&self.n_iter),
            s(&self.step_delta),
            s(&self.burn_in),
            s(&self.seed_data),
            s(&self.seed_chain),
            s(&self.init_beta),
            s(&self.init_gamma),
            s(&self.n_draws),
            s(&self.level),
            s(&self.rng),
            p(&self.data_path),
            p(&self.chain_path),
            p(&self.summary_path),
            p(&self.samples_path),
            p(&self.ppc_path),
            p(&self.draws_path),
        ];
        KEYS.iter()
            .zip(values)
            .filter_map(|((key, _), v)| v.map(|v| (*key, v)))
            .collect()
    }
}
