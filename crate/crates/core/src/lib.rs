//! Bayesian calibration of the SIR epidemic model.
//!
//! * [`sir`]: model state and fixed-step Euler/RK4 integration.
//! * [`inference`]: Gaussian observation model, uniform prior, log-posterior.
//! * [`mcmc`]: random-walk Metropolis-Hastings sampler.
//! * [`summary`]: posterior moments, credible intervals, predictive checks.
//!
//! ```
//! use sirfit_core::{inference, mcmc, sir};
//!
//! let scenario = sir::Scenario::default();
//! let truth = sir::SirParams::new(0.3, 0.1).unwrap();
//! let data = inference::simulate_observations(&scenario, &truth, 15.0, 42).unwrap();
//! let posterior =
//!     inference::SirPosterior::new(data, scenario, inference::UniformPrior::default()).unwrap();
//! let config = mcmc::McmcConfig { n_iter: 200, burn_in: 50, ..Default::default() };
//! let chain = mcmc::run_chain(&config, &posterior).unwrap();
//! assert_eq!(chain.post_burn_in().len(), 150);
//! ```

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod inference;
pub mod mcmc;
pub mod rng;
pub mod sir;
pub mod summary;

pub use error::{Error, Result};
pub use inference::{Dataset, SirPosterior, UniformPrior};
pub use mcmc::{Chain, ChainSample, McmcConfig, RateRange};
pub use sir::{Method, Scenario, SirParams, SirState, Trajectory};
pub use summary::{BandPoint, ParameterSummary, PosteriorSummary, PredictiveCheck};
