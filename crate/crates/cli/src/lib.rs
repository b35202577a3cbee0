//! Command-line pipeline around `sirfit-core`: simulate an outbreak, fit it
//! with Metropolis-Hastings, summarize the chain, and run a posterior
//! predictive check. All inputs and outputs are plain CSV/JSON files.

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use config::{ConfigArgs, RunConfig};
pub use error::{CliError, Result};
