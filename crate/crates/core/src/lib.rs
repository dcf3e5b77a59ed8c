//! Insurance expenditure models: a generalized linear model, a backfitted
//! additive model with pairwise interactions, and a back-propagation network,
//! plus the harness that compares them on held-out customers.

pub mod ann;
pub mod artifact;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod gam;
pub mod glm;
pub mod kv;
pub mod linalg;

pub use error::{Error, Result};
