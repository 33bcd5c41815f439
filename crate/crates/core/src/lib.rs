//! Day-ahead bidding for an offshore wind farm with battery storage.
//!
//! The crate covers the full pipeline: a two-stage stochastic market model
//! solved by a built-in simplex ([`market`], [`simplex`]), an ARMA-driven
//! scenario engine ([`arma`], [`scenario`]), a one-step bidding environment
//! ([`env`]), a small DDPG agent ([`nn`], [`ddpg`]), rule-based strategies
//! ([`strategies`]), and an evaluation harness ([`eval`]). Data ingestion and
//! synthetic data live in [`data`]; run configuration in [`config`].

// Indexed loops mirror the matrix math throughout the numeric kernels.
#![allow(clippy::needless_range_loop)]

pub mod arma;
pub mod config;
pub mod data;
pub mod ddpg;
pub mod env;
pub mod eval;
pub mod lp;
pub mod market;
pub mod nn;
pub mod scenario;
pub mod simplex;
pub mod strategies;
