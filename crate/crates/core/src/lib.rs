//! Multivariate Pareto-II distributions built from a 0/1 factor exposure matrix.
//!
//! A portfolio of `n` risks is driven by `n + 1` independent gamma factors. Row `i`
//! of the exposure matrix `c` says which factors hit risk `i`; the joint survival
//! function is
//!
//! ```text
//! P[X_1 > x_1, ..., X_n > x_n] = prod_j (1 + sum_i c_ij x_i / sigma_i)^(-gamma_j)
//! ```
//!
//! and every margin is Pareto-II (Lomax) with scale `sigma_i` and tail index
//! `sum_j c_ij gamma_j`.
//!
//! Modules:
//! - [`specfun`]: log-gamma, Pochhammer symbols and hypergeometric series.
//! - [`portfolio`]: the validated model object and its shape bookkeeping.
//! - [`dist`]: survival, density, moments, conditionals and regressions.
//! - [`extremes`]: laws of the minima and maxima.
//! - [`risk`]: VaR, CTE, economic CTE and weighted measures.
//! - [`sim`]: exact samplers and Monte Carlo estimators.
//! - [`cli`]: config parsing, calibration and scenario reporting.
//!
//! Coordinates are 1-based throughout the public API.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dist;
pub mod error;
pub mod extremes;
pub mod portfolio;
pub mod risk;
pub mod sim;
pub mod specfun;

pub use error::{Error, Result};
pub use portfolio::{
    build_portfolio, preset, ExposureMatrix, ExposurePortfolio, PairDecomposition, Preset,
};
