//! Goodness-of-fit tests for copulas based on the asymptotic total variation
//! (ATV) of the empirical copula process, calibrated by the nonparametric
//! bootstrap.
//!
//! The crate covers:
//!
//! * [`copula`]: independence, Frank, Clayton and Gumbel copulas with
//!   evaluation, sampling, Kendall-tau inversion and pseudo-ML fitting;
//! * [`empirical`]: samples, pseudo-observations, the empirical copula and
//!   the four copula processes tabulated on a regular lattice;
//! * [`statistics`]: the ATV statistic (pure random search and an exhaustive
//!   oracle), Kolmogorov–Smirnov, Cramér–von Mises, generalized χ² and
//!   generalized Kuiper statistics;
//! * [`bootstrap`]: the test engine for simple and composite null hypotheses;
//! * [`simulate`]: data generators and the Monte Carlo power/level harness.

pub mod bootstrap;
pub mod copula;
pub mod empirical;
pub mod error;
pub mod rng;
pub mod simulate;
pub mod statistics;

pub use error::{Error, Result};
