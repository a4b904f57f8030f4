//! Parametric bivariate copula families.
//!
//! [`CopulaModel`] pairs a [`Family`] with its parameter. Models are validated
//! on construction, so evaluation never fails on parameters; densities still
//! reject points on the boundary of the unit square.

mod debye;
mod families;
mod fit;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::empirical::Sample;
use crate::error::{Error, Result};

pub use debye::debye1;
pub(crate) use fit::tau_of_pairs;
pub use fit::{empirical_tau, fit, fit_sample, tau_to_theta, EstimatorKind};

/// Largest |theta| accepted for the Frank family; the density overflows far
/// beyond this and tau is already 0.96 there.
pub const FRANK_THETA_MAX: f64 = 100.0;
/// Largest theta accepted for Clayton and Gumbel (tau ≈ 0.98 and 0.99).
pub const THETA_MAX: f64 = 100.0;

/// Anything that can be evaluated as a copula distribution function.
pub trait CopulaCdf: Send + Sync {
    /// Dimension, or `None` when the cdf accepts any dimension.
    fn dim(&self) -> Option<usize>;
    fn cdf(&self, u: &[f64]) -> f64;
}

/// Copula given by an explicit closure.
pub struct ExplicitCdf<F> {
    dim: Option<usize>,
    f: F,
}

impl<F> ExplicitCdf<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: Option<usize>, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> CopulaCdf for ExplicitCdf<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> Option<usize> {
        self.dim
    }

    fn cdf(&self, u: &[f64]) -> f64 {
        (self.f)(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Independence,
    Frank,
    Clayton,
    Gumbel,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Independence,
        Family::Frank,
        Family::Clayton,
        Family::Gumbel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Frank => "frank",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
        }
    }

    /// Number of parameters (0 or 1).
    pub fn parameter_count(self) -> usize {
        match self {
            Family::Independence => 0,
            _ => 1,
        }
    }

    /// Closed interval of admissible parameters, used by the optimizer.
    pub(crate) fn parameter_bounds(self) -> (f64, f64) {
        match self {
            Family::Independence => (0.0, 0.0),
            Family::Frank => (-FRANK_THETA_MAX, FRANK_THETA_MAX),
            Family::Clayton => (1e-6, THETA_MAX),
            Family::Gumbel => (1.0, THETA_MAX),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "independence" | "indep" | "product" => Ok(Family::Independence),
            "frank" => Ok(Family::Frank),
            "clayton" => Ok(Family::Clayton),
            "gumbel" => Ok(Family::Gumbel),
            other => Err(Error::Config(format!("unknown copula family `{other}`"))),
        }
    }
}

/// A copula family together with a validated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    family: Family,
    theta: Option<f64>,
}

impl CopulaModel {
    /// Builds a model from a family tag and a parameter vector (empty for the
    /// independence copula, one value otherwise).
    pub fn new(family: Family, theta: &[f64]) -> Result<Self> {
        if theta.len() != family.parameter_count() {
            return Err(Error::ParameterDomain {
                family: family.name(),
                reason: format!(
                    "expected {} parameter(s), got {}",
                    family.parameter_count(),
                    theta.len()
                ),
            });
        }
        match family {
            Family::Independence => Ok(Self::independence()),
            Family::Frank => Self::frank(theta[0]),
            Family::Clayton => Self::clayton(theta[0]),
            Family::Gumbel => Self::gumbel(theta[0]),
        }
    }

    pub fn independence() -> Self {
        Self {
            family: Family::Independence,
            theta: None,
        }
    }

    /// Frank copula; `theta = 0` is the independence limit and is accepted.
    pub fn frank(theta: f64) -> Result<Self> {
        check(
            Family::Frank,
            theta,
            theta.abs() <= FRANK_THETA_MAX,
            "|theta| must not exceed 100",
        )?;
        Ok(Self {
            family: Family::Frank,
            theta: Some(theta),
        })
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        check(
            Family::Clayton,
            theta,
            theta > 0.0 && theta <= THETA_MAX,
            "theta must lie in (0, 100]",
        )?;
        Ok(Self {
            family: Family::Clayton,
            theta: Some(theta),
        })
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        check(
            Family::Gumbel,
            theta,
            (1.0..=THETA_MAX).contains(&theta),
            "theta must lie in [1, 100]",
        )?;
        Ok(Self {
            family: Family::Gumbel,
            theta: Some(theta),
        })
    }

    /// Model of `family` whose population Kendall's tau equals `tau`.
    pub fn from_tau(family: Family, tau: f64) -> Result<Self> {
        match family {
            Family::Independence if tau == 0.0 => Ok(Self::independence()),
            Family::Independence => Err(Error::TauDomain {
                family: family.name(),
                tau,
            }),
            _ => Self::new(family, &[tau_to_theta(family, tau)?]),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Parameter vector: empty for the independence copula.
    pub fn theta(&self) -> &[f64] {
        self.theta.as_slice()
    }

    fn param(&self) -> f64 {
        self.theta.unwrap_or(0.0)
    }

    /// Whether the model evaluates as the product copula.
    fn is_product(&self) -> bool {
        match self.family {
            Family::Independence => true,
            Family::Frank => self.param().abs() < families::FRANK_PRODUCT_CUTOFF,
            _ => false,
        }
    }

    /// Copula distribution function. Exact on the boundary: 0 when any
    /// coordinate is 0, and the remaining coordinate when the other is 1.
    pub fn cdf(&self, u: &[f64]) -> f64 {
        if u.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        if self.is_product() {
            return u.iter().map(|&x| x.min(1.0)).product();
        }
        debug_assert_eq!(u.len(), 2, "parametric families are bivariate");
        let (a, b) = (u[0].min(1.0), u[1].min(1.0));
        if a >= 1.0 {
            return b;
        }
        if b >= 1.0 {
            return a;
        }
        let t = self.param();
        match self.family {
            Family::Frank => families::frank_cdf(t, a, b),
            Family::Clayton => families::clayton_cdf(t, a, b),
            Family::Gumbel => families::gumbel_cdf(t, a, b),
            Family::Independence => unreachable!(),
        }
    }

    /// Copula density at an interior point.
    pub fn pdf(&self, u: &[f64]) -> Result<f64> {
        Ok(self.log_pdf(u)?.exp())
    }

    /// Log-density at an interior point.
    pub fn log_pdf(&self, u: &[f64]) -> Result<f64> {
        if u.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::Boundary(u.to_vec()));
        }
        if self.is_product() {
            return Ok(0.0);
        }
        if u.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: u.len(),
            });
        }
        Ok(self.log_pdf_interior(u[0], u[1]))
    }

    /// Log-density without boundary checks; `u, v` must be in (0, 1).
    pub(crate) fn log_pdf_interior(&self, u: f64, v: f64) -> f64 {
        let t = self.param();
        if self.is_product() {
            return 0.0;
        }
        match self.family {
            Family::Frank => families::frank_log_pdf(t, u, v),
            Family::Clayton => families::clayton_log_pdf(t, u, v),
            Family::Gumbel => families::gumbel_log_pdf(t, u, v),
            Family::Independence => 0.0,
        }
    }

    /// Conditional distribution P(V ≤ v | U = u).
    pub fn conditional_cdf(&self, u: f64, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        if self.is_product() {
            return v;
        }
        let t = self.param();
        match self.family {
            Family::Frank => families::frank_h(t, u, v),
            Family::Clayton => families::clayton_h(t, u, v),
            Family::Gumbel => families::gumbel_h(t, u, v),
            Family::Independence => v,
        }
    }

    /// Inverse of [`conditional_cdf`](Self::conditional_cdf) in `v`.
    pub fn conditional_quantile(&self, u: f64, w: f64) -> f64 {
        if self.is_product() {
            return w;
        }
        let t = self.param();
        match self.family {
            Family::Frank => families::frank_h_inverse(t, u, w),
            Family::Clayton => families::clayton_h_inverse(t, u, w),
            Family::Gumbel => families::bisect_h_inverse(|v| families::gumbel_h(t, u, v), w),
            Family::Independence => w,
        }
    }

    /// Population Kendall's tau.
    pub fn kendall_tau(&self) -> f64 {
        let t = self.param();
        match self.family {
            Family::Independence => 0.0,
            Family::Frank => debye::frank_tau(t),
            Family::Clayton => t / (t + 2.0),
            Family::Gumbel => 1.0 - 1.0 / t,
        }
    }

    /// One draw by the conditional-distribution method.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let u: f64 = rng.sample(rand::distr::Open01);
        let w: f64 = rng.sample(rand::distr::Open01);
        [u, self.conditional_quantile(u, w)]
    }

    /// `n` bivariate draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Sample> {
        if n == 0 {
            return Err(Error::InsufficientData(
                "cannot draw an empty sample".into(),
            ));
        }
        let mut data = Vec::with_capacity(2 * n);
        for _ in 0..n {
            data.extend_from_slice(&self.sample_pair(rng));
        }
        Sample::from_flat(data, 2)
    }
}

impl CopulaCdf for CopulaModel {
    fn dim(&self) -> Option<usize> {
        match self.family {
            Family::Independence => None,
            _ => Some(2),
        }
    }

    fn cdf(&self, u: &[f64]) -> f64 {
        CopulaModel::cdf(self, u)
    }
}

impl fmt::Display for CopulaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.theta {
            None => write!(f, "{}", self.family),
            Some(t) => write!(f, "{}:{}", self.family, t),
        }
    }
}

/// Parses `independence` or `family:theta`.
impl FromStr for CopulaModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, theta) = match s.split_once(':') {
            Some((name, theta)) => (name, Some(theta)),
            None => (s, None),
        };
        let family: Family = name.parse()?;
        let theta = match theta {
            Some(t) => vec![t
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad parameter `{t}` in `{s}`")))?],
            None => Vec::new(),
        };
        CopulaModel::new(family, &theta)
    }
}

fn check(family: Family, theta: f64, ok: bool, reason: &str) -> Result<()> {
    if theta.is_finite() && ok {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            family: family.name(),
            reason: format!("{reason} (got {theta})"),
        })
    }
}
