//! Kendall's tau, its inversion, and the two rank-based estimators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{debye, CopulaModel, Family, FRANK_THETA_MAX, THETA_MAX};
use crate::empirical::{PseudoObservations, Sample};
use crate::error::{Error, Result};

/// How the copula parameter is estimated from pseudo-observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "tau")]
    TauInversion,
    #[serde(rename = "pml")]
    PseudoML,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::TauInversion => "tau",
            EstimatorKind::PseudoML => "pml",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tau" | "tau-inversion" | "itau" => Ok(EstimatorKind::TauInversion),
            "pml" | "pseudo-ml" | "mpl" => Ok(EstimatorKind::PseudoML),
            other => Err(Error::Config(format!("unknown estimator `{other}`"))),
        }
    }
}

/// Empirical Kendall's tau of a bivariate sample:
/// `4/(n(n−1)) · #{concordant pairs} − 1`, where a pair tied in either
/// coordinate counts as not concordant. Runs in O(n log n).
pub fn empirical_tau(sample: &Sample) -> Result<f64> {
    if sample.d() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: sample.d(),
        });
    }
    let pairs: Vec<(f64, f64)> = sample.rows().map(|r| (r[0], r[1])).collect();
    tau_of_pairs(pairs)
}

pub(crate) fn tau_of_pairs(mut pairs: Vec<(f64, f64)>) -> Result<f64> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "Kendall's tau needs at least 2 observations, got {n}"
        )));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let tied_pairs = |runs: &mut dyn Iterator<Item = usize>| -> u64 {
        runs.map(|k| (k as u64) * (k as u64 - 1) / 2).sum()
    };
    let tied_x = tied_pairs(&mut run_lengths(&pairs, |a, b| a.0 == b.0));
    let tied_xy = tied_pairs(&mut run_lengths(&pairs, |a, b| a == b));

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = count_inversions(&mut ys);
    // `ys` is now sorted.
    let tied_y = tied_pairs(&mut run_lengths(&ys, |a, b| a == b));

    let total = (n as u64) * (n as u64 - 1) / 2;
    let concordant = total + tied_xy - discordant - tied_x - tied_y;
    Ok(4.0 * concordant as f64 / (n as f64 * (n as f64 - 1.0)) - 1.0)
}

fn run_lengths<'a, T>(
    xs: &'a [T],
    same: impl Fn(&T, &T) -> bool + 'a,
) -> impl Iterator<Item = usize> + 'a {
    let mut start = 0;
    std::iter::from_fn(move || {
        if start >= xs.len() {
            return None;
        }
        let mut end = start + 1;
        while end < xs.len() && same(&xs[start], &xs[end]) {
            end += 1;
        }
        let len = end - start;
        start = end;
        Some(len)
    })
}

/// Number of pairs `i < j` with `xs[i] > xs[j]`; sorts `xs` as a side effect.
fn count_inversions(xs: &mut [f64]) -> u64 {
    let mut buf = xs.to_vec();
    merge_count(xs, &mut buf)
}

fn merge_count(xs: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = xs.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = xs.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(left, bl) + merge_count(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if xs[j] < xs[i] {
            buf[k] = xs[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = xs[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&xs[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&xs[j..n]);
    xs.copy_from_slice(&buf[..n]);
    count
}

/// Parameter of `family` whose population Kendall's tau equals `tau`.
pub fn tau_to_theta(family: Family, tau: f64) -> Result<f64> {
    let out_of_range = || Error::TauDomain {
        family: family.name(),
        tau,
    };
    if !tau.is_finite() {
        return Err(out_of_range());
    }
    match family {
        Family::Independence => Err(Error::ParameterDomain {
            family: family.name(),
            reason: "the independence copula has no parameter".into(),
        }),
        Family::Clayton => {
            let theta = 2.0 * tau / (1.0 - tau);
            if tau > 0.0 && tau < 1.0 && theta <= THETA_MAX {
                Ok(theta)
            } else {
                Err(out_of_range())
            }
        }
        Family::Gumbel => {
            let theta = 1.0 / (1.0 - tau);
            if (0.0..1.0).contains(&tau) && theta <= THETA_MAX {
                Ok(theta)
            } else {
                Err(out_of_range())
            }
        }
        Family::Frank => {
            if tau == 0.0 {
                return Ok(0.0);
            }
            if tau.abs() >= 1.0 {
                return Err(out_of_range());
            }
            let target = tau.abs();
            let mut hi = 1.0;
            while debye::frank_tau(hi) < target {
                if hi >= FRANK_THETA_MAX {
                    return Err(out_of_range());
                }
                hi = (2.0 * hi).min(FRANK_THETA_MAX);
            }
            let mut lo = 0.0;
            while hi - lo > 1e-13 * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if debye::frank_tau(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi) * tau.signum())
        }
    }
}

/// Estimates a model of `family` from pseudo-observations.
///
/// Tau inversion maps the empirical tau through [`tau_to_theta`]. Pseudo-ML
/// maximizes the mean log-density at the rescaled ranks `R/(n+1)` by
/// Brent's method on a bracket centred at the tau-inversion estimate;
/// the bracket is widened while the maximum sits on an edge that is not a
/// bound of the parameter space.
pub fn fit(
    family: Family,
    estimator: EstimatorKind,
    pseudo: &PseudoObservations,
) -> Result<CopulaModel> {
    if family == Family::Independence {
        return Ok(CopulaModel::independence());
    }
    if pseudo.d() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: pseudo.d(),
        });
    }
    let tau = pseudo.kendall_tau()?;
    match estimator {
        EstimatorKind::TauInversion => CopulaModel::new(family, &[tau_to_theta(family, tau)?]),
        EstimatorKind::PseudoML => pseudo_ml(family, pseudo, tau),
    }
}

/// [`fit`] on the pseudo-observations of a raw sample. A column without any
/// variation leaves the ranks (and tau) undefined and is rejected here.
pub fn fit_sample(
    family: Family,
    estimator: EstimatorKind,
    sample: &Sample,
) -> Result<CopulaModel> {
    if family != Family::Independence {
        for j in 0..sample.d() {
            let first = sample.value(0, j);
            if sample.n() < 2 || sample.rows().all(|r| r[j] == first) {
                return Err(Error::Estimation {
                    message: format!(
                        "column {} has no variation; Kendall's tau and the ranks are undefined",
                        j + 1
                    ),
                    trace: Vec::new(),
                });
            }
        }
    }
    fit(family, estimator, &PseudoObservations::from_sample(sample))
}

const FIT_TOL: f64 = 1e-6;
const MAX_WIDENINGS: usize = 12;

fn pseudo_ml(family: Family, pseudo: &PseudoObservations, tau: f64) -> Result<CopulaModel> {
    let denom = pseudo.n() as f64 + 1.0;
    let points: Vec<(f64, f64)> = (0..pseudo.n())
        .map(|i| {
            let r = pseudo.ranks_of(i);
            (r[0] as f64 / denom, r[1] as f64 / denom)
        })
        .collect();
    let (bound_lo, bound_hi) = family.parameter_bounds();

    let mut trace = Vec::new();
    let mut loglik = |theta: f64| -> f64 {
        let value = match CopulaModel::new(family, &[theta]) {
            Ok(model) => {
                let sum: f64 = points
                    .iter()
                    .map(|&(u, v)| model.log_pdf_interior(u, v))
                    .sum();
                let mean = sum / points.len() as f64;
                if mean.is_finite() {
                    mean
                } else {
                    f64::NEG_INFINITY
                }
            }
            Err(_) => f64::NEG_INFINITY,
        };
        trace.push((theta, value));
        value
    };

    let start = tau_to_theta(family, tau)
        .unwrap_or(match family {
            Family::Frank => tau.signum() * FRANK_THETA_MAX,
            Family::Clayton if tau <= 0.0 => bound_lo,
            Family::Gumbel if tau <= 0.0 => bound_lo,
            _ => bound_hi,
        })
        .clamp(bound_lo, bound_hi);
    let mut half_width = start.abs().max(2.0);
    let mut lo = (start - half_width).max(bound_lo);
    let mut hi = (start + half_width).min(bound_hi);

    for _ in 0..MAX_WIDENINGS {
        let theta = brent_max(&mut loglik, lo, hi);
        let edge = 10.0 * FIT_TOL;
        let at_lo = theta - lo <= edge && lo > bound_lo;
        let at_hi = hi - theta <= edge && hi < bound_hi;
        if !at_lo && !at_hi {
            let theta = if theta - bound_lo <= edge {
                bound_lo
            } else {
                theta
            };
            if bound_hi - theta <= edge {
                break;
            }
            return CopulaModel::new(family, &[theta]);
        }
        half_width *= 2.0;
        if at_lo {
            lo = (lo - half_width).max(bound_lo);
        }
        if at_hi {
            hi = (hi + half_width).min(bound_hi);
        }
    }
    Err(Error::Estimation {
        message: format!("pseudo-likelihood for the {family} family has no interior maximum in [{bound_lo}, {bound_hi}]"),
        trace,
    })
}

/// Maximizer of a unimodal `f` on `[lo, hi]` by Brent's method: parabolic
/// steps where they behave, golden-section steps otherwise. Stops once the
/// bracket around the best point is narrower than about `FIT_TOL`.
fn brent_max(f: &mut impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let golden = (3.0 - 5f64.sqrt()) / 2.0;
    let tol = FIT_TOL / 4.0;
    let mut x = lo + golden * (hi - lo);
    let (mut w, mut v) = (x, x);
    let mut fx = -f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        let tol1 = tol + 1e-10 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (hi - lo) {
            return x;
        }
        let mut parabolic = false;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (lo - x) && p < q * (hi - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = if mid >= x { tol1 } else { -tol1 };
                }
                parabolic = true;
            }
        }
        if !parabolic {
            e = if x >= mid { lo - x } else { hi - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = -f(u);
        if fu <= fx {
            if u >= x {
                lo = x;
            } else {
                hi = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
}
