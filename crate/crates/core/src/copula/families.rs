//! Closed forms for the bivariate families. All functions take interior
//! points `u, v ∈ (0, 1)` and a parameter already validated by `CopulaModel`.
//!
//! Frank with a negative parameter is evaluated through the reflection
//! `C_{-θ}(u, v) = u − C_θ(u, 1 − v)`, so the positive-θ formulas only need to
//! be stable for θ > 0.

/// Below this |θ| the Frank copula is evaluated as the product copula.
pub(crate) const FRANK_PRODUCT_CUTOFF: f64 = 1e-10;

const BISECTION_TOL: f64 = 1e-10;

/// `ln(e^a + e^b)`.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

// Frank ----------------------------------------------------------------------

/// `(1 − e^{−θ}) − (1 − e^{−θu})(1 − e^{−θv})`, written as a sum of two
/// nonnegative terms (θ > 0).
fn frank_e(t: f64, u: f64, v: f64) -> f64 {
    (-t * u).exp() * -(-t * v).exp_m1() + (-t * v).exp() * -(-t * (1.0 - v)).exp_m1()
}

pub(crate) fn frank_cdf(t: f64, u: f64, v: f64) -> f64 {
    if t < 0.0 {
        return u - frank_cdf(-t, u, 1.0 - v);
    }
    if t < 1.0 {
        let x = (-t * u).exp_m1() * (-t * v).exp_m1() / (-t).exp_m1();
        -x.ln_1p() / t
    } else {
        -(frank_e(t, u, v).ln() - (-(-t).exp_m1()).ln()) / t
    }
}

pub(crate) fn frank_log_pdf(t: f64, u: f64, v: f64) -> f64 {
    if t < 0.0 {
        return frank_log_pdf(-t, u, 1.0 - v);
    }
    t.ln() + (-(-t).exp_m1()).ln() - t * (u + v) - 2.0 * frank_e(t, u, v).ln()
}

pub(crate) fn frank_h(t: f64, u: f64, v: f64) -> f64 {
    if t < 0.0 {
        return 1.0 - frank_h(-t, u, 1.0 - v);
    }
    let a = -(-t * v).exp_m1();
    let b = -(-t * (1.0 - v)).exp_m1();
    a / (a + (t * (u - v)).exp() * b)
}

pub(crate) fn frank_h_inverse(t: f64, u: f64, w: f64) -> f64 {
    let v = if t.abs() < 1.0 {
        let x = w * (-t).exp_m1() / (w + (1.0 - w) * (-t * u).exp());
        -x.ln_1p() / t
    } else {
        let num = log_add_exp((1.0 - w).ln() - t * u, w.ln() - t);
        let den = log_add_exp(w.ln(), (1.0 - w).ln() - t * u);
        -(num - den) / t
    };
    v.clamp(0.0, 1.0)
}

// Clayton --------------------------------------------------------------------

/// `ln(u^{−θ} + v^{−θ} − 1)`.
fn clayton_log_s(t: f64, u: f64, v: f64) -> f64 {
    let a = -t * u.ln();
    let b = -t * v.ln();
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + ((lo - hi).exp() - (-hi).exp()).ln_1p()
}

pub(crate) fn clayton_cdf(t: f64, u: f64, v: f64) -> f64 {
    (-clayton_log_s(t, u, v) / t).exp()
}

pub(crate) fn clayton_log_pdf(t: f64, u: f64, v: f64) -> f64 {
    t.ln_1p() - (t + 1.0) * (u.ln() + v.ln()) - (2.0 + 1.0 / t) * clayton_log_s(t, u, v)
}

pub(crate) fn clayton_h(t: f64, u: f64, v: f64) -> f64 {
    (-(t + 1.0) * u.ln() - (1.0 / t + 1.0) * clayton_log_s(t, u, v)).exp()
}

pub(crate) fn clayton_h_inverse(t: f64, u: f64, w: f64) -> f64 {
    let alpha = -t * u.ln();
    let beta = (-(t / (1.0 + t)) * w.ln()).exp_m1().ln();
    let log_t = log_add_exp(alpha + beta, 0.0);
    (-log_t / t).exp().clamp(0.0, 1.0)
}

// Gumbel ---------------------------------------------------------------------

/// `((−ln u)^θ + (−ln v)^θ)^{1/θ}` with the larger term factored out.
fn gumbel_a(t: f64, x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    hi * ((lo / hi).powf(t).ln_1p() / t).exp()
}

pub(crate) fn gumbel_cdf(t: f64, u: f64, v: f64) -> f64 {
    (-gumbel_a(t, -u.ln(), -v.ln())).exp()
}

pub(crate) fn gumbel_log_pdf(t: f64, u: f64, v: f64) -> f64 {
    let (x, y) = (-u.ln(), -v.ln());
    let a = gumbel_a(t, x, y);
    -a + (t - 1.0) * (x.ln() + y.ln()) + x + y + (1.0 - 2.0 * t) * a.ln() + (a + t - 1.0).ln()
}

pub(crate) fn gumbel_h(t: f64, u: f64, v: f64) -> f64 {
    let (x, y) = (-u.ln(), -v.ln());
    let a = gumbel_a(t, x, y);
    (-a + (1.0 - t) * a.ln() + (t - 1.0) * x.ln() + x).exp()
}

/// Solves `h(v) = w` for `v` by bisection; `h` must be nondecreasing on (0, 1).
pub(crate) fn bisect_h_inverse(h: impl Fn(f64) -> f64, w: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if h(mid) < w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
