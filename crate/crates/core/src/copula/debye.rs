//! First-order Debye function and the Frank tau map.

const REL_TOL: f64 = 1e-10;
const MAX_DEPTH: u32 = 48;

fn debye_integrand(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        t / t.exp_m1()
    }
}

/// `D₁(x) = (1/x) ∫₀ˣ t / (eᵗ − 1) dt`, with `D₁(0) = 1`.
pub fn debye1(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    // Past 120 the integrand is below 1e-50; the tail is irrelevant.
    integrate(debye_integrand, 0.0, x.min(120.0)) / x
}

/// Population Kendall's tau of the Frank copula, `1 − (4/θ)(1 − D₁(θ))`.
pub(crate) fn frank_tau(theta: f64) -> f64 {
    if theta.abs() < 1e-2 {
        // Series of the same expression; the closed form cancels badly here.
        let t2 = theta * theta;
        return theta / 9.0 - theta * t2 / 900.0 + theta * t2 * t2 / 52_920.0;
    }
    1.0 - 4.0 / theta * (1.0 - debye1(theta))
}

/// Integral of a one-signed `f` over `[a, b]` (either orientation) by
/// adaptive Simpson quadrature at relative tolerance 1e-10. The range is cut
/// into panels of width at most 2 so each panel's tolerance is set from a
/// sensible first estimate.
fn integrate(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64) -> f64 {
    let panels = ((b - a).abs() / 2.0).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + width * k as f64;
            let hi = if k + 1 == panels { b } else { lo + width };
            integrate_panel(f, lo, hi)
        })
        .sum()
}

fn integrate_panel(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Scale the absolute tolerance by a cheap estimate of the integral.
    let tol = REL_TOL * whole.abs().max(f64::MIN_POSITIVE);
    simpson(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: impl Fn(f64) -> f64 + Copy,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
