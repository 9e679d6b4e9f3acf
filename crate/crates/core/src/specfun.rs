//! Upper incomplete gamma function for arbitrary real shape.
//!
//! `Γ(α, ρ) = ∫_ρ^∞ t^(α−1) e^(−t) dt` is finite for every real `α` once
//! `ρ > 0`. Library implementations usually stop at `α > 0`, so this module
//! evaluates it in log scale through three routes:
//!
//! * the Legendre continued fraction when `ρ > max(1, α + 1)`, valid for any `α`;
//! * the lower-gamma series complement when `α > 1` and `ρ ≤ α + 1`;
//! * otherwise the downward recurrence `Γ(a, ρ) = (Γ(a+1, ρ) − ρ^a e^(−ρ)) / a`
//!   seeded from the series at `α + k ∈ (1, 2]`, with a quadrature fallback
//!   whenever a recurrence step cancels.
//!
//! Likelihood code only ever consumes `log Γ(α, ρ)` and the partial
//! derivatives collected in [`IncGammaEval`].

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quad;

pub use statrs::function::gamma::{digamma, ln_gamma};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 5000;
const FPMIN: f64 = 1e-300;
/// Relative size of a recurrence difference below which it is considered cancelled.
const CANCELLATION: f64 = 1e-3;

/// `log Γ(α, ρ)` together with the partial derivatives used by the score
/// and the observed information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncGammaEval {
    pub log_value: f64,
    pub d_alpha: f64,
    pub d_rho: f64,
    pub d_alpha_alpha: f64,
    pub d_alpha_rho: f64,
    pub d_rho_rho: f64,
}

/// Natural log of the upper incomplete gamma function.
///
/// `rho = 0` is accepted for `alpha > 0` and returns `ln Γ(α)`.
pub fn log_upper_inc_gamma(alpha: f64, rho: f64) -> Result<f64> {
    if !alpha.is_finite() || !rho.is_finite() {
        return Err(domain(format!("non-finite argument ({alpha}, {rho})")));
    }
    if rho < 0.0 {
        return Err(domain(format!("rho = {rho} must be nonnegative")));
    }
    if rho == 0.0 {
        if alpha > 0.0 {
            return Ok(ln_gamma(alpha));
        }
        return Err(domain(format!(
            "Γ({alpha}, 0) diverges for nonpositive shape"
        )));
    }
    if rho > (alpha + 1.0).max(1.0) {
        return Ok(log_continued_fraction(alpha, rho));
    }
    if alpha > 1.0 {
        return Ok(log_series_complement(alpha, rho));
    }
    match log_scaled_by_recurrence(alpha, rho) {
        Some(log_scaled) => Ok(log_scaled + alpha * rho.ln() - rho),
        None => log_by_quadrature(alpha, rho),
    }
}

/// Legendre continued fraction, modified Lentz evaluation.
fn log_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    -x + a * x.ln() + h.ln()
}

/// Regularized lower gamma `P(a, x)` by its power series; requires `a > 0`.
fn lower_regularized_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

fn log_series_complement(a: f64, x: f64) -> f64 {
    ln_gamma(a) + (-lower_regularized_series(a, x)).ln_1p()
}

/// Returns `log(Γ(α, ρ) ρ^(−α) e^ρ)`, or `None` when a recurrence step
/// loses too many digits.
fn log_scaled_by_recurrence(alpha: f64, rho: f64) -> Option<f64> {
    let steps = ((1.0 - alpha).floor() as i64 + 1).max(0) as usize;
    let base = alpha + steps as f64;
    // Scaled value G_a = Γ(a, ρ) / (ρ^a e^(−ρ)) obeys G_a = (ρ G_{a+1} − 1) / a.
    let mut scaled = (log_series_complement(base, rho) - base * rho.ln() + rho).exp();
    for j in (0..steps).rev() {
        let a = alpha + j as f64;
        let lifted = rho * scaled;
        let diff = lifted - 1.0;
        if a == 0.0 || diff.abs() < CANCELLATION * lifted.max(1.0) {
            return None;
        }
        scaled = diff / a;
        if !(scaled > 0.0 && scaled.is_finite()) {
            return None;
        }
    }
    Some(scaled.ln())
}

/// Direct quadrature of `∫_ρ^∞ t^(α−1) e^(−t) dt` in `u = ln t`; intended for
/// `α ≤ 1` where the integrand decays at least as fast as `e^(−t)`.
fn log_by_quadrature(alpha: f64, rho: f64) -> Result<f64> {
    let lr = rho.ln();
    let integrand = |u: f64| (alpha * (u - lr) - (u.exp() - rho)).exp();
    let mut breaks = vec![lr];
    for step in [0.01, 0.1, 1.0, 3.0, 10.0, 30.0, 100.0] {
        let next = (rho + step).ln();
        if next > breaks[breaks.len() - 1] {
            breaks.push(next);
        }
    }
    let scaled = quad::integrate_pieces(integrand, &breaks, 0.0, 1e-14)?;
    Ok(scaled.ln() + alpha * lr - rho)
}

/// `log Γ(α, ρ)` and its first and second partial derivatives.
///
/// The `ρ` derivatives are closed forms. The `α` derivatives use a
/// five-point central stencil on `log Γ`, and `∂²/∂α∂ρ` follows from
/// differentiating the closed-form `∂/∂ρ` through the chain rule.
pub fn inc_gamma_eval(alpha: f64, rho: f64) -> Result<IncGammaEval> {
    if !(rho > 0.0) {
        return Err(domain(format!("rho = {rho} must be positive")));
    }
    let lr = rho.ln();
    let h = alpha_step(alpha, rho);
    let [fm2, fm1, log_value, fp1, fp2] = stencil_values(alpha, rho, h)?;
    let d_alpha = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h);
    let d_alpha_alpha =
        (16.0 * (fp1 + fm1) - (fp2 + fm2) - 30.0 * log_value) / (12.0 * h * h);

    let d_rho = -((alpha - 1.0) * lr - rho - log_value).exp();
    let d_rho_rho = d_rho * ((alpha - 1.0) / rho - 1.0 - d_rho);
    let d_alpha_rho = d_rho * (lr - d_alpha);
    Ok(IncGammaEval {
        log_value,
        d_alpha,
        d_rho,
        d_alpha_alpha,
        d_alpha_rho,
        d_rho_rho,
    })
}

/// `log Γ` at `α + k h` for `k = −2..=2`. All five points go through the
/// same route so that branch-switching noise does not enter the differences.
fn stencil_values(alpha: f64, rho: f64, h: f64) -> Result<[f64; 5]> {
    let points = [-2.0, -1.0, 0.0, 1.0, 2.0].map(|k| alpha + k * h);
    let recurrence_region = |a: f64| rho <= (a + 1.0).max(1.0) && a <= 1.0;
    if points.iter().any(|&a| recurrence_region(a)) {
        let lr = rho.ln();
        let mut out = [0.0; 5];
        let mut ok = true;
        for (o, &a) in out.iter_mut().zip(&points) {
            let v = if recurrence_region(a) {
                log_scaled_by_recurrence(a, rho).map(|g| g + a * lr - rho)
            } else {
                Some(log_upper_inc_gamma(a, rho)?)
            };
            match v {
                Some(v) => *o = v,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(out);
        }
        let mut out = [0.0; 5];
        for (o, &a) in out.iter_mut().zip(&points) {
            *o = if a <= 1.0 {
                log_by_quadrature(a, rho)?
            } else {
                log_upper_inc_gamma(a, rho)?
            };
        }
        return Ok(out);
    }
    let mut out = [0.0; 5];
    for (o, &a) in out.iter_mut().zip(&points) {
        *o = log_upper_inc_gamma(a, rho)?;
    }
    Ok(out)
}

/// Stencil step in `α`. `log Γ(α, ρ)` varies on an `α`-scale of roughly
/// `1 / |ln ρ|` when `ρ` is small.
fn alpha_step(alpha: f64, rho: f64) -> f64 {
    let curvature_scale = 1.0 / rho.ln().abs().max(1.0);
    2e-3 * curvature_scale * alpha.abs().max(1.0)
}

/// Upper tail `P(χ²₁ > x) = erfc(√(x/2))`.
pub fn chi2_survival_1df(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("chi-square statistic {x} must be nonnegative")));
    }
    Ok(libm::erfc((0.5 * x).sqrt()))
}

/// Trigamma `ψ'(x)` for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x
        + x2 / 2.0
        + x2 / x * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}
