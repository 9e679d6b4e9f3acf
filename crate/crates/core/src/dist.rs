//! The full-tails gamma (FTG) family
//! `f(x; α, θ, ρ) = θ (ρ + θx)^(α−1) e^(−(ρ+θx)) / Γ(α, ρ)` on `x ≥ 0`,
//! with its gamma (`ρ = 0`) and Pareto (`θ = 0`, fixed `σ = ρ/θ`) boundaries.
//!
//! At `α = 1` the interior density is exponential with rate `θ` whatever
//! the value of `ρ`, so `ρ` is not identifiable there.

use serde::{Deserialize, Serialize};

use crate::error::{domain, FtgError, Result};
use crate::quad;
use crate::specfun::{ln_gamma, log_upper_inc_gamma};

/// Pareto law with survival `(1 + x/σ)^α`, `α < 0`, `σ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoParams {
    pub alpha: f64,
    pub sigma: f64,
}

impl ParetoParams {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        if !(alpha < 0.0 && alpha.is_finite()) {
            return Err(FtgError::InvalidParams(format!(
                "Pareto shape must be negative, got {alpha}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(FtgError::InvalidParams(format!(
                "Pareto dispersion must be positive, got {sigma}"
            )));
        }
        Ok(Self { alpha, sigma })
    }
}

/// A point of the FTG parameter space, including its two boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FtgParams {
    /// `θ > 0`, `ρ > 0`, any real `α`.
    Interior { alpha: f64, theta: f64, rho: f64 },
    /// `ρ = 0`: the gamma law with shape `α > 0` and rate `θ > 0`.
    Gamma { alpha: f64, theta: f64 },
    /// `θ = 0` with `σ = ρ/θ` held fixed.
    Pareto { alpha: f64, sigma: f64 },
}

/// Mean and variance. `mu` is `e^(−ρ) ρ^α / Γ(α, ρ)`, the quantity both
/// moment formulas are written in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub mu: f64,
    pub infinite_mean: bool,
}

impl From<ParetoParams> for FtgParams {
    fn from(p: ParetoParams) -> Self {
        FtgParams::Pareto {
            alpha: p.alpha,
            sigma: p.sigma,
        }
    }
}

impl FtgParams {
    /// Builds from the rate parameterization `(α, θ, ρ)`.
    pub fn new(alpha: f64, theta: f64, rho: f64) -> Result<Self> {
        if !alpha.is_finite() || !theta.is_finite() || !rho.is_finite() {
            return Err(FtgError::InvalidParams(format!(
                "non-finite parameters ({alpha}, {theta}, {rho})"
            )));
        }
        match (theta > 0.0, rho) {
            (true, r) if r > 0.0 => Ok(FtgParams::Interior { alpha, theta, rho }),
            (true, r) if r == 0.0 => Self::gamma(alpha, theta),
            _ => Err(FtgError::InvalidParams(format!(
                "need θ > 0 and ρ ≥ 0, got θ = {theta}, ρ = {rho}; use FtgParams::pareto for θ = 0"
            ))),
        }
    }

    /// Builds from the dispersion parameterization `(α, σ, ρ)` with `θ = ρ/σ`.
    /// `ρ = 0` with `α < 0` lands on the Pareto boundary.
    pub fn with_sigma(alpha: f64, sigma: f64, rho: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(FtgError::InvalidParams(format!(
                "dispersion must be positive, got {sigma}"
            )));
        }
        if rho == 0.0 {
            return Self::pareto(alpha, sigma);
        }
        Self::new(alpha, rho / sigma, rho)
    }

    pub fn gamma(alpha: f64, theta: f64) -> Result<Self> {
        if !(alpha > 0.0 && theta > 0.0 && alpha.is_finite() && theta.is_finite()) {
            return Err(FtgError::InvalidParams(format!(
                "gamma boundary needs α > 0 and θ > 0, got ({alpha}, {theta})"
            )));
        }
        Ok(FtgParams::Gamma { alpha, theta })
    }

    pub fn pareto(alpha: f64, sigma: f64) -> Result<Self> {
        ParetoParams::new(alpha, sigma).map(Into::into)
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            FtgParams::Interior { alpha, .. }
            | FtgParams::Gamma { alpha, .. }
            | FtgParams::Pareto { alpha, .. } => alpha,
        }
    }

    /// Rate; zero on the Pareto boundary.
    pub fn theta(&self) -> f64 {
        match *self {
            FtgParams::Interior { theta, .. } | FtgParams::Gamma { theta, .. } => theta,
            FtgParams::Pareto { .. } => 0.0,
        }
    }

    /// Truncation parameter; zero on both boundaries.
    pub fn rho(&self) -> f64 {
        match *self {
            FtgParams::Interior { rho, .. } => rho,
            _ => 0.0,
        }
    }

    /// Dispersion `σ = ρ/θ`; zero on the gamma boundary.
    pub fn sigma(&self) -> f64 {
        match *self {
            FtgParams::Interior { theta, rho, .. } => rho / theta,
            FtgParams::Gamma { .. } => 0.0,
            FtgParams::Pareto { sigma, .. } => sigma,
        }
    }

    pub fn as_pareto(&self) -> Option<ParetoParams> {
        match *self {
            FtgParams::Pareto { alpha, sigma } => Some(ParetoParams { alpha, sigma }),
            _ => None,
        }
    }

    pub fn is_interior(&self) -> bool {
        matches!(self, FtgParams::Interior { .. })
    }

    /// `log Γ(α, ρ)`, the log normalizer of the interior density.
    fn log_norm(&self) -> Result<f64> {
        match *self {
            FtgParams::Interior { alpha, rho, .. } => log_upper_inc_gamma(alpha, rho),
            FtgParams::Gamma { alpha, .. } => Ok(ln_gamma(alpha)),
            FtgParams::Pareto { .. } => Ok(0.0),
        }
    }
}

fn check_x(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!("density support is x ≥ 0, got {x}")))
    }
}

pub fn log_pdf(p: &FtgParams, x: f64) -> Result<f64> {
    check_x(x)?;
    let d = p.log_norm()?;
    Ok(match *p {
        FtgParams::Interior { alpha, theta, rho } => {
            let z = rho + theta * x;
            theta.ln() + (alpha - 1.0) * z.ln() - z - d
        }
        FtgParams::Gamma { alpha, theta } => {
            if x == 0.0 {
                return Ok(match alpha {
                    a if a < 1.0 => f64::INFINITY,
                    a if a == 1.0 => theta.ln(),
                    _ => f64::NEG_INFINITY,
                });
            }
            alpha * theta.ln() + (alpha - 1.0) * x.ln() - theta * x - d
        }
        FtgParams::Pareto { alpha, sigma } => (-alpha / sigma).ln() + (alpha - 1.0) * (x / sigma).ln_1p(),
    })
}

pub fn pdf(p: &FtgParams, x: f64) -> Result<f64> {
    log_pdf(p, x).map(f64::exp)
}

/// `log P(X > x)`, computed directly as a gamma-function ratio.
pub fn log_survival(p: &FtgParams, x: f64) -> Result<f64> {
    check_x(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(match *p {
        FtgParams::Interior { alpha, theta, rho } => {
            log_upper_inc_gamma(alpha, rho + theta * x)? - p.log_norm()?
        }
        FtgParams::Gamma { alpha, theta } => {
            (log_upper_inc_gamma(alpha, theta * x)? - p.log_norm()?).min(0.0)
        }
        FtgParams::Pareto { alpha, sigma } => alpha * (x / sigma).ln_1p(),
    })
}

pub fn survival(p: &FtgParams, x: f64) -> Result<f64> {
    log_survival(p, x).map(f64::exp)
}

pub fn cdf(p: &FtgParams, x: f64) -> Result<f64> {
    log_survival(p, x).map(|ls| -ls.exp_m1())
}

/// Inverse CDF for `prob ∈ [0, 1)`.
pub fn quantile(p: &FtgParams, prob: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&prob) {
        return Err(domain(format!("probability must lie in [0, 1), got {prob}")));
    }
    if prob == 0.0 {
        return Ok(0.0);
    }
    if let FtgParams::Pareto { alpha, sigma } = *p {
        return Ok(sigma * ((-prob).ln_1p() / alpha).exp_m1());
    }
    let target = (-prob).ln_1p();
    let gap = |x: f64| log_survival(p, x).map(|ls| ls - target);

    // Bracket starting at the mean, doubling outward.
    let start = moments(p)?.mean;
    let mut hi = if start.is_finite() && start > 0.0 { start } else { 1.0 / p.theta() };
    let mut lo = 0.0;
    let mut g_hi = gap(hi)?;
    while g_hi > 0.0 {
        lo = hi;
        hi *= 2.0;
        g_hi = gap(hi)?;
        if !hi.is_finite() {
            return Err(FtgError::NonConvergence {
                method: "quantile bracketing",
                iterations: 0,
                last: vec![lo],
            });
        }
    }

    // Safeguarded Newton on log S(x) − target; d/dx log S = −hazard.
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = gap(x)?;
        if g.abs() < 1e-14 {
            return Ok(x);
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let hazard = (log_pdf(p, x)? - log_survival(p, x)?).exp();
        let newton = x + g / hazard;
        x = if newton > lo && newton < hi && hazard.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi {
            return Ok(x);
        }
    }
    Err(FtgError::NonConvergence {
        method: "quantile refinement",
        iterations: 200,
        last: vec![lo, hi],
    })
}

/// `M(t) = E[e^(tX)]`.
pub fn mgf(p: &FtgParams, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    match *p {
        FtgParams::Interior { alpha, theta, rho } => {
            if t >= theta {
                return Err(domain(format!("mgf requires t < θ = {theta}, got {t}")));
            }
            let shrink = 1.0 - t / theta;
            let log_m = -alpha * shrink.ln() - rho * t / theta
                + log_upper_inc_gamma(alpha, rho * shrink)?
                - log_upper_inc_gamma(alpha, rho)?;
            Ok(log_m.exp())
        }
        FtgParams::Gamma { alpha, theta } => {
            if t >= theta {
                return Err(domain(format!("mgf requires t < θ = {theta}, got {t}")));
            }
            Ok((-alpha * (1.0 - t / theta).ln()).exp())
        }
        FtgParams::Pareto { alpha, sigma } => {
            if t > 0.0 {
                return Err(domain("the Pareto law has no moment-generating function for t > 0"));
            }
            // −α e^s s^(−α) Γ(α, s) with s = −tσ
            let s = -t * sigma;
            Ok(((-alpha).ln() + s - alpha * s.ln() + log_upper_inc_gamma(alpha, s)?).exp())
        }
    }
}

pub fn moments(p: &FtgParams) -> Result<Moments> {
    match *p {
        FtgParams::Interior { alpha, theta, rho } => {
            let mu = (-rho + alpha * rho.ln() - log_upper_inc_gamma(alpha, rho)?).exp();
            let mean = (alpha - rho + mu) / theta;
            let variance = ((alpha + (1.0 + rho - alpha) * mu - mu * mu) / (theta * theta)).max(0.0);
            Ok(Moments {
                mean,
                variance,
                mu,
                infinite_mean: false,
            })
        }
        FtgParams::Gamma { alpha, theta } => Ok(Moments {
            mean: alpha / theta,
            variance: alpha / (theta * theta),
            mu: 0.0,
            infinite_mean: false,
        }),
        FtgParams::Pareto { alpha, sigma } => {
            let infinite_mean = alpha >= -1.0;
            let mean = if infinite_mean {
                f64::INFINITY
            } else {
                sigma / (-alpha - 1.0)
            };
            let variance = if alpha >= -2.0 {
                f64::INFINITY
            } else {
                let a = -alpha;
                sigma * sigma * a / ((a - 1.0) * (a - 1.0) * (a - 2.0))
            };
            Ok(Moments {
                mean,
                variance,
                mu: -alpha,
                infinite_mean,
            })
        }
    }
}

/// `E[X | X > u]`. For interior parameters this is `(α − ρ + μ′)/θ` with `μ′`
/// evaluated at the truncated parameter `ρ + θu`; it is infinite for a
/// Pareto law with `α ≥ −1`.
pub fn conditional_mean_excess(p: &FtgParams, u: f64) -> Result<f64> {
    check_x(u)?;
    match *p {
        FtgParams::Pareto { alpha, sigma } => Ok(if alpha >= -1.0 {
            f64::INFINITY
        } else {
            u + (sigma + u) / (-alpha - 1.0)
        }),
        _ => {
            if u == 0.0 {
                return Ok(moments(p)?.mean);
            }
            let (alpha, theta, rho) = (p.alpha(), p.theta(), p.rho());
            let z = rho + theta * u;
            let mu = (-z + alpha * z.ln() - log_upper_inc_gamma(alpha, z)?).exp();
            Ok((alpha - rho + mu) / theta)
        }
    }
}

/// Law of `λX`.
pub fn scale(p: &FtgParams, lambda: f64) -> Result<FtgParams> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain(format!("scale factor must be positive, got {lambda}")));
    }
    Ok(match *p {
        FtgParams::Interior { alpha, theta, rho } => FtgParams::Interior {
            alpha,
            theta: theta / lambda,
            rho,
        },
        FtgParams::Gamma { alpha, theta } => FtgParams::Gamma {
            alpha,
            theta: theta / lambda,
        },
        FtgParams::Pareto { alpha, sigma } => FtgParams::Pareto {
            alpha,
            sigma: lambda * sigma,
        },
    })
}

/// Law of the exceedance `X − u` given `X > u`.
pub fn truncate(p: &FtgParams, u: f64) -> Result<FtgParams> {
    check_x(u)?;
    if u == 0.0 {
        return Ok(*p);
    }
    Ok(match *p {
        FtgParams::Interior { alpha, theta, rho } => FtgParams::Interior {
            alpha,
            theta,
            rho: rho + theta * u,
        },
        FtgParams::Gamma { alpha, theta } => FtgParams::Interior {
            alpha,
            theta,
            rho: theta * u,
        },
        FtgParams::Pareto { alpha, sigma } => FtgParams::Pareto {
            alpha,
            sigma: sigma + u,
        },
    })
}

/// `∫₀^∞ |f(x; α, ρ/σ, ρ) − p(x; α, σ)| dx`, the distance from an interior
/// FTG density to its Pareto limit at the same `(α, σ)`.
pub fn pareto_limit_distance(alpha: f64, sigma: f64, rho: f64) -> Result<f64> {
    if !(alpha < 0.0 && sigma > 0.0 && rho > 0.0) {
        return Err(domain(format!(
            "need α < 0, σ > 0, ρ > 0, got ({alpha}, {sigma}, {rho})"
        )));
    }
    // In v = ln(1 + x/σ) both densities share the factor e^(αv) and the
    // integrand is |ρ^α e^(−ρ e^v) / Γ(α, ρ) + α| e^(αv); σ drops out.
    let ratio = (alpha * rho.ln() - log_upper_inc_gamma(alpha, rho)?).exp();
    let integrand = |v: f64| (ratio * (-rho * v.exp()).exp() + alpha).abs() * (alpha * v).exp();

    // Past v_max the FTG term is below e^(−50) and only the Pareto tail
    // e^(αv) remains, which integrates in closed form.
    let transition = (-rho.ln()).max(0.0);
    let v_max = transition + 50f64.ln();
    let mut breaks: Vec<f64> = Vec::new();
    let mut v = 0.0;
    while v < v_max {
        breaks.push(v);
        v += 0.5;
    }
    breaks.push(v_max);
    let body = quad::integrate_pieces(integrand, &breaks, 1e-15, 1e-12)?;
    let tail = (alpha * v_max).exp();
    Ok(body + tail)
}
