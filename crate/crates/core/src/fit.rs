//! Maximum likelihood for the FTG, Pareto and gamma families.
//!
//! The FTG fit profiles out `(α, ρ)` for each dispersion `σ`: with `σ`
//! fixed the model is a two-parameter exponential family in
//! `r = 1 + x/σ`, so the inner problem is concave and solved by damped
//! Newton. The outer search maximizes the profile over `log σ` with
//! Brent's method, started from a gamma fit and from a Pareto fit, on the
//! sample standardized to unit mean.

use nalgebra::{Matrix2, Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::dist::FtgParams;
use crate::error::{domain, FtgError, Result};
use crate::optim;
use crate::specfun::{chi2_survival_1df, digamma, inc_gamma_eval, ln_gamma, trigamma};

const INNER_MAX_ITER: usize = 200;
/// Per-observation score residual at which the inner solve stops.
const INNER_TOL: f64 = 1e-11;
/// Below this `ρ` (with `α < 0`) the inner problem is on the Pareto boundary.
const RHO_FLOOR: f64 = 1e-13;
const BOUNDARY_RHO: f64 = 1e-10;
const BOUNDARY_LOGLIK: f64 = 1e-6;
/// Successive search ranges for `ln σ` on the standardized scale
/// (`±ln 1e4`, `±ln 1e6`, `±ln 1e8`); a wider one is tried only when the
/// maximum sits on the edge of the current one.
const LOG_SIGMA_RANGES: [f64; 3] = [9.210340371976184, 13.815510557964274, 18.420680743952367];
const OUTER_TOL: f64 = 1e-8;
const OUTER_MAX_ITER: usize = 200;
const SCORE_TOL: f64 = 1e-6;

/// Means of `r = 1 + x/σ` and `s = ln(1 + x/σ)` and their `σ`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub n: usize,
    pub sigma: f64,
    pub r_bar: f64,
    pub s_bar: f64,
    pub r_bar_sigma: f64,
    pub s_bar_sigma: f64,
    pub r_bar_sigma_sigma: f64,
    pub s_bar_sigma_sigma: f64,
    /// Sample variance of `r`, used to seed the inner solve.
    pub var_r: f64,
}

impl SufficientStats {
    pub fn new(values: &[f64], sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain(format!("dispersion must be positive, got {sigma}")));
        }
        if values.is_empty() {
            return Err(FtgError::DegenerateSample("sample is empty".into()));
        }
        let n = values.len();
        let nf = n as f64;
        let (mut sum_x, mut sum_x2, mut s, mut s1, mut s2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &x in values {
            sum_x += x;
            sum_x2 += x * x;
            s += (x / sigma).ln_1p();
            let sx = sigma + x;
            s1 += x / (sigma * sx);
            s2 += x * (2.0 * sigma + x) / (sigma * sigma * sx * sx);
        }
        let x_bar = sum_x / nf;
        let var_x = (sum_x2 / nf - x_bar * x_bar).max(0.0);
        Ok(Self {
            n,
            sigma,
            r_bar: 1.0 + x_bar / sigma,
            s_bar: s / nf,
            r_bar_sigma: -x_bar / (sigma * sigma),
            s_bar_sigma: -s1 / nf,
            r_bar_sigma_sigma: 2.0 * x_bar / (sigma * sigma * sigma),
            s_bar_sigma_sigma: s2 / nf,
            var_r: var_x / (sigma * sigma),
        })
    }
}

fn check_ftg_args(sigma: f64, rho: f64) -> Result<()> {
    if !(sigma > 0.0 && rho > 0.0 && sigma.is_finite() && rho.is_finite()) {
        return Err(domain(format!("need σ > 0 and ρ > 0, got σ = {sigma}, ρ = {rho}")));
    }
    Ok(())
}

fn loglik_from_stats(st: &SufficientStats, alpha: f64, rho: f64, d: f64) -> f64 {
    -(st.n as f64) * (d + st.sigma.ln() - alpha * rho.ln() - (alpha - 1.0) * st.s_bar + rho * st.r_bar)
}

/// `−n(d + ln σ − α ln ρ − (α−1)s̄ + ρr̄)` with `d = log Γ(α, ρ)`.
pub fn loglik_ftg(sample: &Sample, alpha: f64, sigma: f64, rho: f64) -> Result<f64> {
    check_ftg_args(sigma, rho)?;
    let st = SufficientStats::new(sample.values(), sigma)?;
    let d = crate::specfun::log_upper_inc_gamma(alpha, rho)?;
    Ok(loglik_from_stats(&st, alpha, rho, d))
}

pub fn loglik_pareto(sample: &Sample, alpha: f64, sigma: f64) -> Result<f64> {
    if !(alpha < 0.0 && sigma > 0.0) {
        return Err(domain(format!("need α < 0 and σ > 0, got ({alpha}, {sigma})")));
    }
    let n = sample.len() as f64;
    let s: f64 = sample.values().iter().map(|x| (x / sigma).ln_1p()).sum();
    Ok(n * (-alpha / sigma).ln() + (alpha - 1.0) * s)
}

pub fn loglik_gamma(sample: &Sample, alpha: f64, theta: f64) -> Result<f64> {
    if !(alpha > 0.0 && theta > 0.0) {
        return Err(domain(format!("need α > 0 and θ > 0, got ({alpha}, {theta})")));
    }
    let n = sample.len() as f64;
    let (sum_x, sum_ln) = sample
        .values()
        .iter()
        .fold((0.0, 0.0), |(a, b), &x| (a + x, b + x.ln()));
    Ok(n * (alpha * theta.ln() - ln_gamma(alpha)) + (alpha - 1.0) * sum_ln - theta * sum_x)
}

/// `(l_α, l_σ, l_ρ)`.
pub fn score_ftg(sample: &Sample, alpha: f64, sigma: f64, rho: f64) -> Result<[f64; 3]> {
    check_ftg_args(sigma, rho)?;
    let st = SufficientStats::new(sample.values(), sigma)?;
    let e = inc_gamma_eval(alpha, rho)?;
    let n = st.n as f64;
    Ok([
        -n * (e.d_alpha - rho.ln() - st.s_bar),
        -n * (1.0 / sigma - (alpha - 1.0) * st.s_bar_sigma + rho * st.r_bar_sigma),
        -n * (e.d_rho - alpha / rho + st.r_bar),
    ])
}

/// Observed information in `(α, σ, ρ)`: the negative Hessian of the
/// log-likelihood.
pub fn observed_information(sample: &Sample, alpha: f64, sigma: f64, rho: f64) -> Result<Matrix3<f64>> {
    check_ftg_args(sigma, rho)?;
    let st = SufficientStats::new(sample.values(), sigma)?;
    let e = inc_gamma_eval(alpha, rho)?;
    let n = st.n as f64;
    let aa = e.d_alpha_alpha;
    let a_s = -st.s_bar_sigma;
    let ar = e.d_alpha_rho - 1.0 / rho;
    let ss = -1.0 / (sigma * sigma) - (alpha - 1.0) * st.s_bar_sigma_sigma + rho * st.r_bar_sigma_sigma;
    let sr = st.r_bar_sigma;
    let rr = e.d_rho_rho + alpha / (rho * rho);
    Ok(Matrix3::new(aa, a_s, ar, a_s, ss, sr, ar, sr, rr) * n)
}

/// Profile log-likelihood written without the sample, valid only at a
/// solution of the inner score equations for `σ`.
pub fn profile_loglik_sample_free(n: usize, alpha: f64, sigma: f64, rho: f64) -> Result<f64> {
    check_ftg_args(sigma, rho)?;
    let e = inc_gamma_eval(alpha, rho)?;
    Ok(-(n as f64)
        * (e.log_value - (rho / sigma).ln() - (alpha - 1.0) * e.d_alpha - rho * e.d_rho + alpha))
}

/// Maximizer of the likelihood over `(α, ρ)` at fixed `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerSolution {
    pub alpha: f64,
    /// Zero on the Pareto boundary.
    pub rho: f64,
    pub loglik: f64,
    /// `max(|l_α|, |ρ l_ρ|)`; zero on the boundary.
    pub residual: f64,
    pub iterations: usize,
    pub at_boundary: bool,
}

/// Solves `l_α = l_ρ = 0` for fixed `σ`.
pub fn inner_solve(sample: &Sample, sigma: f64, warm_start: Option<(f64, f64)>) -> Result<InnerSolution> {
    let st = SufficientStats::new(sample.values(), sigma)?;
    inner_solve_stats(&st, warm_start)
}

fn default_inner_start(st: &SufficientStats) -> (f64, f64) {
    // gamma moments of r, ignoring the truncation at 1
    if st.var_r > 0.0 {
        let rho = st.r_bar / st.var_r;
        (st.r_bar * rho, rho.max(1e-8))
    } else {
        (1.0, 1.0)
    }
}

struct InnerState {
    g: f64,
    grad: Vector2<f64>,
    hess: Matrix2<f64>,
}

fn inner_state(st: &SufficientStats, alpha: f64, rho: f64) -> Result<InnerState> {
    let e = inc_gamma_eval(alpha, rho)?;
    let g = -e.log_value + alpha * rho.ln() + (alpha - 1.0) * st.s_bar - rho * st.r_bar;
    let grad = Vector2::new(-e.d_alpha + rho.ln() + st.s_bar, -e.d_rho + alpha / rho - st.r_bar);
    let off = e.d_alpha_rho - 1.0 / rho;
    let hess = Matrix2::new(e.d_alpha_alpha, off, off, e.d_rho_rho + alpha / (rho * rho));
    Ok(InnerState { g, grad, hess })
}

fn inner_objective(st: &SufficientStats, alpha: f64, rho: f64) -> Result<f64> {
    let d = crate::specfun::log_upper_inc_gamma(alpha, rho)?;
    Ok(-d + alpha * rho.ln() + (alpha - 1.0) * st.s_bar - rho * st.r_bar)
}

/// Profile value on the Pareto boundary, where `α̂ = −1/s̄`.
fn pareto_profile(st: &SufficientStats) -> f64 {
    let n = st.n as f64;
    n * (-(st.s_bar * st.sigma).ln() - 1.0 - st.s_bar)
}

fn inner_solve_stats(st: &SufficientStats, warm_start: Option<(f64, f64)>) -> Result<InnerSolution> {
    if !(st.s_bar > 0.0) {
        return Err(FtgError::DegenerateSample("all observations are zero".into()));
    }
    let n = st.n as f64;
    let (mut alpha, mut rho) = warm_start
        .filter(|(a, r)| a.is_finite() && *r > 0.0)
        .unwrap_or_else(|| default_inner_start(st));
    let boundary = |alpha: f64, iterations| InnerSolution {
        alpha: -1.0 / st.s_bar,
        rho: 0.0,
        loglik: pareto_profile(st),
        residual: 0.0,
        iterations,
        at_boundary: alpha < 0.0,
    };

    let mut state = inner_state(st, alpha, rho)?;
    for it in 0..INNER_MAX_ITER {
        // ρ·∂/∂ρ: the raw ρ component is a difference of O(1/ρ) terms
        let residual = state.grad[0].abs().max((rho * state.grad[1]).abs());
        if residual < INNER_TOL {
            return Ok(InnerSolution {
                alpha,
                rho,
                loglik: n * (state.g - st.sigma.ln()),
                residual: n * residual,
                iterations: it,
                at_boundary: false,
            });
        }
        if rho < RHO_FLOOR && alpha < 0.0 {
            return Ok(boundary(alpha, it));
        }
        // Newton ascent direction; the objective is concave so the Hessian
        // of the log normalizer is positive definite up to rounding.
        let step = match state.hess.cholesky() {
            Some(ch) => ch.solve(&state.grad),
            None => Vector2::new(
                state.grad[0] / state.hess[(0, 0)].abs().max(1e-12),
                state.grad[1] / state.hess[(1, 1)].abs().max(1e-12),
            ),
        };
        let mut tau: f64 = 1.0;
        if step[1] < 0.0 {
            tau = tau.min(0.9 * rho / -step[1]);
        }
        let cap = 5.0 * alpha.abs().max(1.0);
        if step[0].abs() > cap {
            tau = tau.min(cap / step[0].abs());
        }
        let slope = state.grad.dot(&step);
        let mut accepted = None;
        if slope < 1e-12 * (1.0 + state.g.abs()) {
            // Newton decrement at rounding level: the quadratic model is
            // exact and the objective can no longer rank the points.
            let (a, r) = (alpha + tau * step[0], rho + tau * step[1]);
            if r > 0.0 && (a, r) != (alpha, rho) {
                accepted = Some((a, r));
            }
        } else {
            for _ in 0..60 {
                let (a, r) = (alpha + tau * step[0], rho + tau * step[1]);
                if r > 0.0 {
                    if let Ok(g) = inner_objective(st, a, r) {
                        if g >= state.g + 1e-4 * tau * slope {
                            accepted = Some((a, r));
                            break;
                        }
                    }
                }
                tau *= 0.5;
            }
        }
        match accepted {
            Some((a, r)) => {
                alpha = a;
                rho = r;
                state = inner_state(st, alpha, rho)?;
            }
            None => {
                // No ascent left: accept if the residual is at rounding level.
                if residual < 1e-9 {
                    return Ok(InnerSolution {
                        alpha,
                        rho,
                        loglik: n * (state.g - st.sigma.ln()),
                        residual: n * residual,
                        iterations: it,
                        at_boundary: false,
                    });
                }
                return Err(FtgError::NonConvergence {
                    method: "inner Newton (line search)",
                    iterations: it,
                    last: vec![alpha, rho, residual],
                });
            }
        }
    }
    Err(FtgError::NonConvergence {
        method: "inner Newton",
        iterations: INNER_MAX_ITER,
        last: vec![alpha, rho],
    })
}

/// Which family a fit belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ftg,
    Pareto,
    Gamma,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ftg" => Ok(Family::Ftg),
            "pareto" => Ok(Family::Pareto),
            "gamma" => Ok(Family::Gamma),
            other => Err(format!("unknown family {other:?} (expected ftg, pareto or gamma)")),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Ftg => "ftg",
            Family::Pareto => "pareto",
            Family::Gamma => "gamma",
        })
    }
}

/// A maximum-likelihood fit on the original scale of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Family that was requested.
    pub family: Family,
    /// The estimate; for an FTG fit that drifted to a boundary this is the
    /// boundary law.
    pub params: FtgParams,
    pub n: usize,
    pub loglik: f64,
    pub param_names: Vec<String>,
    pub estimates: Vec<f64>,
    pub score: Vec<f64>,
    pub score_norm: f64,
    pub observed_info: Vec<Vec<f64>>,
    pub std_errors: Vec<f64>,
    /// Information and standard errors with positive-scale parameters
    /// (`σ`, `ρ`, `θ`) replaced by their logarithms.
    pub log_param_names: Vec<String>,
    pub observed_info_log: Vec<Vec<f64>>,
    pub std_errors_log: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub standardization_factor: f64,
    /// Set when an FTG fit did not find an interior maximum.
    pub boundary: Option<Boundary>,
}

/// Where an FTG fit ended when the likelihood has no interior maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `ρ → 0` at fixed `σ`; `params` holds the Pareto fit.
    Pareto,
    /// `σ → 0` at fixed `θ`; `params` holds the gamma fit.
    Gamma,
    /// The profile still rises at the widest dispersion searched; `params`
    /// holds the interior point found there.
    DispersionLimit,
}

impl FitResult {
    fn assemble(
        family: Family,
        params: FtgParams,
        sample: &Sample,
        loglik: f64,
        score: Vec<f64>,
        info: Vec<Vec<f64>>,
        names: [&str; 3],
        iterations: usize,
        factor: f64,
    ) -> Self {
        let k = score.len();
        let estimates: Vec<f64> = match params {
            FtgParams::Interior { alpha, theta, rho } => vec![alpha, rho / theta, rho],
            FtgParams::Pareto { alpha, sigma } => vec![alpha, sigma],
            FtgParams::Gamma { alpha, theta } => vec![alpha, theta],
        };
        let names: Vec<String> = names[..k].iter().map(|s| s.to_string()).collect();
        let log_names = names
            .iter()
            .enumerate()
            .map(|(i, s)| if i == 0 { s.clone() } else { format!("log_{s}") })
            .collect();
        let jac: Vec<f64> = (0..k).map(|i| if i == 0 { 1.0 } else { estimates[i] }).collect();
        let info_log: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| info[i][j] * jac[i] * jac[j]).collect())
            .collect();
        let std_errors = std_errors_from(&info);
        let std_errors_log = std_errors_from(&info_log);
        let score_norm = score.iter().map(|s| s * s).sum::<f64>().sqrt();
        let n = sample.len();
        let converged = score_norm < SCORE_TOL * n as f64 && std_errors.iter().all(|s| s.is_finite());
        FitResult {
            family,
            params,
            n,
            loglik,
            param_names: names,
            estimates,
            score,
            score_norm,
            observed_info: info,
            std_errors,
            log_param_names: log_names,
            observed_info_log: info_log,
            std_errors_log,
            converged,
            iterations,
            standardization_factor: factor,
            boundary: None,
        }
    }
}

/// Square roots of the diagonal of the inverse; NaN where the matrix is
/// not positive definite.
fn std_errors_from(info: &[Vec<f64>]) -> Vec<f64> {
    let k = info.len();
    let m = nalgebra::DMatrix::from_fn(k, k, |i, j| info[i][j]);
    match m.clone().cholesky() {
        Some(ch) => {
            let inv = ch.inverse();
            (0..k).map(|i| inv[(i, i)].sqrt()).collect()
        }
        None => vec![f64::NAN; k],
    }
}

fn matrix_rows<const R: usize>(m: &nalgebra::SMatrix<f64, R, R>) -> Vec<Vec<f64>> {
    (0..R).map(|i| (0..R).map(|j| m[(i, j)]).collect()).collect()
}

fn check_sample(sample: &Sample, min_n: usize) -> Result<()> {
    if sample.len() < min_n {
        return Err(FtgError::DegenerateSample(format!(
            "need at least {min_n} observations, got {}",
            sample.len()
        )));
    }
    if sample.distinct_positive() < 2 {
        return Err(FtgError::DegenerateSample(
            "need at least two distinct positive observations".into(),
        ));
    }
    Ok(())
}

/// Maximizes `f` over `t` starting from `t0`: walks uphill with doubling
/// steps until bracketed, then refines with Brent. Returns the argmax, the
/// value and the number of evaluations.
/// Why a profile search stopped short of an interior maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    /// The profile still rises at the end of the search range.
    Range,
    /// The next point uphill could not be evaluated.
    Unsolvable,
}

struct Peak {
    t: f64,
    value: f64,
    evals: usize,
    edge: Option<Edge>,
}

/// Walks uphill from `t0` with doubling steps until the profile turns
/// down, then refines with Brent.
fn bracket_and_maximize<F>(mut f: F, t0: f64, lo: f64, hi: f64) -> Result<Peak>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut evals = 0usize;
    let mut eval = |t: f64, f: &mut F| -> Result<f64> {
        evals += 1;
        f(t)
    };
    let t0 = t0.clamp(lo, hi);
    let f0 = eval(t0, &mut f)?;
    let h = 0.5;
    let (tr, tl) = ((t0 + h).min(hi), (t0 - h).max(lo));
    let fr = eval(tr, &mut f);
    let fl = eval(tl, &mut f);
    let (fr, fl) = match (fr, fl) {
        (Ok(r), Ok(l)) => (r, l),
        (Err(e), Err(_)) => return Err(e),
        // one neighbour is unsolvable: only the other side is searched
        (Ok(r), Err(_)) if r <= f0 => (r, f64::NEG_INFINITY),
        (Err(_), Ok(l)) if l <= f0 => (f64::NEG_INFINITY, l),
        (Ok(r), Err(_)) => (r, f64::NEG_INFINITY),
        (Err(_), Ok(l)) => (f64::NEG_INFINITY, l),
    };

    let (a, b, best) = if f0 >= fr && f0 >= fl {
        if fr == f64::NEG_INFINITY || fl == f64::NEG_INFINITY {
            return Ok(Peak { t: t0, value: f0, evals, edge: Some(Edge::Unsolvable) });
        }
        (tl, tr, t0)
    } else {
        let dir = if fr > fl { 1.0 } else { -1.0 };
        let (mut prev, mut cur, mut fcur) = (t0, if dir > 0.0 { tr } else { tl }, fr.max(fl));
        let mut step = h;
        // first point uphill known to be unsolvable
        let mut ceiling: Option<f64> = None;
        loop {
            let next = match ceiling {
                Some(c) => 0.5 * (cur + c),
                None => {
                    step *= 2.0;
                    (cur + dir * step).clamp(lo, hi)
                }
            };
            if next == cur {
                return Ok(Peak { t: cur, value: fcur, evals, edge: Some(Edge::Range) });
            }
            if ceiling.is_some_and(|c| (c - cur).abs() < 0.1) {
                return Ok(Peak { t: cur, value: fcur, evals, edge: Some(Edge::Unsolvable) });
            }
            let fnext = match eval(next, &mut f) {
                Ok(v) => v,
                Err(_) => {
                    ceiling = Some(next);
                    continue;
                }
            };
            if fnext < fcur {
                break (prev.min(next), prev.max(next), cur);
            }
            prev = cur;
            cur = next;
            fcur = fnext;
        }
    };
    let m = optim::minimize(|t| f(t).map(|v| -v), a, b, best, OUTER_TOL, OUTER_MAX_ITER)?;
    Ok(Peak { t: m.x, value: -m.fx, evals: evals + m.iterations, edge: None })
}

/// Two-parameter Pareto MLE. `α̂(σ) = −1/s̄(σ)` in closed form; `σ` by
/// Brent on the profile.
pub fn fit_pareto(sample: &Sample) -> Result<FitResult> {
    check_sample(sample, 2)?;
    let (std, factor) = sample.standardized()?;
    let profile = |t: f64| -> Result<f64> { Ok(pareto_profile(&SufficientStats::new(std.values(), t.exp())?)) };
    let edge = LOG_SIGMA_RANGES[LOG_SIGMA_RANGES.len() - 1];
    let peak = bracket_and_maximize(profile, 0.0, -edge, edge)?;
    let (t, iterations) = (peak.t, peak.evals);
    if peak.edge.is_some() {
        return Err(FtgError::NonConvergence {
            method: "Pareto profile (maximum at the edge of the dispersion range)",
            iterations,
            last: vec![t],
        });
    }
    let sigma = t.exp() * factor;
    let st = SufficientStats::new(sample.values(), sigma)?;
    let alpha = -1.0 / st.s_bar;
    pareto_result(sample, alpha, sigma, iterations, factor)
}

fn pareto_result(sample: &Sample, alpha: f64, sigma: f64, iterations: usize, factor: f64) -> Result<FitResult> {
    let st = SufficientStats::new(sample.values(), sigma)?;
    let n = st.n as f64;
    let loglik = loglik_pareto(sample, alpha, sigma)?;
    let score = vec![n / alpha + n * st.s_bar, -n / sigma + (alpha - 1.0) * n * st.s_bar_sigma];
    let info = Matrix2::new(
        n / (alpha * alpha),
        -n * st.s_bar_sigma,
        -n * st.s_bar_sigma,
        -(n / (sigma * sigma) + (alpha - 1.0) * n * st.s_bar_sigma_sigma),
    );
    Ok(FitResult::assemble(
        Family::Pareto,
        FtgParams::pareto(alpha, sigma)?,
        sample,
        loglik,
        score,
        matrix_rows(&info),
        ["alpha", "sigma", ""],
        iterations,
        factor,
    ))
}

/// Gamma MLE: moments, then Newton on `ln α − ψ(α) = ln x̄ − mean ln x`.
pub fn fit_gamma(sample: &Sample) -> Result<FitResult> {
    check_sample(sample, 2)?;
    let (alpha, theta, iterations) = gamma_estimate(sample.values())?;
    let n = sample.len() as f64;
    let loglik = loglik_gamma(sample, alpha, theta)?;
    let mean = sample.mean();
    let mean_ln = sample.values().iter().map(|x| x.ln()).sum::<f64>() / n;
    let score = vec![
        n * (theta.ln() - digamma(alpha) + mean_ln),
        n * (alpha / theta - mean),
    ];
    let info = Matrix2::new(n * trigamma(alpha), -n / theta, -n / theta, n * alpha / (theta * theta));
    let mut fit = FitResult::assemble(
        Family::Gamma,
        FtgParams::gamma(alpha, theta)?,
        sample,
        loglik,
        score,
        matrix_rows(&info),
        ["alpha", "theta", ""],
        iterations,
        1.0,
    );
    if sample.values().contains(&0.0) {
        fit.converged = false;
    }
    Ok(fit)
}

fn gamma_estimate(values: &[f64]) -> Result<(f64, f64, usize)> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(FtgError::DegenerateSample("zero variance".into()));
    }
    let mut alpha = mean * mean / var;
    let mut iterations = 0;
    if values.iter().all(|x| *x > 0.0) {
        let c = mean.ln() - values.iter().map(|x| x.ln()).sum::<f64>() / n;
        for _ in 0..20 {
            iterations += 1;
            let f = alpha.ln() - digamma(alpha) - c;
            let df = 1.0 / alpha - trigamma(alpha);
            let next = alpha - f / df;
            let next = if next > 0.0 { next } else { 0.5 * alpha };
            let done = (next - alpha).abs() < 1e-14 * alpha;
            alpha = next;
            if done {
                break;
            }
        }
    }
    Ok((alpha, alpha / mean, iterations))
}

/// `ρ̇` solving `d_ρ − α/ρ + r̄ = 0` with the Pareto estimates plugged in.
fn pareto_rho_start(alpha: f64, r_bar: f64) -> Option<f64> {
    let h = |lr: f64| -> Result<f64> {
        let rho = lr.exp();
        let e = inc_gamma_eval(alpha, rho)?;
        Ok(e.d_rho - alpha / rho + r_bar)
    };
    optim::find_root(h, (1e-12f64).ln(), (1e3f64).ln(), 1e-10, 200)
        .ok()
        .map(f64::exp)
}

/// Candidate optimum from one initialization (standardized scale).
#[derive(Debug, Clone, Copy)]
struct Candidate {
    log_sigma: f64,
    value: f64,
    inner: InnerSolution,
    evaluations: usize,
    on_edge: bool,
}

fn profile_search(std: &Sample, t0: f64, warm: Option<(f64, f64)>) -> Result<Candidate> {
    let mut cache: Vec<(f64, InnerSolution)> = Vec::new();
    let mut evaluate = |t: f64| -> Result<InnerSolution> {
        if let Some((_, s)) = cache.iter().find(|(ct, _)| *ct == t) {
            return Ok(*s);
        }
        let st = SufficientStats::new(std.values(), t.exp())?;
        let nearest = cache
            .iter()
            .filter(|(_, s)| !s.at_boundary)
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|(_, s)| (s.alpha, s.rho))
            .or(warm);
        let sol = match inner_solve_stats(&st, nearest) {
            Ok(s) => s,
            Err(_) => inner_solve_stats(&st, None)?,
        };
        cache.push((t, sol));
        Ok(sol)
    };

    let mut best: Option<Candidate> = None;
    let mut start = t0;
    let mut evaluations = 0;
    for &edge in &LOG_SIGMA_RANGES {
        let run = bracket_and_maximize(|t| evaluate(t).map(|s| s.loglik), start, -edge, edge);
        let peak = match (run, &best) {
            (Ok(p), _) => p,
            // a wider range that cannot be evaluated keeps the narrower result
            (Err(_), Some(_)) => break,
            (Err(e), None) => return Err(e),
        };
        evaluations += peak.evals;
        let inner = evaluate(peak.t)?;
        best = Some(Candidate {
            log_sigma: peak.t,
            value: peak.value,
            inner,
            evaluations,
            on_edge: peak.edge.is_some(),
        });
        if peak.edge != Some(Edge::Range) {
            break;
        }
        start = peak.t;
    }
    Ok(best.expect("at least one range searched"))
}

/// Three-parameter FTG MLE by profile likelihood in `σ`.
pub fn fit_ftg(sample: &Sample) -> Result<FitResult> {
    check_sample(sample, 3)?;
    let (std, factor) = sample.standardized()?;

    let mut candidates = Vec::new();
    let mut errors = Vec::new();

    // Start 1: gamma MLE, (α̇, σ = 1, ρ = θ̇).
    match gamma_estimate(std.values()) {
        Ok((a, th, _)) => match profile_search(&std, 0.0, Some((a, th))) {
            Ok(c) => candidates.push(c),
            Err(e) => errors.push(e),
        },
        Err(e) => errors.push(e),
    }

    // Start 2: Pareto MLE (α̇, σ̇) with ρ̇ from the ρ score equation.
    let pareto_std = fit_pareto(&std).ok();
    if let Some(p) = &pareto_std {
        let (a, s) = (p.estimates[0], p.estimates[1]);
        let warm = pareto_rho_start(a, 1.0 + 1.0 / s).map(|r| (a, r));
        match profile_search(&std, s.ln(), warm) {
            Ok(c) => candidates.push(c),
            Err(e) => errors.push(e),
        }
    }

    let best = candidates
        .iter()
        .copied()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| errors.into_iter().next().unwrap_or(FtgError::NonConvergence {
            method: "FTG profile likelihood",
            iterations: 0,
            last: vec![],
        }))?;
    let iterations: usize = candidates.iter().map(|c| c.evaluations).sum();

    let log_n_factor = sample.len() as f64 * factor.ln();
    let pareto = match pareto_std {
        Some(_) => fit_pareto(sample).ok(),
        None => None,
    };

    let near_pareto = best.inner.at_boundary
        || (best.inner.rho < BOUNDARY_RHO
            && pareto
                .as_ref()
                .is_some_and(|p| (best.value - log_n_factor - p.loglik).abs() < BOUNDARY_LOGLIK));
    if near_pareto {
        if let Some(mut p) = pareto {
            p.family = Family::Ftg;
            p.boundary = Some(Boundary::Pareto);
            p.iterations += iterations;
            return Ok(p);
        }
    }
    if best.on_edge && best.log_sigma < 0.0 {
        // σ → 0 with θ fixed is the gamma limit
        if let Ok(mut g) = fit_gamma(sample) {
            if g.loglik >= best.value - log_n_factor - BOUNDARY_LOGLIK {
                g.family = Family::Ftg;
                g.boundary = Some(Boundary::Gamma);
                g.iterations += iterations;
                return Ok(g);
            }
        }
    }

    let alpha = best.inner.alpha;
    let rho = best.inner.rho;
    let sigma = best.log_sigma.exp() * factor;
    let loglik = loglik_ftg(sample, alpha, sigma, rho)?;
    let score = score_ftg(sample, alpha, sigma, rho)?.to_vec();
    let info = observed_information(sample, alpha, sigma, rho)?;
    let mut fit = FitResult::assemble(
        Family::Ftg,
        FtgParams::with_sigma(alpha, sigma, rho)?,
        sample,
        loglik,
        score,
        matrix_rows(&info),
        ["alpha", "sigma", "rho"],
        iterations,
        factor,
    );
    if best.on_edge {
        fit.boundary = Some(Boundary::DispersionLimit);
    }
    Ok(fit)
}

pub fn fit(sample: &Sample, family: Family) -> Result<FitResult> {
    match family {
        Family::Ftg => fit_ftg(sample),
        Family::Pareto => fit_pareto(sample),
        Family::Gamma => fit_gamma(sample),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtResult {
    pub statistic: f64,
    pub p_value: f64,
    pub ftg: FitResult,
    pub pareto: FitResult,
}

/// `2(l_FTG − l_Pareto)` referred to χ² with one degree of freedom.
pub fn lrt_pareto_vs_ftg(sample: &Sample) -> Result<LrtResult> {
    let pareto = fit_pareto(sample)?;
    let ftg = fit_ftg(sample)?;
    lrt_from_fits(ftg, pareto)
}

pub fn lrt_from_fits(ftg: FitResult, pareto: FitResult) -> Result<LrtResult> {
    let statistic = 2.0 * (ftg.loglik - pareto.loglik);
    let p_value = chi2_survival_1df(statistic.max(0.0))?;
    Ok(LrtResult {
        statistic,
        p_value,
        ftg,
        pareto,
    })
}
