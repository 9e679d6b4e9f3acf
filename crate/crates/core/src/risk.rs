//! Compound-Poisson aggregate losses and risk capital.
//!
//! One simulated year draws `N ~ Poisson(λ)` losses from the severity model
//! and sums them. Replicate `i` uses substream `i` of the configured seed, so
//! results do not depend on how rayon schedules the work.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::dist::{conditional_mean_excess, moments, quantile, FtgParams};
use crate::error::{domain, Result};
use crate::fit::{fit, Family, FitResult};
use crate::sample::{sample_poisson, FtgSampler, RngStream, SamplerMethod};

pub use crate::data::rescale_to_threshold;

/// Levels always included in a report.
pub const REPORT_LEVELS: [f64; 4] = [0.5, 0.9, 0.99, 0.999];

/// Minimum expected number of simulated years above the target quantile.
const MIN_TAIL_POINTS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    /// Expected number of losses per year.
    pub lambda: f64,
    pub quantile_level: f64,
    pub n_sims: usize,
    pub seed: u64,
}

impl RiskConfig {
    /// Level 0.999 and 10⁵ simulated years.
    pub fn new(lambda: f64, seed: u64) -> Result<Self> {
        let cfg = Self { lambda, quantile_level: 0.999, n_sims: 100_000, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(domain(format!("frequency must be positive, got {}", self.lambda)));
        }
        if !(self.quantile_level > 0.0 && self.quantile_level < 1.0) {
            return Err(domain(format!("quantile level must lie in (0, 1), got {}", self.quantile_level)));
        }
        let tail = self.n_sims as f64 * (1.0 - self.quantile_level);
        if tail < MIN_TAIL_POINTS * (1.0 - 1e-9) {
            return Err(domain(format!(
                "{} simulations leave {tail:.1} years above the {} quantile; need at least {MIN_TAIL_POINTS}",
                self.n_sims, self.quantile_level
            )));
        }
        Ok(())
    }
}

/// Anything that can produce one loss.
pub trait LossSeverity: Sync {
    fn draw(&self, rng: &mut RngStream) -> Result<f64>;
}

impl LossSeverity for FtgSampler {
    fn draw(&self, rng: &mut RngStream) -> Result<f64> {
        FtgSampler::draw(self, rng).map(|(x, _)| x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub level: f64,
    pub value: f64,
}

/// Simulated aggregate losses, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateLosses {
    pub sorted: Vec<f64>,
    pub total_losses: u64,
}

impl AggregateLosses {
    /// Order statistic at index `⌈level·n⌉` (one-based).
    pub fn quantile(&self, level: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((level * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }

    /// Sample standard error of the mean.
    pub fn mean_std_error(&self) -> f64 {
        let n = self.sorted.len() as f64;
        let m = self.mean();
        let var = self.sorted.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }

    /// Mean of the simulated years beyond the `level` quantile.
    pub fn tail_mean(&self, level: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((level * n as f64).ceil() as usize).clamp(1, n);
        let tail = &self.sorted[k..];
        if tail.is_empty() {
            self.sorted[n - 1]
        } else {
            tail.iter().sum::<f64>() / tail.len() as f64
        }
    }
}

/// Draws `cfg.n_sims` aggregate losses from any severity.
pub fn simulate_losses<S: LossSeverity + ?Sized>(severity: &S, cfg: &RiskConfig) -> Result<AggregateLosses> {
    cfg.validate()?;
    let root = RngStream::new(cfg.seed, 0);
    let years: Vec<Result<(f64, u64)>> = (0..cfg.n_sims)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.substream(i as u64);
            let n = sample_poisson(cfg.lambda, &mut rng)?;
            let mut total = 0.0;
            for _ in 0..n {
                total += severity.draw(&mut rng)?;
            }
            Ok((total, n))
        })
        .collect();
    let mut sorted = Vec::with_capacity(cfg.n_sims);
    let mut total_losses = 0;
    for y in years {
        let (s, n) = y?;
        sorted.push(s);
        total_losses += n;
    }
    sorted.sort_by(f64::total_cmp);
    Ok(AggregateLosses { sorted, total_losses })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub severity_model: FtgParams,
    /// Aggregate quantile at `quantile_level`.
    pub risk_capital: f64,
    pub quantile_level: f64,
    /// Ascending in level; holds the standard levels and `quantile_level`.
    pub aggregate_quantiles: Vec<QuantilePoint>,
    pub lambda: f64,
    pub n_sims: usize,
    pub seed: u64,
    pub mean_aggregate: f64,
    pub mean_aggregate_std_error: f64,
    /// Mean simulated year beyond the risk capital.
    pub aggregate_tail_mean: f64,
    /// Severity quantile at `quantile_level`.
    pub severity_quantile: f64,
    /// `E[X | X > q]` at the severity quantile; `None` when infinite.
    pub tail_expectation: Option<f64>,
    /// The severity has no finite mean.
    pub infinite_mean: bool,
}

impl RiskReport {
    pub fn quantile_at(&self, level: f64) -> Option<f64> {
        self.aggregate_quantiles.iter().find(|q| q.level == level).map(|q| q.value)
    }
}

/// Aggregate-loss simulation for an FTG (or boundary) severity.
pub fn simulate_aggregate(severity: &FtgParams, cfg: &RiskConfig) -> Result<RiskReport> {
    let sampler = FtgSampler::new(*severity, SamplerMethod::Auto)?;
    let losses = simulate_losses(&sampler, cfg)?;
    report(severity, cfg, &losses)
}

fn report(severity: &FtgParams, cfg: &RiskConfig, losses: &AggregateLosses) -> Result<RiskReport> {
    let mut levels = REPORT_LEVELS.to_vec();
    if !levels.contains(&cfg.quantile_level) {
        levels.push(cfg.quantile_level);
        levels.sort_by(f64::total_cmp);
    }
    let aggregate_quantiles = levels
        .iter()
        .map(|&level| QuantilePoint { level, value: losses.quantile(level) })
        .collect();
    let m = moments(severity)?;
    let severity_quantile = quantile(severity, cfg.quantile_level)?;
    let tail = conditional_mean_excess(severity, severity_quantile)?;
    Ok(RiskReport {
        severity_model: *severity,
        risk_capital: losses.quantile(cfg.quantile_level),
        quantile_level: cfg.quantile_level,
        aggregate_quantiles,
        lambda: cfg.lambda,
        n_sims: cfg.n_sims,
        seed: cfg.seed,
        mean_aggregate: losses.mean(),
        mean_aggregate_std_error: losses.mean_std_error(),
        aggregate_tail_mean: losses.tail_mean(cfg.quantile_level),
        severity_quantile,
        tail_expectation: tail.is_finite().then_some(tail),
        infinite_mean: m.infinite_mean,
    })
}

/// Fits `family` to the sample and simulates the aggregate loss.
pub fn risk_capital(sample: &Sample, family: Family, cfg: &RiskConfig) -> Result<(FitResult, RiskReport)> {
    let fitted = fit(sample, family)?;
    let report = simulate_aggregate(&fitted.params, cfg)?;
    Ok((fitted, report))
}

/// One resample of a bootstrap study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    /// Resample index, or `None` for the original sample.
    pub sample_id: Option<usize>,
    pub pareto: RowResult,
    pub ftg: RowResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RowResult {
    Ok { fit: Box<FitResult>, risk_capital: f64 },
    Failed { error: String },
}

impl RowResult {
    pub fn risk_capital(&self) -> Option<f64> {
        match self {
            RowResult::Ok { risk_capital, .. } => Some(*risk_capital),
            RowResult::Failed { .. } => None,
        }
    }

    pub fn fit(&self) -> Option<&FitResult> {
        match self {
            RowResult::Ok { fit, .. } => Some(fit),
            RowResult::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapStudy {
    /// Kept resamples ordered by the Pareto shape, then the original sample.
    pub rows: Vec<StudyRow>,
    /// Every resample before selection, in resample order.
    pub all_rows: Vec<StudyRow>,
    pub selection_rule: String,
    pub n_bootstrap: usize,
    pub keep_every: usize,
}

fn study_row(sample: &Sample, sample_id: Option<usize>, cfg: &RiskConfig) -> StudyRow {
    let run = |family| match risk_capital(sample, family, cfg) {
        Ok((fit, rep)) => RowResult::Ok { fit: Box::new(fit), risk_capital: rep.risk_capital },
        Err(e) => RowResult::Failed { error: e.to_string() },
    };
    StudyRow { sample_id, pareto: run(Family::Pareto), ftg: run(Family::Ftg) }
}

/// Resamples the data `n_bootstrap` times, fits both families and their
/// risk capitals, orders the resamples by decreasing Pareto shape and keeps every
/// `keep_every`-th one. The original sample is appended last.
///
/// Resample `i` is drawn from substream `i` of stream 1 of `cfg.seed`; every
/// risk simulation reuses `cfg` unchanged.
pub fn bootstrap_study(sample: &Sample, n_bootstrap: usize, keep_every: usize, cfg: &RiskConfig) -> Result<BootstrapStudy> {
    cfg.validate()?;
    if keep_every == 0 || n_bootstrap < keep_every {
        return Err(domain("need n_bootstrap ≥ keep_every ≥ 1"));
    }
    let root = RngStream::new(cfg.seed, 1);
    let all_rows: Vec<StudyRow> = (0..n_bootstrap)
        .map(|i| {
            let resample = sample.bootstrap(&mut root.substream(i as u64));
            study_row(&resample, Some(i), cfg)
        })
        .collect();

    let mut order: Vec<usize> = (0..n_bootstrap).collect();
    // heaviest tail (largest α̂) first; failed Pareto fits go last
    let shape = |i: usize| all_rows[i].pareto.fit().map_or(f64::NEG_INFINITY, |f| f.estimates[0]);
    order.sort_by(|&a, &b| shape(b).total_cmp(&shape(a)).then(a.cmp(&b)));
    let mut rows: Vec<StudyRow> = order
        .iter()
        .skip(keep_every - 1)
        .step_by(keep_every)
        .map(|&i| all_rows[i].clone())
        .collect();
    rows.push(study_row(sample, None, cfg));
    Ok(BootstrapStudy {
        rows,
        all_rows,
        selection_rule: format!(
            "{n_bootstrap} resamples ordered by the Pareto shape α̂ (descending), every {keep_every}-th kept, original sample last"
        ),
        n_bootstrap,
        keep_every,
    })
}
