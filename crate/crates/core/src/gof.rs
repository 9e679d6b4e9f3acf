//! Goodness of fit and empirical summaries.
//!
//! The Cramér–von Mises `W²` and Anderson–Darling `A²` statistics are
//! computed on probability-integral transforms; their p-values come from a
//! parametric bootstrap that refits the model to every simulated sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::dist::{cdf, FtgParams};
use crate::error::{domain, FtgError, Result};
use crate::fit::{fit, Family};
use crate::sample::{sample_ftg_with, RngStream, SamplerMethod};

/// Transforms closer than this to 0 or 1 are clamped before taking logs.
pub const PIT_CLAMP: f64 = 1e-15;

/// Smallest number of bootstrap replicates accepted.
pub const MIN_BOOTSTRAP: usize = 99;

/// Fraction of failed refits above which a bootstrap is abandoned.
const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdfStatistics {
    pub w2: f64,
    pub a2: f64,
    /// Some transform was exactly 0 or 1 and had to be clamped.
    pub clamped: bool,
}

/// `W²` and `A²` from probability-integral transforms `zᵢ = F(xᵢ)` (any order).
pub fn edf_statistics(z: &[f64]) -> Result<EdfStatistics> {
    if z.is_empty() {
        return Err(domain("EDF statistics need at least one point"));
    }
    if z.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(domain("probability-integral transforms must lie in [0, 1]"));
    }
    let mut z = z.to_vec();
    z.sort_by(f64::total_cmp);
    let mut clamped = false;
    for v in z.iter_mut() {
        let c = v.clamp(PIT_CLAMP, 1.0 - PIT_CLAMP);
        clamped |= c != *v;
        *v = c;
    }
    let n = z.len();
    let nf = n as f64;
    let mut w2 = 1.0 / (12.0 * nf);
    let mut acc = 0.0;
    for i in 0..n {
        let k = (2 * i + 1) as f64;
        w2 += (z[i] - k / (2.0 * nf)).powi(2);
        acc += k * (z[i].ln() + (-z[n - 1 - i]).ln_1p());
    }
    Ok(EdfStatistics { w2, a2: -nf - acc / nf, clamped })
}

/// `W²` and `A²` of a sample against a fully specified model.
pub fn cvm_ad_statistics(sample: &Sample, model: &FtgParams) -> Result<EdfStatistics> {
    let z = sample.values().iter().map(|&x| cdf(model, x)).collect::<Result<Vec<_>>>()?;
    edf_statistics(&z)
}

/// Kolmogorov–Smirnov distance `sup |Fₙ − F|` against a fully specified model.
pub fn ks_statistic(sample: &Sample, model: &FtgParams) -> Result<f64> {
    let xs = sample.sorted();
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(model, x)?;
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Kolmogorov limiting p-value for distance `d`, with Stephens'
/// finite-`n` adjustment of the argument. Valid for a fully specified model.
pub fn ks_pvalue(n: usize, d: f64) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub family: Family,
    /// Model fitted to the observed sample; the null distribution.
    pub model: FtgParams,
    pub w2: f64,
    pub a2: f64,
    pub p_w2: f64,
    pub p_a2: f64,
    /// Replicates requested.
    pub n_bootstrap: usize,
    /// Replicates whose refit failed; they are left out of the p-values.
    pub failures: usize,
    pub clamped: bool,
}

/// Parametric-bootstrap p-values for `W²` and `A²` with estimated
/// parameters. Replicate `i` draws from `rng.substream(i)`, so the result
/// does not depend on thread scheduling.
pub fn bootstrap_pvalue(sample: &Sample, family: Family, n_boot: usize, rng: &RngStream) -> Result<GofReport> {
    if n_boot < MIN_BOOTSTRAP {
        return Err(domain(format!("need at least {MIN_BOOTSTRAP} bootstrap replicates, got {n_boot}")));
    }
    let fitted = fit(sample, family)?;
    let model = fitted.params;
    let observed = cvm_ad_statistics(sample, &model)?;
    let n = sample.len();

    let replicate = |i: usize| -> Result<EdfStatistics> {
        let mut r = rng.substream(i as u64);
        let draw = sample_ftg_with(&model, n, &mut r, SamplerMethod::Auto)?;
        let sim = Sample::raw(draw.values)?;
        let refit = fit(&sim, family)?;
        cvm_ad_statistics(&sim, &refit.params)
    };
    let results: Vec<Result<EdfStatistics>> = (0..n_boot).into_par_iter().map(replicate).collect();

    let mut failures = 0;
    let mut last_error = None;
    let (mut w2s, mut a2s) = (Vec::with_capacity(n_boot), Vec::with_capacity(n_boot));
    for r in results {
        match r {
            Ok(s) => {
                w2s.push(s.w2);
                a2s.push(s.a2);
            }
            Err(e) => {
                failures += 1;
                last_error = Some(e);
            }
        }
    }
    if failures as f64 > MAX_FAILURE_FRACTION * n_boot as f64 {
        return Err(FtgError::ReplicateFailures {
            failed: failures,
            total: n_boot,
            last: last_error.map(|e| e.to_string()).unwrap_or_default(),
        });
    }
    Ok(GofReport {
        family,
        model,
        w2: observed.w2,
        a2: observed.a2,
        p_w2: bootstrap_p(observed.w2, &w2s),
        p_a2: bootstrap_p(observed.a2, &a2s),
        n_bootstrap: n_boot,
        failures,
        clamped: observed.clamped,
    })
}

/// Bootstrap p-value `(1 + #{null ≥ observed})/(m + 1)` for `m` null statistics.
pub fn bootstrap_p(observed: f64, nulls: &[f64]) -> f64 {
    let ge = nulls.iter().filter(|&&s| s >= observed).count();
    (1 + ge) as f64 / (nulls.len() + 1) as f64
}

/// Geometric binning: edges `l_s = c·10^(origin + s/b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogBinning {
    pub decade_origin: f64,
    pub bins_per_decade: u32,
    /// Multiplier `c` placing the edges relative to the grid `10^(origin + k/b)`.
    pub edge_factor: f64,
}

impl LogBinning {
    /// Edges at the geometric midpoints of the grid `10^(origin + k/b)`.
    pub fn new(decade_origin: f64, bins_per_decade: u32) -> Result<Self> {
        if bins_per_decade == 0 || !decade_origin.is_finite() {
            return Err(domain("need bins_per_decade ≥ 1 and a finite origin"));
        }
        let edge_factor = 10f64.powf(-0.5 / bins_per_decade as f64);
        Ok(Self { decade_origin, bins_per_decade, edge_factor })
    }

    /// The tropical-cyclone preset: origin 8, five bins per decade and
    /// `c = 0.5·11^(1/5)`.
    pub fn cyclone_preset() -> Self {
        Self {
            decade_origin: 8.0,
            bins_per_decade: 5,
            edge_factor: 0.5 * 11f64.powf(0.2),
        }
    }

    fn exponent(&self, s: i64) -> f64 {
        self.decade_origin + s as f64 / self.bins_per_decade as f64
    }

    /// Edge `l_s`.
    pub fn edge(&self, s: i64) -> f64 {
        self.edge_factor * 10f64.powf(self.exponent(s))
    }

    /// The grid point `10^(origin + k/b)` inside `(l_s, l_{s+1}]`.
    pub fn eval_point(&self, s: i64) -> f64 {
        let b = self.bins_per_decade as f64;
        let offset = (b * self.edge_factor.log10()).floor() as i64;
        10f64.powf(self.exponent(s + 1 + offset))
    }

    /// Index `s` of the bin `(l_s, l_{s+1}]` containing `x > 0`.
    pub fn bin_index(&self, x: f64) -> i64 {
        let b = self.bins_per_decade as f64;
        let mut s = ((x / self.edge_factor).log10() - self.decade_origin) * b;
        s = s.ceil() - 1.0;
        let mut s = s as i64;
        // settle rounding at the edges
        while x <= self.edge(s) {
            s -= 1;
        }
        while x > self.edge(s + 1) {
            s += 1;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBinnedHistogram {
    pub binning: LogBinning,
    /// Index of the first bin.
    pub first_index: i64,
    /// `l_s`, one more than the number of bins.
    pub bin_edges: Vec<f64>,
    pub eval_points: Vec<f64>,
    pub densities: Vec<f64>,
    pub counts: Vec<usize>,
    /// Sample size used in the density denominator.
    pub n: usize,
}

/// Density histogram `h_s = #{l_s < xᵢ ≤ l_{s+1}}/(n(l_{s+1} − l_s))` over
/// every bin from the one holding the smallest observation to the one
/// holding the largest.
pub fn log_binned_histogram(sample: &Sample, binning: &LogBinning) -> Result<LogBinnedHistogram> {
    if binning.bins_per_decade == 0 || !(binning.edge_factor > 0.0) {
        return Err(domain("invalid binning"));
    }
    let xs = sample.values();
    if xs.iter().any(|&x| x <= 0.0) {
        return Err(domain("log binning needs positive observations"));
    }
    let idx: Vec<i64> = xs.iter().map(|&x| binning.bin_index(x)).collect();
    let lo = *idx.iter().min().expect("nonempty sample");
    let hi = *idx.iter().max().expect("nonempty sample");
    let m = (hi - lo + 1) as usize;
    let mut counts = vec![0usize; m];
    for s in idx {
        counts[(s - lo) as usize] += 1;
    }
    let bin_edges: Vec<f64> = (lo..=hi + 1).map(|s| binning.edge(s)).collect();
    let eval_points = (lo..=hi).map(|s| binning.eval_point(s)).collect();
    let n = xs.len();
    let densities = counts
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(&c, w)| c as f64 / (n as f64 * (w[1] - w[0])))
        .collect();
    Ok(LogBinnedHistogram {
        binning: *binning,
        first_index: lo,
        bin_edges,
        eval_points,
        densities,
        counts,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Number of points used.
    pub points: usize,
    pub residual_ss: f64,
}

/// Ordinary least squares of `log₁₀ h` on `log₁₀ p` over the nonempty bins.
pub fn loglog_least_squares(hist: &LogBinnedHistogram) -> Result<LineFit> {
    loglog_least_squares_within(hist, 0.0, f64::INFINITY)
}

/// As [`loglog_least_squares`], restricted to evaluation points in `[lo, hi]`.
pub fn loglog_least_squares_within(hist: &LogBinnedHistogram, lo: f64, hi: f64) -> Result<LineFit> {
    let pts: Vec<(f64, f64)> = hist
        .eval_points
        .iter()
        .zip(&hist.densities)
        .filter(|(&p, &h)| h > 0.0 && p >= lo && p <= hi)
        .map(|(&p, &h)| (p.log10(), h.log10()))
        .collect();
    least_squares(&pts)
}

/// Straight-line least squares.
pub fn least_squares(pts: &[(f64, f64)]) -> Result<LineFit> {
    if pts.len() < 2 {
        return Err(FtgError::DegenerateSample("a line fit needs at least two points".into()));
    }
    let k = pts.len() as f64;
    let mu = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let suu: f64 = pts.iter().map(|p| (p.0 - mu).powi(2)).sum();
    if suu == 0.0 {
        return Err(FtgError::DegenerateSample("all abscissae coincide".into()));
    }
    let suv: f64 = pts.iter().map(|p| (p.0 - mu) * (p.1 - mv)).sum();
    let slope = suv / suu;
    let intercept = mv - slope * mu;
    let residual_ss = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(LineFit { slope, intercept, points: pts.len(), residual_ss })
}

/// `(x₍ᵢ₎, #{x > x₍ᵢ₎}/n)` at the sorted observations; tied points share
/// the same value.
pub fn empirical_survival(sample: &Sample) -> Vec<(f64, f64)> {
    let xs = sample.sorted();
    let n = xs.len();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && xs[j] == xs[i] {
            j += 1;
        }
        let s = (n - j) as f64 / n as f64;
        out.extend(std::iter::repeat_n((xs[i], s), j - i));
        i = j;
    }
    out
}

/// `#{xᵢ > x}/n`.
pub fn empirical_survival_at(sample: &Sample, x: f64) -> f64 {
    let above = sample.values().iter().filter(|&&v| v > x).count();
    above as f64 / sample.len() as f64
}
