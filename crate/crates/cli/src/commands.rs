use std::collections::hash_map::RandomState;
use std::hash::{BuildHasher, Hasher};

use ftg_core::data::{parse_column, rescale_to_threshold, Sample, EXTERNAL_FRAUD_TEXT};
use ftg_core::dist::{pdf, survival, FtgParams};
use ftg_core::fit::{fit, fit_ftg, fit_pareto, lrt_from_fits, Boundary, Family, FitResult};
use ftg_core::gof::{
    bootstrap_pvalue, cvm_ad_statistics, ks_pvalue, ks_statistic, log_binned_histogram, GofReport, LogBinning,
};
use ftg_core::risk::{bootstrap_study, risk_capital, BootstrapStudy, RiskConfig, RiskReport, RowResult};
use ftg_core::sample::{sample_ftg_with, RngStream};
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::error::{CliError, CliResult, EXIT_NUMERICAL};
use crate::format::{sig, table};
use crate::manifest::{sha256_digest, RunManifest};

/// Stream ids keep the random draws of different commands apart.
const SAMPLE_STREAM: u64 = 0;
const GOF_STREAM: u64 = 2;

/// The result of a command before it is written anywhere.
#[derive(Debug)]
pub struct Outcome {
    pub primary: String,
    pub manifest: RunManifest,
    /// Notes for stderr.
    pub warnings: Vec<String>,
    /// Set with [`EXIT_NUMERICAL`] when the command produced output but a
    /// fit did not converge.
    pub exit_code: u8,
}

/// Fits of one or more families; the `--family all` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    pub fits: Vec<FitResult>,
    pub failures: Vec<FitFailure>,
    /// FTG against its Pareto boundary, when both fits succeeded.
    pub lrt: Option<LrtSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFailure {
    pub family: Family,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrtSummary {
    pub statistic: f64,
    pub p_value: f64,
}

/// Goodness of fit against a fully specified law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleGofReport {
    pub model: FtgParams,
    pub n: usize,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub w2: f64,
    pub a2: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub mode: PlotMode,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub ftg: FtgParams,
    pub pareto: FtgParams,
}

pub fn run(command: &Command) -> CliResult<Outcome> {
    let parameters = serde_json::to_value(command).map_err(|e| CliError::usage(e.to_string()))?;
    let mut ctx = Context { warnings: Vec::new(), exit_code: 0, seed: None, digest: None };
    let primary = match command {
        Command::Fit(a) => ctx.fit(a)?,
        Command::Sample(a) => ctx.sample(a)?,
        Command::Risk(a) => ctx.risk(a)?,
        Command::Gof(a) => ctx.gof(a)?,
        Command::Plotdata(a) => ctx.plotdata(a)?,
    };
    // the parameters record the options as given; the resolved seed goes in `seed`
    let manifest = RunManifest::new(command.name(), parameters, ctx.seed, ctx.digest);
    Ok(Outcome { primary, manifest, warnings: ctx.warnings, exit_code: ctx.exit_code })
}

struct Context {
    warnings: Vec<String>,
    exit_code: u8,
    seed: Option<u64>,
    digest: Option<String>,
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| CliError::numerical(e.to_string()))
}

fn random_seed() -> u64 {
    RandomState::new().build_hasher().finish()
}

fn family_label(f: Family) -> &'static str {
    match f {
        Family::Ftg => "FTG",
        Family::Pareto => "Pareto",
        Family::Gamma => "gamma",
    }
}

impl Context {
    fn resolve_seed(&mut self, seed: Option<u64>) -> u64 {
        let s = seed.unwrap_or_else(|| {
            let s = random_seed();
            self.warnings.push(format!("seed: {s}"));
            s
        });
        self.seed = Some(s);
        s
    }

    fn load(&mut self, a: &DataArgs) -> CliResult<Sample> {
        let (bytes, text) = match &a.data {
            Some(path) => {
                let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
                let text = String::from_utf8(bytes.clone())
                    .map_err(|_| CliError::data(format!("{}: not valid UTF-8", path.display())))?;
                (bytes, text)
            }
            None => (EXTERNAL_FRAUD_TEXT.as_bytes().to_vec(), EXTERNAL_FRAUD_TEXT.to_string()),
        };
        self.digest = Some(sha256_digest(&bytes));
        let as_data = |e: ftg_core::FtgError| CliError::data(e.to_string());
        let values = parse_column(&text, a.column.as_deref()).map_err(as_data)?;
        match a.threshold {
            Some(u) => rescale_to_threshold(&values, u, a.target_mean).map_err(as_data),
            None => Sample::raw(values).map_err(as_data),
        }
    }

    fn note_fit(&mut self, f: &FitResult) {
        let label = family_label(f.family);
        if !f.converged {
            self.warnings.push(format!("warning: the {label} fit did not converge (score norm {:.2e})", f.score_norm));
            self.exit_code = EXIT_NUMERICAL;
        }
        match f.boundary {
            Some(Boundary::Pareto) => self.warnings.push(format!("note: the {label} maximum lies on the Pareto boundary")),
            Some(Boundary::Gamma) => self.warnings.push(format!("note: the {label} maximum lies on the gamma boundary")),
            Some(Boundary::DispersionLimit) => self.warnings.push(format!(
                "note: the {label} likelihood still increases at the largest dispersion searched; \
                 the data look exponential-like"
            )),
            None => {}
        }
    }

    fn fit(&mut self, a: &FitArgs) -> CliResult<String> {
        let sample = self.load(&a.data)?;
        let families: &[Family] = match a.family {
            FitFamily::Ftg => &[Family::Ftg],
            FitFamily::Pareto => &[Family::Pareto],
            FitFamily::Gamma => &[Family::Gamma],
            FitFamily::All => &[Family::Pareto, Family::Ftg, Family::Gamma],
        };
        if let [family] = families {
            let f = fit(&sample, *family)?;
            self.note_fit(&f);
            return if a.output.json { to_json(&f) } else { Ok(fit_table(sample.len(), &[f], None)) };
        }

        let mut report = FitReport { n: sample.len(), fits: Vec::new(), failures: Vec::new(), lrt: None };
        for &family in families {
            match fit(&sample, family) {
                Ok(f) => {
                    self.note_fit(&f);
                    report.fits.push(f);
                }
                Err(e) => {
                    self.warnings.push(format!("warning: the {} fit failed: {e}", family_label(family)));
                    self.exit_code = EXIT_NUMERICAL;
                    report.failures.push(FitFailure { family, error: e.to_string() });
                }
            }
        }
        let find = |fam| report.fits.iter().find(|f| f.family == fam).cloned();
        if let (Some(ftg), Some(pareto)) = (find(Family::Ftg), find(Family::Pareto)) {
            let lrt = lrt_from_fits(ftg, pareto)?;
            report.lrt = Some(LrtSummary { statistic: lrt.statistic, p_value: lrt.p_value });
        }
        if a.output.json {
            to_json(&report)
        } else {
            let mut out = fit_table(report.n, &report.fits, report.lrt);
            for f in &report.failures {
                out += &format!("{} fit failed: {}\n", family_label(f.family), f.error);
            }
            Ok(out)
        }
    }

    fn sample(&mut self, a: &SampleArgs) -> CliResult<String> {
        let params = parse_params(&a.params)?.ok_or_else(|| CliError::usage("--alpha is required"))?;
        let seed = self.resolve_seed(a.seed);
        let batch = sample_ftg_with(&params, a.n as usize, &mut RngStream::new(seed, SAMPLE_STREAM), a.method.into())?;
        if a.output.json {
            return to_json(&batch);
        }
        let mut out = String::with_capacity(batch.values.len() * 20);
        for v in &batch.values {
            out += &format!("{v}\n");
        }
        Ok(out)
    }

    fn risk(&mut self, a: &RiskArgs) -> CliResult<String> {
        if !(a.lambda > 0.0 && a.lambda.is_finite()) {
            return Err(CliError::usage(format!("--lambda must be positive, got {}", a.lambda)));
        }
        let sample = self.load(&a.data)?;
        let seed = self.resolve_seed(a.seed);
        let cfg = RiskConfig { lambda: a.lambda, quantile_level: a.level, n_sims: a.sims, seed };
        cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;

        if let Some(n_boot) = a.bootstrap {
            if a.keep_every == 0 || a.keep_every > n_boot {
                return Err(CliError::usage("--keep-every must lie between 1 and --bootstrap"));
            }
            let study = bootstrap_study(&sample, n_boot, a.keep_every, &cfg)?;
            let original = study.rows.last().expect("study keeps the original sample");
            if original.pareto.fit().is_none() || original.ftg.fit().is_none() {
                self.warnings.push("warning: a fit of the original sample failed".into());
                self.exit_code = EXIT_NUMERICAL;
            }
            return if a.output.json { to_json(&study) } else { Ok(study_table(&study)) };
        }

        let (fitted, report) = risk_capital(&sample, a.family.into(), &cfg)?;
        self.note_fit(&fitted);
        if report.infinite_mean {
            self.warnings.push(format!(
                "warning: the fitted {} severity has an infinite mean; the risk capital is dominated by single extreme losses",
                family_label(fitted.family)
            ));
        }
        if a.output.json {
            to_json(&report)
        } else {
            Ok(risk_text(&fitted, &report))
        }
    }

    fn gof(&mut self, a: &GofArgs) -> CliResult<String> {
        let sample = self.load(&a.data)?;
        if let Some(model) = parse_params(&a.params)? {
            let d = ks_statistic(&sample, &model)?;
            let edf = cvm_ad_statistics(&sample, &model)?;
            let report = SimpleGofReport {
                model,
                n: sample.len(),
                ks_statistic: d,
                ks_p_value: ks_pvalue(sample.len(), d),
                w2: edf.w2,
                a2: edf.a2,
                clamped: edf.clamped,
            };
            if report.clamped {
                self.warnings.push("warning: some probability transforms were clamped away from 0 and 1".into());
            }
            return if a.output.json { to_json(&report) } else { Ok(simple_gof_text(&report)) };
        }
        let seed = self.resolve_seed(a.seed);
        let report = bootstrap_pvalue(&sample, a.family.into(), a.bootstrap, &RngStream::new(seed, GOF_STREAM))?;
        if a.output.json {
            to_json(&report)
        } else {
            Ok(gof_text(&report))
        }
    }

    fn plotdata(&mut self, a: &PlotArgs) -> CliResult<String> {
        let sample = self.load(&a.data)?;
        let ftg = fit_ftg(&sample)?;
        let pareto = fit_pareto(&sample)?;
        self.note_fit(&ftg);
        self.note_fit(&pareto);
        let (fp, pp) = (ftg.params, pareto.params);
        let (columns, rows): (Vec<&str>, Vec<Vec<f64>>) = match a.mode {
            PlotMode::Survival => {
                // the empirical column is the fraction at or above x, so the
                // largest loss plots at 1/n instead of zero
                let xs = sample.sorted();
                let n = xs.len() as f64;
                let mut rows = Vec::new();
                for (i, &x) in xs.iter().enumerate() {
                    if i > 0 && xs[i - 1] == x {
                        continue;
                    }
                    rows.push(vec![x, (xs.len() - i) as f64 / n, survival(&fp, x)?, survival(&pp, x)?]);
                }
                (vec!["x", "empirical", "fitted_ftg", "fitted_pareto"], rows)
            }
            PlotMode::Histogram => {
                let binning = if a.cyclone_preset {
                    LogBinning::cyclone_preset()
                } else {
                    LogBinning::new(a.decade_origin, a.bins_per_decade)?
                };
                let hist = log_binned_histogram(&sample, &binning).map_err(|e| CliError::data(e.to_string()))?;
                let mut rows = Vec::new();
                for (k, &p) in hist.eval_points.iter().enumerate() {
                    rows.push(vec![
                        hist.bin_edges[k],
                        hist.bin_edges[k + 1],
                        p,
                        hist.counts[k] as f64,
                        hist.densities[k],
                        pdf(&fp, p)?,
                        pdf(&pp, p)?,
                    ]);
                }
                (vec!["lower_edge", "upper_edge", "p", "count", "density", "fitted_ftg", "fitted_pareto"], rows)
            }
        };
        let data = PlotData {
            mode: a.mode,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
            ftg: fp,
            pareto: pp,
        };
        if a.output.json {
            return to_json(&data);
        }
        let mut out = data.columns.join(",") + "\n";
        for row in &data.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out += &(cells.join(",") + "\n");
        }
        Ok(out)
    }
}

/// `None` when no `--alpha` was given.
fn parse_params(p: &ParamArgs) -> CliResult<Option<FtgParams>> {
    let Some(alpha) = p.alpha else {
        if p.theta.is_some() || p.sigma.is_some() || p.rho.is_some() {
            return Err(CliError::usage("--theta, --sigma and --rho need --alpha"));
        }
        return Ok(None);
    };
    let rho = p.rho.ok_or_else(|| CliError::usage("--rho is required with --alpha"))?;
    let params = match (p.theta, p.sigma) {
        (Some(theta), None) => FtgParams::new(alpha, theta, rho),
        (None, Some(sigma)) => FtgParams::with_sigma(alpha, sigma, rho),
        _ => return Err(CliError::usage("give exactly one of --theta and --sigma")),
    };
    params.map(Some).map_err(|e| CliError::usage(e.to_string()))
}

fn fit_table(n: usize, fits: &[FitResult], lrt: Option<LrtSummary>) -> String {
    let mut rows = Vec::new();
    for f in fits {
        for (k, name) in f.param_names.iter().enumerate() {
            let label = if k == 0 { family_label(f.family).to_string() } else { String::new() };
            rows.push(vec![label, name.clone(), sig(f.estimates[k], 6), sig(f.std_errors[k], 4)]);
        }
        let mut status = format!("{:.6}", f.loglik);
        if !f.converged {
            status += "  (not converged)";
        }
        rows.push(vec![String::new(), "loglik".into(), status, String::new()]);
    }
    let mut out = format!("Maximum-likelihood fits, n = {n}\n\n");
    out += &table(&["family", "parameter", "estimate", "std. error"], &rows);
    if let Some(l) = lrt {
        out += &format!("\nLikelihood ratio, FTG against Pareto: {:.4} with p-value {:.4}\n", l.statistic, l.p_value);
    }
    out
}

fn risk_text(f: &FitResult, r: &RiskReport) -> String {
    let mut out = format!("Severity: {} fit\n", family_label(f.family));
    for (name, v) in f.param_names.iter().zip(&f.estimates) {
        out += &format!("  {name} = {}\n", sig(*v, 6));
    }
    out += &format!(
        "Frequency: Poisson with mean {}, {} simulated years, seed {}\n\n",
        r.lambda, r.n_sims, r.seed
    );
    out += &format!("Risk capital ({} quantile): {}\n\n", r.quantile_level, sig(r.risk_capital, 6));
    let rows: Vec<Vec<String>> =
        r.aggregate_quantiles.iter().map(|q| vec![format!("{}", q.level), sig(q.value, 6)]).collect();
    out += &table(&["level", "annual loss"], &rows);
    out += &format!(
        "\nMean annual loss: {} ± {}\n",
        sig(r.mean_aggregate, 6),
        sig(r.mean_aggregate_std_error, 2)
    );
    out += &format!("Mean annual loss beyond the risk capital: {}\n", sig(r.aggregate_tail_mean, 6));
    out += &format!("Severity {} quantile: {}\n", r.quantile_level, sig(r.severity_quantile, 6));
    match r.tail_expectation {
        Some(t) => out += &format!("Severity tail expectation beyond it: {}\n", sig(t, 6)),
        None => out += "Severity tail expectation beyond it: infinite\n",
    }
    out
}

fn row_cells(r: &RowResult, width: usize) -> Vec<String> {
    match r {
        RowResult::Ok { fit, risk_capital } => {
            let mut cells: Vec<String> = fit.estimates.iter().map(|v| sig(*v, 4)).collect();
            cells.resize(width - 1, String::new());
            cells.push(sig(*risk_capital, 4));
            cells
        }
        RowResult::Failed { .. } => {
            let mut cells = vec!["failed".to_string()];
            cells.resize(width, String::new());
            cells
        }
    }
}

fn study_table(s: &BootstrapStudy) -> String {
    let rows: Vec<Vec<String>> = s
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.sample_id.map_or("original".into(), |i| format!("#{}", i + 1))];
            row.extend(row_cells(&r.pareto, 3));
            row.extend(row_cells(&r.ftg, 4));
            row
        })
        .collect();
    let mut out = format!("Bootstrap study: {}\n\n", s.selection_rule);
    out += &table(
        &["sample", "Pareto alpha", "Pareto sigma", "Pareto capital", "FTG alpha", "FTG sigma", "FTG rho", "FTG capital"],
        &rows,
    );
    let span = |get: fn(&ftg_core::risk::StudyRow) -> Option<f64>| {
        let v: Vec<f64> = s.all_rows.iter().filter_map(get).collect();
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    };
    out += &format!(
        "\nmax/min risk capital over all {} resamples: Pareto {}, FTG {}\n",
        s.all_rows.len(),
        sig(span(|r| r.pareto.risk_capital()), 3),
        sig(span(|r| r.ftg.risk_capital()), 3)
    );
    out
}

fn gof_text(r: &GofReport) -> String {
    let mut out = format!("Goodness of fit of the {} law, parameters estimated\n\n", family_label(r.family));
    out += &table(
        &["statistic", "value", "bootstrap p-value"],
        &[
            vec!["Cramér-von Mises W²".into(), sig(r.w2, 5), sig(r.p_w2, 4)],
            vec!["Anderson-Darling A²".into(), sig(r.a2, 5), sig(r.p_a2, 4)],
        ],
    );
    out += &format!("\n{} replicates, {} failed refits\n", r.n_bootstrap, r.failures);
    out
}

fn simple_gof_text(r: &SimpleGofReport) -> String {
    let mut out = format!("Goodness of fit against a fixed law, n = {}\n\n", r.n);
    out += &table(
        &["statistic", "value", "p-value"],
        &[
            vec!["Kolmogorov-Smirnov D".into(), sig(r.ks_statistic, 5), sig(r.ks_p_value, 4)],
            vec!["Cramér-von Mises W²".into(), sig(r.w2, 5), String::new()],
            vec!["Anderson-Darling A²".into(), sig(r.a2, 5), String::new()],
        ],
    );
    out
}
