//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion,
//! followed by its individual checks, and exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::{Duration, Instant};

use common::likelihood::*;
use common::*;
use ftg_core::data::Sample;
use ftg_core::dist::*;
use ftg_core::fit::*;
use ftg_core::risk::*;
use ftg_core::sample::{sample_ftg_with, RngStream, SamplerMethod};
use ftg_core::specfun::chi2_survival_1df;

const SIMULATION_SEED: u64 = 20_240_611;
const BOOTSTRAP_SEED: u64 = 7_300_417;

#[derive(Default)]
struct Criterion {
    checks: Vec<(bool, String)>,
}

impl Criterion {
    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        self.checks.push((ok, detail.into()));
    }

    /// `|got − want| ≤ tol`.
    fn near(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, format!("{what} = {got:.6} (want {want} ± {tol})"));
    }

    /// `got` within a relative `tol` of `want`.
    fn near_rel(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        let ok = ((got - want) / want).abs() <= tol;
        self.check(ok, format!("{what} = {got:.6e} (want {want:e} ± {:.0}%)", 100.0 * tol));
    }

    fn within(&mut self, limit_secs: f64, elapsed: Duration) {
        let secs = elapsed.as_secs_f64();
        self.check(secs < limit_secs, format!("runtime {secs:.2} s (limit {limit_secs} s)"));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.0)
    }
}

fn fraud() -> Sample {
    Sample::external_fraud()
}

fn reference_fits(c: &mut Criterion) {
    let s = fraud();
    let lrt = lrt_pareto_vs_ftg(&s).unwrap();
    let (p, f) = (&lrt.pareto, &lrt.ftg);
    c.check(p.converged && f.converged, format!("both fits converged ({}, {})", p.converged, f.converged));
    c.check(f.boundary.is_none(), format!("FTG maximum is interior ({:?})", f.boundary));
    c.near("Pareto α̂", p.estimates[0], -0.45, 0.01);
    c.near("Pareto σ̂", p.estimates[1], 1.38, 0.05);
    c.near("Pareto loglik", p.loglik, -174.44, 0.05);
    c.near("FTG α̂", f.estimates[0], -0.20, 0.02);
    c.near("FTG σ̂", f.estimates[1], 0.65, 0.05);
    c.near("FTG loglik", f.loglik, -172.37, 0.05);
    c.near("LRT statistic", lrt.statistic, 4.14, 0.1);
    c.near("LRT p-value", lrt.p_value, 0.042, 0.002);
}

fn tail_quantiles(c: &mut Criterion) {
    let s = fraud();
    let pareto = fit_pareto(&s).unwrap().params;
    let ftg = fit_ftg(&s).unwrap().params;
    c.near_rel("Pareto 0.999 quantile", quantile(&pareto, 0.999).unwrap(), 6.95e6, 0.1);
    let q = quantile(&ftg, 0.999).unwrap();
    c.near_rel("FTG 0.999 quantile", q, 3.93e3, 0.1);
    c.near("Pareto survival at 891.62 (%)", 100.0 * survival(&pareto, 891.62).unwrap(), 5.52, 0.2);
    c.near("FTG survival at 891.62 (%)", 100.0 * survival(&ftg, 891.62).unwrap(), 2.65, 0.2);
    c.near_rel("FTG expected tail loss E[X | X > q]", conditional_mean_excess(&ftg, q).unwrap(), 12970.6, 0.05);
}

fn original_risk_capital(c: &mut Criterion) {
    let cfg = RiskConfig::new(20.0, SIMULATION_SEED).unwrap();
    let s = fraud();
    let (_, ftg) = risk_capital(&s, Family::Ftg, &cfg).unwrap();
    let (_, pareto) = risk_capital(&s, Family::Pareto, &cfg).unwrap();
    let target = 10820.4;
    c.check(
        ftg.risk_capital > target / 1.3 && ftg.risk_capital < target * 1.3,
        format!("FTG risk capital = {:.1} (want {target} ×/÷ 1.3)", ftg.risk_capital),
    );
    c.near("Pareto log10 risk capital", pareto.risk_capital.log10(), 9.76, 1.0);
}

fn bootstrap_stability(c: &mut Criterion) {
    let cfg = RiskConfig::new(20.0, BOOTSTRAP_SEED).unwrap();
    let study = bootstrap_study(&fraud(), 100, 10, &cfg).unwrap();
    let ftg: Vec<f64> = study.all_rows.iter().filter_map(|r| r.ftg.risk_capital()).collect();
    let pareto: Vec<f64> = study.all_rows.iter().filter_map(|r| r.pareto.risk_capital()).collect();
    c.check(ftg.len() == 100 && pareto.len() == 100, format!("{} FTG and {} Pareto replicates succeeded", ftg.len(), pareto.len()));
    let ratio = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
    let (rf, rp) = (ratio(&ftg), ratio(&pareto));
    c.check(rf < 1e2, format!("FTG max/min risk capital = {rf:.3e} (want < 1e2)"));
    c.check(rp > 1e4, format!("Pareto max/min risk capital = {rp:.3e} (want > 1e4)"));
}

fn chi2_mapping(c: &mut Criterion) {
    c.near("P(χ²₁ > 24.96) × 1e7", 1e7 * chi2_survival_1df(24.96).unwrap(), 5.8, 0.1);
}

fn properties(c: &mut Criterion) {
    // normalization
    let mut worst: f64 = 0.0;
    for alpha in [-1.5, -0.2, 0.28, 1.0, 2.0] {
        for theta in [0.1, 1.0] {
            for rho in [0.001, 0.02, 1.0] {
                let p = FtgParams::new(alpha, theta, rho).unwrap();
                let total = integrate_log_domain(|x| pdf(&p, x).unwrap(), 1e-14, 800.0 / theta, 1e-13);
                worst = worst.max((total - 1.0).abs());
            }
        }
    }
    c.check(worst < 1e-8, format!("(a) max |∫pdf − 1| over 30 parameter points = {worst:.2e} (want < 1e-8)"));

    // closure under scaling and truncation
    let laws = [
        FtgParams::new(-0.45, 0.3, 0.4).unwrap(),
        FtgParams::with_sigma(-0.19648037, 0.65136726, 4.2954906e-4).unwrap(),
        FtgParams::new(2.0, 1.0, 1.7).unwrap(),
        FtgParams::gamma(0.4, 3.0).unwrap(),
        FtgParams::pareto(-0.44765907, 1.38187081).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for p in &laws {
        let (lambda, u) = (2.5, 1.7);
        let sc = scale(p, lambda).unwrap();
        let tr = truncate(p, u).unwrap();
        for x in [0.37, 5.0, 1200.0] {
            worst = worst.max(rel_err(pdf(&sc, x).unwrap(), pdf(p, x / lambda).unwrap() / lambda));
            worst = worst.max(rel_err(survival(&sc, x).unwrap(), survival(p, x / lambda).unwrap()));
            let su = survival(p, u).unwrap();
            worst = worst.max(rel_err(pdf(&tr, x).unwrap(), pdf(p, x + u).unwrap() / su));
            worst = worst.max(rel_err(survival(&tr, x).unwrap(), survival(p, x + u).unwrap() / su));
        }
    }
    c.check(worst < 1e-12, format!("(b) max relative error of scaling and truncation identities = {worst:.2e} (want < 1e-12)"));

    // L¹ approach to the Pareto limit
    let d: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-6].iter().map(|&r| pareto_limit_distance(-0.2, 1.0, r).unwrap()).collect();
    c.check(d[0] > d[1] && d[1] > d[2], format!("(c) L¹ distance decreasing over ρ = 1e-2, 1e-3, 1e-4: {:.5}, {:.5}, {:.5}", d[0], d[1], d[2]));
    c.check(d[3] < 1e-3, format!("(c) L¹ distance at ρ = 1e-6 = {:.5} (want < 1e-3)", d[3]));

    // score against finite differences
    let s = fraud();
    let sim = draw(FtgParams::new(-0.3, 1.0, 0.1).unwrap(), 50, 8);
    let mut worst: f64 = 0.0;
    for sample in [&s, &sim] {
        for (alpha, sigma, rho) in random_points(50, 2) {
            let score = score_ftg(sample, alpha, sigma, rho).unwrap();
            let fd = fd_gradient(sample, [alpha, sigma, rho]);
            for i in 0..3 {
                worst = worst.max((score[i] - fd[i]).abs() / fd[i].abs().max(1e-2));
            }
        }
    }
    c.check(worst < 1e-4, format!("(d) score vs finite differences at 50 points, max relative error {worst:.2e} (want < 1e-4)"));

    // information against the finite-difference Hessian
    let sim = draw(FtgParams::new(0.5, 2.0, 1.0).unwrap(), 50, 12);
    let mut worst: f64 = 0.0;
    for (alpha, sigma, rho) in random_points(50, 3) {
        let x = [alpha, sigma, rho];
        let info = observed_information(&sim, alpha, sigma, rho).unwrap();
        let hess = fd_hessian(&sim, x);
        for i in 0..3 {
            for j in 0..3 {
                let scale = (hess[i][i] * hess[j][j]).abs().sqrt().max(1e-8);
                worst = worst.max((info[(i, j)] + hess[i][j]).abs() / scale);
            }
        }
    }
    c.check(worst < 1e-3, format!("(e) information vs finite-difference Hessian, max relative error {worst:.2e} (want < 1e-3)"));

    // sampler goodness of fit
    const KS_99: f64 = 1.628;
    let (mut cases, mut rejected, mut stream) = (0, 0, 0);
    for alpha in [-1.5, -0.2, 0.0, 0.28, 1.0, 2.0] {
        for theta in [0.1, 1.0] {
            for rho in [0.001, 0.02, 1.0] {
                let p = FtgParams::new(alpha, theta, rho).unwrap();
                for method in [SamplerMethod::Rejection, SamplerMethod::Envelope] {
                    stream += 1;
                    let v = sample_ftg_with(&p, 20_000, &mut RngStream::new(1, stream), method).unwrap().values;
                    let d = ks_distance(&v, |x| cdf(&p, x).unwrap()) * (v.len() as f64).sqrt();
                    cases += 1;
                    rejected += usize::from(d >= KS_99);
                }
            }
        }
    }
    c.check(rejected == 0, format!("(f) KS at the 1% level: {rejected} of {cases} sampler runs rejected"));

    // cumulants from the moment generating function
    let mut worst: f64 = 0.0;
    for p in [
        FtgParams::new(0.28, 0.222, 0.02).unwrap(),
        FtgParams::new(2.0, 1.0, 1.0).unwrap(),
        FtgParams::new(-0.45, 0.3, 0.4).unwrap(),
        FtgParams::new(-1.5, 1.0, 1.0).unwrap(),
        FtgParams::new(5.0, 0.5, 8.0).unwrap(),
    ] {
        let h = 1e-3 * p.theta();
        let k = |t: f64| mgf(&p, t).unwrap().ln();
        let d1 = (8.0 * (k(h) - k(-h)) - (k(2.0 * h) - k(-2.0 * h))) / (12.0 * h);
        let d2 = (16.0 * (k(h) + k(-h)) - (k(2.0 * h) + k(-2.0 * h)) - 30.0 * k(0.0)) / (12.0 * h * h);
        let m = moments(&p).unwrap();
        worst = worst.max(rel_err(d1, m.mean)).max(rel_err(d2, m.variance));
    }
    c.check(worst < 1e-5, format!("(g) cumulants vs mean and variance, max relative error {worst:.2e} (want < 1e-5)"));

    // maximum likelihood against brute-force search
    let samples = [
        fraud(),
        draw(FtgParams::new(-0.5, 0.5, 0.3).unwrap(), 30, 40),
        draw(FtgParams::new(0.6, 0.2, 2.0).unwrap(), 50, 41),
    ];
    for sample in samples {
        let fit = fit_ftg(&sample).unwrap();
        let (oracle_l, x, res) = grid_oracle(&sample);
        let mut ok = oracle_l <= fit.loglik + 1e-9 && fit.loglik - oracle_l < 1e-3;
        if fit.boundary.is_none() {
            ok &= (x[0] - fit.estimates[0]).abs() <= 2.0 * res[0] + 0.02;
            ok &= (x[1] - fit.estimates[1].ln()).abs() <= 2.0 * res[1] + 0.1;
        }
        c.check(
            ok,
            format!(
                "(h) n = {}: fit loglik {:.6} vs grid {:.6}, α̂ {:.4} vs {:.4}",
                sample.len(),
                fit.loglik,
                oracle_l,
                fit.estimates[0],
                x[0]
            ),
        );
    }
}

fn main() {
    type Run = fn(&mut Criterion);
    let criteria: [(&str, Run, f64); 6] = [
        ("reference fits and likelihood ratio test", reference_fits, 5.0),
        ("tail quantiles, survival and expected tail loss", tail_quantiles, 1.0),
        ("risk capital of the original sample", original_risk_capital, 30.0),
        ("bootstrap stability of risk capital", bootstrap_stability, 180.0),
        ("chi-square tail probability", chi2_mapping, 1.0),
        ("distribution, likelihood and sampler properties", properties, 120.0),
    ];
    let mut failed = Vec::new();
    for (i, (title, run, limit)) in criteria.iter().enumerate() {
        let mut c = Criterion::default();
        let timer = Instant::now();
        run(&mut c);
        c.within(*limit, timer.elapsed());
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {title}", i + 1);
        for (ok, detail) in &c.checks {
            println!("    {} {detail}", if *ok { "ok  " } else { "FAIL" });
        }
        if !c.passed() {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("all {} criteria passed", criteria.len());
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
