mod common;

use common::*;
use ftg_core::data::Sample;
use ftg_core::dist::{scale, FtgParams};
use ftg_core::fit::{fit_pareto, Family};
use ftg_core::gof::*;
use ftg_core::sample::{sample_ftg_with, RngStream, SamplerMethod};

fn fraud() -> Sample {
    Sample::raw(EXTERNAL_FRAUD.to_vec()).unwrap()
}

/// n∫(Fₙ − z)² dz and n∫(Fₙ − z)²/(z(1−z)) dz, integrated exactly between
/// consecutive order statistics.
fn edf_oracle(z: &[f64]) -> (f64, f64) {
    let mut z = z.to_vec();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let mut knots = vec![0.0];
    knots.extend(&z);
    knots.push(1.0);
    let (mut w2, mut a2) = (0.0, 0.0);
    for (i, w) in knots.windows(2).enumerate() {
        let c = i as f64 / n;
        w2 += ((w[1] - c).powi(3) - (w[0] - c).powi(3)) / 3.0;
        // (c − z)²/(z(1 − z)) = −1 + c²/z + (1 − c)²/(1 − z)
        let anti = |x: f64| {
            let mut v = -x;
            if c > 0.0 {
                v += c * c * x.ln();
            }
            if c < 1.0 {
                v -= (1.0 - c).powi(2) * (1.0 - x).ln();
            }
            v
        };
        a2 += anti(w[1]) - anti(w[0]);
    }
    (n * w2, n * a2)
}

fn uniforms(n: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..n).map(|_| rng.uniform()).collect()
}

#[test]
fn statistic_examples() {
    let n = 17;
    let z: Vec<f64> = (1..=n).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect();
    let s = edf_statistics(&z).unwrap();
    assert!((s.w2 - 1.0 / (12.0 * n as f64)).abs() < 1e-15);

    let s = edf_statistics(&[0.5]).unwrap();
    assert!((s.a2 - (-1.0 + 2.0 * 2f64.ln())).abs() < 1e-15);
    assert!((s.a2 - 0.3863).abs() < 1e-4);
    assert!(!s.clamped);
}

#[test]
fn statistics_match_integral_oracle() {
    let mut rng = RngStream::new(11, 0);
    for n in [2, 5, 40, 500] {
        let z: Vec<f64> = uniforms(n, &mut rng).iter().map(|u| u.powf(1.3)).collect();
        let s = edf_statistics(&z).unwrap();
        let (w2, a2) = edf_oracle(&z);
        assert!(rel_err(s.w2, w2) < 1e-10, "n={n}: {} vs {w2}", s.w2);
        assert!(rel_err(s.a2, a2) < 1e-9, "n={n}: {} vs {a2}", s.a2);
    }
}

#[test]
fn null_means_of_the_statistics() {
    // E W² = 1/6 and E A² = 1 for a continuous null; Var W² → 1/45,
    // Var A² → 2(π² − 9)/3.
    let reps = 400;
    let mut rng = RngStream::new(12, 0);
    let (mut w, mut a) = (Vec::new(), Vec::new());
    for _ in 0..reps {
        let s = edf_statistics(&uniforms(10_000, &mut rng)).unwrap();
        w.push(s.w2);
        a.push(s.a2);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let se_w = (1.0f64 / 45.0 / reps as f64).sqrt();
    let se_a = (2.0 * (std::f64::consts::PI.powi(2) - 9.0) / 3.0 / reps as f64).sqrt();
    assert!((mean(&w) - 1.0 / 6.0).abs() < 3.0 * se_w, "{}", mean(&w));
    assert!((mean(&a) - 1.0).abs() < 3.0 * se_a, "{}", mean(&a));
}

#[test]
fn model_statistics_and_clamping() {
    let expo = FtgParams::new(1.0, 1.0, 1.0).unwrap();
    let xs = [0.1, 0.5, 1.0, 2.0, 3.5];
    let s = cvm_ad_statistics(&Sample::raw(xs.to_vec()).unwrap(), &expo).unwrap();
    let z: Vec<f64> = xs.iter().map(|x| 1.0 - (-x).exp()).collect();
    let (w2, a2) = edf_oracle(&z);
    assert!(rel_err(s.w2, w2) < 1e-10 && rel_err(s.a2, a2) < 1e-9);

    // F(x) rounds to 1 far in the tail
    let s = cvm_ad_statistics(&Sample::raw(vec![0.3, 1.0, 800.0]).unwrap(), &expo).unwrap();
    assert!(s.clamped && s.a2.is_finite());
    assert!(edf_statistics(&[0.0, 0.5]).unwrap().clamped);
    assert!(edf_statistics(&[1.2]).is_err());
}

#[test]
fn statistics_invariant_under_common_rescaling() {
    let model = FtgParams::with_sigma(-0.2, 0.65, 4.3e-4).unwrap();
    let s = fraud();
    let base = cvm_ad_statistics(&s, &model).unwrap();
    for c in [1e-3, 3.0, 1e5] {
        let scaled = cvm_ad_statistics(&s.scaled(c).unwrap(), &scale(&model, c).unwrap()).unwrap();
        assert!(rel_err(scaled.w2, base.w2) < 1e-10);
        assert!(rel_err(scaled.a2, base.a2) < 1e-10);
    }
}

#[test]
fn ties_are_kept() {
    let expo = FtgParams::new(1.0, 1.0, 1.0).unwrap();
    let xs = vec![0.5, 0.5, 0.5, 2.0];
    let s = cvm_ad_statistics(&Sample::raw(xs.clone()).unwrap(), &expo).unwrap();
    let z: Vec<f64> = xs.iter().map(|x| 1.0 - (-x).exp()).collect();
    let (w2, a2) = edf_oracle(&z);
    assert!(rel_err(s.w2, w2) < 1e-10 && rel_err(s.a2, a2) < 1e-9);
}

#[test]
fn ks_matches_oracle() {
    let model = FtgParams::new(0.5, 0.3, 0.2).unwrap();
    let mut rng = RngStream::new(13, 0);
    let draws = sample_ftg_with(&model, 300, &mut rng, SamplerMethod::Auto).unwrap().values;
    let d = ks_statistic(&Sample::raw(draws.clone()).unwrap(), &model).unwrap();
    let oracle = ks_distance(&draws, |x| ftg_core::dist::cdf(&model, x).unwrap());
    assert!((d - oracle).abs() < 1e-15);
    let p = ks_pvalue(300, d);
    assert!(p > 0.01 && p <= 1.0);
    assert!(ks_pvalue(100, 0.2) < 1e-3);
}

#[test]
fn bootstrap_p_formula() {
    // a perfect fit can only be matched or exceeded
    assert_eq!(bootstrap_p(0.0, &[0.1, 0.0, 0.3]), 1.0);
    assert_eq!(bootstrap_p(1.0, &[0.1, 0.2]), 1.0 / 3.0);
}

#[test]
fn bootstrap_rejects_small_replicate_counts() {
    let rng = RngStream::new(1, 0);
    assert!(bootstrap_pvalue(&fraud(), Family::Pareto, 50, &rng).is_err());
}

#[test]
fn bootstrap_is_reproducible_and_bounded() {
    let rng = RngStream::new(99, 3);
    let a = bootstrap_pvalue(&fraud(), Family::Pareto, 99, &rng).unwrap();
    let b = bootstrap_pvalue(&fraud(), Family::Pareto, 99, &rng).unwrap();
    assert_eq!(a, b);
    for p in [a.p_w2, a.p_a2] {
        assert!((1.0 / 100.0..=1.0).contains(&p));
    }
    assert_eq!(a.failures, 0);
    let fitted = fit_pareto(&fraud()).unwrap();
    assert_eq!(a.model, fitted.params);
}

#[test]
fn bootstrap_pvalues_are_uniform_under_the_null() {
    let null = FtgParams::pareto(-0.45, 1.38).unwrap();
    let reps = 50;
    let mut small = (0, 0);
    for k in 0..reps {
        let mut r = RngStream::new(500 + k, 0);
        let draws = sample_ftg_with(&null, 40, &mut r, SamplerMethod::Auto).unwrap().values;
        let rep = bootstrap_pvalue(&Sample::raw(draws).unwrap(), Family::Pareto, 99, &r.substream(1)).unwrap();
        small.0 += usize::from(rep.p_w2 < 0.05);
        small.1 += usize::from(rep.p_a2 < 0.05);
    }
    assert!(small.0 <= 8 && small.1 <= 8, "{small:?}");
}

#[test]
fn bootstrap_on_the_ftg_family() {
    let rep = bootstrap_pvalue(&fraud(), Family::Ftg, 99, &RngStream::new(7, 0)).unwrap();
    assert!(rep.failures <= 9);
    assert!(rep.p_w2 > 0.0 && rep.p_a2 <= 1.0);
    assert!(rep.w2 > 0.0 && rep.a2 > 0.0);
}

#[test]
fn histogram_single_observation() {
    let b = LogBinning::cyclone_preset();
    let x = 7.3e9;
    let h = log_binned_histogram(&Sample::raw(vec![x]).unwrap(), &b).unwrap();
    assert_eq!(h.counts, vec![1]);
    let width = h.bin_edges[1] - h.bin_edges[0];
    assert!(rel_err(h.densities[0], 1.0 / width) < 1e-15);
    assert!(h.bin_edges[0] < x && x <= h.bin_edges[1]);
}

#[test]
fn cyclone_preset_grid() {
    let b = LogBinning::cyclone_preset();
    for s in -3..30 {
        assert!(rel_err(b.edge(s + 1) / b.edge(s), 10f64.powf(0.2)) < 1e-14);
        assert!(rel_err(b.edge(s), 0.5 * 10f64.powf(8.0 + s as f64 / 5.0) * 11f64.powf(0.2)) < 1e-14);
        // the grid point 10^(8 + s/5) lies in the bin (l_s, l_{s+1}]
        let p = b.eval_point(s);
        assert!(rel_err(p, 10f64.powf(8.0 + s as f64 / 5.0)) < 1e-14);
        assert!(b.edge(s) < p && p <= b.edge(s + 1));
    }
    for b in [LogBinning::new(0.0, 1).unwrap(), LogBinning::new(-2.0, 3).unwrap(), LogBinning::new(1.0, 10).unwrap()] {
        for s in -5..5 {
            let p = b.eval_point(s);
            assert!(b.edge(s) < p && p <= b.edge(s + 1), "{b:?} s={s}");
        }
    }
}

#[test]
fn histogram_mass_and_bin_membership() {
    let mut rng = RngStream::new(14, 0);
    let model = FtgParams::with_sigma(-1.1, 3e9, 0.05).unwrap();
    let draws = sample_ftg_with(&model, 5000, &mut rng, SamplerMethod::Auto).unwrap().values;
    let s = Sample::raw(draws.clone()).unwrap();
    let b = LogBinning::cyclone_preset();
    let h = log_binned_histogram(&s, &b).unwrap();
    assert_eq!(h.counts.iter().sum::<usize>(), 5000);
    let mass: f64 = h.densities.iter().zip(h.bin_edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).sum();
    assert!((mass - 1.0).abs() < 1e-12);
    for (i, &c) in h.counts.iter().enumerate() {
        let (lo, hi) = (h.bin_edges[i], h.bin_edges[i + 1]);
        assert_eq!(c, draws.iter().filter(|&&x| lo < x && x <= hi).count());
        assert!(lo < h.eval_points[i] && h.eval_points[i] <= hi);
    }
}

#[test]
fn exact_power_law_and_two_points() {
    let b = LogBinning::new(0.0, 4).unwrap();
    let mut h = log_binned_histogram(&Sample::raw(vec![1.0, 50.0]).unwrap(), &b).unwrap();
    h.densities = h.eval_points.iter().map(|p| 3.0 * p.powf(-1.7)).collect();
    let fit = loglog_least_squares(&h).unwrap();
    assert!((fit.slope + 1.7).abs() < 1e-12);
    assert!((fit.intercept - 3f64.log10()).abs() < 1e-12);
    assert!(fit.residual_ss < 1e-24);

    let line = least_squares(&[(0.0, 1.0), (2.0, 5.0)]).unwrap();
    assert!((line.slope - 2.0).abs() < 1e-15 && (line.intercept - 1.0).abs() < 1e-15);
    assert!(least_squares(&[(1.0, 1.0)]).is_err());
}

#[test]
fn pareto_histogram_slope() {
    // The Pareto density is a power law with exponent α − 1 once x ≫ σ.
    let (alpha, sigma) = (-1.63, 2.01e10);
    let mut rng = RngStream::new(15, 0);
    let p = FtgParams::pareto(alpha, sigma).unwrap();
    let draws = sample_ftg_with(&p, 1_000_000, &mut rng, SamplerMethod::Auto).unwrap().values;
    let h = log_binned_histogram(&Sample::raw(draws).unwrap(), &LogBinning::new(10.0, 5).unwrap()).unwrap();
    // mid-range: far enough above σ for the power law, with at least 10 counts
    let top = h.eval_points.iter().zip(&h.counts).filter(|(_, &c)| c >= 10).map(|(&p, _)| p).fold(0.0, f64::max);
    let fit = loglog_least_squares_within(&h, 30.0 * sigma, top).unwrap();
    assert!(fit.points >= 4, "{fit:?}");
    assert!((fit.slope - (alpha - 1.0)).abs() < 0.1, "{fit:?}");
}

#[test]
fn empirical_survival_examples() {
    let s = fraud();
    assert_eq!(empirical_survival_at(&s, 0.0), 1.0);
    assert_eq!(empirical_survival_at(&s, 891.62), 0.0);
    assert_eq!(empirical_survival_at(&s, 100.0), 8.0 / 40.0);
    assert_eq!(empirical_survival_at(&s, 891.0), 1.0 / 40.0);
    let curve = empirical_survival(&s);
    assert_eq!(curve.len(), 40);
    assert_eq!(curve.last().unwrap(), &(891.62, 0.0));
    assert!(curve.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 >= w[1].1));

    let tied = empirical_survival(&Sample::raw(vec![2.0, 1.0, 2.0]).unwrap());
    assert_eq!(tied, vec![(1.0, 2.0 / 3.0), (2.0, 0.0), (2.0, 0.0)]);
}
