//! Test-only oracles. Outside `likelihood`, nothing here calls into the
//! library's numerical routines, so agreement with them is an independent
//! check.
#![allow(dead_code)]

pub mod likelihood;

use std::f64::consts::{FRAC_PI_2, PI};

/// Tanh-sinh quadrature on a finite interval, halving the step until two
/// successive estimates agree to `rel_tol`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let h = 0.5 * (b - a);
    let t_max = 3.5;
    let eval = |t: f64| -> f64 {
        let s = FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh() / s.cosh().powi(2);
        // distance to the nearer endpoint, computed without cancellation
        let d = h * 2.0 / ((2.0 * s.abs()).exp() + 1.0);
        let x = if t >= 0.0 { b - d } else { a + d };
        if d <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let v = f(x);
        if v.is_finite() { h * w * v } else { 0.0 }
    };
    let mut step = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * step <= t_max {
        let t = k as f64 * step;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * step;
    for _ in 0..12 {
        step *= 0.5;
        let mut k = 1;
        while (k as f64) * step <= t_max {
            let t = k as f64 * step;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * step;
        let done = (next - estimate).abs() <= rel_tol * next.abs();
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// Integral over `[lo, hi]` in the variable `u = ln x`, split into unit pieces.
pub fn integrate_log_domain<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    let (ulo, uhi) = (lo.ln(), hi.ln());
    let pieces = ((uhi - ulo).ceil() as usize).max(1);
    let width = (uhi - ulo) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let a = ulo + i as f64 * width;
            tanh_sinh(|u| f(u.exp()) * u.exp(), a, a + width, rel_tol)
        })
        .sum()
}

/// Upper incomplete gamma by quadrature of its defining integral.
pub fn upper_inc_gamma_quad(alpha: f64, rho: f64) -> f64 {
    // Factor out the value at the lower limit to keep the integrand O(1).
    let scale = alpha * rho.ln() - rho;
    let upper = rho + 120.0 + alpha.max(0.0) * 6.0;
    let v = integrate_log_domain(
        |t| ((alpha - 1.0) * t.ln() - t - scale).exp(),
        rho,
        upper,
        1e-14,
    );
    v * scale.exp()
}

/// erfc via the Maclaurin series of erf, adequate for `x ≤ 2`.
pub fn erfc_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x * x / n;
        let add = term / (2.0 * n + 1.0);
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    1.0 - 2.0 / PI.sqrt() * sum
}

/// Central finite difference.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Exact Poisson CDF by direct summation.
pub fn poisson_cdf(lambda: f64, k: u64) -> f64 {
    let mut p = (-lambda).exp();
    let mut acc = p;
    for i in 1..=k {
        p *= lambda / i as f64;
        acc += p;
    }
    acc
}

/// Smallest k with P(N ≤ k) ≥ level.
pub fn poisson_quantile(lambda: f64, level: f64) -> u64 {
    (0..).find(|&k| poisson_cdf(lambda, k) >= level).unwrap()
}

/// The forty exceedances printed with the operational-risk example.
pub const EXTERNAL_FRAUD: [f64; 40] = [
    0.07, 0.11, 0.26, 0.40, 0.46, 0.62, 0.70, 0.75, 0.89, 1.08, 1.52, 1.64, 1.69, 2.04, 2.19,
    2.52, 2.73, 3.16, 3.74, 4.04, 4.63, 5.44, 5.86, 6.02, 10.32, 19.63, 29.13, 30.36, 30.88,
    35.78, 40.07, 46.12, 137.52, 237.05, 311.14, 314.19, 396.29, 552.48, 864.88, 891.62,
];

/// Kolmogorov limiting survival function Q(λ) = 2 Σ (−1)^(k−1) e^(−2k²λ²).
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        s += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS distance of `xs` to `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS distance by merging the sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}
