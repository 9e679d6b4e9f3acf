//! Finite differences and brute-force search over the library log-likelihood.

use ftg_core::data::Sample;
use ftg_core::dist::FtgParams;
use ftg_core::fit::loglik_ftg;
use ftg_core::sample::{sample_ftg_with, RngStream, SamplerMethod};

pub fn draw(p: FtgParams, n: usize, seed: u64) -> Sample {
    let v = sample_ftg_with(&p, n, &mut RngStream::new(seed, 0), SamplerMethod::Auto).unwrap().values;
    Sample::raw(v).unwrap()
}

/// Deterministic pseudo-random points in a box.
pub fn random_points(count: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let mut rng = RngStream::new(seed, 0);
    (0..count)
        .map(|_| {
            let alpha = -1.5 + 3.5 * rng.uniform();
            let sigma = (0.2f64.ln() + (25f64).ln() * rng.uniform()).exp();
            let rho = (0.01f64.ln() + (300f64).ln() * rng.uniform()).exp();
            (alpha, sigma, rho)
        })
        .collect()
}

pub fn fd_gradient(sample: &Sample, x: [f64; 3]) -> [f64; 3] {
    let mut g = [0.0; 3];
    for i in 0..3 {
        let h = 1e-6 * x[i].abs().max(1e-3);
        let mut up = x;
        let mut dn = x;
        up[i] += h;
        dn[i] -= h;
        let lu = loglik_ftg(sample, up[0], up[1], up[2]).unwrap();
        let ld = loglik_ftg(sample, dn[0], dn[1], dn[2]).unwrap();
        g[i] = (lu - ld) / (2.0 * h);
    }
    g
}

pub fn fd_hessian(sample: &Sample, x: [f64; 3]) -> [[f64; 3]; 3] {
    let f = |v: [f64; 3]| loglik_ftg(sample, v[0], v[1], v[2]).unwrap();
    // additive step for the shape, relative steps for the positive scales
    let h = [1e-4 * x[0].abs().max(1.0), 1e-4 * x[1], 1e-4 * x[2]];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let shift = |si: f64, sj: f64| {
                let mut v = x;
                v[i] += si * h[i];
                v[j] += sj * h[j];
                v
            };
            out[i][j] = if i == j {
                let mut up = x;
                let mut dn = x;
                up[i] += h[i];
                dn[i] -= h[i];
                (f(up) - 2.0 * f(x) + f(dn)) / (h[i] * h[i])
            } else {
                (f(shift(1.0, 1.0)) - f(shift(1.0, -1.0)) - f(shift(-1.0, 1.0)) + f(shift(-1.0, -1.0)))
                    / (4.0 * h[i] * h[j])
            };
        }
    }
    out
}

/// Three-dimensional grid refined around its own best point.
pub fn grid_oracle(sample: &Sample) -> (f64, [f64; 3], [f64; 3]) {
    let l = |a: f64, ls: f64, lr: f64| loglik_ftg(sample, a, ls.exp(), lr.exp()).unwrap_or(f64::NEG_INFINITY);
    let m = sample.mean();
    let mut centre = [0.0, m.ln(), -3.0];
    let mut half = [12.0, 10.0, 12.0];
    let k = 24;
    let mut best = (f64::NEG_INFINITY, centre);
    for _ in 0..8 {
        for i in 0..=k {
            let a = centre[0] - half[0] + 2.0 * half[0] * i as f64 / k as f64;
            for j in 0..=k {
                let ls = centre[1] - half[1] + 2.0 * half[1] * j as f64 / k as f64;
                for r in 0..=k {
                    let lr = centre[2] - half[2] + 2.0 * half[2] * r as f64 / k as f64;
                    let v = l(a, ls, lr);
                    if v > best.0 {
                        best = (v, [a, ls, lr]);
                    }
                }
            }
        }
        centre = best.1;
        for h in half.iter_mut() {
            *h *= 0.35;
        }
    }
    let resolution = [2.0 * half[0] / 0.35 / k as f64, 2.0 * half[1] / 0.35 / k as f64, 2.0 * half[2] / 0.35 / k as f64];
    (best.0, best.1, resolution)
}
