//! Random variates for the FTG family and Poisson counts.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::dist::FtgParams;
use crate::error::{domain, FtgError, Result};
use crate::specfun::log_upper_inc_gamma;

const STALL_ATTEMPTS: u64 = 10_000_000;
const STALL_RATE: f64 = 1e-6;
/// Below this predicted acceptance the automatic choice leaves the plain
/// exponential proposal for the two-piece envelope.
const AUTO_THRESHOLD: f64 = 0.25;
const POISSON_INVERSION_MAX: f64 = 30.0;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded, reproducible random stream. Each `(seed, stream_id)` pair selects
/// an independent ChaCha8 keystream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream `index`, independent of this stream and of its siblings.
    pub fn substream(&self, index: u64) -> RngStream {
        let key = splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x5851_f42d_4c95_7f2d)));
        RngStream::new(key, index)
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard exponential.
    pub fn exponential(&mut self) -> f64 {
        -self.uniform().ln()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// How interior draws with `α < 1` are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    /// Exponential proposal with acceptance `(1+x)^(α−1)`. Its acceptance
    /// rate `Γ(α,ρ) e^ρ ρ^(1−α)` collapses as `ρ → 0`.
    #[default]
    Rejection,
    /// Two-piece envelope in `y = 1 + x` split at `1 + 1/ρ`; acceptance stays
    /// above roughly `1/e` for every `ρ`.
    Envelope,
    /// `Rejection` when its predicted acceptance is high, else `Envelope`.
    Auto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub params: FtgParams,
    pub attempts: u64,
    pub acceptance_rate: f64,
    pub method: SamplerMethod,
}

#[derive(Debug, Clone)]
enum Kernel {
    /// Draw at θ = ρ then multiply by σ.
    Rejection { alpha_m1: f64, rho: f64, sigma: f64 },
    Envelope {
        alpha: f64,
        rho: f64,
        sigma: f64,
        b: f64,
        log_b: f64,
        expm1_alpha_log_b: f64,
        prob_a: f64,
    },
    Exponential { rate: f64 },
    /// `Gamma(α)` conditioned on `≥ ρ` by plain rejection, for `ρ < α`.
    TruncatedGammaDirect { gamma: Gamma<f64>, rho: f64, theta: f64 },
    /// Shifted exponential proposal with rate `λ = 1 − (α−1)/ρ`, for `ρ ≥ α`.
    TruncatedGammaTail { alpha_m1: f64, rho: f64, lambda: f64, theta: f64 },
    Gamma { gamma: Gamma<f64>, theta: f64 },
    Pareto { alpha: f64, sigma: f64 },
}

/// Predicted acceptance rate of [`SamplerMethod::Rejection`].
pub fn rejection_acceptance_rate(alpha: f64, rho: f64) -> Result<f64> {
    Ok((log_upper_inc_gamma(alpha, rho)? + rho + (1.0 - alpha) * rho.ln()).exp())
}

/// Reusable FTG variate generator with its constants precomputed.
#[derive(Debug, Clone)]
pub struct FtgSampler {
    params: FtgParams,
    method: SamplerMethod,
    kernel: Kernel,
}

impl FtgSampler {
    pub fn new(params: FtgParams, method: SamplerMethod) -> Result<Self> {
        let (kernel, method) = match params {
            FtgParams::Interior { alpha, theta, .. } if alpha == 1.0 => {
                (Kernel::Exponential { rate: theta }, method)
            }
            FtgParams::Interior { alpha, theta, rho } if alpha < 1.0 => {
                let sigma = rho / theta;
                let chosen = match method {
                    SamplerMethod::Auto => {
                        if rejection_acceptance_rate(alpha, rho)? >= AUTO_THRESHOLD {
                            SamplerMethod::Rejection
                        } else {
                            SamplerMethod::Envelope
                        }
                    }
                    m => m,
                };
                let kernel = if chosen == SamplerMethod::Rejection {
                    Kernel::Rejection { alpha_m1: alpha - 1.0, rho, sigma }
                } else {
                    envelope_kernel(alpha, rho, sigma)
                };
                (kernel, chosen)
            }
            FtgParams::Interior { alpha, theta, rho } => {
                let kernel = if rho < alpha {
                    Kernel::TruncatedGammaDirect {
                        gamma: Gamma::new(alpha, 1.0).map_err(|e| FtgError::InvalidParams(e.to_string()))?,
                        rho,
                        theta,
                    }
                } else {
                    Kernel::TruncatedGammaTail {
                        alpha_m1: alpha - 1.0,
                        rho,
                        lambda: 1.0 - (alpha - 1.0) / rho,
                        theta,
                    }
                };
                (kernel, method)
            }
            FtgParams::Gamma { alpha, theta } => (
                Kernel::Gamma {
                    gamma: Gamma::new(alpha, 1.0).map_err(|e| FtgError::InvalidParams(e.to_string()))?,
                    theta,
                },
                method,
            ),
            FtgParams::Pareto { alpha, sigma } => (Kernel::Pareto { alpha, sigma }, method),
        };
        Ok(Self { params, method, kernel })
    }

    pub fn params(&self) -> &FtgParams {
        &self.params
    }

    /// The method actually used (`Auto` resolved).
    pub fn method(&self) -> SamplerMethod {
        self.method
    }

    /// One proposal; `None` on rejection.
    #[inline]
    fn propose(&self, rng: &mut RngStream) -> Option<f64> {
        match self.kernel {
            Kernel::Rejection { alpha_m1, rho, sigma } => {
                let x = rng.exponential() / rho;
                (rng.uniform().ln() <= alpha_m1 * x.ln_1p()).then_some(x * sigma)
            }
            Kernel::Envelope {
                alpha,
                rho,
                sigma,
                b,
                log_b,
                expm1_alpha_log_b,
                prob_a,
            } => {
                let y = if rng.uniform() < prob_a {
                    let u = rng.uniform();
                    let y = if alpha == 0.0 {
                        (u * log_b).exp()
                    } else {
                        ((u * expm1_alpha_log_b).ln_1p() / alpha).exp()
                    };
                    (rng.uniform().ln() <= -rho * (y - 1.0)).then_some(y)?
                } else {
                    let y = b + rng.exponential() / rho;
                    (rng.uniform().ln() <= (alpha - 1.0) * (y / b).ln()).then_some(y)?
                };
                Some((y - 1.0) * sigma)
            }
            Kernel::Exponential { rate } => Some(rng.exponential() / rate),
            Kernel::TruncatedGammaDirect { ref gamma, rho, theta } => {
                let y = gamma.sample(rng);
                (y >= rho).then(|| (y - rho) / theta)
            }
            Kernel::TruncatedGammaTail { alpha_m1, rho, lambda, theta } => {
                let e = rng.exponential() / lambda;
                let log_accept = alpha_m1 * (e / rho).ln_1p() - (1.0 - lambda) * e;
                (rng.uniform().ln() <= log_accept).then_some(e / theta)
            }
            Kernel::Gamma { ref gamma, theta } => Some(gamma.sample(rng) / theta),
            Kernel::Pareto { alpha, sigma } => {
                let u = rng.uniform();
                Some(sigma * ((-u).ln_1p() / alpha).exp_m1())
            }
        }
        .map(|x: f64| x.max(0.0))
    }

    /// One variate, returning it with the number of proposals used.
    pub fn draw(&self, rng: &mut RngStream) -> Result<(f64, u64)> {
        let mut attempts = 0u64;
        loop {
            attempts += 1;
            if let Some(x) = self.propose(rng) {
                return Ok((x, attempts));
            }
            if attempts >= STALL_ATTEMPTS {
                return Err(FtgError::SamplerStalled { accepted: 0, attempts });
            }
        }
    }

    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Result<SampleBatch> {
        if n == 0 {
            return Err(domain("sample size must be at least 1"));
        }
        let mut values = Vec::with_capacity(n);
        let mut attempts = 0u64;
        while values.len() < n {
            attempts += 1;
            if let Some(x) = self.propose(rng) {
                values.push(x);
            }
            if attempts >= STALL_ATTEMPTS && (values.len() as f64) < STALL_RATE * attempts as f64 {
                return Err(FtgError::SamplerStalled {
                    accepted: values.len() as u64,
                    attempts,
                });
            }
        }
        Ok(SampleBatch {
            acceptance_rate: n as f64 / attempts as f64,
            values,
            params: self.params,
            attempts,
            method: self.method,
        })
    }
}

fn envelope_kernel(alpha: f64, rho: f64, sigma: f64) -> Kernel {
    let b = 1.0 + rho.recip();
    let log_b = rho.recip().ln_1p();
    let expm1_alpha_log_b = (alpha * log_b).exp_m1();
    let log_int_a = if alpha == 0.0 {
        log_b.ln()
    } else {
        (expm1_alpha_log_b / alpha).ln()
    };
    let log_mass_a = -rho + log_int_a;
    let log_mass_b = (alpha - 1.0) * log_b - rho * b - rho.ln();
    let prob_a = 1.0 / (1.0 + (log_mass_b - log_mass_a).exp());
    Kernel::Envelope {
        alpha,
        rho,
        sigma,
        b,
        log_b,
        expm1_alpha_log_b,
        prob_a,
    }
}

/// `n` FTG variates by the exponential-proposal rejection method (for
/// interior `α < 1`), truncated-gamma rejection (interior `α > 1`) or
/// inversion (Pareto boundary).
pub fn sample_ftg(p: &FtgParams, n: usize, rng: &mut RngStream) -> Result<SampleBatch> {
    sample_ftg_with(p, n, rng, SamplerMethod::Rejection)
}

pub fn sample_ftg_with(
    p: &FtgParams,
    n: usize,
    rng: &mut RngStream,
    method: SamplerMethod,
) -> Result<SampleBatch> {
    FtgSampler::new(*p, method)?.sample(n, rng)
}

/// One Poisson variate: inversion for `λ ≤ 30`, the PTRS transformed
/// rejection method above.
pub fn sample_poisson(lambda: f64, rng: &mut RngStream) -> Result<u64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain(format!("Poisson mean must be positive, got {lambda}")));
    }
    if lambda <= POISSON_INVERSION_MAX {
        let u = rng.uniform();
        let mut k = 0u64;
        let mut p = (-lambda).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
            // the remaining mass is below double precision
            if p == 0.0 && k as f64 > lambda {
                break;
            }
        }
        Ok(k)
    } else {
        let d = Poisson::new(lambda).map_err(|e| domain(e.to_string()))?;
        let k: f64 = d.sample(rng);
        Ok(k as u64)
    }
}
