//! Shared inputs for the benchmarks.

use ftg_core::data::Sample;
use ftg_core::dist::FtgParams;
use ftg_core::sample::{sample_ftg_with, RngStream, SamplerMethod};

/// The FTG law fitted to the bundled losses.
pub fn fitted_ftg() -> FtgParams {
    FtgParams::with_sigma(-0.19648037, 0.65136726, 4.2954906e-4).expect("valid parameters")
}

/// `n` draws from `p` with a fixed seed.
pub fn simulated(p: &FtgParams, n: usize, seed: u64) -> Sample {
    let batch = sample_ftg_with(p, n, &mut RngStream::new(seed, 0), SamplerMethod::Auto).expect("sampler runs");
    Sample::raw(batch.values).expect("draws are valid")
}
