//! The full-tails gamma family: special functions, distribution functions,
//! samplers, maximum-likelihood fitting, goodness of fit and compound-Poisson
//! risk capital.
//!
//! ```
//! use ftg_core::data::Sample;
//! use ftg_core::dist::quantile;
//! use ftg_core::fit::{fit_ftg, Family};
//! use ftg_core::risk::{risk_capital, RiskConfig};
//!
//! let sample = Sample::external_fraud();
//! let fit = fit_ftg(&sample)?;
//! assert!((fit.estimates[0] + 0.196).abs() < 1e-3);
//! let q = quantile(&fit.params, 0.999)?;
//! assert!((q - 3931.3).abs() < 1.0);
//!
//! let cfg = RiskConfig { n_sims: 20_000, ..RiskConfig::new(20.0, 1)? };
//! let (_, report) = risk_capital(&sample, Family::Ftg, &cfg)?;
//! assert!(report.risk_capital > 5e3);
//! # Ok::<(), ftg_core::FtgError>(())
//! ```

pub mod data;
pub mod dist;
pub mod error;
pub mod fit;
pub mod gof;
pub mod optim;
pub mod quad;
pub mod risk;
pub mod sample;
pub mod specfun;

pub use error::{FtgError, Result};
