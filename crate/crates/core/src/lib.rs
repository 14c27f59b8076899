//! Numerical laboratory for the hole probability of Gaussian entire functions
//!
//! `f(z) = Σ φₙ aₙ zⁿ` with i.i.d. random `φₙ` and a deterministic coefficient
//! sequence `aₙ` (`(n!)^{-1/2}` for the Gaussian entire function, `1/Γ(αn+1)`
//! for Gaussian Mittag-Leffler functions). The crate provides
//!
//! - exact log-scale evaluation of `S(r) = 2 Σ_{aₙrⁿ ≥ 1} log(aₙrⁿ)` and its
//!   leading asymptotics ([`coeff_models`]),
//! - reproducible per-index coefficient sampling and truncation certificates
//!   ([`sampling`]),
//! - series evaluation, argument-principle zero counting and a
//!   companion-matrix root oracle ([`zeros`]),
//! - Monte Carlo and certified lower bounds for the hole probability
//!   ([`hole`]),
//! - the volume of `{0 ≤ rⱼ ≤ t, Π rⱼ ≤ s}` ([`volume`]),
//! - log-determinants of the covariance matrix `exp(zᵢ z̄ⱼ)` on an
//!   equispaced circle ([`covariance`]),
//! - Taylor coefficients of `exp(z²/2 + βz)` and their saddle-point
//!   asymptotics ([`hermite`]),
//! - stable JSON/CSV report records ([`report`]).

pub mod coeff_models;
pub mod covariance;
mod error;
pub mod hermite;
pub mod hole;
pub mod numerics;
pub mod report;
pub mod sampling;
pub mod volume;
pub mod zeros;

pub use coeff_models::{CoefficientModel, ModelKind};
pub use covariance::CovarianceSpec;
pub use error::{Error, Result};
pub use hermite::HermiteSeries;
pub use hole::{HoleEstimate, HoleMethod, OmegaCertificate};
pub use num_complex::Complex64;
pub use report::{ReportRecord, ReportValue};
pub use sampling::{CoefficientDraw, Distribution};
pub use volume::VolumeQuery;
pub use zeros::{TruncatedSeries, ZeroCountResult};
